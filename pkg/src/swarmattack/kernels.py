"""Hot inner loops with selectable numba / pure-numpy backends.

Both backends are bit-identical: every kernel takes pre-drawn uniforms
instead of holding RNG state, transcendentals (sigmoid, softmax) live in
shared numpy code, and the numpy fallbacks accumulate in the same element
order as the numba loops.  ``SWARMATTACK_BACKEND=auto|numba|numpy`` picks the
implementation at import; ``set_backend`` overrides it at runtime.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ConfigError

__all__ = [
    "available_backends",
    "get_backend",
    "set_backend",
    "score_tokens",
    "velocity_step",
    "move_toward",
    "move_toward_shared",
    "mutate_step",
    "sigmoid",
]


# ---------------------------------------------------------------- numpy ----


def _np_score_tokens(ids, weights):
    n, d = ids.shape
    scores = np.zeros((n, weights.shape[1]), dtype=np.float64)
    # accumulate position by position to mirror the numba loop order
    for j in range(d):
        scores += weights[ids[:, j]]
    return scores


def _np_velocity_step(v, x, pbest, gbest, omega):
    ind_p = np.where(x == pbest, 1.0, -1.0)
    ind_g = np.where(x == gbest[np.newaxis, :], 1.0, -1.0)
    return omega * v + (1.0 - omega) * (ind_p + ind_g)


def _np_move_toward(x, best, gate, u, sig):
    adopt = gate[:, np.newaxis] & (x != best) & (u < sig)
    x[adopt] = best[adopt]


def _np_move_toward_shared(x, best, gate, u, sig):
    adopt = gate[:, np.newaxis] & (x != best[np.newaxis, :]) & (u < sig)
    x[adopt] = np.broadcast_to(best, x.shape)[adopt]


def _np_mutate_step(x, nonsingleton, counts, pm, u_coin, u_pos, u_cand):
    k = nonsingleton.shape[0]
    for n in range(x.shape[0]):
        if u_coin[n] < pm[n]:
            j = nonsingleton[int(u_pos[n] * k)]
            r = int(u_cand[n] * (counts[j] - 1))
            if r >= x[n, j]:
                r += 1
            x[n, j] = r


_NUMPY = {
    "score_tokens": _np_score_tokens,
    "velocity_step": _np_velocity_step,
    "move_toward": _np_move_toward,
    "move_toward_shared": _np_move_toward_shared,
    "mutate_step": _np_mutate_step,
}

_IMPLS = {"numpy": _NUMPY}


# ---------------------------------------------------------------- numba ----

try:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _nb_score_tokens(ids, weights):
        n, d = ids.shape
        l = weights.shape[1]
        scores = np.zeros((n, l), dtype=np.float64)
        for i in range(n):
            for j in range(d):
                w = ids[i, j]
                for c in range(l):
                    scores[i, c] += weights[w, c]
        return scores

    @njit(cache=True, nogil=True)
    def _nb_velocity_step(v, x, pbest, gbest, omega):
        n, d = v.shape
        out = np.empty((n, d), dtype=np.float64)
        for i in range(n):
            for j in range(d):
                ind_p = 1.0 if x[i, j] == pbest[i, j] else -1.0
                ind_g = 1.0 if x[i, j] == gbest[j] else -1.0
                out[i, j] = omega * v[i, j] + (1.0 - omega) * (ind_p + ind_g)
        return out

    @njit(cache=True, nogil=True)
    def _nb_move_toward(x, best, gate, u, sig):
        n, d = x.shape
        for i in range(n):
            if gate[i]:
                for j in range(d):
                    if x[i, j] != best[i, j] and u[i, j] < sig[i, j]:
                        x[i, j] = best[i, j]

    @njit(cache=True, nogil=True)
    def _nb_move_toward_shared(x, best, gate, u, sig):
        n, d = x.shape
        for i in range(n):
            if gate[i]:
                for j in range(d):
                    if x[i, j] != best[j] and u[i, j] < sig[i, j]:
                        x[i, j] = best[j]

    @njit(cache=True, nogil=True)
    def _nb_mutate_step(x, nonsingleton, counts, pm, u_coin, u_pos, u_cand):
        k = nonsingleton.shape[0]
        for n in range(x.shape[0]):
            if u_coin[n] < pm[n]:
                j = nonsingleton[int(u_pos[n] * k)]
                r = int(u_cand[n] * (counts[j] - 1))
                if r >= x[n, j]:
                    r += 1
                x[n, j] = r

    _IMPLS["numba"] = {
        "score_tokens": _nb_score_tokens,
        "velocity_step": _nb_velocity_step,
        "move_toward": _nb_move_toward,
        "move_toward_shared": _nb_move_toward_shared,
        "mutate_step": _nb_mutate_step,
    }
except ImportError:  # pragma: no cover - numba is an install-time choice
    pass


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def _resolve(name: str) -> str:
    if name == "auto":
        return "numba" if "numba" in _IMPLS else "numpy"
    if name not in ("numba", "numpy"):
        raise ConfigError(f"unknown backend {name!r}; expected auto, numba or numpy")
    if name not in _IMPLS:
        raise ConfigError(f"backend {name!r} is not available in this environment")
    return name


_BACKEND = _resolve(os.environ.get("SWARMATTACK_BACKEND", "auto"))


def get_backend() -> str:
    return _BACKEND


def set_backend(name: str) -> str:
    global _BACKEND
    _BACKEND = _resolve(name)
    return _BACKEND


def score_tokens(ids: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Sum per-token weight rows: ``out[n, l] = sum_d weights[ids[n, d], l]``."""
    return _IMPLS[_BACKEND]["score_tokens"](ids, weights)


def velocity_step(v, x, pbest, gbest, omega: float) -> np.ndarray:
    """One velocity update: ``omega * v + (1 - omega) * (I(pbest, x) + I(gbest, x))``
    where the indicator is +1 on agreeing dimensions and -1 elsewhere.
    """
    return _IMPLS[_BACKEND]["velocity_step"](v, x, pbest, gbest, omega)


def move_toward(x, best, gate, u, sig) -> None:
    """In-place: gated particles adopt ``best[n, d]`` where they differ and
    ``u[n, d] < sig[n, d]``.
    """
    _IMPLS[_BACKEND]["move_toward"](x, best, gate, u, sig)


def move_toward_shared(x, best, gate, u, sig) -> None:
    """Same as :func:`move_toward` with one shared target vector."""
    _IMPLS[_BACKEND]["move_toward_shared"](x, best, gate, u, sig)


def mutate_step(x, nonsingleton, counts, pm, u_coin, u_pos, u_cand) -> None:
    """In-place: with probability ``pm[n]`` pick a random mutable position and
    set it to a uniformly random candidate other than its current value.
    """
    _IMPLS[_BACKEND]["mutate_step"](x, nonsingleton, counts, pm, u_coin, u_pos, u_cand)


def sigmoid(v: np.ndarray) -> np.ndarray:
    """Shared by both backends so the transcendental never enters a kernel."""
    return 1.0 / (1.0 + np.exp(-v))
