"""Search a discrete substitution space for a sentence the victim labels as
the target: particle swarm search plus genetic, saliency-greedy and
exhaustive baselines.

All algorithms share the same contract: one probability query for the
original sentence resolves the target label and checks preconditions, fitness
is the target label's probability, and a Success result must satisfy both
victim-argmax == target and modification rate <= max_mod_rate.  Every query
is counted per sentence scored, and a fixed (space, victim, params, seed)
tuple always yields the same result.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .errors import (
    IterationOutOfRange,
    NoCandidates,
    PreconditionViolated,
    SpaceTooLarge,
    ValidationError,
)
from .space import SearchSpace, Sentence, as_assignment, render, render_tokens

EXHAUSTIVE_CAP = 1_000_000


# ------------------------------------------------------------- parameters ----


@dataclass(frozen=True)
class PsoParams:
    pop_size: int = 60
    max_iters: int = 20
    v_max: float = 1.0
    omega_max: float = 0.8
    omega_min: float = 0.2
    p_max: float = 0.8
    p_min: float = 0.2
    mutation_k: float = 2.0
    max_mod_rate: float = 0.25
    query_budget: int | None = None

    def __post_init__(self):
        if self.pop_size < 1:
            raise ValidationError(f"pop_size must be >= 1, got {self.pop_size}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.v_max <= 0:
            raise ValidationError(f"v_max must be positive, got {self.v_max}")
        if not 0.0 < self.omega_min < self.omega_max < 1.0:
            raise ValidationError(f"need 0 < omega_min < omega_max < 1, got {self.omega_min}/{self.omega_max}")
        if not 0.0 < self.p_min < self.p_max < 1.0:
            raise ValidationError(f"need 0 < p_min < p_max < 1, got {self.p_min}/{self.p_max}")
        if self.mutation_k <= 0:
            raise ValidationError(f"mutation_k must be positive, got {self.mutation_k}")
        _check_common(self.max_mod_rate, self.query_budget)


@dataclass(frozen=True)
class GeneticParams:
    pop_size: int = 60
    max_iters: int = 20
    child_mutation_prob: float = 1.0
    max_mod_rate: float = 0.25
    query_budget: int | None = None

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValidationError(f"pop_size must be >= 2, got {self.pop_size}")
        if self.max_iters < 0:
            raise ValidationError(f"max_iters must be >= 0, got {self.max_iters}")
        if not 0.0 <= self.child_mutation_prob <= 1.0:
            raise ValidationError(f"child_mutation_prob must be in [0, 1], got {self.child_mutation_prob}")
        _check_common(self.max_mod_rate, self.query_budget)


@dataclass(frozen=True)
class GreedyParams:
    unk_token: str = "<unk>"
    max_mod_rate: float = 0.25
    query_budget: int | None = None

    def __post_init__(self):
        if not self.unk_token:
            raise ValidationError("unk_token must be non-empty")
        _check_common(self.max_mod_rate, self.query_budget)


@dataclass(frozen=True)
class ExhaustiveParams:
    max_mod_rate: float = 0.25
    cap: int = EXHAUSTIVE_CAP
    query_budget: int | None = None

    def __post_init__(self):
        if self.cap < 1:
            raise ValidationError(f"cap must be >= 1, got {self.cap}")
        _check_common(self.max_mod_rate, self.query_budget)


def _check_common(max_mod_rate: float, query_budget: int | None) -> None:
    if not 0.0 < max_mod_rate <= 1.0:
        raise ValidationError(f"max_mod_rate must be in (0, 1], got {max_mod_rate}")
    if query_budget is not None and query_budget < 1:
        raise ValidationError(f"query_budget must be >= 1, got {query_budget}")


# ----------------------------------------------------------------- results ----


class AttackStatus(str, Enum):
    SUCCESS = "success"
    EXHAUSTED = "exhausted"
    BUDGET_EXCEEDED = "budget_exceeded"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class HistoryPoint:
    """Best-so-far state after one scored generation."""

    iteration: int
    queries: int
    best_prob: float


@dataclass
class AttackResult:
    status: AttackStatus
    adversarial: Sentence | None
    assignment: np.ndarray | None
    target_prob: float
    mod_rate: float | None
    iterations: int
    queries: int
    seed: int
    algorithm: str
    orig_label: int
    target: int
    history: list[HistoryPoint] = field(default_factory=list, repr=False)

    @property
    def success(self) -> bool:
        return self.status is AttackStatus.SUCCESS


# -------------------------------------------------------- schedule formulas ----


def indicator(a: int, b: int) -> float:
    """+1 when the two candidate indices agree, -1 otherwise."""
    return 1.0 if a == b else -1.0


def inertia(t: int, params: PsoParams) -> float:
    """Linearly annealed inertia weight: omega_max at t=0 down to omega_min at t=T."""
    _check_iteration(t, params.max_iters)
    return (params.omega_max - params.omega_min) * (params.max_iters - t) / params.max_iters + params.omega_min


def move_probs(t: int, params: PsoParams) -> tuple[float, float]:
    """Movement probabilities (toward own best, toward global best) at step t.

    The own-best probability anneals p_max -> p_min while the global-best one
    rises p_min -> p_max; their sum is constant.
    """
    _check_iteration(t, params.max_iters)
    frac = t / params.max_iters
    span = params.p_max - params.p_min
    return params.p_max - frac * span, params.p_min + frac * span


def _check_iteration(t: int, max_iters: int) -> None:
    if not 0 <= t <= max_iters:
        raise IterationOutOfRange(f"iteration {t} outside [0, {max_iters}]")


def velocity_update(v: float, omega: float, p_n: int, p_g: int, x: int) -> float:
    """Scalar form of the discrete velocity rule:
    ``omega * v + (1 - omega) * (I(p_n, x) + I(p_g, x))``."""
    return omega * v + (1.0 - omega) * (indicator(p_n, x) + indicator(p_g, x))


def mutation_prob(a, space: SearchSpace, k: float) -> float:
    """``max(0, 1 - k * edits / D)``: mutation fades out as a candidate drifts
    from the original sentence."""
    a = as_assignment(space, a)
    edits = int(np.count_nonzero(a != 0))
    return max(0.0, 1.0 - k * edits / len(space))


def mutate(a, space: SearchSpace, rng: np.random.Generator) -> np.ndarray:
    """Copy of ``a`` with one uniformly chosen non-singleton position set to a
    uniformly chosen candidate index other than its current value."""
    if len(space.nonsingleton) == 0:
        raise NoCandidates("no non-singleton position to mutate")
    out = np.array(as_assignment(space, a))
    _mutate_rows(out[np.newaxis, :], space, np.ones(1), rng)
    return out


def _mutate_rows(x: np.ndarray, space: SearchSpace, pm: np.ndarray, rng: np.random.Generator) -> None:
    n = x.shape[0]
    u_coin = rng.random(n)
    u_pos = rng.random(n)
    u_cand = rng.random(n)
    kernels.mutate_step(x, space.nonsingleton, space.counts, pm, u_coin, u_pos, u_cand)


# ------------------------------------------------------------ shared pieces ----


def max_edits(space: SearchSpace, max_mod_rate: float) -> int:
    """Largest edit count whose modification rate stays within the cap."""
    return int(max_mod_rate * len(space) + 1e-9)


class _Runner:
    """Per-attack bookkeeping shared by all algorithms: query counting,
    budget checks, target resolution and result assembly."""

    def __init__(self, space: SearchSpace, victim, algorithm: str, seed: int, budget: int | None):
        self.space = space
        self.victim = victim
        self.algorithm = algorithm
        self.seed = seed
        self.budget = budget
        self.queries = 0
        self.history: list[HistoryPoint] = []
        ctx = space.original.context
        self._context = None if ctx is None else " ".join(ctx)
        self.orig_label = -1
        self.target = -1

    def can_afford(self, n: int) -> bool:
        return self.budget is None or self.queries + n <= self.budget

    def score(self, rows) -> np.ndarray:
        """Probability rows for a batch of assignments; charges one query per sentence."""
        texts = [render_tokens(self.space, r) for r in rows]
        ctx = None if self._context is None else [self._context] * len(texts)
        probs = self.victim.predict_tokens(texts, ctx)
        self.queries += len(texts)
        return probs

    def resolve_target(self, target: int | None) -> np.ndarray:
        """Score the original sentence, fix the target label, check preconditions."""
        orig_probs = self.score([self.space.zero_assignment()])[0]
        self.orig_label = int(np.argmax(orig_probs))
        stated = self.space.original.label
        if stated is not None and self.orig_label != stated:
            raise PreconditionViolated(
                f"victim predicts label {self.orig_label} but the original is labeled {stated}"
            )
        if target is None:
            masked = orig_probs.copy()
            masked[self.orig_label] = -np.inf
            self.target = int(np.argmax(masked))
        else:
            if not 0 <= target < len(orig_probs):
                raise ValidationError(f"target label {target} outside 0..{len(orig_probs) - 1}")
            if target == self.orig_label:
                raise PreconditionViolated("original sentence is already classified as the target")
            self.target = int(target)
        if len(self.space.nonsingleton) == 0:
            raise PreconditionViolated("every position is singleton; nothing to perturb")
        return orig_probs

    def record(self, iteration: int, best_prob: float) -> None:
        self.history.append(HistoryPoint(iteration=iteration, queries=self.queries, best_prob=best_prob))

    def result(self, status: AttackStatus, assignment, target_prob: float, iterations: int) -> AttackResult:
        adversarial = None
        mod_rate = None
        if assignment is not None:
            assignment = np.array(assignment, dtype=np.int64)
            adversarial = render(self.space, assignment)
            mod_rate = int(np.count_nonzero(assignment != 0)) / len(self.space)
        return AttackResult(
            status=status,
            adversarial=adversarial,
            assignment=assignment,
            target_prob=float(target_prob),
            mod_rate=mod_rate,
            iterations=iterations,
            queries=self.queries,
            seed=self.seed,
            algorithm=self.algorithm,
            orig_label=self.orig_label,
            target=self.target,
            history=self.history,
        )


def _success_pick(probs: np.ndarray, x: np.ndarray, target: int, cap: int):
    """Index of the winning particle, or None: highest target probability
    among rows with victim-argmax == target and edit count within cap,
    ties broken by lowest index."""
    edits = np.count_nonzero(x != 0, axis=1)
    mask = (np.argmax(probs, axis=1) == target) & (edits <= cap)
    if not mask.any():
        return None
    idx = np.flatnonzero(mask)
    return int(idx[np.argmax(probs[idx, target])])


def _init_population(space: SearchSpace, pop_size: int, rng: np.random.Generator) -> np.ndarray:
    """Population of single-word mutations of the original sentence."""
    x = np.zeros((pop_size, len(space)), dtype=np.int64)
    _mutate_rows(x, space, np.ones(pop_size), rng)
    return x


# -------------------------------------------------------------- algorithms ----


def pso_attack(
    space: SearchSpace,
    victim,
    target: int | None = None,
    params: PsoParams | None = None,
    seed: int = 0,
) -> AttackResult:
    """Discrete particle swarm search over candidate assignments.

    Particles start as single-word mutations of the original with velocities
    uniform in [-v_max, v_max].  Each generation is scored in one batched
    call; after the best-position bookkeeping, velocities follow the discrete
    update rule and each particle moves toward its own then the global best
    (particle-level gates with annealed probabilities, dimension-level
    adoption with probability sigmoid(v_d)), then mutates with a probability
    that decays in its edit distance.  Returns at the first in-cap
    target-label hit; otherwise Exhausted carrying the global best.
    """
    params = params if params is not None else PsoParams()
    rng = np.random.default_rng(seed)
    run = _Runner(space, victim, "pso", seed, params.query_budget)
    run.resolve_target(target)

    d = len(space)
    n = params.pop_size
    cap = max_edits(space, params.max_mod_rate)

    x = _init_population(space, n, rng)
    v = rng.uniform(-params.v_max, params.v_max, size=(n, d))
    pbest = None
    pbest_score = None
    gbest = None
    gbest_score = -1.0

    t = 0
    for t in range(params.max_iters + 1):
        if not run.can_afford(n):
            return run.result(AttackStatus.BUDGET_EXCEEDED, gbest, gbest_score if gbest is not None else 0.0, max(t - 1, 0))
        probs = run.score(x)
        tscores = probs[:, run.target]

        if pbest is None:
            pbest = x.copy()
            pbest_score = tscores.copy()
        else:
            better = tscores > pbest_score
            pbest[better] = x[better]
            pbest_score[better] = tscores[better]
        best = int(np.argmax(pbest_score))
        if pbest_score[best] > gbest_score:
            gbest_score = float(pbest_score[best])
            gbest = pbest[best].copy()

        run.record(t, gbest_score)
        win = _success_pick(probs, x, run.target, cap)
        if win is not None:
            return run.result(AttackStatus.SUCCESS, x[win].copy(), float(tscores[win]), t)
        if t == params.max_iters:
            break

        omega = inertia(t, params)
        p_own, p_global = move_probs(t, params)
        v = kernels.velocity_step(v, x, pbest, gbest, omega)
        sig = kernels.sigmoid(v)
        gate = rng.random(n) < p_own
        u = rng.random((n, d))
        kernels.move_toward(x, pbest, gate, u, sig)
        gate = rng.random(n) < p_global
        u = rng.random((n, d))
        kernels.move_toward_shared(x, gbest, gate, u, sig)
        edits = np.count_nonzero(x != 0, axis=1)
        pm = np.maximum(0.0, 1.0 - params.mutation_k * edits / d)
        _mutate_rows(x, space, pm, rng)

    return run.result(AttackStatus.EXHAUSTED, gbest, gbest_score, params.max_iters)


def genetic_attack(
    space: SearchSpace,
    victim,
    target: int | None = None,
    params: GeneticParams | None = None,
    seed: int = 0,
) -> AttackResult:
    """Elitist generational genetic search (population baseline).

    Same initialization, fitness, success rule and query accounting as the
    swarm: each generation keeps its best member, samples parent pairs with
    probability proportional to target probability, applies uniform
    positionwise crossover, and mutates each child with a fixed probability.
    """
    params = params if params is not None else GeneticParams()
    rng = np.random.default_rng(seed)
    run = _Runner(space, victim, "genetic", seed, params.query_budget)
    run.resolve_target(target)

    d = len(space)
    n = params.pop_size
    cap = max_edits(space, params.max_mod_rate)

    x = _init_population(space, n, rng)
    best_ever = None
    best_ever_score = -1.0

    t = 0
    for t in range(params.max_iters + 1):
        if not run.can_afford(n):
            return run.result(AttackStatus.BUDGET_EXCEEDED, best_ever, best_ever_score if best_ever is not None else 0.0, max(t - 1, 0))
        probs = run.score(x)
        tscores = probs[:, run.target]

        elite = int(np.argmax(tscores))
        if tscores[elite] > best_ever_score:
            best_ever_score = float(tscores[elite])
            best_ever = x[elite].copy()

        run.record(t, best_ever_score)
        win = _success_pick(probs, x, run.target, cap)
        if win is not None:
            return run.result(AttackStatus.SUCCESS, x[win].copy(), float(tscores[win]), t)
        if t == params.max_iters:
            break

        total = float(tscores.sum())
        weights = tscores / total if total > 0.0 else None
        parents_a = rng.choice(n, size=n - 1, p=weights)
        parents_b = rng.choice(n, size=n - 1, p=weights)
        cross = rng.random((n - 1, d)) < 0.5
        children = np.where(cross, x[parents_a], x[parents_b])
        _mutate_rows(children, space, np.full(n - 1, params.child_mutation_prob), rng)
        x = np.vstack([x[elite][np.newaxis, :], children])

    return run.result(AttackStatus.EXHAUSTED, best_ever, best_ever_score, params.max_iters)


def greedy_attack(
    space: SearchSpace,
    victim,
    target: int | None = None,
    params: GreedyParams | None = None,
    seed: int = 0,
) -> AttackResult:
    """Saliency-ordered greedy substitution baseline.

    Position saliency is the drop in the original label's probability when
    that token is replaced by the unknown token.  Positions are visited in
    descending saliency (ties by position); at each, the candidate with the
    highest target probability is adopted only on strict improvement.  The
    result's ``iterations`` counts positions examined.  Deterministic: the
    seed is recorded but never drawn from.
    """
    params = params if params is not None else GreedyParams()
    run = _Runner(space, victim, "greedy", seed, params.query_budget)
    orig_probs = run.resolve_target(target)

    d = len(space)
    cap = max_edits(space, params.max_mod_rate)
    ns = space.nonsingleton

    if not run.can_afford(len(ns)):
        return run.result(AttackStatus.BUDGET_EXCEEDED, None, 0.0, 0)
    originals = space.original.surfaces()
    masked_rows = []
    for j in ns:
        row = list(originals)
        row[j] = params.unk_token
        masked_rows.append(row)
    ctx = None if run._context is None else [run._context] * len(masked_rows)
    masked_probs = run.victim.predict_tokens(masked_rows, ctx)
    run.queries += len(masked_rows)
    saliency = orig_probs[run.orig_label] - masked_probs[:, run.orig_label]
    order = np.argsort(-saliency, kind="stable")

    x = space.zero_assignment()
    current_prob = float(orig_probs[run.target])
    steps = 0
    edits = 0
    for j in (int(ns[i]) for i in order):
        count = int(space.counts[j])
        if not run.can_afford(count - 1):
            return run.result(AttackStatus.BUDGET_EXCEEDED, x, current_prob, steps)
        variants = np.tile(x, (count - 1, 1))
        variants[:, j] = np.arange(1, count)
        probs = run.score(variants)
        steps += 1
        tscores = probs[:, run.target]
        best = int(np.argmax(tscores))
        if float(tscores[best]) > current_prob:
            x[j] = best + 1
            edits += 1
            current_prob = float(tscores[best])
            run.record(steps, current_prob)
            if int(np.argmax(probs[best])) == run.target and edits <= cap:
                return run.result(AttackStatus.SUCCESS, x, current_prob, steps)
            if edits == cap:
                break
    return run.result(AttackStatus.EXHAUSTED, x, current_prob, steps)


def _level_assignments(space: SearchSpace, r: int):
    """All assignments at exactly r edits, positions and indices ascending."""
    if r == 0:
        yield space.zero_assignment()
        return
    ns = [int(j) for j in space.nonsingleton]
    for combo in itertools.combinations(ns, r):
        ranges = [range(1, int(space.counts[j])) for j in combo]
        for values in itertools.product(*ranges):
            a = space.zero_assignment()
            for j, val in zip(combo, values):
                a[j] = val
            yield a


def _exhaustive_core(run: _Runner, space: SearchSpace, mod_cap: float, cap: int, chunk: int = 2048):
    """Scan edit levels outward; returns (assignment, prob, level) for the
    lexicographically smallest hit on the first feasible level, else None."""
    if space.size > cap:
        raise SpaceTooLarge(f"{space.size} assignments exceed the exhaustive cap of {cap}")
    limit = max_edits(space, mod_cap)
    for r in range(limit + 1):
        hits: list[tuple[tuple, float]] = []
        level = _level_assignments(space, r)
        while True:
            block = list(itertools.islice(level, chunk))
            if not block:
                break
            if not run.can_afford(len(block)):
                return None, 0.0, r, True
            probs = run.score(np.stack(block))
            winners = np.argmax(probs, axis=1) == run.target
            for i in np.flatnonzero(winners):
                hits.append((tuple(int(v) for v in block[i]), float(probs[i, run.target])))
        if hits:
            assignment, prob = min(hits)
            return np.array(assignment, dtype=np.int64), prob, r, False
    return None, 0.0, limit, False


def exhaustive_search(
    space: SearchSpace,
    victim,
    target: int,
    max_mod_rate: float = 0.25,
    cap: int = EXHAUSTIVE_CAP,
) -> np.ndarray | None:
    """Oracle: the minimum-edit assignment the victim labels as ``target``
    within the modification cap (ties: lexicographically smallest index
    vector), or None when no such assignment exists.
    """
    run = _Runner(space, victim, "exhaustive", 0, None)
    run.target = int(target)
    assignment, _, _, _ = _exhaustive_core(run, space, max_mod_rate, cap)
    return assignment


def exhaustive_attack(
    space: SearchSpace,
    victim,
    target: int | None = None,
    params: ExhaustiveParams | None = None,
    seed: int = 0,
) -> AttackResult:
    """Benchmark wrapper around the oracle; ``iterations`` reports the edit
    level of the found assignment."""
    params = params if params is not None else ExhaustiveParams()
    run = _Runner(space, victim, "exhaustive", seed, params.query_budget)
    run.resolve_target(target)
    assignment, prob, level, out_of_budget = _exhaustive_core(run, space, params.max_mod_rate, params.cap)
    if assignment is not None:
        run.record(level, prob)
        return run.result(AttackStatus.SUCCESS, assignment, prob, level)
    if out_of_budget:
        return run.result(AttackStatus.BUDGET_EXCEEDED, None, 0.0, level)
    return run.result(AttackStatus.EXHAUSTED, None, 0.0, level)


ALGORITHMS = {
    "pso": (PsoParams, pso_attack),
    "genetic": (GeneticParams, genetic_attack),
    "greedy": (GreedyParams, greedy_attack),
    "exhaustive": (ExhaustiveParams, exhaustive_attack),
}


def run_attack(algorithm: str, space: SearchSpace, victim, target=None, params=None, seed: int = 0) -> AttackResult:
    """Dispatch an attack by name with that algorithm's default parameters."""
    try:
        param_type, fn = ALGORITHMS[algorithm]
    except KeyError:
        raise ValidationError(f"unknown algorithm {algorithm!r}; expected one of {sorted(ALGORITHMS)}") from None
    if params is None:
        params = param_type()
    return fn(space, victim, target=target, params=params, seed=seed)
