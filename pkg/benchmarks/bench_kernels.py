"""Time the hot kernels under both backends.

Usage: python benchmarks/bench_kernels.py [--particles N] [--positions D]
       [--repeat R]

Prints one row per kernel with the best-of-R wall time for numpy and, when
available, numba (first call excluded so JIT compilation is not billed), plus
the speedup. The same pre-drawn inputs go to both backends, so the outputs
are also cross-checked for bit equality while timing.
"""

import argparse
import time

import numpy as np

from swarmattack import kernels


def make_inputs(rng, n, d, vocab=5000, labels=2):
    counts = rng.integers(1, 4, size=d).astype(np.int64)
    x = rng.integers(0, 1_000, size=(n, d)).astype(np.int64) % counts
    pbest = rng.integers(0, 1_000, size=(n, d)).astype(np.int64) % counts
    gbest = rng.integers(0, 1_000, size=d).astype(np.int64) % counts
    return {
        "ids": rng.integers(0, vocab, size=(n, d)).astype(np.int64),
        "weights": rng.normal(size=(vocab, labels)),
        "v": rng.normal(size=(n, d)),
        "x": x,
        "pbest": pbest,
        "gbest": gbest,
        "counts": counts,
        "nonsingleton": np.flatnonzero(counts > 1).astype(np.int64),
        "gate": (rng.random(size=n) < 0.5),
        "u": rng.random(size=(n, d)),
        "sig": kernels.sigmoid(rng.normal(size=(n, d))),
        "pm": rng.random(size=n),
        "u_coin": rng.random(size=n),
        "u_pos": rng.random(size=n),
        "u_cand": rng.random(size=n),
    }


def calls(inp):
    # mutating kernels get private copies so both backends see the same state
    return {
        "score_tokens": lambda: kernels.score_tokens(inp["ids"], inp["weights"]),
        "velocity_step": lambda: kernels.velocity_step(
            inp["v"], inp["x"], inp["pbest"], inp["gbest"], 0.5),
        "move_toward": lambda x=None: kernels.move_toward(
            inp["x"].copy(), inp["pbest"], inp["gate"], inp["u"], inp["sig"]),
        "move_toward_shared": lambda: kernels.move_toward_shared(
            inp["x"].copy(), inp["gbest"], inp["gate"], inp["u"], inp["sig"]),
        "mutate_step": lambda: kernels.mutate_step(
            inp["x"].copy(), inp["nonsingleton"], inp["counts"], inp["pm"],
            inp["u_coin"], inp["u_pos"], inp["u_cand"]),
    }


def returning_calls(inp):
    """Kernels with comparable return values, for the equality cross-check."""
    return {
        "score_tokens": lambda: kernels.score_tokens(inp["ids"], inp["weights"]),
        "velocity_step": lambda: kernels.velocity_step(
            inp["v"], inp["x"], inp["pbest"], inp["gbest"], 0.5),
    }


def best_time(fn, repeat):
    fn()  # warm-up; hides numba compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--particles", type=int, default=60)
    ap.add_argument("--positions", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    inp = make_inputs(rng, args.particles, args.positions)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}   "
          f"particles={args.particles} positions={args.positions} repeat={args.repeat}")

    times = {b: {} for b in backends}
    for backend in backends:
        kernels.set_backend(backend)
        for name, fn in calls(inp).items():
            times[backend][name] = best_time(fn, args.repeat)

    if "numba" in backends:
        outputs = {}
        for backend in ("numpy", "numba"):
            kernels.set_backend(backend)
            outputs[backend] = {n: f() for n, f in returning_calls(inp).items()}
        for name in outputs["numpy"]:
            same = np.array_equal(outputs["numpy"][name], outputs["numba"][name])
            assert same, f"{name}: backends disagree"
        print("cross-check: numba output bit-identical to numpy")

    header = f"{'kernel':<20}" + "".join(f"{b + ' (us)':>14}" for b in backends)
    if "numba" in backends:
        header += f"{'numba gain':>12}"
    print(header)
    print("-" * len(header))
    for name in calls(inp):
        row = f"{name:<20}"
        for b in backends:
            row += f"{times[b][name] * 1e6:>14.1f}"
        if "numba" in backends:
            row += f"{times['numpy'][name] / times['numba'][name]:>11.2f}x"
        print(row)
    kernels.set_backend("auto")


if __name__ == "__main__":
    main()
