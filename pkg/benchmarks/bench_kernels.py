"""Compare the numba and pure-numpy barrier kernels.

    python benchmarks/bench_kernels.py [--dims 10 50 100 200] [--rounds 300]

Times a single barrier evaluation and a full interior-point run on a rotated
cube (m = 2n constraints) and on a ball, for both backends. Setting
DIKIN_OCO_JIT=0 changes only the default backend; this script always runs both.
"""
import argparse
import statistics
import time

import numpy as np

from dikin_oco import Barrier, Domain, tune_rate
from dikin_oco._kernels import NUMBA_AVAILABLE
from dikin_oco.learners import IPLearner
from dikin_oco.losses import make_linear_loss


def rotated_cube(n, rng):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Domain.polytope(np.vstack([Q, -Q]), -np.ones(2 * n))


def time_eval(barrier, X, repeats):
    barrier.evaluate(X[0])
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        for x in X:
            barrier.evaluate(x)
        samples.append((time.perf_counter() - start) / len(X))
    return statistics.median(samples)


def time_run(barrier, losses, x1):
    learner = IPLearner(barrier, tune_rate(barrier.theta, 1.0, barrier.diameter, len(losses)), x1)
    learner.update(losses[0])
    start = time.perf_counter()
    for f in losses[1:]:
        learner.update(f)
    return (time.perf_counter() - start) / (len(losses) - 1)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dims", type=int, nargs="+", default=[10, 50, 100, 200])
    p.add_argument("--rounds", type=int, default=300)
    p.add_argument("--repeats", type=int, default=5)
    args = p.parse_args(argv)
    backends = ["numba", "numpy"] if NUMBA_AVAILABLE else ["numpy"]

    print(f"{'domain':<14} {'n':>4} {'backend':<7} {'eval us':>10} {'round us':>10} {'vs numba':>9}")
    for n in args.dims:
        rng = np.random.default_rng(n)
        C = rng.standard_normal((args.rounds, n))
        losses = [make_linear_loss(c / np.linalg.norm(c)) for c in C]
        for name, dom, diam in [("rotated_cube", rotated_cube(n, rng), 2 * np.sqrt(n)),
                                ("ball", Domain.ball(np.zeros(n), 1.0), 2.0)]:
            X = 0.3 / np.sqrt(n) * rng.uniform(-1, 1, (200, n))
            base = None
            for backend in backends:
                barrier = Barrier(dom, diameter=diam, backend=backend)
                ev = time_eval(barrier, X, args.repeats)
                rd = time_run(barrier, losses, np.zeros(n))
                base = ev if base is None else base
                print(f"{name:<14} {n:>4} {backend:<7} {1e6 * ev:>10.2f} {1e6 * rd:>10.2f} {ev / base:>8.2f}x")


if __name__ == "__main__":
    main()
