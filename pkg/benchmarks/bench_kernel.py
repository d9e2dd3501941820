"""Time the trajectory kernel: compiled extension against the Python twin.

    python benchmarks/bench_kernel.py [--steps N] [--repeat R]

Both backends receive the same propagator, jump operators and uniforms, so
the script also checks that they return identical states and counts.
"""
import argparse
import time

import numpy as np

from jumpentropy import models, pdp


def _case(model, steps, seed):
    comp = pdp.compile_model(model, 1e-3)
    psi = np.zeros(model.dim, dtype=np.complex128)
    psi[1] = 1.0
    u = pdp.RngStream(seed, 0).generator().random(steps)
    return comp, psi, u


def _time(kernel, comp, psi, u, sample_every, repeat):
    n = len(u) // sample_every + 1
    best = np.inf
    for _ in range(repeat):
        states = np.zeros((n, len(psi)), dtype=np.complex128)
        counts = np.zeros((n, len(comp.kinds)), dtype=np.int64)
        t0 = time.perf_counter()
        kernel.evolve(comp.prop, comp.jumps, psi, u, sample_every, states, counts, None, None)
        best = min(best, time.perf_counter() - t0)
    return best, states, counts


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cases = {
        "qubit": models.driven_qubit(models.QubitParams()),
        "lambda": models.lambda_system(models.LambdaParams()),
    }
    print(f"{'model':8s} {'backend':9s} {'ns/step':>10s} {'speedup':>8s}")
    for name, model in cases.items():
        comp, psi, u = _case(model, args.steps, 1)
        # the Python twin is slow; time it on a shorter slice
        py_steps = min(args.steps, 20_000)
        t_py, s_py, c_py = _time(pdp.KERNELS["python"], comp, psi, u[:py_steps], 50, 1)
        ns_py = 1e9 * t_py / py_steps
        print(f"{name:8s} {'python':9s} {ns_py:10.1f} {1.0:8.1f}")
        if "compiled" not in pdp.KERNELS:
            print(f"{name:8s} {'compiled':9s} {'n/a':>10s}")
            continue
        t_c, _, _ = _time(pdp.KERNELS["compiled"], comp, psi, u, 50, args.repeat)
        ns_c = 1e9 * t_c / args.steps
        _, s_c, c_c = _time(pdp.KERNELS["compiled"], comp, psi, u[:py_steps], 50, 1)
        same = np.array_equal(s_c, s_py) and np.array_equal(c_c, c_py)
        print(f"{name:8s} {'compiled':9s} {ns_c:10.1f} {ns_py / ns_c:8.1f}  identical={same}")


if __name__ == "__main__":
    main()
