#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the three hot layers on a bundled-model chain: forward kinematics,
twist Jacobians, and the full loaded-stiffness evaluation (which drives
the Jacobian kernel through the Hessian finite differences).

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from kinetostat import (
    ChainState,
    OrthoglideParams,
    SolverOptions,
    Transform,
    apply_deflection,
    Deflection,
    build_orthoglide_puu,
    chain_stiffness_loaded,
    solve_equilibrium,
)
from kinetostat._kernels import available_backends
from kinetostat.models import puu_passive_nominal
from kinetostat import statics, chain as chain_mod


def time_call(fn, repeat):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def bench(backend_name, backend, repeat):
    # route the chain-level helpers through the chosen backend
    chain_mod._kernels.forward = backend.forward
    chain_mod._kernels.jacobian = backend.jacobian

    params = OrthoglideParams()
    point = params.reference_point("Q2")
    chain = build_orthoglide_puu(params, point)[0]
    nominal = puu_passive_nominal(params, point)[0]
    state = ChainState(nominal, np.zeros(chain.n_virtual))
    target = apply_deflection(
        Transform(np.eye(3), point),
        Deflection.from_array(np.array([0.5, 0.5, 0.5, 0, 0, 0.0])),
    )
    eq = solve_equilibrium(chain, target, state, SolverOptions())
    assert eq.converged

    prog, q, theta = chain.program, state.q, state.theta
    results = {
        "forward kinematics": time_call(lambda: backend.forward(prog, q, theta), repeat),
        "jacobians": time_call(lambda: backend.jacobian(prog, q, theta), repeat),
        "loaded stiffness": time_call(
            lambda: chain_stiffness_loaded(chain, eq), max(1, repeat // 200)),
    }
    print(f"\n{backend_name} backend:")
    for name, dt in results.items():
        print(f"  {name:22s} {dt * 1e6:10.2f} us/call")
    return results


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=2000, help="calls per timing loop")
    args = ap.parse_args()

    backends = available_backends()
    print("available backends:", ", ".join(sorted(backends)))
    saved_forward = chain_mod._kernels.forward
    saved_jacobian = chain_mod._kernels.jacobian
    try:
        results = {name: bench(name, impl, args.repeat)
                   for name, impl in sorted(backends.items())}
    finally:
        chain_mod._kernels.forward = saved_forward
        chain_mod._kernels.jacobian = saved_jacobian

    if len(results) == 2:
        print("\nspeedup (pure / compiled):")
        for key in results["pure"]:
            print(f"  {key:22s} {results['pure'][key] / results['compiled'][key]:8.1f}x")


if __name__ == "__main__":
    main()
