"""Follow the H1 norm of the sigma = 4 NLS run beyond the default horizon.

Prints the step at which the H1 norm first exceeds a multiple of its initial
value, or the largest ratio reached.

    python3 scripts/nls_long_run.py --sigma 4 --steps 500 --factor 10
"""

import argparse

import numpy as np

from multirev import integrators as it
from multirev import nls
from multirev import randomkernel as rk
from multirev.problem import SchemeConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K-x", type=int, default=64)
    ap.add_argument("--sigma", type=int, default=4)
    ap.add_argument("--eps", type=float, default=1e-2)
    ap.add_argument("--N", type=int, default=10)
    ap.add_argument("--K-t", type=int, default=64)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--factor", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    problem = nls.build_nls_problem(args.K_x, args.sigma, args.eps)
    y = nls.initial_profile(args.K_x, args.sigma, args.eps).to_state()
    scheme = SchemeConfig(N=args.N, K_t=args.K_t)
    h0 = nls.h1_norm(y)
    rng = rk.stream(args.seed, 99)
    best = 1.0
    with np.errstate(all="ignore"):
        for m in range(1, args.steps + 1):
            y = it.integrate(problem, y, scheme, "method-b", 1, rng)[-1]
            ratio = nls.h1_norm(y) / h0
            best = max(best, ratio)
            if m % 50 == 0:
                print(f"step {m:4d}  H1 ratio {ratio:7.3f}  L2 {nls.l2_norm(y):.12f}")
            if ratio >= args.factor:
                print(f"H1 ratio reached {args.factor:g} at step {m}")
                return
    print(f"largest H1 ratio {best:.3f} within {args.steps} steps")


if __name__ == "__main__":
    main()
