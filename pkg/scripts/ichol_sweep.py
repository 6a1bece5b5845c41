"""Incomplete-Cholesky sweep over the sparse corpus: error, fidelity, nnz and circuit size vs eps.

Usage: python3 scripts/ichol_sweep.py [--count 20] [--seed 0] [--circuits]

With --circuits, matrices up to 16x16 are also synthesized and the
purification gate count is reported for each drop tolerance.
"""

import argparse

import numpy as np

from mixprep.cholesky import incomplete_cholesky
from mixprep.corpus import sparse_corpus
from mixprep.linalg import fidelity
from mixprep.mixedsynth import synth_from_density

EPS = (0.0, 1e-4, 1e-3, 1e-2, 1e-1)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--circuits", action="store_true")
    args = p.parse_args()
    print(f"{'#':>3} {'d':>4} {'eps':>7} {'rel_err':>10} {'err/eps':>8} {'1-F':>10} {'nnz':>6} {'shift':>7} {'gates':>6}")
    worst = {eps: 0.0 for eps in EPS[1:]}
    for i, rho in enumerate(sparse_corpus(args.count, seed=args.seed)):
        d = rho.shape[0]
        for eps in EPS:
            f = incomplete_cholesky(rho, eps)
            approx = f.reconstruct()
            rel = np.linalg.norm(rho - approx) / np.linalg.norm(rho)
            infid = 1 - fidelity(rho, approx / np.trace(approx).real)
            ratio = rel / eps if eps else 0.0
            if eps:
                worst[eps] = max(worst[eps], ratio)
            gates = ""
            if args.circuits and d <= 16:
                gates = synth_from_density(rho, drop_tol=eps, simulate=False).counts.total_primitive
            print(f"{i:>3} {d:>4} {eps:>7.0e} {rel:>10.3e} {ratio:>8.3f} {infid:>10.3e} "
                  f"{f.nnz:>6} {f.shift:>7.0e} {gates!s:>6}")
    print("\nworst relative error / eps:", {f"{k:.0e}": round(float(v), 3) for k, v in worst.items()})


if __name__ == "__main__":
    main()
