"""Worst-case gate counts of the pure, mixture and purification circuits next to their closed forms.

Usage: python3 scripts/gate_count_table.py [--max-n 8] [--seed 0]
"""

import argparse

import numpy as np

from mixprep.circuit import gate_counts
from mixprep.corpus import random_ensemble, random_state
from mixprep.mixedsynth import merge_purification_ucr, synth_mixture, synth_purification
from mixprep.puresynth import synth_pure


def pure_rows(max_n, rng):
    print("pure states (zero-skip off)")
    print(f"{'n':>3} {'cnot':>7} {'formula':>8} {'rot':>7} {'formula':>8}")
    for n in range(1, max_n + 1):
        r = gate_counts(synth_pure(random_state(n, rng), skip_zeros=False), skip_zeros=False)
        print(f"{n:>3} {r.cnot:>7} {2 ** (n + 1) - 2 * n - 2:>8} "
              f"{r.one_qubit_rotations:>7} {2 ** (n + 1) - 2:>8}")


def mixed_rows(rng):
    print("\nmixed states, merged purification (zero-skip off) and mixture ladder")
    print(f"{'n':>3} {'m':>3} {'cnot':>6} {'2^m(2^(n+1)-1)-2n-2':>20} {'rot':>6} "
          f"{'cswap':>6} {'static':>7} {'dynamic':>8}")
    for n in (1, 2, 3):
        for m in (1, 2, 3):
            e = random_ensemble(n, 1 << m, rng)
            c, _ = synth_purification(e, phase_fix=False, skip_zeros=False)
            r = gate_counts(merge_purification_ucr(c, skip_zeros=False), skip_zeros=False)
            mix = synth_mixture(e)[1]
            print(f"{n:>3} {m:>3} {r.cnot:>6} {2 ** m * (2 ** (n + 1) - 1) - 2 * n - 2:>20} "
                  f"{r.one_qubit_rotations:>6} {mix.cswap:>6} {mix.registers_static:>7} "
                  f"{mix.registers_dynamic:>8}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--max-n", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    pure_rows(args.max_n, rng)
    mixed_rows(rng)


if __name__ == "__main__":
    main()
