"""Cutoff ladders for Sigma(z) - Sigma(0): gaps and their shrink factors.

Also prints k Sigma(0) against its predicted k -> 0 limit.
"""

import argparse

from beliaev.dispersion import ModelParams
from beliaev.self_energy import (sigma_at_zero, sigma_renormalized,
                                 zero_energy_divergence_coefficient)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--k", type=float, default=0.5)
    ap.add_argument("--z-im", type=float, default=0.2)
    args = ap.parse_args()

    p = ModelParams(args.mu, 1.0)
    for ladder in ([5, 10, 20, 40], [10, 20, 40, 80], [20, 40, 80, 160]):
        r = sigma_renormalized(p, args.k, complex(0, args.z_im), ladder, check_decay=False)
        factors = [a / b for a, b in zip(r.gaps, r.gaps[1:])]
        print(f"ladder {ladder}: gaps {['%.5f' % g for g in r.gaps]} "
              f"factors {['%.3f' % f for f in factors]} extrapolated {r.value:.6f}")
    limit = zero_energy_divergence_coefficient(p, 3.0)
    print(f"predicted lim k Sigma(0), cutoff 3: {limit:.5f}")
    for k in (0.1, 0.05, 0.025, 0.0125):
        print(f"  k={k:<7} k Sigma(0) = {k * sigma_at_zero(p, k, 3.0).value.real:.5f}")


if __name__ == "__main__":
    main()
