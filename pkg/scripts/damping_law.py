"""Beliaev k^5 law: Im Sigma(e_k + i0) over a log grid, fitted slope and constant."""

import argparse

import numpy as np

from beliaev.dispersion import ModelParams, dispersion
from beliaev.self_energy import beliaev_constant, im_sigma_on_shell


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--vhat0", type=float, default=1.0)
    ap.add_argument("--cutoff", type=float, default=5.0)
    ap.add_argument("--kmin", type=float, default=0.02)
    ap.add_argument("--kmax", type=float, default=0.2)
    ap.add_argument("--points", type=int, default=12)
    args = ap.parse_args()

    p = ModelParams(args.mu, args.vhat0)
    ks = np.geomspace(args.kmin, args.kmax, args.points)
    im = np.array([im_sigma_on_shell(p, k, args.cutoff) for k in ks])
    bc = beliaev_constant(p)
    print(f"{'k':>10} {'Im Sigma':>14} {'ratio to -C e^6/k':>18}")
    for k, v in zip(ks, im):
        lead = -bc.value * dispersion(p, k) ** 6 / k
        print(f"{k:10.5f} {v:14.6e} {v / lead:18.8f}")
    slope = np.polyfit(np.log(ks), np.log(np.abs(im)), 1)[0]
    print(f"fitted slope {slope:.5f}")
    print(f"constant: {bc.note}")


if __name__ == "__main__":
    main()
