"""Normalized free energies k^{-(n+1)} F[k phi] against the energy limit.

    python scripts/free_energy_study.py --ks 16,32,64,128
"""

import argparse

from bergman_dpp.equilibrium import f_infinity
from bergman_dpp.statistics import free_energy_series
from bergman_dpp.weights import catalog


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ks", default="16,32,64,128")
    args = ap.parse_args()
    ks = [int(v) for v in args.ks.split(",")]
    cat = catalog(1)
    ref = cat["quadratic"]
    for name in ("quadratic2", "radial-poly", "composite"):
        limit = f_infinity(cat[name], ref)
        s = free_energy_series(cat[name], ref, ks, limit)
        rows = ", ".join(f"k={k}: {v:.6f} ({e:.2%})" for k, v, e in zip(ks, s.normalized, s.relative_errors))
        print(f"{name:12s} limit {limit:.8f}  {rows}")


if __name__ == "__main__":
    main()
