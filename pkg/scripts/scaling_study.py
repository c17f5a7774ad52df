"""Sup errors of the scaled kernel against the Ginibre model and decay fits.

    python scripts/scaling_study.py
"""

from bergman_dpp.hilbert import BergmanEvaluator
from bergman_dpp.universality import decay_fit, scaling_series, slope_ratio
from bergman_dpp.weights import catalog

CENTERS = (0j, 0.3 + 0j, 0.4j, 1.5 + 0j)


def main():
    cat = catalog(1)
    for name in ("quadratic", "radial-poly"):
        w = cat[name]
        for c in CENTERS:
            errs, mono = scaling_series(w, c, [64, 128, 256])
            print(f"{name:12s} center {c!s:8s} sup errors {['%.3e' % e for e in errs]} decreasing {mono}")
    B64 = BergmanEvaluator.build(cat["quadratic"], 64)
    B256 = BergmanEvaluator.build(cat["quadratic"], 256)
    for c in CENTERS[:3]:
        a, b = decay_fit(B64, c), decay_fit(B256, c)
        print(f"decay center {c!s:8s} C(64)={a.C} C(256)={b.C} slope ratio {slope_ratio(a, b):.3f}")


if __name__ == "__main__":
    main()
