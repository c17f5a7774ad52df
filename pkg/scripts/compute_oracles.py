"""Compute reference values with mpmath and freeze them in tests/data/oracles.json.

Everything here uses closed forms or one-dimensional mpmath quadrature only;
nothing from the package is imported, so the values are independent of its
quadrature, Gram and envelope code.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40
OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def fock_kernel(k, z, w):
    """(k/pi) sum_{m<=k} (k z conj(w))^m / m!, the kernel for phi = |z|^2."""
    x = k * z * mp.conj(w)
    return k / mp.pi * mp.fsum(x**m / mp.factorial(m) for m in range(k + 1))


def fock_rho1(k, t):
    """rho1 at |z|^2 = t: (k/pi) P(Poisson(k t) <= k)."""
    return k / mp.pi * mp.gammainc(k + 1, k * t, mp.inf) / mp.factorial(k)


def bump(rr, r, amp=1):
    x = rr**2 / r**2
    return amp * (1 - x) ** 2 if x < 1 else mp.mpf(0)


def section_weight(k, m, rr):
    """|s_m|^2 e^{-k r^2} at radius rr for the orthonormal monomials of phi = |z|^2."""
    return k ** (m + 1) / (mp.pi * mp.factorial(m)) * rr ** (2 * m) * mp.exp(-k * rr**2)


def radial_moments(k, r, amp=1):
    """Mean and variance of the linear statistic of a centred bump (diagonal U)."""
    mean = mp.mpf(0)
    var = mp.mpf(0)
    for m in range(k + 1):
        a = mp.quad(lambda t: 2 * mp.pi * t * section_weight(k, m, t) * bump(t, r, amp), [0, r])
        b = mp.quad(lambda t: 2 * mp.pi * t * section_weight(k, m, t) * bump(t, r, amp) ** 2, [0, r])
        mean += a
        var += b - a**2
    return mean, var


def envelope_energy_radial_poly():
    """E[P(|z|^2 + |z|^4/4), P|z|^2] for n = 1 in log coordinates s = ln|z|^2."""
    g1 = lambda s: mp.exp(s) + mp.exp(2 * s) / 4
    d1 = lambda s: mp.exp(s) + mp.exp(2 * s) / 2
    s1 = mp.log(mp.sqrt(3) - 1)  # d1 = 1
    c1 = g1(s1) - s1
    c2 = mp.mpf(1)  # P|z|^2 = ln|z|^2 + 1 outside the unit disk
    slope1 = lambda s: d1(s) if s < s1 else mp.mpf(1)
    slope2 = lambda s: mp.exp(s) if s < 0 else mp.mpf(1)
    integral = mp.quad(lambda s: slope1(s) ** 2 - slope2(s) ** 2, [-mp.inf, s1, 0])
    return (c1 - c2) - integral / 2


def main():
    data = {}
    pts = [0, 0.3, 0.5 + 0.5j, 1.2j, 1.0, 1.5 - 0.8j, 2.0]
    data["fock_rho1"] = [
        {"k": k, "z": [float(mp.re(z)), float(mp.im(z))], "value": float(fock_rho1(k, abs(mp.mpc(z)) ** 2))}
        for k in (1, 2, 4, 8, 32, 64)
        for z in pts
    ]
    pairs = [(0, 0.5), (0.3 + 0.1j, -0.2j), (1.0, 1.1 + 0.2j), (0.5j, 1.5)]
    rows = []
    for k in (4, 8, 32, 64):
        for z, w in pairs:
            z, w = mp.mpc(z), mp.mpc(w)
            K = fock_kernel(k, z, w)
            wk = K * mp.exp(-k * (abs(z) ** 2 + abs(w) ** 2) / 2)
            rows.append({"k": k, "z": [float(z.real), float(z.imag)], "w": [float(w.real), float(w.imag)],
                         "re": float(mp.re(K)), "im": float(mp.im(K)), "weighted_abs": float(abs(wk))})
    data["fock_kernel"] = rows
    mom = []
    for k in (8, 16, 32):
        for r in (0.5, 0.7):
            mean, var = radial_moments(k, r)
            mom.append({"k": k, "r": r, "mean": float(mean), "variance": float(var)})
    data["bump_moments"] = mom
    data["energy_quadratic2_vs_quadratic"] = float(mp.log(2) / 2)
    data["energy_radial_poly_vs_quadratic"] = float(envelope_energy_radial_poly())
    data["dirichlet_bump_unit_amp"] = float(4 * mp.pi / 3)
    data["bump_integral_unit_disk_density"] = float(mp.quad(lambda t: 2 * t * bump(t, mp.mpf("0.5")), [0, 0.5]))
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
