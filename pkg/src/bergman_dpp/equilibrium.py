"""Equilibrium weights, equilibrium measures and the energy functionals.

Radial weights are handled in the coordinate ``s = ln|z|^2``, where ``phi``
becomes ``g(s)`` and plurisubharmonic functions of logarithmic growth become
convex nondecreasing functions with slope at most 1.  The envelope is then the
largest such minorant of ``g``.  For planar weights without symmetry the
envelope is computed on a square grid by projected over-relaxation.

Monge-Ampere densities are ``det(d^2 phi / dz dzbar) / pi^n`` with respect to
Lebesgue measure.  For a radial function ``u(s)`` on C^n the Monge-Ampere mass
of ``{s < sigma}`` is ``u'(sigma)^n / n!``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, ndimage, optimize
from scipy.interpolate import RegularGridInterpolator

from .weights import WeightError, WeightFunction, as_points


class EnvelopeError(RuntimeError):
    pass


# --- radial profiles -----------------------------------------------------------


@dataclass
class RadialProfile:
    """``g(s) = phi(e^{s/2} e)`` sampled on ``[s_min, s_max]``, with analytic slope when known."""

    s: np.ndarray
    g: np.ndarray
    func: object = None  # callable g(s)
    slope: object = None  # callable g'(s)
    n: int = 1

    @classmethod
    def from_weight(cls, w: WeightFunction, s_min: float = -30.0, s_max: float = 12.0, num: int = 8001):
        if not w.is_radial:
            raise WeightError("radial profile requires a weight radial about the origin")
        s = np.linspace(s_min, s_max, num)
        # make sure profile kinks (bump edges) are grid points
        kinks = [2 * math.log(b) for b in w.breakpoints if b > 0]
        s = np.unique(np.concatenate([s, [x for x in kinks if s_min < x < s_max]]))

        def func(x):
            return w.radial_profile(np.exp(x))

        def slope(x):
            e = np.exp(x)
            return w.radial_profile(e, 1) * e

        with np.errstate(over="ignore"):
            g = func(s)
        return cls(s, g, func, slope, w.n)

    @classmethod
    def from_samples(cls, s, g, n: int = 1):
        return cls(np.asarray(s, float), np.asarray(g, float), None, None, n)

    def is_admissible(self, tol: float = 1e-12) -> bool:
        """Convex and nondecreasing on the sample grid."""
        d = np.diff(self.g) / np.diff(self.s)
        return bool(np.all(d >= -tol) and np.all(np.diff(d) >= -tol * (1 + np.abs(d[1:]))))

    def eval(self, x):
        if self.func is not None:
            return self.func(np.asarray(x, float))
        return np.interp(x, self.s, self.g)

    def deriv(self, x):
        if self.slope is not None:
            return self.slope(np.asarray(x, float))
        return np.interp(x, 0.5 * (self.s[1:] + self.s[:-1]), np.diff(self.g) / np.diff(self.s))


@dataclass(frozen=True)
class Piece:
    """``kind`` is 'obstacle' (envelope = g) or 'affine' (value ``a + b s``)."""

    kind: str
    s_lo: float
    s_hi: float
    a: float = 0.0
    b: float = 0.0


@dataclass
class EquilibriumWeight:
    """Envelope ``phi_e``; radial envelopes carry exact pieces, grid envelopes carry values."""

    n: int
    asymptote_constant: float
    pieces: tuple = ()
    profile: RadialProfile | None = None
    xs: np.ndarray | None = None
    ys: np.ndarray | None = None
    values: np.ndarray | None = None
    iterations: int = 0

    @property
    def is_radial(self) -> bool:
        return bool(self.pieces)

    @property
    def spacing(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def eval_s(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        done = np.zeros(s.shape, bool)
        for p in self.pieces:
            sel = (s >= p.s_lo) & (s <= p.s_hi) & ~done
            if p.kind == "obstacle":
                out[sel] = self.profile.eval(s[sel])
            else:
                out[sel] = p.a + p.b * s[sel]
            done |= sel
        if not np.all(done):
            raise EnvelopeError("point outside the envelope's domain")
        return out

    def slope_s(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        done = np.zeros(s.shape, bool)
        for p in self.pieces:
            sel = (s >= p.s_lo) & (s <= p.s_hi) & ~done
            out[sel] = self.profile.deriv(s[sel]) if p.kind == "obstacle" else p.b
            done |= sel
        return out

    def evaluate(self, z) -> np.ndarray:
        if self.is_radial:
            z = as_points(z, self.n)
            with np.errstate(divide="ignore"):
                s = np.log(np.sum(np.abs(z) ** 2, axis=-1))
            s = np.maximum(s, self.pieces[0].s_lo)
            return self.eval_s(s)
        # values[i, j] sits at (xs[i], ys[j])
        interp = RegularGridInterpolator((self.xs, self.ys), self.values, method="linear")
        z = as_points(z, 1)[..., 0]
        return interp(np.stack([z.real.ravel(), z.imag.ravel()], -1)).reshape(z.shape)

    def on_grid(self, xs, ys) -> np.ndarray:
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return self.evaluate((X + 1j * Y)[..., None] if self.n == 1 else X + 1j * Y)

    def describe(self) -> str:
        lines = [f"asymptote_constant={self.asymptote_constant!r}"]
        for p in self.pieces:
            if p.kind == "obstacle":
                lines.append(f"obstacle s=[{p.s_lo!r},{p.s_hi!r}]")
            else:
                lines.append(f"affine s=[{p.s_lo!r},{p.s_hi!r}] a={p.a!r} b={p.b!r}")
        return "\n".join(lines) + "\n"


def _lower_hull(s, g):
    """Indices of the lower convex hull vertices (monotone chain)."""
    hull = []
    for i in range(len(s)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (s[i1] - s[i0]) * (g[i] - g[i0]) - (g[i1] - g[i0]) * (s[i] - s[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull)


def radial_envelope(p: RadialProfile, slope_cap: float = 1.0, require_growth: bool = True) -> EquilibriumWeight:
    """Largest convex nondecreasing minorant of ``g`` with slope <= 1, as exact pieces.

    With ``require_growth=False`` a profile that is already convex, nondecreasing
    and slope-capped on the window is its own envelope there (continued by a
    slope-1 ray past ``s_max``); otherwise a terminal slope <= 1 is an error.
    """
    s, g = p.s, p.g
    if p.deriv(s[-1]) <= slope_cap:
        d = np.diff(g) / np.diff(s)
        if not require_growth and p.is_admissible() and np.all(d <= slope_cap + 1e-12):
            a = float(g[-1] - slope_cap * s[-1])
            pieces = (Piece("obstacle", -np.inf, float(s[-1])), Piece("affine", float(s[-1]), np.inf, a, slope_cap))
            return EquilibriumWeight(p.n, a, pieces, p)
        raise EnvelopeError("profile slope at s_max is <= 1; window too small or growth too weak")
    hv = _lower_hull(s, g)
    hs, hg = s[hv], g[hv]
    slopes = np.diff(hg) / np.diff(hs)
    jmin = int(np.argmin(hg))
    jcap = jmin + int(np.searchsorted(slopes[jmin:], slope_cap, side="left"))

    if jmin > 0:
        # the hull decreases first: nondecreasing minorant is flat there
        s_min = float(hs[jmin])
        i = hv[jmin]
        if p.slope is not None and 0 < i < len(s) - 1 and p.deriv(s[i - 1]) * p.deriv(s[i + 1]) < 0:
            s_min = optimize.brentq(p.deriv, s[i - 1], s[i + 1], xtol=1e-15, rtol=1e-15)
        pieces = [Piece("affine", -np.inf, s_min, float(p.eval(s_min)), 0.0)]
    else:
        pieces = [Piece("obstacle", -np.inf, hs[0])]
    for j in range(jmin, jcap):
        i0, i1 = hv[j], hv[j + 1]
        chord = hg[j] + slopes[j] * (s[i0:i1 + 1] - hs[j])
        # chords lying on the graph up to rounding count as contact
        if np.max(g[i0:i1 + 1] - chord) <= 1e-12 * (1 + np.max(np.abs(g[i0:i1 + 1]))):
            pieces.append(Piece("obstacle", hs[j], hs[j + 1]))
        else:
            pieces.append(_bridge(p, hs[j], hs[j + 1]))
    pieces = _stitch(_merge(pieces))

    # tangency g'(s*) = 1 near the hull vertex where the slopes cross the cap
    s_star = float(hs[jcap])
    if pieces[-1].kind == "obstacle" and p.slope is not None:
        i = hv[jcap]
        a, b = s[max(i - 1, 0)], s[min(i + 1, len(s) - 1)]
        if (p.deriv(a) - slope_cap) * (p.deriv(b) - slope_cap) <= 0:
            s_star = optimize.brentq(lambda x: p.deriv(x) - slope_cap, a, b, xtol=1e-15, rtol=1e-15)
    last = pieces[-1]
    pieces[-1] = Piece(last.kind, last.s_lo, s_star, last.a, last.b)
    if last.kind == "obstacle":
        g_star = float(p.eval(s_star))
    else:
        g_star = last.a + last.b * s_star
    pieces.append(Piece("affine", s_star, np.inf, g_star - slope_cap * s_star, slope_cap))
    pieces = [q for q in pieces if q.s_hi > q.s_lo]
    return EquilibriumWeight(p.n, g_star - slope_cap * s_star, tuple(pieces), p)


def _bridge(p: RadialProfile, a: float, b: float) -> Piece:
    """Affine bridge over a non-convex stretch, refined to a double tangent when slopes are known."""
    if p.slope is not None:

        def eqs(v):
            x, y = v
            m = (p.eval(y) - p.eval(x)) / (y - x)
            return [p.deriv(x) - m, p.deriv(y) - m]

        sol, info, ier, _ = optimize.fsolve(eqs, [a, b], full_output=True, xtol=1e-14)
        if ier == 1 and abs(sol[0] - a) < 0.1 and abs(sol[1] - b) < 0.1:
            a, b = float(sol[0]), float(sol[1])
    ga, gb = float(p.eval(a)), float(p.eval(b))
    m = (gb - ga) / (b - a)
    return Piece("affine", a, b, ga - m * a, m)


def _stitch(pieces):
    """Move obstacle ends onto the (refined) ends of neighbouring affine pieces."""
    out = list(pieces)
    for i, q in enumerate(out):
        if q.kind != "obstacle":
            continue
        lo = out[i - 1].s_hi if i > 0 else q.s_lo
        hi = out[i + 1].s_lo if i + 1 < len(out) else q.s_hi
        out[i] = Piece("obstacle", lo, hi)
    return out


def _merge(pieces):
    out = []
    for q in pieces:
        if out and out[-1].kind == q.kind == "obstacle":
            out[-1] = Piece("obstacle", out[-1].s_lo, q.s_hi)
        else:
            out.append(q)
    return out


def envelope_of(w: WeightFunction) -> EquilibriumWeight:
    """Radial envelope straight from a radial weight."""
    return radial_envelope(RadialProfile.from_weight(w))


# --- grid envelope (n = 1) ---------------------------------------------------------


def _sweep(v, obstacle, bmask, omega, parity):
    """One red or black projected over-relaxation half sweep; returns max update."""
    avg = 0.25 * (v[:-2, 1:-1] + v[2:, 1:-1] + v[1:-1, :-2] + v[1:-1, 2:])
    inner = v[1:-1, 1:-1]
    new = np.minimum(obstacle[1:-1, 1:-1], inner + omega * (avg - inner))
    sel = parity[1:-1, 1:-1]
    delta = np.where(sel, new - inner, 0.0)
    inner += delta
    return float(np.max(np.abs(delta)))


def _solve_obstacle(obstacle, boundary, v0, omega, tol, max_iter):
    v = np.array(v0, dtype=float)
    edge = np.zeros_like(v, dtype=bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    v[edge] = boundary[edge]
    if _jit_sweep is not None:
        it, d = _jit_solve(v, obstacle, omega, tol, max_iter)
        if d < tol:
            return v, it
        raise EnvelopeError(f"obstacle relaxation did not converge in {max_iter} sweeps (last update {d:.3e})")
    ii, jj = np.indices(v.shape)
    red = (ii + jj) % 2 == 0
    for it in range(1, max_iter + 1):
        d = max(_sweep(v, obstacle, edge, omega, red), _sweep(v, obstacle, edge, omega, ~red))
        if d < tol:
            return v, it
    raise EnvelopeError(f"obstacle relaxation did not converge in {max_iter} sweeps (last update {d:.3e})")


try:
    import numba

    @numba.njit(cache=True)
    def _jit_sweep(v, obstacle, omega, parity):
        m0, m1 = v.shape
        dmax = 0.0
        for i in range(1, m0 - 1):
            start = 1 + (i + 1 + parity) % 2
            for j in range(start, m1 - 1, 2):
                avg = 0.25 * (v[i - 1, j] + v[i + 1, j] + v[i, j - 1] + v[i, j + 1])
                new = v[i, j] + omega * (avg - v[i, j])
                if new > obstacle[i, j]:
                    new = obstacle[i, j]
                d = abs(new - v[i, j])
                if d > dmax:
                    dmax = d
                v[i, j] = new
        return dmax

    @numba.njit(cache=True)
    def _jit_solve(v, obstacle, omega, tol, max_iter):
        d = np.inf
        for it in range(1, max_iter + 1):
            d = max(_jit_sweep(v, obstacle, omega, 0), _jit_sweep(v, obstacle, omega, 1))
            if d < tol:
                return it, d
        return max_iter, d

except ImportError:  # pragma: no cover - numpy fallback
    _jit_sweep = None


def _discrete_mass(v, h):
    lap = v[:-2, 1:-1] + v[2:, 1:-1] + v[1:-1, :-2] + v[1:-1, 2:] - 4 * v[1:-1, 1:-1]
    return float(np.sum(lap)) / (4 * math.pi)


def grid_envelope(
    w: WeightFunction,
    half_width: float = 2.0,
    size: int = 512,
    tol: float = 1e-10,
    max_iter: int = 200000,
    c_guess: float | None = None,
    levels: int = 3,
) -> EquilibriumWeight:
    """Obstacle relaxation ``v <- min(phi, harmonic average)`` with ``v = ln|z|^2 + c`` on the edge.

    ``c`` is fixed by requiring unit discrete Monge-Ampere mass; a coarse-to-fine
    ladder supplies warm starts.
    """
    if w.n != 1:
        raise WeightError("grid envelope is implemented for n = 1 only")
    sizes = [max(17, size >> (levels - 1 - i)) for i in range(levels)]
    sizes[-1] = size
    c = float(c_guess) if c_guess is not None else _initial_constant(w, half_width)
    v_prev, xs_prev = None, None
    total_iter = 0
    for m in sizes:
        xs = np.linspace(-half_width, half_width, m)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        Z = X + 1j * Y
        obstacle = w.evaluate(Z[..., None])
        log_r2 = np.log(np.maximum(np.abs(Z) ** 2, 1e-300))
        h = xs[1] - xs[0]
        omega = 2.0 / (1.0 + math.sin(math.pi * h / (2 * half_width)))
        if v_prev is None:
            v0 = np.minimum(obstacle, log_r2 + c)
        else:
            interp = RegularGridInterpolator((xs_prev, xs_prev), v_prev)
            v0 = np.minimum(obstacle, interp(np.stack([X, Y], -1)))

        def solve(cval, start):
            v, it = _solve_obstacle(obstacle, log_r2 + cval, start, omega, tol, max_iter)
            return v, it, _discrete_mass(v, h) - 1.0

        v, it, f0 = solve(c, v0)
        total_iter += it
        c1 = c + (0.01 if f0 > 0 else -0.01)
        v1, it, f1 = solve(c1, v)
        total_iter += it
        for _ in range(40):
            if abs(f1) < 1e-12 or f1 == f0:
                break
            c2 = c1 - f1 * (c1 - c) / (f1 - f0)
            c, f0, v = c1, f1, v1
            c1 = c2
            v1, it, f1 = solve(c1, v)
            total_iter += it
            if abs(c1 - c) < 1e-12:
                break
        c, v_prev, xs_prev = c1, v1, xs
    return EquilibriumWeight(1, c, (), None, xs_prev, xs_prev, v_prev, total_iter)


def _initial_constant(w: WeightFunction, half_width: float) -> float:
    # min over the boundary circle of phi - ln|z|^2 bounds c from above
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    rr = np.linspace(0.05, half_width, 64)
    Z = (rr[:, None] * np.exp(1j * th)[None, :]).ravel()
    return float(np.min(w.evaluate(Z[:, None]) - np.log(np.abs(Z) ** 2)))


# --- measures and masks -------------------------------------------------------------


@dataclass
class EquilibriumMeasure:
    xs: np.ndarray
    ys: np.ndarray
    density: np.ndarray
    incidence_mask: np.ndarray
    bulk_mask: np.ndarray
    total_mass: float
    n: int = 1


def _grid_points(E: EquilibriumWeight, xs=None, ys=None):
    xs = E.xs if xs is None else np.asarray(xs)
    ys = E.ys if ys is None else np.asarray(ys)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return xs, ys, X + 1j * Y


def _envelope_values(E, Z):
    if E.values is not None and E.values.shape == Z.shape and np.allclose(E.xs, Z[:, 0].real):
        return E.values
    return E.evaluate(Z[..., None]) if E.is_radial else E.evaluate(Z)


def incidence_and_density(w: WeightFunction, E: EquilibriumWeight, tol: float = 1e-6, xs=None, ys=None):
    xs, ys, Z = _grid_points(E, xs, ys)
    phi = w.evaluate(Z[..., None])
    phie = _envelope_values(E, Z)
    scale = np.maximum(1.0, np.abs(phi))
    incidence = phie >= phi - tol * scale
    det = w.laplacian_density(Z[..., None])
    density = np.where(incidence & (det > 0), det / math.pi**w.n, 0.0)
    return xs, ys, phi, phie, incidence, det, density


def bulk_mask(w: WeightFunction, E: EquilibriumWeight, tol: float = 1e-6, delta: float = 1e-8, xs=None, ys=None):
    """``{|phi_e - phi| <= tol} & {det Hessian >= delta}``, eroded by one cell."""
    xs, ys, phi, phie, _, det, _ = incidence_and_density(w, E, tol, xs, ys)
    scale = np.maximum(1.0, np.abs(phi))
    raw = (np.abs(phie - phi) <= tol * scale) & (det >= delta)
    return ndimage.binary_erosion(raw, structure=np.ones((3, 3), bool), border_value=0)


def equilibrium_measure(E: EquilibriumWeight, w: WeightFunction, tol: float = 1e-6, xs=None, ys=None):
    """Monge-Ampere density of the envelope on a planar grid (n = 1)."""
    if w.n != 1:
        raise WeightError("grid equilibrium measure is planar; use radial_mass for n = 2")
    xs, ys, phi, phie, inc, det, dens = incidence_and_density(w, E, tol, xs, ys)
    h = (xs[1] - xs[0]) * (ys[1] - ys[0])
    mass = float(np.sum(dens) * h)
    if abs(mass - 1.0) > 0.05:
        raise EnvelopeError(f"equilibrium mass {mass:.4f} deviates from 1 by more than 5%")
    bulk = bulk_mask(w, E, tol, 1e-8, xs, ys)
    return EquilibriumMeasure(xs, ys, dens, inc, bulk, mass, w.n)


def radial_mass(E: EquilibriumWeight, s: float = np.inf) -> float:
    """Monge-Ampere mass of ``{ln|z|^2 < s}`` for a radial envelope: ``g'(s)^n / n!``."""
    slope = 1.0 if np.isinf(s) else float(E.slope_s(np.array([s]))[0])
    return slope**E.n / math.factorial(E.n)


def radial_density(E: EquilibriumWeight, w: WeightFunction, z) -> np.ndarray:
    """Equilibrium density at points ``z`` for a radial envelope (any n)."""
    z = as_points(z, w.n)
    with np.errstate(divide="ignore"):
        s = np.log(np.sum(np.abs(z) ** 2, axis=-1))
    s = np.maximum(s, -700.0)
    contact = np.zeros(s.shape, bool)
    for p in E.pieces:
        if p.kind == "obstacle":
            contact |= (s >= p.s_lo) & (s <= p.s_hi)
    det = w.laplacian_density(z)
    return np.where(contact & (det > 0), det / math.pi**w.n, 0.0)


def integrate_against(E: EquilibriumWeight, w: WeightFunction, u) -> float:
    """``int u dmu_e`` for radial envelopes, integrating in polar coordinates about u's center."""
    if w.n != 1:
        raise WeightError("planar only")
    c, r = u.support_ball()
    c = complex(c[0])

    def inner(rho):
        th = np.linspace(0, 2 * np.pi, 512, endpoint=False)
        pts = (c + rho * np.exp(1j * th))[:, None]
        return float(np.mean(u.evaluate(pts) * radial_density(E, w, pts))) * 2 * np.pi * rho

    val, _ = integrate.quad(inner, 0, r, limit=200, epsabs=1e-13, epsrel=1e-12)
    return val


# --- energies ---------------------------------------------------------------------


@dataclass
class EnergyValue:
    value: float
    integrand_breakdown: tuple
    route: str = "radial"


def _radial_energy(E1: EquilibriumWeight, E2: EquilibriumWeight) -> EnergyValue:
    n = E1.n
    cuts = sorted({p.s_lo for p in E1.pieces + E2.pieces} | {p.s_hi for p in E1.pieces + E2.pieces})
    cuts = [x for x in cuts if np.isfinite(x)]
    lo, hi = cuts[0], cuts[-1]
    edges = [-np.inf] + cuts + [np.inf]
    terms = []
    for j in range(n + 1):

        def f(s, j=j):
            a, b = E1.slope_s(np.array([s]))[0], E2.slope_s(np.array([s]))[0]
            return (a - b) * a**j * b ** (n - j)

        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a or (a >= hi):
                continue  # both slopes are 1 past the last cut
            val, _ = integrate.quad(f, a, b, limit=400, epsabs=1e-14, epsrel=1e-13)
            total += val
        terms.append((E1.asymptote_constant - E2.asymptote_constant - total) / math.factorial(n + 1))
    return EnergyValue(float(sum(terms)), tuple(terms), "radial")


def grid_laplacian(v: np.ndarray, h: float) -> np.ndarray:
    lap = np.zeros_like(v)
    lap[1:-1, 1:-1] = (v[:-2, 1:-1] + v[2:, 1:-1] + v[1:-1, :-2] + v[1:-1, 2:] - 4 * v[1:-1, 1:-1]) / h**2
    return lap


def _grid_energy(psi, psi2, h, check_mass=True) -> EnergyValue:
    m1, m2 = grid_laplacian(psi, h) * h**2 / (4 * math.pi), grid_laplacian(psi2, h) * h**2 / (4 * math.pi)
    if check_mass:
        for m in (m1, m2):
            if abs(m.sum() - 1.0) > 0.02:
                raise EnvelopeError(f"curvature mass {m.sum():.4f} off by more than 2%")
    d = psi - psi2
    terms = (float(np.sum(d * m2)) / 2, float(np.sum(d * m1)) / 2)
    return EnergyValue(terms[0] + terms[1], terms, "grid")


def energy_bifunctional(psi, psi2, h: float | None = None, check_mass: bool = True) -> EnergyValue:
    """``sum_j int (psi - psi') (dd^c psi)^j (dd^c psi')^{n-j} / (n+1)!``.

    Radial envelopes use exact one-dimensional integrals in ``s``; planar
    grids (arrays with spacing ``h``) use the five-point Laplacian.
    """
    if isinstance(psi, EquilibriumWeight) and isinstance(psi2, EquilibriumWeight):
        if psi.is_radial and psi2.is_radial:
            return _radial_energy(psi, psi2)
        if psi.values is not None and psi2.values is not None:
            return _grid_energy(psi.values, psi2.values, psi.spacing, check_mass)
        raise EnvelopeError("mixed radial/grid energy; evaluate both on a grid")
    if h is None:
        raise ValueError("grid energy needs the spacing h")
    return _grid_energy(np.asarray(psi, float), np.asarray(psi2, float), h, check_mass)


def f_infinity(phi: WeightFunction, phi0: WeightFunction, **grid) -> float:
    """``E[P phi, P phi0]``; radial when both weights are radial, planar grid otherwise."""
    if phi.is_radial and phi0.is_radial:
        return energy_bifunctional(envelope_of(phi), envelope_of(phi0)).value
    e1, e0 = grid_envelope(phi, **grid), grid_envelope(phi0, **grid)
    return energy_bifunctional(e1, e0).value


def i_functional(phi: WeightFunction, psi: np.ndarray, xs: np.ndarray) -> float:
    """``E[psi, phi] + int MA(psi) (phi - psi)`` on a planar grid."""
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    phi_grid = phi.evaluate((X + 1j * Y)[..., None])
    h = float(xs[1] - xs[0])
    e = _grid_energy(psi, phi_grid, h, check_mass=False).value
    ma = grid_laplacian(psi, h) * h**2 / (4 * math.pi)
    return e + float(np.sum(ma * (phi_grid - psi)))


def is_radially_admissible(E: EquilibriumWeight, s) -> bool:
    """Convex, nondecreasing, slope <= 1 on the sample points."""
    v = E.eval_s(np.asarray(s))
    d = np.diff(v) / np.diff(s)
    return bool(np.all(d >= -1e-12) and np.all(d <= 1 + 1e-9) and np.all(np.diff(d) >= -1e-9))
