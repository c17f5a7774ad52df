"""Linear statistics: exact moments, Laplace transforms, free energies, Monte Carlo checks.

For a perturbation ``u`` supported in a ball ``D`` every exact quantity is an
integral over ``D`` of products of weighted sections, evaluated with the rule
of ``hilbert.ball_rule``.  With ``F[x, i] = s_i(x) e^{-k phi(x)/2} sqrt(w_x)`` on
the nodes of ``D``:

    E N[u]            = sum_x u(x) |F[x]|^2
    Var N[u]          = tr(U_2) - ||U||_F^2,     U_p = F^* diag(u^p) F
    E e^{-t N[u]}     = det(I + F^* diag(expm1(-t u)) F)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .equilibrium import EquilibriumWeight, envelope_of, integrate_against, radial_density
from .hilbert import BergmanEvaluator, EnsembleSpec, ball_rule, build_basis, gram_matrix
from .weights import Perturbation, WeightFamily, WeightFunction, perturb


class DegenerateStatistic(ValueError):
    pass


@dataclass(frozen=True)
class ConstantFunction:
    """``u = c`` everywhere (no compact support)."""

    value: float
    n: int = 1

    def evaluate(self, z):
        z = np.asarray(z)
        return np.full(z.shape[:-1] if z.ndim > 1 else z.shape, float(self.value))


def _nodes(B: BergmanEvaluator, u: Perturbation, refine: float = 1.0):
    center, radius = u.support_ball()
    pts, wts = ball_rule(center, radius, B.n, B.k, refine)
    F = B.sections(pts, 0.5 * np.log(wts))
    return pts, wts, F, u.evaluate(pts)


@dataclass
class LinearStatistic:
    u: Perturbation
    support_in_bulk: bool = False

    @classmethod
    def validated(cls, u: Perturbation, w: WeightFunction, E: EquilibriumWeight | None = None, tol=1e-6, delta=1e-8):
        return cls(u, support_in_bulk(u, w, E, tol, delta))


def support_in_bulk(u: Perturbation, w: WeightFunction, E: EquilibriumWeight | None = None, tol=1e-6, delta=1e-8) -> bool:
    """Whether the support ball sits in ``{phi_e = phi} & {det Hessian >= delta}``.

    A margin of 2% of the radius stands in for the one-cell erosion of the grid mask.
    """
    E = envelope_of(w) if E is None else E
    center, r = u.support_ball()
    rr = np.linspace(0.0, 1.02 * r, 41)
    th = np.linspace(0, 2 * np.pi, 72, endpoint=False)
    if w.n == 1:
        pts = (center[0] + rr[:, None] * np.exp(1j * th)[None, :]).reshape(-1, 1)
    else:
        dirs = np.stack([np.cos(th / 4) * np.exp(1j * th), np.sin(th / 4) * np.exp(2j * th)], -1)
        pts = (center + rr[:, None, None] * dirs[None, :, :]).reshape(-1, 2)
    phi = w.evaluate(pts)
    phie = E.evaluate(pts)
    det = w.laplacian_density(pts)
    return bool(np.all(np.abs(phie - phi) <= tol * np.maximum(1, np.abs(phi))) and np.all(det >= delta))


# --- exact moments ---------------------------------------------------------------


def expectation_exact(B: BergmanEvaluator, u, check: bool = True) -> float:
    """``int rho1 u dLeb``."""
    if isinstance(u, ConstantFunction):
        return u.value * B.N
    _, _, F, uv = _nodes(B, u)
    val = float(np.sum(uv * np.sum(np.abs(F) ** 2, axis=1)))
    if check:
        _, _, F2, uv2 = _nodes(B, u, 1.6)
        val2 = float(np.sum(uv2 * np.sum(np.abs(F2) ** 2, axis=1)))
        if abs(val - val2) > 1e-9 * max(1.0, abs(val)):
            raise ArithmeticError(f"expectation quadrature unstable ({val!r} vs {val2!r})")
    return val


def moment_matrices(B: BergmanEvaluator, u, refine: float = 1.0):
    _, _, F, uv = _nodes(B, u, refine)
    U = (F.conj().T * uv) @ F
    U2 = (F.conj().T * uv**2) @ F
    return U, U2


def variance_trace(B: BergmanEvaluator, u, refine: float = 1.0) -> float:
    if isinstance(u, ConstantFunction):
        return 0.0
    U, U2 = moment_matrices(B, u, refine)
    return float(np.real(np.trace(U2)) - np.sum(np.abs(U) ** 2))


def variance_double_integral(B: BergmanEvaluator, u, refine: float = 1.3, chunk: int = 512) -> float:
    """``(1/2) int int |K|^2_w (u(x) - u(y))^2`` from pointwise kernel values.

    Pairs with both points outside the support contribute nothing; pairs with
    one point outside are folded in through ``int |K(x, y)|^2_w dy = rho1(x)``.
    """
    if isinstance(u, ConstantFunction):
        return 0.0
    pts, wts, F, uv = _nodes(B, u, refine)
    rho = np.sum(np.abs(F) ** 2, axis=1) / wts
    inside = 0.0
    cross = 0.0
    for i in range(0, pts.shape[0], chunk):
        blk = F[i : i + chunk] @ F.conj().T  # sqrt(w_x w_y) K_w(x, y)
        K2 = np.abs(blk) ** 2
        du = uv[i : i + chunk, None] - uv[None, :]
        inside += float(np.sum(K2 * du**2))
        cross += float(np.sum(uv[i : i + chunk] ** 2 * (rho[i : i + chunk] * wts[i : i + chunk] - K2.sum(axis=1))))
    return 0.5 * inside + cross


@dataclass
class VarianceRoutes:
    trace: float
    double: float | None

    @property
    def value(self) -> float:
        return self.trace

    @property
    def disagreement(self) -> float:
        if self.double is None:
            return 0.0
        return abs(self.trace - self.double) / max(abs(self.trace), 1e-300)


def variance_exact(B: BergmanEvaluator, u, both: bool = True, rtol: float = 1e-8) -> VarianceRoutes:
    """Trace route, plus the pointwise double integral when ``both``; disagreement above rtol raises."""
    tr = variance_trace(B, u)
    if not both:
        return VarianceRoutes(tr, None)
    dbl = variance_double_integral(B, u)
    out = VarianceRoutes(tr, dbl)
    if tr > 0 and out.disagreement > rtol:
        raise ArithmeticError(f"variance routes disagree: trace {tr!r}, double {dbl!r}")
    return out


def laplace_transform(B: BergmanEvaluator, u, t: float) -> float:
    """``log E exp(-t N[u]) = log det <s_i, s_j>_{k phi + t u}``."""
    if isinstance(u, ConstantFunction):
        return -t * u.value * B.N
    if t == 0:
        return 0.0
    _, _, F, uv = _nodes(B, u)
    D = (F.conj().T * np.expm1(-t * uv)) @ F
    ev = np.linalg.eigvalsh(0.5 * (D + D.conj().T))
    if np.min(ev) <= -1:
        raise ArithmeticError("perturbed Gram matrix lost positivity")
    return float(np.sum(np.log1p(ev)))


def derivative_checks(B: BergmanEvaluator, u, h1: float = 1e-4, h2: float = 1e-4) -> dict:
    """Central differences of the log transform against the exact moments."""
    lp, lm = laplace_transform(B, u, h1), laplace_transform(B, u, -h1)
    first = -(lp - lm) / (2 * h1)
    lp2, lm2 = laplace_transform(B, u, h2), laplace_transform(B, u, -h2)
    second = (lp2 + lm2) / h2**2
    mean = expectation_exact(B, u)
    var = variance_trace(B, u)
    return {
        "fd_mean": first,
        "exact_mean": mean,
        "mean_rel_err": abs(first - mean) / abs(mean),
        "fd_var": second,
        "exact_var": var,
        "var_rel_err": abs(second - var) / abs(var),
    }


# --- variance asymptotics ----------------------------------------------------------


def dirichlet_integral(u: Perturbation, k_hint: int = 64) -> float:
    """``int |grad u|^2 dLeb = 4 int |du/dz|^2`` on the support ball."""
    center, r = u.support_ball()
    pts, wts = ball_rule(center, r, u.n, k_hint, 2.0)
    g = u.gradient(pts)
    return float(4 * np.sum(wts * np.sum(np.abs(g) ** 2, axis=-1)))


def richardson(ks, values) -> float:
    """Fit ``V + a/k + b/k^2`` through the three largest k and return ``V``."""
    order = np.argsort(ks)[-3:]
    k = np.asarray(ks, float)[order]
    v = np.asarray(values, float)[order]
    A = np.stack([np.ones(3), 1 / k, 1 / k**2], axis=1)
    return float(np.linalg.solve(A, v)[0])


def cauchy_ratios(values) -> list:
    """``|v1 - v0| / |v2 - v1|`` for consecutive triples (>1 means shrinking differences)."""
    d = np.abs(np.diff(np.asarray(values, float)))
    return [float(d[i] / d[i + 1]) if d[i + 1] > 0 else math.inf for i in range(len(d) - 1)]


@dataclass
class VarianceReport:
    k_values: list
    exact_variances: list
    limit_estimate: float
    dirichlet_value: float
    cauchy: list = field(default_factory=list)

    @property
    def implied_constant(self) -> float:
        """Limit variance over ``int |grad u|^2``; 1/(4 pi) in the plane."""
        return self.limit_estimate / self.dirichlet_value


def variance_series(w: WeightFunction, u: Perturbation, ks, **quad) -> VarianceReport:
    vals = []
    for k in ks:
        B = BergmanEvaluator.build(w, k, **quad)
        vals.append(variance_trace(B, u))
    return VarianceReport(list(ks), vals, richardson(ks, vals), dirichlet_integral(u), cauchy_ratios(vals))


# --- Monte Carlo ---------------------------------------------------------------------


def linear_statistic(values_at_points: np.ndarray) -> np.ndarray:
    """``N[u]`` per replicate from an array ``(replicates, N)`` of u-values."""
    return np.sum(values_at_points, axis=1)


@dataclass
class CLTReport:
    replicates: int
    standardized: np.ndarray
    ks_statistic: float
    p_value: float
    empirical_variance: float
    exact_variance: float
    mean: float

    @property
    def variance_z(self) -> float:
        se = self.exact_variance * math.sqrt(2.0 / (self.replicates - 1))
        return (self.empirical_variance - self.exact_variance) / se

    @property
    def mean_ok(self) -> bool:
        return abs(self.mean) <= 4 / math.sqrt(self.replicates)


def clt_empirical(stat_values, mean: float, var: float, min_replicates: int = 1000) -> CLTReport:
    x = np.asarray(stat_values, float)
    if var < 1e-12:
        raise DegenerateStatistic("variance below 1e-12; the statistic is degenerate")
    if x.size < min_replicates:
        raise ValueError(f"need at least {min_replicates} replicates")
    z = (x - mean) / math.sqrt(var)
    ks = stats.kstest(z, "norm")
    return CLTReport(x.size, z, float(ks.statistic), float(ks.pvalue), float(np.var(x, ddof=1)), var, float(z.mean()))


@dataclass
class LLNReport:
    k: int
    n: int
    target: float
    empirical_mean: float
    mc_sigma: float
    eps: list
    frequencies: list
    bounds: list
    binomial_errors: list

    @property
    def mean_ok(self) -> bool:
        return abs(self.empirical_mean - self.target) <= 3 * self.mc_sigma

    @property
    def bounds_ok(self) -> bool:
        return all(f <= b + e for f, b, e in zip(self.frequencies, self.bounds, self.binomial_errors))


def lln_check(stat_values, target: float, exact_mean: float, var: float, k: int, n: int = 1, eps=None) -> LLNReport:
    """Exceedance frequencies of ``|k^-n N[u] - int u dmu_e| > eps`` against Chebyshev.

    The bound is ``(Var + bias^2) / (eps^2 k^{2n})`` with ``bias = E N[u] - k^n target``.
    """
    x = np.asarray(stat_values, float) / k**n
    R = x.size
    eps = list(eps) if eps is not None else list(np.geomspace(0.5, 8, 9) * math.sqrt(var) / k**n)
    dev = np.abs(x - target)
    bias2 = (exact_mean / k**n - target) ** 2
    freqs, bounds, errs = [], [], []
    for e in eps:
        f = float(np.mean(dev > e))
        b = min(1.0, (var / k ** (2 * n) + bias2) / e**2)
        freqs.append(f)
        bounds.append(b)
        errs.append(3 * math.sqrt(max(b * (1 - b), 0.0) / R) + 1.0 / R)
    return LLNReport(k, n, target, float(x.mean()), math.sqrt(var) / k**n / math.sqrt(R), eps, freqs, bounds, errs)


# --- free energy -----------------------------------------------------------------------


def _log_det_gram(spec: EnsembleSpec) -> float:
    G = gram_matrix(spec)
    sign, ld = np.linalg.slogdet(G.scaled)
    if sign.real <= 0:
        raise ArithmeticError("Gram determinant not positive")
    return float(np.sum(G.log_diag)) + float(ld)


def free_energy(B0: BergmanEvaluator, phi: WeightFunction) -> float:
    """``-log det <s_i, s_j>_{k phi}`` with ``s_i`` orthonormal for ``k phi_0``."""
    k = B0.k
    phi0 = B0.weight
    if phi == phi0:
        return 0.0
    spec = EnsembleSpec.create(phi, k)
    # quadrature of the reference is reused when it covers phi's cutoff
    return float(B0.basis.gram.log_diag.sum() + np.linalg.slogdet(B0.basis.gram.scaled)[1]) - _log_det_gram(spec)


def free_energy_perturbed(B0: BergmanEvaluator, u: Perturbation, t: float) -> float:
    """``F[k(phi_0 + t u)]`` through the multiplier ``exp(-k t u)``."""
    return -laplace_transform(B0, u, B0.k * t)


@dataclass
class FreeEnergySeries:
    k_values: list
    values: list
    normalized: list
    reference: str
    limit: float | None = None

    @property
    def relative_errors(self) -> list:
        return [abs(v - self.limit) / abs(self.limit) for v in self.normalized]


def free_energy_series(phi: WeightFunction, phi0: WeightFunction, ks, limit: float | None = None) -> FreeEnergySeries:
    vals = []
    n = phi.n
    for k in ks:
        B0 = BergmanEvaluator.build(phi0, k)
        vals.append(free_energy(B0, phi))
    norm = [v / k ** (n + 1) for v, k in zip(vals, ks)]
    return FreeEnergySeries(list(ks), vals, norm, phi0.spec, limit)


def concavity_check(B0: BergmanEvaluator, u: Perturbation, ts=None) -> tuple:
    """Largest second difference of ``t -> F[k(phi_0 + t u)]`` on the grid (should be <= 0)."""
    ts = np.linspace(-1, 1, 21) if ts is None else np.asarray(ts)
    vals = np.array([free_energy_perturbed(B0, u, t) for t in ts])
    second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    scale = np.max(np.abs(vals)) + 1.0
    return float(np.max(second) / scale), vals


@dataclass
class ScanReport:
    k_values: list
    values: list  # k^{-(n-1)} d^2/dt^2 F_k at t = 0
    fd_values: list
    cauchy: list
    limit_estimate: float
    bulk_prediction: float | None
    converging: bool

    @property
    def deviation_from_prediction(self) -> float | None:
        if self.bulk_prediction is None:
            return None
        return abs(self.limit_estimate - self.bulk_prediction) / abs(self.bulk_prediction)


def second_derivative_scan(
    family: WeightFamily, ks, h: float = 1e-3, bulk_prediction: float | None = None, ratio: float = 1.5, rel_tol: float = 0.02
) -> ScanReport:
    """``k^{-(n-1)} d^2/dt^2 F_k(t)`` at ``t = 0`` where ``F_k(t) = -log E exp(-t N[u])``.

    Exact value ``-k^{-(n-1)} Var N[u]``; a central difference is reported alongside.
    The series counts as converging when consecutive differences shrink by at
    least ``ratio`` and, if a bulk prediction is supplied, the extrapolated
    limit lies within ``rel_tol`` of it.
    """
    u = family.direction
    n = family.base.n
    vals, fds = [], []
    for k in ks:
        B = BergmanEvaluator.build(family.base, k)
        scale = k ** (-(n - 1))
        vals.append(-scale * variance_trace(B, u))
        f = lambda t: -laplace_transform(B, u, t)
        fds.append(scale * (f(h) - 2 * f(0.0) + f(-h)) / h**2)
    cr = cauchy_ratios(vals)
    lim = richardson(ks, vals) if len(ks) >= 3 else vals[-1]
    ok = all(c >= ratio for c in cr)
    if bulk_prediction is not None:
        ok = ok and abs(lim - bulk_prediction) <= rel_tol * abs(bulk_prediction)
    return ScanReport(list(ks), vals, fds, cr, lim, bulk_prediction, bool(ok))


def equilibrium_integral(w: WeightFunction, u: Perturbation, E: EquilibriumWeight | None = None) -> float:
    """``int u dmu_e`` for radial envelopes."""
    E = envelope_of(w) if E is None else E
    return integrate_against(E, w, u)
