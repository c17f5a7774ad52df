"""Weighted polynomial Hilbert spaces, orthonormal bases and Bergman kernels.

Everything is kept in a pre-scaled coordinate system: monomials are divided
by the square root of their (radial part) diagonal moment, so the scaled Gram
``S`` is close to the identity and the orthonormal sections are

    s_i = sum_alpha C[i, alpha] * z^alpha * exp(-ell_alpha / 2)

with ``C`` the inverse Cholesky factor of ``S``.  Weighted section values
``s_i(x) exp(-k phi(x) / 2)`` are formed in log-magnitude arithmetic, so no
raw moment or raw kernel value has to be representable for the weighted
quantities to be accurate.

Weights are split into a part radial about the origin (its Gram matrix is
diagonal and reduces to one-dimensional radial integrals) plus off-center
perturbations, whose contribution is a correction integrated over their
support ball with a rule centered on that ball.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np
from scipy import linalg as sla
from scipy.special import gammaln, logsumexp

from .weights import WeightError, WeightFunction, as_points, parse_weight

K_CAPS = {1: 512, 2: 48}
COND_LIMIT = 1e12
LOG_TAIL = math.log(1e-18)


class ConditioningError(RuntimeError):
    pass


class QuadratureError(RuntimeError):
    pass


def dimension(n: int, k: int) -> int:
    """Number of monomials of total degree <= k in n variables."""
    if n not in K_CAPS:
        raise ValueError("n must be 1 or 2")
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k > K_CAPS[n]:
        raise ValueError(f"k={k} exceeds the cap {K_CAPS[n]} for n={n}")
    return comb(n + k, n)


def multi_indices(n: int, k: int) -> np.ndarray:
    """Exponents of total degree <= k, graded, lexicographic within a degree."""
    dimension(n, k)
    if n == 1:
        return np.arange(k + 1)[:, None]
    return np.array([(a, d - a) for d in range(k + 1) for a in range(d, -1, -1)])


# --- quadrature -------------------------------------------------------------


def composite_gauss_legendre(breaks, per_panel: int):
    """Gauss-Legendre nodes on each interval ``[breaks[i], breaks[i+1]]``."""
    x, w = np.polynomial.legendre.leggauss(per_panel)
    breaks = np.asarray(breaks, dtype=float)
    a, b = breaks[:-1, None], breaks[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def _radial_split(w: WeightFunction):
    """Terms centered at the origin, and the rest."""
    radial = tuple(t for t in w.terms if t.centered_at_origin)
    other = tuple(t for t in w.terms if not t.centered_at_origin)
    return radial, other


def _radial_f(terms, t, order=0):
    t = np.asarray(t, dtype=float)
    return sum((term.profile(t, order) for term in terms), np.zeros_like(t))


def cutoff_radius(w: WeightFunction, k: int, log_tol: float = LOG_TAIL) -> float:
    """Smallest R past the peak with ``2k ln R - k phi(R)`` below its max by ``|log_tol|``."""
    radial, _ = _radial_split(w)
    r = np.geomspace(1e-3, 1e3, 20001)
    h = 2 * k * np.log(r) - k * _radial_f(radial, r**2)
    i = int(np.argmax(h))
    below = np.nonzero(h[i:] <= h[i] + log_tol)[0]
    if below.size == 0:
        raise QuadratureError("weight grows too slowly for a finite cutoff radius")
    j = i + below[0]
    # refine between the bracketing samples
    lo, hi = r[j - 1], r[j]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if 2 * k * math.log(mid) - k * float(_radial_f(radial, mid**2)) <= h[i] + log_tol:
            hi = mid
        else:
            lo = mid
    return float(hi)


@dataclass(frozen=True)
class QuadratureScheme:
    """Composite Gauss-Legendre radii on ``[0, R_cut]`` times equispaced angles.

    For n = 2 each point is ``r (cos eta e^{i a}, sin eta e^{i b})``; the polar
    angle ``eta`` uses Gauss-Legendre with ``polar_nodes`` points.
    """

    n: int
    radii: np.ndarray
    radial_weights: np.ndarray
    angular_nodes: int
    R_cut: float
    tolerance: float
    panels: int
    per_panel: int
    polar_nodes: int = 0

    @property
    def radial_nodes(self) -> int:
        return self.radii.size

    @property
    def spec(self) -> str:
        return (
            f"n={self.n};R_cut={self.R_cut!r};panels={self.panels};per_panel={self.per_panel};"
            f"angular={self.angular_nodes};polar={self.polar_nodes};tol={self.tolerance!r}"
        )

    def nodes(self):
        """All tensor-grid points (shape ``(M, n)``) and Lebesgue weights."""
        na = self.angular_nodes
        theta = 2 * np.pi * np.arange(na) / na
        if self.n == 1:
            pts = (self.radii[:, None] * np.exp(1j * theta)[None, :]).reshape(-1, 1)
            wts = np.repeat(self.radii * self.radial_weights * (2 * np.pi / na), na)
            return pts, wts
        eta, weta = composite_gauss_legendre([0.0, np.pi / 2], self.polar_nodes)
        r, e, a, b = np.meshgrid(self.radii, eta, theta, theta, indexing="ij")
        pts = np.stack([r * np.cos(e) * np.exp(1j * a), r * np.sin(e) * np.exp(1j * b)], axis=-1)
        wr = self.radii**3 * self.radial_weights
        we = weta * np.cos(eta) * np.sin(eta)
        wts = (wr[:, None] * we[None, :])[:, :, None, None] * (2 * np.pi / na) ** 2
        wts = np.broadcast_to(wts, r.shape)
        return pts.reshape(-1, 2), wts.ravel().copy()

    def refined(self, factor: float = 1.5, extra_log_tol: float = 0.0, weight=None, k=None):
        """A finer, independent scheme (used as a reference quadrature)."""
        R = self.R_cut
        if extra_log_tol and weight is not None:
            R = cutoff_radius(weight, k, LOG_TAIL - extra_log_tol)
        return _make_scheme(
            self.n,
            R,
            int(math.ceil(self.panels * factor)),
            self.per_panel,
            self.angular_nodes,
            self.tolerance,
            _breaks_of(self),
            max(self.polar_nodes, 0),
        )


def _breaks_of(q: QuadratureScheme):
    return getattr(q, "_breakpoints", ())


def _make_scheme(n, R, panels, per_panel, angular, tol, breakpoints=(), polar=0):
    edges = np.linspace(0.0, R, panels + 1)
    extra = [b for b in breakpoints if 0 < b < R]
    edges = np.unique(np.concatenate([edges, extra]))
    r, w = composite_gauss_legendre(edges, per_panel)
    q = QuadratureScheme(n, r, w, angular, float(R), tol, panels, per_panel, polar)
    object.__setattr__(q, "_breakpoints", tuple(extra))
    return q


def _radial_log_moments(w: WeightFunction, k: int, q: QuadratureScheme, orders) -> np.ndarray:
    """``log int t^m exp(-k f(t)) dt``-type radial moments for the origin-centered part.

    n = 1:  log int |z|^{2m} e^{-k f} dLeb  = log 2 pi int r^{2m+1} e^{-k f(r^2)} dr
    n = 2:  log int t^{m+1} e^{-k f(t)} dt  = log 2 int r^{2m+3} e^{-k f(r^2)} dr
    """
    radial, _ = _radial_split(w)
    r = q.radii
    base = np.log(q.radial_weights) - k * _radial_f(radial, r**2)
    logr = np.log(r)
    orders = np.asarray(orders)
    if w.n == 1:
        expo = (2 * orders + 1)[:, None] * logr[None, :]
        return math.log(2 * np.pi) + logsumexp(expo + base[None, :], axis=1)
    expo = (2 * orders + 3)[:, None] * logr[None, :]
    return math.log(2.0) + logsumexp(expo + base[None, :], axis=1)


def diagonal_log_gram(w: WeightFunction, k: int, q: QuadratureScheme) -> np.ndarray:
    """Log of the diagonal Gram entries for the origin-centered part of ``w``."""
    idx = multi_indices(w.n, k)
    if w.n == 1:
        return _radial_log_moments(w, k, q, idx[:, 0])
    deg = idx.sum(axis=1)
    lm = _radial_log_moments(w, k, q, np.arange(k + 1))
    a, b = idx[:, 0], idx[:, 1]
    beta = gammaln(a + 1) + gammaln(b + 1) - gammaln(deg + 2)
    return 2 * math.log(math.pi) + beta + lm[deg]


def build_quadrature(
    w: WeightFunction,
    k: int,
    tolerance: float = 1e-13,
    panels: int | None = None,
    per_panel: int = 12,
    angular_nodes: int | None = None,
    R_cut: float | None = None,
    polar_nodes: int | None = None,
    max_doublings: int = 8,
) -> QuadratureScheme:
    """Radial composite Gauss-Legendre scheme, refined until diagonal moments settle."""
    dimension(w.n, k)
    R = cutoff_radius(w, k) if R_cut is None else float(R_cut)
    na = 4 * k + 8 if angular_nodes is None else int(angular_nodes)
    if na < 4 * k + 8:
        raise QuadratureError(f"angular node count {na} below 4k+8 = {4 * k + 8}")
    polar = (k + 16 if polar_nodes is None else int(polar_nodes)) if w.n == 2 else 0
    breaks = w.breakpoints
    if panels is not None:
        return _make_scheme(w.n, R, int(panels), per_panel, na, tolerance, breaks, polar)
    p = max(4, int(math.ceil(2 * R * math.sqrt(k))))
    q = _make_scheme(w.n, R, p, per_panel, na, tolerance, breaks, polar)
    prev = diagonal_log_gram(w, k, q)
    for _ in range(max_doublings):
        p *= 2
        q2 = _make_scheme(w.n, R, p, per_panel, na, tolerance, breaks, polar)
        cur = diagonal_log_gram(w, k, q2)
        # log-moments of size ~k carry rounding ~k * eps
        if np.all(np.abs(cur - prev) < tolerance + 16 * np.finfo(float).eps * np.abs(cur)):
            return q
        q, prev = q2, cur
    raise QuadratureError("radial quadrature did not settle; weight profile too rough")


def ball_rule(center, radius: float, n: int, k: int, refine: float = 1.0):
    """Points and Lebesgue weights for the ball ``|z - center| < radius``.

    Polar about the center: Gauss-Legendre panels in the radius and
    equispaced angles, resolved for degree-k polynomials times a Gaussian of
    width ``k^{-1/2}``.
    """
    center = np.asarray(center, dtype=complex).reshape(n)
    offset = float(np.linalg.norm(center))
    panels = max(2, int(math.ceil(refine * 3 * radius * math.sqrt(k))))
    rho, wrho = composite_gauss_legendre(np.linspace(0, radius, panels + 1), 12)
    na = int(math.ceil(refine * (2 * k + 4 * k * offset * radius + 24)))
    na += na % 2
    theta = 2 * np.pi * np.arange(na) / na
    if n == 1:
        pts = center[0] + (rho[:, None] * np.exp(1j * theta)[None, :]).ravel()
        wts = np.repeat(rho * wrho * (2 * np.pi / na), na)
        return pts[:, None], wts
    ne = int(math.ceil(refine * (k + 16)))
    eta, weta = composite_gauss_legendre([0.0, np.pi / 2], ne)
    r, e, a, b = np.meshgrid(rho, eta, theta, theta, indexing="ij")
    pts = center + np.stack([r * np.cos(e) * np.exp(1j * a), r * np.sin(e) * np.exp(1j * b)], axis=-1)
    wr = rho**3 * wrho
    we = weta * np.cos(eta) * np.sin(eta)
    wts = np.broadcast_to((wr[:, None] * we[None, :])[:, :, None, None] * (2 * np.pi / na) ** 2, r.shape)
    return pts.reshape(-1, 2), wts.ravel().copy()


def _offcenter_groups(w: WeightFunction):
    """Off-center perturbation terms with their (center, radius) balls; overlap is refused."""
    _, other = _radial_split(w)
    groups = {}
    for term in other:
        key = (term.center, term.support_radius)
        groups.setdefault(key, []).append(term)
    keys = list(groups)
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            ci, ri = keys[i]
            cj, rj = keys[j]
            if np.linalg.norm(np.subtract(ci, cj)) < ri + rj:
                raise WeightError("overlapping off-center perturbations are not supported")
    return [(np.asarray(c, dtype=complex), r, tuple(ts)) for (c, r), ts in groups.items()]


# --- ensemble and Gram ------------------------------------------------------


@dataclass(frozen=True)
class EnsembleSpec:
    n: int
    k: int
    weight: WeightFunction
    quadrature: QuadratureScheme

    @classmethod
    def create(cls, weight: WeightFunction, k: int, check_growth: bool = True, **quad) -> "EnsembleSpec":
        from .weights import check_superlog_growth

        dimension(weight.n, k)
        if check_growth:
            eps = weight.growth_exponent
            if not eps > 0 or not check_superlog_growth(weight, min(eps, 1.0), 10.0):
                raise WeightError(f"weight {weight.spec!r} lacks super-logarithmic growth")
        return cls(weight.n, k, weight, build_quadrature(weight, k, **quad))

    @cached_property
    def indices(self) -> np.ndarray:
        return multi_indices(self.n, self.k)

    @property
    def N(self) -> int:
        return dimension(self.n, self.k)


def log_monomials(spec: EnsembleSpec, x, log_diag, extra_log=None) -> np.ndarray:
    """Rows ``x^alpha exp(-ell_alpha/2 - k phi(x)/2)`` as complex values, shape ``(P, N)``.

    Magnitudes are assembled in log form; ``extra_log`` (per point) is added
    to the exponent, e.g. half the log of a quadrature weight.
    """
    x = as_points(x, spec.n)
    x = x.reshape(-1, spec.n)
    idx = spec.indices
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(x))
    logabs = np.where(np.isneginf(logabs), -1e300, logabs)
    ang = np.angle(x)
    # 0 * log 0 must read as 0
    expo = np.zeros((x.shape[0], idx.shape[0]))
    phase = np.zeros_like(expo)
    for j in range(spec.n):
        a = idx[:, j][None, :]
        term = np.where(a == 0, 0.0, np.maximum(a * logabs[:, j : j + 1], -1e300))
        expo += term
        phase += a * ang[:, j : j + 1]
    expo -= 0.5 * log_diag[None, :]
    expo -= 0.5 * spec.k * spec.weight.evaluate(x)[:, None]
    if extra_log is not None:
        expo += np.asarray(extra_log).reshape(-1, 1)
    return np.exp(expo + 1j * phase)


@dataclass
class GramMatrix:
    """Gram matrix held as ``G = D^{1/2} S D^{1/2}`` with ``D = exp(log_diag)``."""

    log_diag: np.ndarray
    scaled: np.ndarray
    ordering: np.ndarray
    spec: EnsembleSpec | None = None
    quadrature_error: float = 0.0

    @property
    def N(self) -> int:
        return self.scaled.shape[0]

    @cached_property
    def condition_estimate(self) -> float:
        ev = np.linalg.eigvalsh(self.scaled)
        return float(ev[-1] / ev[0]) if ev[0] > 0 else math.inf

    @property
    def entries(self) -> np.ndarray:
        """Raw Gram entries; may under/overflow for large k."""
        d = np.exp(0.5 * self.log_diag)
        return d[:, None] * self.scaled * d[None, :]

    @classmethod
    def from_array(cls, G, ordering=None) -> "GramMatrix":
        G = np.asarray(G, dtype=complex)
        if np.max(np.abs(G - G.conj().T)) > 1e-12 * np.max(np.abs(G)):
            raise ValueError("Gram matrix is not Hermitian")
        d = np.real(np.diag(G))
        if np.any(d <= 0):
            raise ConditioningError("non-positive diagonal in Gram matrix")
        s = 1.0 / np.sqrt(d)
        S = s[:, None] * G * s[None, :]
        order = np.arange(G.shape[0])[:, None] if ordering is None else ordering
        return cls(np.log(d), 0.5 * (S + S.conj().T), order)


def _perturbation_correction(spec: EnsembleSpec, log_diag, refine=1.0):
    """``S - I`` contributed by off-center perturbations, integrated on their balls."""
    w = spec.weight
    radial, _ = _radial_split(w)
    N = spec.N
    corr = np.zeros((N, N), dtype=complex)
    for center, radius, terms in _offcenter_groups(w):
        pts, wts = ball_rule(center, radius, spec.n, spec.k, refine)
        t2 = np.sum(np.abs(pts) ** 2, axis=-1)
        phi_rad = _radial_f(radial, t2)
        pert = np.zeros(pts.shape[0])
        for term in terms:
            pert += term.profile(np.sum(np.abs(pts - center) ** 2, axis=-1))
        # rows use the radial part only; the perturbation enters as a multiplier
        base_spec = EnsembleSpec(spec.n, spec.k, _radial_only(w), spec.quadrature)
        V = log_monomials(base_spec, pts, log_diag, 0.5 * np.log(wts))
        mult = np.expm1(-spec.k * pert)
        corr += (V.T * mult) @ V.conj()
        del phi_rad
    return corr


def _radial_only(w: WeightFunction) -> WeightFunction:
    radial, _ = _radial_split(w)
    return WeightFunction(radial, w.n, w.growth_exponent, w.smoothness_class, w.spec + "#radial")


def gram_matrix(spec: EnsembleSpec, scheme: QuadratureScheme | None = None) -> GramMatrix:
    """Pre-scaled Gram matrix of the monomials under ``exp(-k phi) dLeb``."""
    q = spec.quadrature if scheme is None else scheme
    log_diag = diagonal_log_gram(spec.weight, spec.k, q)
    S = np.eye(spec.N, dtype=complex)
    err = 0.0
    if not spec.weight.is_radial:
        c1 = _perturbation_correction(spec, log_diag, 1.0)
        c2 = _perturbation_correction(spec, log_diag, 1.6)
        err = float(np.max(np.abs(c1 - c2)))
        S = S + c2
    S = 0.5 * (S + S.conj().T)
    return GramMatrix(log_diag, S, spec.indices, spec, err)


# --- orthonormal basis --------------------------------------------------------


@dataclass
class OrthoBasis:
    """Orthonormal sections ``s_i = sum_alpha C[i, alpha] exp(-ell_alpha/2) z^alpha``."""

    coeffs: np.ndarray  # C, lower triangular
    log_diag: np.ndarray  # ell
    spec: EnsembleSpec | None
    gram: GramMatrix
    orthonormality_residual: float = 0.0

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    @property
    def transform(self) -> np.ndarray:
        """Lower-triangular raw coefficient matrix ``L`` with ``s_i = sum L[i,a] z^a``."""
        return self.coeffs * np.exp(-0.5 * self.log_diag)[None, :]


def orthonormalize(G, tol: float = 1e-8) -> OrthoBasis:
    """Cholesky ``S = R R^*`` and ``C = R^{-1}``; fails loudly on bad conditioning."""
    if not isinstance(G, GramMatrix):
        G = GramMatrix.from_array(G)
    cond = G.condition_estimate
    if not cond < COND_LIMIT:
        raise ConditioningError(f"scaled Gram condition estimate {cond:.3e} exceeds {COND_LIMIT:.0e}")
    try:
        R = np.linalg.cholesky(G.scaled)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"Cholesky pivot breakdown (condition estimate {cond:.3e})") from exc
    C = sla.solve_triangular(R, np.eye(G.N), lower=True)
    resid = float(np.max(np.abs(C @ G.scaled @ C.conj().T - np.eye(G.N))))
    if resid > tol:
        raise ConditioningError(f"orthonormality residual {resid:.3e} above {tol:.0e}")
    return OrthoBasis(C, G.log_diag, G.spec, G, resid)


def build_basis(weight: WeightFunction, k: int, **quad) -> OrthoBasis:
    spec = EnsembleSpec.create(weight, k, **quad)
    return orthonormalize(gram_matrix(spec))


class BergmanEvaluator:
    """Kernel and correlation evaluator for an orthonormal basis."""

    def __init__(self, basis: OrthoBasis):
        if basis.spec is None:
            raise ValueError("basis carries no ensemble spec")
        self.basis = basis
        self.spec = basis.spec

    @classmethod
    def build(cls, weight: WeightFunction, k: int, **quad) -> "BergmanEvaluator":
        return cls(build_basis(weight, k, **quad))

    @property
    def k(self):
        return self.spec.k

    @property
    def n(self):
        return self.spec.n

    @property
    def N(self):
        return self.basis.N

    @property
    def weight(self):
        return self.spec.weight

    def sections(self, x, extra_log=None) -> np.ndarray:
        """Weighted section values ``s_i(x) exp(-k phi(x)/2)``, shape ``(P, N)``."""
        V = log_monomials(self.spec, x, self.basis.log_diag, extra_log)
        return V @ self.basis.coeffs.T

    def weighted_kernel(self, x, y) -> np.ndarray:
        """``K(x, y) exp(-k (phi(x) + phi(y)) / 2)`` for all pairs, shape ``(P, Q)``."""
        return self.sections(x) @ self.sections(y).conj().T

    def kernel(self, x, y) -> np.ndarray:
        kx = self.k * self.weight.evaluate(as_points(x, self.n).reshape(-1, self.n))
        ky = self.k * self.weight.evaluate(as_points(y, self.n).reshape(-1, self.n))
        return self.weighted_kernel(x, y) * np.exp(0.5 * (kx[:, None] + ky[None, :]))

    def rho1(self, x) -> np.ndarray:
        val = np.sum(np.abs(self.sections(x)) ** 2, axis=1)
        return val

    def rho2_connected(self, x, y) -> np.ndarray:
        return -np.abs(self.weighted_kernel(x, y)) ** 2

    @cached_property
    def reference_gram(self) -> np.ndarray:
        """Gram of the basis sections on an independent, finer quadrature."""
        spec = self.spec
        q = spec.quadrature.refined(1.5, 8.0, spec.weight, spec.k)
        S_ref = np.exp(0.5 * (diagonal_log_gram(spec.weight, spec.k, q) - self.basis.log_diag))
        S = np.diag(S_ref**2).astype(complex)
        if not spec.weight.is_radial:
            S = S + _perturbation_correction(spec, self.basis.log_diag, 2.0)
        C = self.basis.coeffs
        return C @ S @ C.conj().T


def bergman_kernel(B: BergmanEvaluator, x, y) -> complex:
    return complex(B.kernel(x, y)[0, 0])


def rho1(B: BergmanEvaluator, x) -> float:
    val = float(B.rho1(x)[0])
    if val < -1e-12:
        raise ArithmeticError(f"negative one-point density {val}")
    return max(val, 0.0)


def rho2_connected(B: BergmanEvaluator, x, y) -> float:
    return float(B.rho2_connected(x, y)[0, 0])


def integrate_out_residual(B: BergmanEvaluator, x, flag_factor: float | None = None, tol: float = 1e-10):
    """``|rho1(x) - int |K(x,y)|^2 e^{-k phi(x) - k phi(y)} dLeb(y)|`` on the reference rule.

    With ``flag_factor`` set, a residual above ``flag_factor * tol * max(1, rho1)``
    raises ``QuadratureError`` (the usual cause is a truncated radial domain).
    """
    s = B.sections(x)
    rho = np.sum(np.abs(s) ** 2, axis=1)
    integral = np.real(np.einsum("pi,ij,pj->p", s, B.reference_gram.T, s.conj()))
    resid = np.abs(rho - integral)
    if flag_factor is not None:
        bad = resid > flag_factor * tol * np.maximum(1.0, rho)
        if np.any(bad):
            raise QuadratureError(f"integrate-out residual {np.max(resid):.3e} exceeds {flag_factor:g} x tolerance")
    return float(resid[0]) if resid.size == 1 else resid


def trace_identity(B: BergmanEvaluator) -> float:
    """``int rho1 dLeb`` evaluated on the reference rule; equals N_k for an exact basis."""
    return float(np.real(np.trace(B.reference_gram)))


def trace_on_nodes(B: BergmanEvaluator, chunk: int = 20000) -> float:
    """Sum of ``rho1 * weight`` over the scheme's own tensor grid."""
    pts, wts = B.spec.quadrature.nodes()
    total = 0.0
    for i in range(0, pts.shape[0], chunk):
        total += float(np.sum(B.rho1(pts[i : i + chunk]) * wts[i : i + chunk]))
    return total


def kernel_matrix(B: BergmanEvaluator, pts) -> np.ndarray:
    return B.weighted_kernel(pts, pts)


# --- import / export ------------------------------------------------------------


def export_basis(basis: OrthoBasis) -> str:
    """Text table: header lines then row-major raw transform entries (17 digits)."""
    spec = basis.spec
    L = basis.transform
    out = io.StringIO()
    out.write(f"n={spec.n}\nk={spec.k}\nN={basis.N}\n")
    out.write(f"weight={spec.weight.spec}\nquadrature={spec.quadrature.spec}\n")
    for row in L:
        out.write(" ".join(f"{v.real:.17g},{v.imag:.17g}" for v in row) + "\n")
    return out.getvalue()


def import_basis(text: str):
    """Parse an exported table; returns ``(header dict, transform)``."""
    lines = text.splitlines()
    header = dict(line.split("=", 1) for line in lines[:5])
    N = int(header["N"])
    rows = []
    for line in lines[5 : 5 + N]:
        rows.append([complex(float(a), float(b)) for a, b in (c.split(",") for c in line.split())])
    L = np.array(rows)
    if L.shape != (N, N):
        raise ValueError("malformed basis table")
    header["n"], header["k"], header["N"] = int(header["n"]), int(header["k"]), N
    header["weight_function"] = parse_weight(header["weight"], header["n"])
    return header, L
