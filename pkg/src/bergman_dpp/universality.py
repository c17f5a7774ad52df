"""Local scaling limits and off-diagonal decay of the weighted kernel.

Comparisons use the weighted modulus ``|K(x, y)| e^{-k(phi(x) + phi(y))/2}``,
which does not depend on a choice of trivialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import EquilibriumWeight, envelope_of
from .hilbert import BergmanEvaluator
from .weights import WeightFunction, as_points, curvature_eigenvalues


def point_in_bulk(w: WeightFunction, x, E: EquilibriumWeight | None = None, tol=1e-6, delta=1e-8) -> bool:
    E = envelope_of(w) if E is None else E
    x = as_points(x, w.n).reshape(-1, w.n)
    phi = w.evaluate(x)
    ok = np.abs(E.evaluate(x) - phi) <= tol * np.maximum(1, np.abs(phi))
    return bool(np.all(ok) and np.all(curvature_eigenvalues(w, x)[..., -1] >= delta))


@dataclass
class ScalingFrame:
    center: np.ndarray  # (n,)
    hessian: np.ndarray  # (n, n) complex Hessian at the center
    k: int
    box_radius: float = 2.0
    in_bulk: bool = True

    @classmethod
    def create(cls, w: WeightFunction, x0, k: int, box_radius: float = 2.0, E=None) -> "ScalingFrame":
        x0 = as_points(x0, w.n).reshape(w.n)
        h = w.complex_hessian(x0)
        return cls(x0, 0.5 * (h + h.conj().T), k, box_radius, point_in_bulk(w, x0, E))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.hessian)[::-1]

    def to_global(self, z) -> np.ndarray:
        z = as_points(z, self.center.shape[0])
        return self.center + z / math.sqrt(self.k)


def ginibre_kernel(lam, z, w) -> complex:
    """``(prod lam / pi^n) exp(sum lam_i z_i conj(w_i))``."""
    lam = np.atleast_1d(np.asarray(lam, float))
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be positive")
    z = np.atleast_1d(np.asarray(z, complex))
    w = np.atleast_1d(np.asarray(w, complex))
    return complex(np.prod(lam) / math.pi ** lam.size * np.exp(np.sum(lam * z * np.conj(w))))


def ginibre_modulus(hessian, z, w) -> np.ndarray:
    """``(det H / pi^n) exp(-(z - w)^* H (z - w) / 2)`` for arrays of points ``(..., n)``."""
    H = np.atleast_2d(hessian)
    n = H.shape[0]
    d = np.asarray(z, complex) - np.asarray(w, complex)
    q = np.real(np.einsum("...i,ij,...j->...", d, H, np.conj(d)))
    return float(np.real(np.linalg.det(H))) / math.pi**n * np.exp(-0.5 * q)


def box_points(n: int, R: float, radial: int = 9, angular: int = 16) -> np.ndarray:
    """Polar sample of the ball of radius R in scaled coordinates, shape ``(P, n)``."""
    r = np.linspace(0, R, radial)
    th = 2 * np.pi * np.arange(angular) / angular
    if n == 1:
        pts = np.concatenate([[0j], (r[1:, None] * np.exp(1j * th)[None, :]).ravel()])
        return pts[:, None]
    dirs = np.stack([np.cos(th / 4) * np.exp(1j * th), np.sin(th / 4) * np.exp(-1j * th)], -1)
    pts = (r[1:, None, None] * dirs[None]).reshape(-1, 2)
    return np.concatenate([np.zeros((1, 2), complex), pts])


@dataclass
class ScalingComparison:
    frame: ScalingFrame
    z: np.ndarray
    w: np.ndarray
    computed: np.ndarray
    model: np.ndarray

    @property
    def abserr(self) -> np.ndarray:
        return np.abs(self.computed - self.model)

    @property
    def sup_error(self) -> float:
        return float(np.max(self.abserr))

    @property
    def converging(self) -> bool:
        """Only comparisons centred in the bulk are expected to converge."""
        return self.frame.in_bulk

    def rows(self):
        Z = np.broadcast_to(self.z[:, None, :], self.computed.shape + (self.z.shape[1],))
        W = np.broadcast_to(self.w[None, :, :], self.computed.shape + (self.w.shape[1],))
        for idx in np.ndindex(self.computed.shape):
            yield Z[idx], W[idx], self.model[idx], self.computed[idx], self.abserr[idx]


def scaling_compare(B: BergmanEvaluator, frame: ScalingFrame, grid=None) -> ScalingComparison:
    """``k^{-n} |K|_w(x0 + z/sqrt k, x0 + w/sqrt k)`` against the Ginibre modulus on the box."""
    pts = box_points(B.n, frame.box_radius) if grid is None else as_points(grid, B.n).reshape(-1, B.n)
    X = frame.to_global(pts)
    comp = np.abs(B.weighted_kernel(X, X)) / B.k**B.n
    model = ginibre_modulus(frame.hessian, pts[:, None, :], pts[None, :, :])
    return ScalingComparison(frame, pts, pts, comp, model)


def scaling_series(w: WeightFunction, x0, ks, box_radius: float = 2.0, slack: float = 1e-12, **quad):
    """Sup errors over ``ks`` and whether they are weakly decreasing (``slack`` absorbs rounding)."""
    errs = []
    for k in ks:
        B = BergmanEvaluator.build(w, k, **quad)
        errs.append(scaling_compare(B, ScalingFrame.create(w, x0, k, box_radius)).sup_error)
    mono = all(b <= a + slack for a, b in zip(errs, errs[1:]))
    return errs, mono


# --- normal-matrix form ------------------------------------------------------------


@dataclass
class RescaledComparison:
    z0: complex
    rho_z0: float
    z: np.ndarray
    ratio: np.ndarray
    sup_error: float  # against exp(-|z - w|^2)
    sup_error_pi: float  # against exp(-pi |z - w|^2)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.ratio)


def normal_matrix_rescale(B: BergmanEvaluator, z0: complex, R: float = 2.0, grid=None) -> RescaledComparison:
    """``-rho2c(z0 + z/sqrt(rho1(z0)), z0 + w/sqrt(rho1(z0))) / rho1(z0)^2`` on the box.

    ``rho1`` is the density with respect to Lebesgue measure, so on the bulk of
    a weight with unit Laplacian density the ratio approaches ``exp(-pi |z - w|^2)``.
    Both sup errors are reported.
    """
    if B.n != 1:
        raise ValueError("normal-matrix rescaling is planar")
    rho = float(B.rho1(np.array([[z0]]))[0])
    if rho < 1e-8:
        raise ValueError(f"one-point density {rho:.3e} at z0 is too small")
    pts = box_points(1, R) if grid is None else as_points(grid, 1).reshape(-1, 1)
    X = z0 + pts / math.sqrt(rho)
    ratio = -B.rho2_connected(X, X) / rho**2
    d2 = np.abs(pts[:, None, 0] - pts[None, :, 0]) ** 2
    return RescaledComparison(
        complex(z0),
        rho,
        pts,
        ratio,
        float(np.max(np.abs(ratio - np.exp(-d2)))),
        float(np.max(np.abs(ratio - np.exp(-math.pi * d2)))),
    )


# --- decay -----------------------------------------------------------------------------


@dataclass
class DecayFit:
    k: int
    n: int
    distances: np.ndarray
    log_values: np.ndarray  # log of k^{-2n} |K|^2_w
    C: float | None
    slope: float  # d log value / d distance on the window sqrt(k) d in [2, 6]
    window: tuple = (2.0, 6.0)
    C_grid: np.ndarray = field(default_factory=lambda: 2.0 ** np.arange(21))

    @property
    def slope_per_sqrtk(self) -> float:
        return self.slope / math.sqrt(self.k)

    def bound(self, C: float | None = None) -> np.ndarray:
        C = self.C if C is None else C
        return np.log(C) - math.sqrt(self.k) * self.distances / C


def _feasible(logv, d, k, C) -> bool:
    return bool(np.all(logv <= math.log(C) - math.sqrt(k) * d / C + 1e-12))


def decay_fit(B: BergmanEvaluator, x, direction=None, samples: int = 200, window=(2.0, 6.0)) -> DecayFit:
    """Sample ``k^{-2n}|K(x, y)|^2_w`` along a ray and certify the smallest ``C`` in ``2^0..2^20``.

    The ray points from ``x`` toward the origin (along the first axis when ``x = 0``)
    and covers ``d = 0`` plus ``d`` in ``[2/sqrt k, 1]``.
    """
    k, n = B.k, B.n
    x = as_points(x, n).reshape(n)
    if direction is None:
        nx = np.linalg.norm(x)
        direction = -x / nx if nx > 0 else np.eye(n, dtype=complex)[0]
    direction = np.asarray(direction, complex).reshape(n)
    direction = direction / np.linalg.norm(direction)
    d = np.concatenate([[0.0], np.linspace(2 / math.sqrt(k), 1.0, samples)])
    Y = x + d[:, None] * direction
    vals = np.abs(B.weighted_kernel(x[None, :], Y)[0]) ** 2 / k ** (2 * n)
    with np.errstate(divide="ignore"):
        logv = np.log(vals)
    grid = 2.0 ** np.arange(21)
    C = next((float(c) for c in grid if _feasible(logv, d, k, c)), None)
    lo, hi = window[0] / math.sqrt(k), window[1] / math.sqrt(k)
    sel = (d >= lo) & (d <= hi) & np.isfinite(logv)
    slope = float(np.polyfit(d[sel], logv[sel], 1)[0]) if np.count_nonzero(sel) >= 2 else math.nan
    return DecayFit(k, n, d, logv, C, slope, tuple(window), grid)


def slope_ratio(fit_small: DecayFit, fit_large: DecayFit) -> float:
    """Ratio of fitted slope magnitudes (large k over small k); ``sqrt`` of the k ratio for Gaussian decay."""
    return abs(fit_large.slope) / abs(fit_small.slope)
