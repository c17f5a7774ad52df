"""Joint densities and exact sampling of the discretized projection process.

The continuum process is replaced by the projection process on the sites of
a quadrature rule: with ``Phi[j, i] = s_i(x_j) exp(-k phi(x_j)/2) sqrt(w_j)``
the kernel matrix ``Phi Phi^*`` is (after re-orthonormalizing the columns) an
exact rank-N projection, and sequential sampling by Schur deflation draws
from it exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.special import gammaln

from .hilbert import BergmanEvaluator, QuadratureScheme, _make_scheme, cutoff_radius, dimension
from .weights import as_points


class SamplerError(RuntimeError):
    pass


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, replicate); order independent."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replicate)])))


@dataclass
class PointConfiguration:
    points: np.ndarray  # (N, n) complex
    seed: int
    k: int
    n: int
    replicate: int = 0
    sites: np.ndarray | None = None  # site indices when drawn on a discrete rule

    def __post_init__(self):
        self.points = as_points(self.points, self.n).reshape(-1, self.n)
        if self.points.shape[0] != dimension(self.n, self.k):
            raise SamplerError(f"configuration has {self.points.shape[0]} points, expected N_k={dimension(self.n, self.k)}")
        if not np.all(np.isfinite(self.points)):
            raise SamplerError("configuration has non-finite points")


# --- joint density ---------------------------------------------------------------


def log_joint_density(B: BergmanEvaluator, pts, route: str = "kernel") -> float:
    """``log (1/N!) det(K(x_i, x_j) e^{-k(phi_i + phi_j)/2})``; ``-inf`` for coincident points."""
    pts = as_points(pts, B.n).reshape(-1, B.n)
    N = B.N
    if pts.shape[0] != N:
        raise SamplerError("configuration size differs from N_k")
    lognf = float(gammaln(N + 1))
    if route == "kernel":
        K = B.weighted_kernel(pts, pts)
        sign, logdet = np.linalg.slogdet(K)
        if logdet == -np.inf or abs(sign) == 0:
            return -np.inf
        if np.real(sign) < 0 and np.exp(logdet) > 1e-10:
            raise ArithmeticError("negative kernel determinant")
        return float(logdet) - lognf
    if route == "slater":
        S = B.sections(pts)
        sign, logdet = np.linalg.slogdet(S)
        return (2 * float(logdet) - lognf) if abs(sign) > 0 else -np.inf
    if route == "vandermonde":
        if B.n != 1:
            raise ValueError("Vandermonde route is planar")
        z = pts[:, 0]
        diff = z[:, None] - z[None, :]
        iu = np.triu_indices(N, 1)
        with np.errstate(divide="ignore"):
            logvdm = 2 * float(np.sum(np.log(np.abs(diff[iu]))))
        logw = -B.k * float(np.sum(B.weight.evaluate(pts)))
        G = B.basis.gram
        _, logdet_s = np.linalg.slogdet(G.scaled)
        log_z = lognf + float(np.sum(G.log_diag)) + float(logdet_s)
        return logvdm + logw - log_z
    raise ValueError(f"unknown route {route!r}")


def joint_density(B: BergmanEvaluator, cfg, route: str = "kernel") -> float:
    pts = cfg.points if isinstance(cfg, PointConfiguration) else cfg
    return float(np.exp(log_joint_density(B, pts, route)))


# --- discrete process ---------------------------------------------------------------


@dataclass
class DiscreteDPP:
    """Projection process on weighted sites."""

    sites: np.ndarray  # (M, n)
    cell_weights: np.ndarray  # (M,)
    features: np.ndarray  # (M, N), orthonormal columns after renormalization
    raw_spectrum_defect: float
    N: int
    k: int
    n: int

    @property
    def M(self) -> int:
        return self.sites.shape[0]

    @property
    def kernel_matrix(self) -> np.ndarray:
        """Dense ``M x M`` matrix; only sensible for small site sets."""
        return self.features @ self.features.conj().T

    @property
    def inclusion_probabilities(self) -> np.ndarray:
        return np.sum(np.abs(self.features) ** 2, axis=1)

    def minor(self, subset) -> float:
        """``P(all sites in subset occupied) = det K_subset``."""
        idx = np.asarray(subset, dtype=int)
        F = self.features[idx]
        return float(np.real(np.linalg.det(F @ F.conj().T)))

    def subset_law(self) -> dict:
        """Exact law of the occupied set (a projection process has exactly N points)."""
        out = {}
        for S in combinations(range(self.M), self.N):
            out[S] = float(abs(np.linalg.det(self.features[list(S)])) ** 2)
        return out

    def spectrum(self) -> np.ndarray:
        """Nonzero eigenvalues of the kernel matrix (those of ``F^* F``); the other M - N vanish."""
        F = self.features
        return np.linalg.eigvalsh(F.conj().T @ F)

    def sample(self, rng: np.random.Generator, drift_tol: float = 1e-6) -> np.ndarray:
        """Sequential draw: pick a site from the current diagonal, deflate, repeat."""
        V = self.features
        N = self.N
        norms = np.sum(np.abs(V) ** 2, axis=1)
        basis = np.zeros((N, N), dtype=complex)
        chosen = np.empty(N, dtype=int)
        for step in range(N):
            remaining = N - step
            total = float(np.sum(norms))
            if abs(total - remaining) > drift_tol * N:
                raise SamplerError(f"trace drift {total - remaining:.3e} at deflation step {step}")
            if np.min(norms) < -1e-10:
                raise SamplerError(f"negative conditional density at deflation step {step}")
            p = np.maximum(norms, 0.0)
            cdf = np.cumsum(p)
            j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            j = min(j, self.M - 1)
            chosen[step] = j
            # Gram-Schmidt the chosen row against earlier directions
            v = V[j].copy()
            if step:
                v -= basis[:step].T @ (basis[:step].conj() @ v)
            nv = np.linalg.norm(v)
            if nv <= 0:
                raise SamplerError(f"degenerate direction at deflation step {step}")
            q = v / nv
            basis[step] = q
            norms = norms - np.abs(V @ q.conj()) ** 2
            norms[j] = 0.0
            # keep the running trace on the remaining rank
            rest = remaining - 1
            tot = float(np.sum(np.maximum(norms, 0.0)))
            if rest and tot > 0:
                norms = norms * (rest / tot) if abs(tot - rest) <= drift_tol * N else norms
        return chosen


def build_discrete(
    B: BergmanEvaluator, sites, cell_weights, renormalize: bool = True, tol: float = 1e-8
) -> DiscreteDPP:
    sites = as_points(sites, B.n).reshape(-1, B.n)
    w = np.asarray(cell_weights, dtype=float)
    F = B.sections(sites, 0.5 * np.log(w))
    G = F.conj().T @ F
    defect = float(np.max(np.abs(np.linalg.eigvalsh(G) - 1.0)))
    if renormalize:
        # symmetric (Loewdin) orthonormalization keeps the sites' roles symmetric
        ev, U = np.linalg.eigh(G)
        if np.min(ev) <= 0:
            raise SamplerError("sites do not separate the polynomial space")
        F = F @ (U * ev**-0.5) @ U.conj().T
    elif defect > tol:
        raise SamplerError(f"kernel matrix is not a projection (spectrum defect {defect:.3e}); refine the sites")
    return DiscreteDPP(sites, w, F, defect, B.N, B.k, B.n)


def sampling_sites(B: BergmanEvaluator, per_panel: int = 6, panels: int | None = None, angular: int | None = None, breakpoints=()):
    """Tensor sites resolved for products of two degree-k sections.

    Defaults: coarse Gauss-Legendre radii and 2k+8 angles in the plane; for
    n = 2, k+2 angles per circle, 4 radii per panel and k+8 polar nodes.
    """
    k = B.k
    R = cutoff_radius(B.weight, k)
    p = panels if panels is not None else max(4, int(math.ceil(2 * R * math.sqrt(k))))
    bp = tuple(B.weight.breakpoints) + tuple(breakpoints)
    if B.n == 1:
        na = angular if angular is not None else 2 * k + 8
        return _make_scheme(1, R, p, per_panel, na, 0.0, bp).nodes()
    na = angular if angular is not None else k + 2
    return _make_scheme(2, R, p, 4, na, 0.0, bp, k + 8).nodes()


def discrete_from_scheme(B: BergmanEvaluator, scheme: QuadratureScheme | None = None, renormalize: bool = True, **kw):
    if scheme is None:
        pts, wts = sampling_sites(B, **kw)
    else:
        pts, wts = scheme.nodes()
    return build_discrete(B, pts, wts, renormalize)


def discrete_oracle(B: BergmanEvaluator, sites, cell_weights, renormalize: bool = True, max_sites: int = 400):
    """Small dense process whose inclusion probabilities and minors are exact."""
    sites = as_points(sites, B.n).reshape(-1, B.n)
    if sites.shape[0] > max_sites:
        raise ValueError(f"oracle limited to {max_sites} sites")
    return build_discrete(B, sites, cell_weights, renormalize)


def coarse_polar_sites(R: float, radial: int, angular: int):
    """``radial`` Gauss-Legendre radii on ``[0, R]`` times ``angular`` angles."""
    r, wr = np.polynomial.legendre.leggauss(radial)
    r, wr = 0.5 * R * (r + 1), 0.5 * R * wr
    th = 2 * np.pi * np.arange(angular) / angular
    pts = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
    wts = np.repeat(r * wr * 2 * np.pi / angular, angular)
    return pts[:, None], wts


def sample(B_or_dpp, seed: int, replicate: int = 0) -> PointConfiguration:
    dpp = B_or_dpp if isinstance(B_or_dpp, DiscreteDPP) else discrete_from_scheme(B_or_dpp)
    idx = dpp.sample(replicate_rng(seed, replicate))
    return PointConfiguration(dpp.sites[idx], seed, dpp.k, dpp.n, replicate, idx)


def sample_batch(dpp: DiscreteDPP, seed: int, replicates: int, workers: int = 1, start: int = 0) -> np.ndarray:
    """Site indices, shape ``(replicates, N)``; replicate r uses key (seed, start + r)."""

    def one(r):
        return dpp.sample(replicate_rng(seed, start + r))

    if workers <= 1:
        return np.array([one(r) for r in range(replicates)])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(one, range(replicates))))
