"""Weight functions on C^n and compactly supported perturbations.

Every catalog entry is radial about some center ``z0``: it is a profile
``f`` of ``t = |z - z0|^2``.  That is enough to write down the holomorphic
gradient and the complex Hessian in closed form:

    d phi / dz_i          = f'(t) conj(w_i)
    d^2 phi / dz_i dzbar_j = f'(t) delta_ij + f''(t) conj(w_i) w_j

with ``w = z - z0``.  Points are complex arrays of shape ``(..., n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

SMOOTHNESS_CLASSES = ("C2", "C11", "C1")


def as_points(z, n: int) -> np.ndarray:
    """Coerce ``z`` to a complex array of shape ``(..., n)``."""
    z = np.asarray(z, dtype=complex)
    if n == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        return z[..., None]
    if z.shape[-1] != n:
        raise ValueError(f"points must have trailing dimension {n}, got shape {z.shape}")
    return z


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class RadialTerm:
    """One profile ``coef * f(|z - z0|^2)`` with analytic derivatives."""

    kind: str
    center: tuple
    params: tuple
    coef: float = 1.0

    # --- profiles in t = |z - z0|^2 -------------------------------------
    def profile(self, t: np.ndarray, order: int = 0) -> np.ndarray:
        p = dict(self.params)
        t = np.asarray(t, dtype=float)
        if self.kind == "quadratic":
            a = p["a"]
            out = (a * t, np.full_like(t, a), np.zeros_like(t))[order]
        elif self.kind == "radial-poly":
            # sum_j c_{2j} t^j
            out = np.zeros_like(t)
            for j, c in p["coeffs"]:
                if order == 0:
                    out = out + c * t**j
                elif order == 1 and j >= 1:
                    out = out + c * j * t ** (j - 1)
                elif order == 2 and j >= 2:
                    out = out + c * j * (j - 1) * t ** (j - 2)
        elif self.kind == "fs":
            s = p["scale"]
            out = (s * np.log1p(t), s / (1 + t), -s / (1 + t) ** 2)[order]
        elif self.kind == "bump":
            r2 = p["r"] ** 2
            x = 1.0 - t / r2
            inside = x > 0
            val = (x**2, -2.0 * x / r2, np.full_like(t, 2.0 / r2**2))[order]
            out = np.where(inside, p["amp"] * val, 0.0)
        elif self.kind == "gauss":
            s2 = p["sigma"] ** 2
            e = np.exp(-t / s2)
            val = (e, -e / s2, e / s2**2)[order]
            out = np.where(t <= 64.0 * s2, p["amp"] * val, 0.0)
        else:  # pragma: no cover - guarded at construction
            raise WeightError(f"unknown profile kind {self.kind!r}")
        return self.coef * out

    @property
    def support_radius(self) -> float:
        p = dict(self.params)
        if self.kind == "bump":
            return p["r"]
        if self.kind == "gauss":
            return 8.0 * p["sigma"]
        return math.inf

    @property
    def breakpoints(self) -> tuple:
        """Radii (about the center) where the profile is not smooth."""
        if self.kind in ("bump", "gauss"):
            return (self.support_radius,)
        return ()

    def scaled(self, c: float) -> "RadialTerm":
        return RadialTerm(self.kind, self.center, self.params, self.coef * c)

    @property
    def centered_at_origin(self) -> bool:
        return all(c == 0 for c in self.center)


def _params_spec(term: RadialTerm) -> str:
    p = dict(term.params)
    if term.kind == "quadratic":
        return f"quadratic:a={_fmt(p['a'])}"
    if term.kind == "radial-poly":
        return "radial-poly:" + ",".join(f"c{2 * j}={_fmt(c)}" for j, c in p["coeffs"])
    if term.kind == "fs":
        return f"fs:scale={_fmt(p['scale'])}"
    z0 = _fmt_point(term.center)
    if term.kind == "bump":
        return f"bump:z0={z0},r={_fmt(p['r'])},amp={_fmt(p['amp'])}"
    return f"gauss:z0={z0},sigma={_fmt(p['sigma'])},amp={_fmt(p['amp'])}"


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_complex(c: complex) -> str:
    c = complex(c)
    return f"{c.real!r}{'+' if c.imag >= 0 or math.isnan(c.imag) else '-'}{abs(c.imag)!r}i"


def _fmt_point(center: tuple) -> str:
    return ";".join(_fmt_complex(c) for c in center)


class _RadialSum:
    """Shared machinery for finite sums of centered radial profiles."""

    terms: tuple
    n: int

    def _offsets(self, z, term):
        return z - np.asarray(term.center, dtype=complex)

    def evaluate(self, z) -> np.ndarray:
        z = as_points(z, self.n)
        out = np.zeros(z.shape[:-1])
        for term in self.terms:
            w = self._offsets(z, term)
            out = out + term.profile(np.sum(np.abs(w) ** 2, axis=-1))
        return out

    __call__ = evaluate

    def gradient(self, z) -> np.ndarray:
        """Holomorphic derivatives ``d phi / dz_i``, shape ``(..., n)``."""
        z = as_points(z, self.n)
        out = np.zeros(z.shape, dtype=complex)
        for term in self.terms:
            w = self._offsets(z, term)
            t = np.sum(np.abs(w) ** 2, axis=-1)
            out = out + term.profile(t, 1)[..., None] * np.conj(w)
        return out

    def complex_hessian(self, z) -> np.ndarray:
        """Mixed derivatives ``d^2 phi / dz_i dzbar_j``, shape ``(..., n, n)``."""
        z = as_points(z, self.n)
        out = np.zeros(z.shape + (self.n,), dtype=complex)
        eye = np.eye(self.n)
        for term in self.terms:
            w = self._offsets(z, term)
            t = np.sum(np.abs(w) ** 2, axis=-1)
            d1 = term.profile(t, 1)[..., None, None]
            d2 = term.profile(t, 2)[..., None, None]
            out = out + d1 * eye + d2 * np.conj(w)[..., :, None] * w[..., None, :]
        return out

    def laplacian_density(self, z) -> np.ndarray:
        """``det(complex Hessian)``; the Monge-Ampere density is this over pi^n."""
        h = self.complex_hessian(z)
        return np.real(np.linalg.det(h)) if self.n > 1 else np.real(h[..., 0, 0])

    @property
    def is_radial(self) -> bool:
        return all(term.centered_at_origin for term in self.terms)

    def radial_profile(self, t, order: int = 0) -> np.ndarray:
        """Profile ``f`` with ``phi(z) = f(|z|^2)``; radial weights only."""
        if not self.is_radial:
            raise WeightError("radial_profile requires a weight radial about the origin")
        t = np.asarray(t, dtype=float)
        return sum((term.profile(t, order) for term in self.terms), np.zeros_like(t))

    @property
    def breakpoints(self) -> tuple:
        """Radii about the origin where some term loses smoothness (radial terms only)."""
        out = []
        for term in self.terms:
            if term.centered_at_origin:
                out.extend(term.breakpoints)
        return tuple(sorted(set(out)))


@dataclass(frozen=True, eq=False)
class WeightFunction(_RadialSum):
    """A weight ``phi`` on C^n built from radial profile terms.

    ``growth_exponent`` is the declared epsilon in ``phi >= (1 + eps) ln|z|^2``
    at infinity (``inf`` for polynomial growth).
    """

    terms: tuple
    n: int = 1
    growth_exponent: float = math.inf
    smoothness_class: str = "C2"
    spec: str = ""

    def __post_init__(self):
        if self.n not in (1, 2):
            raise WeightError("only n = 1 or n = 2 is supported")
        if self.smoothness_class not in SMOOTHNESS_CLASSES:
            raise WeightError(f"unknown smoothness class {self.smoothness_class!r}")
        for term in self.terms:
            if len(term.center) != self.n:
                raise WeightError("term center dimension does not match n")

    def __eq__(self, other):
        return isinstance(other, WeightFunction) and self.spec == other.spec and self.n == other.n

    def __hash__(self):
        return hash((self.spec, self.n))

    def shifted(self, c: float) -> "WeightFunction":
        """``phi + c``; used for gauge checks."""
        const = RadialTerm("radial-poly", (0j,) * self.n, (("coeffs", ((0, float(c)),)),))
        return WeightFunction(
            self.terms + (const,),
            self.n,
            self.growth_exponent,
            self.smoothness_class,
            f"{self.spec}|const:c={_fmt(c)}",
        )


@dataclass(frozen=True, eq=False)
class Perturbation(_RadialSum):
    """Compactly supported test function ``u`` (bump profiles only)."""

    terms: tuple
    n: int = 1
    smoothness_class: str = "C11"
    spec: str = ""

    @property
    def support_radius(self) -> float:
        """Radius of a ball about ``center`` containing the support."""
        return max(term.support_radius for term in self.terms)

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.terms[0].center, dtype=complex)

    def support_ball(self) -> tuple:
        return self.center, self.support_radius

    def scaled(self, c: float) -> "Perturbation":
        return Perturbation(
            tuple(t.scaled(c) for t in self.terms), self.n, self.smoothness_class, f"{self.spec}*{_fmt(c)}"
        )

    def squared(self) -> Callable:
        return lambda z: self.evaluate(z) ** 2

    def __eq__(self, other):
        return isinstance(other, Perturbation) and self.spec == other.spec and self.n == other.n

    def __hash__(self):
        return hash((self.spec, self.n))


@dataclass(frozen=True)
class WeightFamily:
    """The affine family ``phi_t = base + t * direction``."""

    base: WeightFunction
    direction: Perturbation

    def member(self, t: float) -> WeightFunction:
        if t == 0:
            return self.base
        return perturb(self.base, self.direction, t)


# --- catalog constructors ----------------------------------------------------


def quadratic(a: float = 1.0, n: int = 1) -> WeightFunction:
    if a <= 0:
        raise WeightError("quadratic weight needs a > 0")
    term = RadialTerm("quadratic", (0j,) * n, (("a", float(a)),))
    return WeightFunction((term,), n, math.inf, "C2", _params_spec(term))


def radial_poly(coeffs: dict, n: int = 1) -> WeightFunction:
    """``sum_j c_{2j} |z|^{2j}``, keyed by the power ``2j``."""
    items = tuple(sorted((int(p) // 2, float(c)) for p, c in coeffs.items()))
    if any(p % 2 for p in coeffs):
        raise WeightError("radial-poly powers must be even")
    top = max(j for j, c in items if c != 0)
    if top < 1 or dict(items)[top] <= 0:
        raise WeightError("radial-poly needs a positive leading coefficient")
    term = RadialTerm("radial-poly", (0j,) * n, (("coeffs", items),))
    return WeightFunction((term,), n, math.inf, "C2", _params_spec(term))


def fubini_study(scale: float = 1.0, n: int = 1) -> WeightFunction:
    """``scale * ln(1 + |z|^2)``; growth exponent is exactly ``scale - 1``."""
    term = RadialTerm("fs", (0j,) * n, (("scale", float(scale)),))
    return WeightFunction((term,), n, max(scale - 1.0, 0.0), "C2", _params_spec(term))


def _center(z0, n: int) -> tuple:
    z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
    if z0.size == 1 and n > 1:
        z0 = np.repeat(z0, n)
    if z0.size != n:
        raise WeightError("center has the wrong dimension")
    return tuple(complex(c) for c in z0)


def radial_bump(z0=0j, r: float = 0.5, amp: float = 1.0, n: int = 1) -> Perturbation:
    """``amp * (1 - |z - z0|^2 / r^2)^2`` inside the ball, zero outside (C^{1,1})."""
    if r <= 0:
        raise WeightError("bump radius must be positive")
    term = RadialTerm("bump", _center(z0, n), (("r", float(r)), ("amp", float(amp))))
    return Perturbation((term,), n, "C11", _params_spec(term))


def gaussian_bump(z0=0j, sigma: float = 0.1, amp: float = 1.0, n: int = 1) -> Perturbation:
    """``amp * exp(-|z - z0|^2 / sigma^2)`` truncated at radius ``8 sigma``."""
    if sigma <= 0:
        raise WeightError("sigma must be positive")
    term = RadialTerm("gauss", _center(z0, n), (("sigma", float(sigma)), ("amp", float(amp))))
    return Perturbation((term,), n, "C2", _params_spec(term))


def perturb(base: WeightFunction, u: Perturbation, t: float) -> WeightFunction:
    """Composite weight ``base + t * u``."""
    if base.n != u.n:
        raise WeightError("dimension mismatch between weight and perturbation")
    t = float(t)
    terms = base.terms + tuple(term.scaled(t) for term in u.terms)
    order = SMOOTHNESS_CLASSES.index
    cls = max(base.smoothness_class, u.smoothness_class, key=order) if t != 0 else base.smoothness_class
    return WeightFunction(terms, base.n, base.growth_exponent, cls, f"{base.spec}|{u.spec}*{_fmt(t)}")


# --- operations -----------------------------------------------------------------


def eval_weight(w: WeightFunction, z) -> np.ndarray:
    z = as_points(z, w.n)
    if not np.all(np.isfinite(z)):
        raise WeightError("weight evaluated at a non-finite point")
    val = w.evaluate(z)
    if not np.all(np.isfinite(val)):
        raise WeightError(f"weight {w.spec!r} produced a non-finite value")
    return val


def curvature_eigenvalues(w, z, tol: float = 1e-10) -> np.ndarray:
    """Eigenvalues of the complex Hessian at ``z``, in descending order."""
    h = w.complex_hessian(as_points(z, w.n))
    resid = np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2))), initial=0.0)
    if resid > tol * max(1.0, np.max(np.abs(h), initial=0.0)):
        raise WeightError(f"complex Hessian not Hermitian (residual {resid:.3e})")
    h = 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))
    return np.linalg.eigvalsh(h)[..., ::-1]


def _sphere_directions(n: int, count: int = 16) -> np.ndarray:
    """Deterministic unit vectors in C^n."""
    angles = 2 * np.pi * np.arange(count) / count
    if n == 1:
        return np.exp(1j * angles)[:, None]
    mix = np.linspace(0.0, np.pi / 2, count)
    return np.stack([np.cos(mix) * np.exp(1j * angles), np.sin(mix) * np.exp(2j * angles)], axis=-1)


def check_superlog_growth(w: WeightFunction, eps: float, R: float) -> bool:
    """True iff ``phi(z) >= (1 + eps) ln|z|^2`` on radii in ``[R, 10R]``."""
    if R <= 1:
        raise WeightError("check_superlog_growth needs R > 1")
    radii = np.geomspace(R, 10 * R, 64)
    dirs = _sphere_directions(w.n)
    pts = radii[:, None, None] * dirs[None, :, :]
    lhs = w.evaluate(pts)
    rhs = (1.0 + eps) * np.log(radii**2)[:, None]
    return bool(np.all(lhs >= rhs))


def check_radial_invariance(w, z, rng=None, trials: int = 4, tol: float = 1e-12) -> bool:
    """Spot check that a radial weight is invariant under unitary rotations."""
    rng = np.random.default_rng(0) if rng is None else rng
    z = as_points(z, w.n)
    base = w.evaluate(z)
    for _ in range(trials):
        a = rng.normal(size=(w.n, w.n)) + 1j * rng.normal(size=(w.n, w.n))
        q, _ = np.linalg.qr(a)
        if not np.allclose(w.evaluate(z @ q.T), base, rtol=tol, atol=tol):
            return False
    return True


def vanishes_outside_support(u: Perturbation, samples: int = 256, rng=None) -> bool:
    rng = np.random.default_rng(1) if rng is None else rng
    c, r = u.support_ball()
    d = rng.normal(size=(samples, u.n)) + 1j * rng.normal(size=(samples, u.n))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    rad = r * (1.0 + 1e-9 + rng.exponential(size=(samples, 1)))
    return bool(np.all(u.evaluate(c + rad * d) == 0.0))


def bump_dirichlet_integral(u: Perturbation) -> float:
    """Closed-form ``int |grad u|^2 dLeb`` for single-term n = 1 bumps.

    The C^{1,1} bump gives ``4 pi amp^2 / 3`` and the Gaussian ``pi amp^2``,
    both independent of the radius (planar scale invariance).
    """
    if u.n != 1 or len(u.terms) != 1:
        raise WeightError("closed form only for single-term planar bumps")
    term = u.terms[0]
    amp = dict(term.params)["amp"] * term.coef
    if term.kind == "bump":
        return 4.0 * math.pi * amp**2 / 3.0
    s = dict(term.params)["sigma"]
    # truncation at 8 sigma drops a fraction (1 + 128) e^{-128} of the integral
    return math.pi * amp**2 * (1.0 - 129.0 * math.exp(-128.0)) + 0.0 * s


# --- spec-string grammar ---------------------------------------------------------


def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "").replace("i", "j")
    if s.endswith("j") and (s == "j" or s[-2] in "+-"):
        s = s[:-1] + "1j"
    return complex(s)


def _parse_params(body: str) -> dict:
    out = {}
    if not body:
        return out
    for item in body.split(","):
        if "=" not in item:
            raise WeightError(f"malformed parameter {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _parse_term(text: str, n: int):
    kind, _, body = text.strip().partition(":")
    params = _parse_params(body)

    def take(name, default=None):
        if name in params:
            return params.pop(name)
        if default is None:
            raise WeightError(f"{kind}: missing parameter {name!r}")
        return default

    if kind == "quadratic":
        obj = quadratic(float(take("a", "1.0")), n)
    elif kind == "radial-poly":
        coeffs = {}
        for key in list(params):
            if not key.startswith("c"):
                raise WeightError(f"radial-poly: unexpected key {key!r}")
            coeffs[int(key[1:])] = float(params.pop(key))
        obj = radial_poly(coeffs, n)
    elif kind in ("fs", "fubini-study"):
        obj = fubini_study(float(take("scale", "1.0")), n)
    elif kind in ("bump", "gauss"):
        z0 = [parse_complex(c) for c in take("z0", "0").strip("()").split(";")]
        amp = float(take("amp", "1.0"))
        if kind == "bump":
            obj = radial_bump(z0 if len(z0) > 1 else z0[0], float(take("r", "0.5")), amp, n)
        else:
            obj = gaussian_bump(z0 if len(z0) > 1 else z0[0], float(take("sigma", "0.1")), amp, n)
    elif kind == "const":
        return ("const", float(take("c")))
    else:
        raise WeightError(f"unknown weight kind {kind!r}")
    if params:
        raise WeightError(f"{kind}: unknown keys {sorted(params)}")
    return obj


def parse_weight(spec: str, n: int = 1) -> WeightFunction:
    """Parse ``base|perturbation*t|...`` into a weight.

    Bases: ``quadratic:a=1``, ``radial-poly:c2=1,c4=0.25``, ``fs:scale=1``.
    Perturbations: ``bump:z0=0+0i,r=0.5,amp=1``, ``gauss:z0=0,sigma=0.1,amp=1``;
    each may carry a ``*t`` multiplier (default 1).  ``const:c=...`` adds a constant.
    """
    parts = [p for p in spec.split("|") if p.strip()]
    if not parts:
        raise WeightError("empty weight spec")
    w = _parse_term(parts[0], n)
    if not isinstance(w, WeightFunction):
        raise WeightError("first component of a weight spec must be a base weight")
    for part in parts[1:]:
        body, _, mult = part.partition("*")
        obj = _parse_term(body, n)
        if isinstance(obj, tuple):
            w = w.shifted(obj[1])
            continue
        if not isinstance(obj, Perturbation):
            raise WeightError("only perturbations may follow the base weight")
        w = perturb(w, obj, float(mult) if mult else 1.0)
    return w


def parse_perturbation(spec: str, n: int = 1) -> Perturbation:
    body, _, mult = spec.partition("*")
    obj = _parse_term(body, n)
    if not isinstance(obj, Perturbation):
        raise WeightError(f"{spec!r} is not a perturbation")
    return obj.scaled(float(mult)) if mult else obj


def catalog(n: int = 1) -> dict:
    """Named catalog entries used by tests and the CLI."""
    out = {
        "quadratic": quadratic(1.0, n),
        "quadratic2": quadratic(2.0, n),
        "radial-poly": radial_poly({2: 1.0, 4: 0.25}, n),
    }
    if n == 1:
        out["composite"] = perturb(quadratic(1.0), radial_bump(0.3 + 0.1j, 0.4, 1.0), 0.2)
    return out
