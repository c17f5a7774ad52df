"""Experiment runner: ``python -m bergman_dpp {run,validate,report}``.

Configs are flat ``key = value`` files with section prefixes; every key can be
overridden on the command line as ``--key=value`` (e.g. ``--levels.k=64,128``).
A run writes one directory holding ``manifest.txt``, ``summary.txt`` and CSVs.

CSV layouts (header line first, 17 significant digits):

    kernel        re_x, im_x, rho1
    equilibrium   s, phi, phi_e
    sample        replicate, point_index, re, im (per coordinate)
    variance      k, trace, double
    clt / lln     replicate, value
    freenergy     k, F, normalized
    scan2         k, value, fd_value
    universality  k, center, re_z, im_z, re_w, im_w, model, computed, abserr
    decay         k, center, d, logval, bound
"""

from __future__ import annotations

import argparse
import hashlib
import io
import math
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import statistics as st
from . import universality as un
from .equilibrium import envelope_of, radial_mass
from .hilbert import K_CAPS, BergmanEvaluator, cutoff_radius, integrate_out_residual, trace_identity
from .sampler import discrete_from_scheme, sample_batch
from .weights import (
    WeightError,
    WeightFamily,
    check_superlog_growth,
    parse_complex,
    parse_perturbation,
    parse_weight,
)

KINDS = ("kernel", "equilibrium", "sample", "variance", "clt", "lln", "freenergy", "scan2", "universality", "decay")
STAT_KINDS = ("variance", "clt", "lln", "scan2")
SPECTRAL_KINDS = tuple(k for k in KINDS if k != "equilibrium")
QUAD_KEYS = {"tolerance": float, "panels": int, "per_panel": int, "angular_nodes": int, "R_cut": float, "polar_nodes": int}


class ConfigError(ValueError):
    pass


class RunError(RuntimeError):
    def __init__(self, stage: str, params: dict, cause: Exception):
        self.stage, self.params, self.cause = stage, params, cause
        desc = ", ".join(f"{k}={v}" for k, v in params.items())
        super().__init__(f"stage {stage!r} failed ({desc}): {type(cause).__name__}: {cause}")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}i"
    return f"{float(x):.17g}"


def _label(c) -> str:
    c = complex(c)
    return f"{c.real:g}{c.imag:+g}i"


@dataclass
class ExperimentConfig:
    kind: str = "kernel"
    weight: str = "quadratic:a=1"
    n: int = 1
    k: tuple = (8,)
    quad: dict = field(default_factory=dict)
    seed: int = 0
    replicates: int = 100
    workers: int = 1
    out: str = "runs/out"
    u: str = "bump:z0=0,r=0.5,amp=1"
    reference: str = "quadratic:a=1"
    centers: tuple = (0j,)
    box_radius: float = 2.0
    sample_angular: int = 0  # 0 selects 2k+8

    # key -> (attribute, parser, emitter)
    _KEYS = {
        "experiment.kind": ("kind", str, str),
        "weight.spec": ("weight", str, str),
        "weight.n": ("n", int, str),
        "levels.k": ("k", lambda s: tuple(int(v) for v in s.split(",") if v.strip()), lambda v: ",".join(map(str, v))),
        "run.seed": ("seed", int, str),
        "run.replicates": ("replicates", int, str),
        "run.workers": ("workers", int, str),
        "run.out": ("out", str, str),
        "stat.u": ("u", str, str),
        "stat.reference": ("reference", str, str),
        "univ.centers": ("centers", lambda s: tuple(parse_complex(v) for v in s.split(",") if v.strip()), lambda v: ",".join(_fmt(complex(c)) for c in v)),
        "univ.box_radius": ("box_radius", float, _fmt),
        "sample.angular": ("sample_angular", int, str),
    }

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.n not in (1, 2):
            raise ConfigError("n must be 1 or 2")
        if not self.k:
            raise ConfigError("levels.k is empty")
        for key in self.quad:
            if key not in QUAD_KEYS:
                raise ConfigError(f"unknown key quad.{key}")

    def emit(self) -> str:
        lines = []
        for key, (attr, _, em) in self._KEYS.items():
            lines.append(f"{key} = {em(getattr(self, attr))}")
        for key in sorted(self.quad):
            lines.append(f"quad.{key} = {_fmt(self.quad[key])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str, overrides: dict | None = None) -> "ExperimentConfig":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, val = (p.strip() for p in line.split("=", 1))
            raw[key] = val
        raw.update(overrides or {})
        kw, quad = {}, {}
        for key, val in raw.items():
            if key.startswith("quad."):
                sub = key[5:]
                if sub not in QUAD_KEYS:
                    raise ConfigError(f"unknown key {key}")
                quad[sub] = QUAD_KEYS[sub](val)
            elif key in cls._KEYS:
                attr, parse, _ = cls._KEYS[key]
                try:
                    kw[attr] = parse(val)
                except ValueError as exc:
                    raise ConfigError(f"{key}: {exc}") from exc
            else:
                raise ConfigError(f"unknown key {key}")
        return cls(quad=quad, **kw)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.emit().encode()).hexdigest()

    def weight_function(self):
        return parse_weight(self.weight, self.n)

    def perturbation(self):
        return parse_perturbation(self.u, self.n)


# --- validation ---------------------------------------------------------------------


@dataclass
class Diagnostic:
    level: str  # "error" or "warning"
    check: str
    message: str

    def __str__(self):
        return f"[{self.level}] {self.check}: {self.message}"


def validate(cfg: ExperimentConfig) -> list:
    """Static checks; nothing is built or written."""
    out = []
    try:
        w = cfg.weight_function()
    except WeightError as exc:
        return [Diagnostic("error", "weight", str(exc))]
    if cfg.kind in SPECTRAL_KINDS:
        eps = w.growth_exponent
        if not eps > 0 or not check_superlog_growth(w, min(eps, 1.0), 10.0):
            out.append(Diagnostic("error", "growth", f"{cfg.weight!r} lacks super-logarithmic growth (eps={eps})"))
    cap = K_CAPS[cfg.n]
    for k in cfg.k:
        if k > cap:
            out.append(Diagnostic("error", "k-cap", f"k={k} exceeds the cap {cap} for n={cfg.n}"))
    if cfg.kind in STAT_KINDS and not out:
        try:
            u = cfg.perturbation()
            if not st.support_in_bulk(u, w):
                out.append(Diagnostic("warning", "bulk-support", f"support of {cfg.u!r} leaves the bulk"))
        except Exception as exc:  # envelope failures are diagnostics too
            out.append(Diagnostic("error", "bulk-support", str(exc)))
    if cfg.kind in SPECTRAL_KINDS and not any(d.level == "error" for d in out):
        for k in cfg.k:
            R = cfg.quad.get("R_cut") or cutoff_radius(w, k)
            na = cfg.quad.get("angular_nodes", 4 * k + 8)
            if na < 4 * k + 8:
                out.append(Diagnostic("error", "quadrature", f"angular_nodes={na} below 4k+8 at k={k}"))
            if not np.isfinite(R) or R <= 0:
                out.append(Diagnostic("error", "quadrature", f"cutoff radius {R} at k={k}"))
    return out


# --- output helpers -------------------------------------------------------------------


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


@dataclass
class Check:
    name: str
    value: float
    tolerance: str
    passed: bool

    def line(self) -> str:
        return f"{self.name} = {_fmt(self.value)} ; tol {self.tolerance} ; {'pass' if self.passed else 'FAIL'}"


@dataclass
class RunManifest:
    config_hash: str
    version: str
    seed: int
    stage_times: dict
    checks: list
    files: dict  # name -> sha256

    def render(self) -> str:
        lines = [f"config_hash = {self.config_hash}", f"version = {self.version}", f"seed = {self.seed}"]
        lines += [f"time.{k} = {v:.3f}" for k, v in self.stage_times.items()]
        lines += [f"check.{c.line()}" for c in self.checks]
        lines += [f"file.{name} = sha256:{dig}" for name, dig in self.files.items()]
        return "\n".join(lines) + "\n"

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0"


# --- experiments -----------------------------------------------------------------------


def _default_grid(n: int):
    x = np.linspace(-2, 2, 41)
    if n == 1:
        return (x[:, None] + 1j * x[None, :]).ravel()[:, None]
    return np.stack([x.astype(complex), 0.5 * x.astype(complex)], axis=1)


def _exp_kernel(cfg, w, stage):
    files, checks = {}, []
    for k in cfg.k:
        B = stage("basis", k=k)(lambda: BergmanEvaluator.build(w, k, **cfg.quad))
        pts = _default_grid(cfg.n)
        rho = B.rho1(pts)
        cols = [f"re_x{i}" for i in range(cfg.n)] + [f"im_x{i}" for i in range(cfg.n)] + ["rho1"]
        rows = (list(p.real) + list(p.imag) + [r] for p, r in zip(pts, rho))
        files[f"rho1_k{k}.csv"] = _csv(cols, rows)
        tr = trace_identity(B)
        res = integrate_out_residual(B, pts[len(pts) // 2][None, :])
        checks.append(Check(f"trace_k{k}", abs(tr - B.N), "1e-8*N", abs(tr - B.N) <= 1e-8 * B.N))
        checks.append(Check(f"residual_k{k}", res, "1e-8", res <= 1e-8))
    return files, checks


def _exp_equilibrium(cfg, w, stage):
    E = stage("envelope")(lambda: envelope_of(w))
    s = np.linspace(-6, 4, 201)
    z = np.exp(s / 2)
    if cfg.n == 2:
        z = np.stack([z, np.zeros_like(z)], axis=1)
    rows = zip(s, w.evaluate(z), E.evaluate(z))
    mass = radial_mass(E)
    target = 1.0 / math.factorial(cfg.n)
    return {"envelope.csv": _csv(["s", "phi", "phi_e"], rows)}, [
        Check("mass", mass, f"1% of {target:g}", abs(mass - target) <= 0.01 * target)
    ]


def _sites(cfg, B, u=None):
    kw = {"angular": cfg.sample_angular} if cfg.sample_angular else {}
    if u is not None and B.n == 1:
        c, r = u.support_ball()
        if abs(c[0]) == 0:
            kw["breakpoints"] = (r,)  # radial panels end on the kink of u
    return discrete_from_scheme(B, **kw)


def _exp_sample(cfg, w, stage):
    k = cfg.k[0]
    B = stage("basis", k=k)(lambda: BergmanEvaluator.build(w, k, **cfg.quad))
    dpp = stage("sites", k=k)(lambda: _sites(cfg, B))
    idx = stage("draws", k=k, replicates=cfg.replicates)(lambda: sample_batch(dpp, cfg.seed, cfg.replicates, cfg.workers))
    cols = ["replicate", "point_index"] + [f"{p}{i}" for i in range(cfg.n) for p in ("re", "im")]
    rows = []
    for r, sel in enumerate(idx):
        for j, site in enumerate(sel):
            x = dpp.sites[site]
            rows.append([r, j] + [v for c in x for v in (c.real, c.imag)])
    counts = [len(s) for s in idx]
    return {f"sample_k{k}.csv": _csv(cols, rows)}, [
        Check("points_per_draw", B.N, f"== {B.N}", all(c == B.N for c in counts)),
        Check("raw_spectrum_defect", dpp.raw_spectrum_defect, "1e-8", dpp.raw_spectrum_defect <= 1e-8),
    ]


def _exp_variance(cfg, w, stage):
    u = cfg.perturbation()
    rows, tr = [], []
    for k in cfg.k:
        B = stage("basis", k=k)(lambda: BergmanEvaluator.build(w, k, **cfg.quad))
        v = stage("variance", k=k)(lambda: st.variance_exact(B, u, both=k <= 32))
        rows.append([k, v.trace, v.double if v.double is not None else math.nan])
        tr.append(v.trace)
    checks = [Check("variance_nonneg", min(tr), ">= 0", min(tr) >= 0)]
    if len(cfg.k) >= 3:
        cr = st.cauchy_ratios(tr)
        lim = st.richardson(cfg.k, tr)
        dir_ = st.dirichlet_integral(u)
        checks.append(Check("cauchy_ratio_min", min(cr), ">= 1.5", min(cr) >= 1.5))
        checks.append(Check("limit_over_dirichlet_times_4pi", 4 * math.pi * lim / dir_, "reported", True))
    return {"variance.csv": _csv(["k", "trace", "double"], rows)}, checks


def _mc_values(cfg, w, stage):
    u = cfg.perturbation()
    k = cfg.k[0]
    B = stage("basis", k=k)(lambda: BergmanEvaluator.build(w, k, **cfg.quad))
    dpp = stage("sites", k=k)(lambda: _sites(cfg, B, u))
    idx = stage("draws", k=k, replicates=cfg.replicates)(lambda: sample_batch(dpp, cfg.seed, cfg.replicates, cfg.workers))
    uvals = u.evaluate(dpp.sites)
    vals = st.linear_statistic(uvals[idx])
    mean = st.expectation_exact(B, u)
    var = st.variance_trace(B, u)
    return B, u, vals, mean, var


def _exp_clt(cfg, w, stage):
    B, u, vals, mean, var = _mc_values(cfg, w, stage)
    rep = stage("ks")(lambda: st.clt_empirical(vals, mean, var, min_replicates=min(1000, cfg.replicates)))
    return {f"clt_k{B.k}.csv": _csv(["replicate", "value"], enumerate(vals))}, [
        Check("ks_pvalue", rep.p_value, "> 0.01", rep.p_value > 0.01),
        Check("variance_z", rep.variance_z, "|z| <= 3", abs(rep.variance_z) <= 3),
        Check("standardized_mean", rep.mean, "<= 4/sqrt(R)", rep.mean_ok),
    ]


def _exp_lln(cfg, w, stage):
    B, u, vals, mean, var = _mc_values(cfg, w, stage)
    target = stage("equilibrium_integral")(lambda: st.equilibrium_integral(w, u))
    rep = st.lln_check(vals, target, mean, var, B.k, B.n)
    return {f"lln_k{B.k}.csv": _csv(["replicate", "value"], enumerate(vals))}, [
        Check("mean_offset_sigmas", abs(rep.empirical_mean - rep.target) / rep.mc_sigma, "<= 3", rep.mean_ok),
        Check("chebyshev_bounds", max(f - b for f, b in zip(rep.frequencies, rep.bounds)), "<= 3 sigma binomial", rep.bounds_ok),
    ]


def _exp_freenergy(cfg, w, stage):
    from .equilibrium import f_infinity

    phi0 = parse_weight(cfg.reference, cfg.n)
    lim = stage("f_infinity")(lambda: f_infinity(w, phi0))
    ser = stage("series", ks=cfg.k)(lambda: st.free_energy_series(w, phi0, cfg.k, lim))
    errs = ser.relative_errors
    checks = [
        Check("limit", lim, "reported", True),
        Check("relerr_at_largest_k", errs[-1], "<= 0.05", errs[-1] <= 0.05),
        Check("relerr_monotone", float(all(b <= a for a, b in zip(errs, errs[1:]))), "== 1", all(b <= a for a, b in zip(errs, errs[1:]))),
    ]
    u = cfg.perturbation()
    B0 = stage("basis", k=cfg.k[0])(lambda: BergmanEvaluator.build(phi0, cfg.k[0], **cfg.quad))
    worst, _ = stage("concavity")(lambda: st.concavity_check(B0, u))
    checks.append(Check("concavity_max_second_difference", worst, "<= 1e-9", worst <= 1e-9))
    rows = zip(ser.k_values, ser.values, ser.normalized)
    return {"freenergy.csv": _csv(["k", "F", "normalized"], rows)}, checks


def _exp_scan2(cfg, w, stage):
    u = cfg.perturbation()
    pred = None
    if cfg.n == 1:
        pred = -st.dirichlet_integral(u) / (4 * math.pi)
    rep = stage("scan", ks=cfg.k)(lambda: st.second_derivative_scan(WeightFamily(w, u), list(cfg.k), bulk_prediction=pred))
    rows = zip(rep.k_values, rep.values, rep.fd_values)
    checks = [Check("converging", float(rep.converging), "reported", True), Check("limit", rep.limit_estimate, "reported", True)]
    if pred is not None:
        checks.append(Check("deviation_from_bulk_prediction", rep.deviation_from_prediction, "reported", True))
    return {"scan2.csv": _csv(["k", "value", "fd_value"], rows)}, checks


def _exp_universality(cfg, w, stage):
    files, checks = {}, []
    per_center = {c: [] for c in cfg.centers}
    for k in cfg.k:
        B = stage("basis", k=k)(lambda: BergmanEvaluator.build(w, k, **cfg.quad))
        rows = []
        for c in cfg.centers:
            frame = un.ScalingFrame.create(w, c, k, cfg.box_radius)
            cmp_ = un.scaling_compare(B, frame)
            per_center[c].append((cmp_.sup_error, frame.in_bulk))
            for z, ww, model, comp, err in cmp_.rows():
                rows.append([k, c, z[0].real, z[0].imag, ww[0].real, ww[0].imag, model, comp, err])
        files[f"universality_k{k}.csv"] = _csv(["k", "center", "re_z", "im_z", "re_w", "im_w", "model", "computed", "abserr"], rows)
    for c, seq in per_center.items():
        errs = [e for e, _ in seq]
        mono = all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
        tag = _label(c)
        if seq[-1][1]:
            checks.append(Check(f"sup_error[{tag}]", errs[-1], "<= 0.02", errs[-1] <= 0.02))
            checks.append(Check(f"decreasing[{tag}]", float(mono), "== 1", mono))
        else:
            checks.append(Check(f"sup_error_outside_bulk[{tag}]", errs[-1], "reported", True))
    return files, checks


def _exp_decay(cfg, w, stage):
    files, checks, fits = {}, [], {}
    for k in cfg.k:
        B = stage("basis", k=k)(lambda: BergmanEvaluator.build(w, k, **cfg.quad))
        rows = []
        for c in cfg.centers:
            f = un.decay_fit(B, c)
            fits[(k, c)] = f
            bound = f.bound() if f.C is not None else np.full_like(f.distances, np.nan)
            rows += [[k, c, d, lv, b] for d, lv, b in zip(f.distances, f.log_values, bound)]
            C = f.C if f.C is not None else math.inf
            if un.point_in_bulk(w, c):
                checks.append(Check(f"C[k={k},{_label(c)}]", C, "<= 1e3", C <= 1e3))
            else:
                checks.append(Check(f"C_outside_bulk[k={k},{_label(c)}]", C, "reported", True))
        files[f"decay_k{k}.csv"] = _csv(["k", "center", "d", "logval", "bound"], rows)
    if len(cfg.k) >= 2:
        k0, k1 = min(cfg.k), max(cfg.k)
        expected = math.sqrt(k1 / k0)
        for c in cfg.centers:
            r = un.slope_ratio(fits[(k0, c)], fits[(k1, c)])
            if un.point_in_bulk(w, c):
                checks.append(Check(f"slope_ratio[{_label(c)}]", r, f"within 20% of {expected:g}", abs(r / expected - 1) <= 0.2))
            else:
                checks.append(Check(f"slope_ratio_outside_bulk[{_label(c)}]", r, "reported", True))
    return files, checks


EXPERIMENTS = {
    "kernel": _exp_kernel,
    "equilibrium": _exp_equilibrium,
    "sample": _exp_sample,
    "variance": _exp_variance,
    "clt": _exp_clt,
    "lln": _exp_lln,
    "freenergy": _exp_freenergy,
    "scan2": _exp_scan2,
    "universality": _exp_universality,
    "decay": _exp_decay,
}


def run(cfg: ExperimentConfig, out: str | Path | None = None) -> RunManifest:
    """Execute one experiment and write its run directory."""
    out = Path(out if out is not None else cfg.out)
    times: dict = {}

    def stage(name, **params):
        def call(fn):
            t0 = time.perf_counter()
            try:
                return fn()
            except Exception as exc:
                raise RunError(name, params, exc) from exc
            finally:
                key = name + "".join(f"[{k}={v}]" for k, v in params.items() if k == "k")
                times[key] = times.get(key, 0.0) + time.perf_counter() - t0

        return call

    errors = [d for d in validate(cfg) if d.level == "error"]
    if errors:
        raise RunError("validate", {"kind": cfg.kind}, ConfigError("; ".join(map(str, errors))))
    w = stage("weight")(cfg.weight_function)
    files, checks = EXPERIMENTS[cfg.kind](cfg, w, stage)
    out.mkdir(parents=True, exist_ok=True)
    files = {"config.txt": cfg.emit(), "summary.txt": "".join(c.line() + "\n" for c in checks), **files}
    digests = {}
    for name, body in files.items():
        data = body.encode("utf-8")
        (out / name).write_bytes(data)
        digests[name] = hashlib.sha256(data).hexdigest()
    manifest = RunManifest(cfg.digest, _version(), cfg.seed, times, checks, digests)
    (out / "manifest.txt").write_text(manifest.render(), encoding="utf-8")
    return manifest


def report(run_dir: str | Path) -> str:
    """Re-render a manifest, verifying file digests."""
    run_dir = Path(run_dir)
    text = (run_dir / "manifest.txt").read_text(encoding="utf-8")
    lines = []
    for line in text.splitlines():
        if line.startswith("file."):
            key, _, val = line.partition(" = ")
            name = key[5:]
            dig = hashlib.sha256((run_dir / name).read_bytes()).hexdigest() if (run_dir / name).exists() else None
            status = "ok" if dig and val == f"sha256:{dig}" else "MISMATCH"
            lines.append(f"{name}: {status}")
        elif line.startswith("check."):
            lines.append(line[6:])
        else:
            lines.append(line)
    return "\n".join(lines) + "\n"


# --- command line --------------------------------------------------------------------------


def _overrides(extra) -> dict:
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"missing value for {tok}")
            val = extra[i + 1]
            i += 1
        out[key] = val
        i += 1
    return out


def _load(args, extra) -> ExperimentConfig:
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    ov = _overrides(extra)
    if args.seed is not None:
        ov["run.seed"] = str(args.seed)
    if getattr(args, "out", None):
        ov["run.out"] = args.out
    if args.workers is not None:
        ov["run.workers"] = str(args.workers)
    return ExperimentConfig.parse(text, ov)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bergman_dpp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--workers", type=int)
    p = sub.add_parser("report")
    p.add_argument("run_dir")
    args, extra = parser.parse_known_args(argv)
    try:
        if args.command == "report":
            if extra:
                parser.error(f"unrecognized arguments: {' '.join(extra)}")
            sys.stdout.write(report(args.run_dir))
            return 0
        cfg = _load(args, extra)
        if args.command == "validate":
            diags = validate(cfg)
            for d in diags:
                print(d)
            if not diags:
                print("ok")
            return 1 if any(d.level == "error" for d in diags) else 0
        manifest = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RunError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3
    sys.stdout.write(manifest.render())
    return 0 if manifest.all_passed else 1
