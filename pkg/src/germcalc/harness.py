"""Ensemble experiments: manufactured germs and two-sided norm ratios.

Runs seed-deterministic ensembles that manufacture germs from solutions of
lattice Poisson problems with random compactly supported sources, evaluate
both sides of the germ norm inequalities on the window, and report the
LHS/RHS ratios across grid-scale sweeps.  All norms are window-restricted;
the reports are surrogates that track ratio stability, not claims about the
inequalities' universal constants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .discrete_ops import (DiffOperator, apply_to_germ, fft_symbol_grid,
                           apply_to_field, load_operator, preset_operator)
from .errors import IllPosedSourceError, ValidationError
from .geometry import ScaleMap, Scaling
from .germs import Germ, Window, frozen_coefficient_germ, jet_germ, load_germ, restrict_initial, scale_germ
from .norms import (build_default_family, norm_G_eta, seminorm_G_eta_alpha,
                    seminorm_G_gamma, sup_below)

_FMT = "%.17g"


@dataclass(frozen=True)
class ExperimentConfig:
    """Probe configuration; radii and extents are in lattice index units."""

    scaling: Scaling
    operator: str = "laplacian"
    operator_file: str | None = None
    eta: float = 1.5
    alpha: float = 0.5
    radius: int = 8
    eps_list: tuple[float, ...] = (1.0,)
    ensemble: int = 1
    seed: int = 0
    germ: str = "jet"              # jet | frozen | file
    germ_file: str | None = None
    source_scale: float = 1.0
    time_extent: int | None = None
    allow_integer_orders: bool = False
    threads: int = 1

    def load_operator(self) -> DiffOperator:
        if self.operator_file:
            return load_operator(self.operator_file)
        return preset_operator(self.operator, d=self.scaling.d)

    def validate(self) -> DiffOperator:
        L = self.load_operator()
        if L.scaling != self.scaling:
            raise ValidationError(
                f"operator scaling {L.scaling.s} does not match config scaling {self.scaling.s}")
        if not (0 < self.alpha < self.eta < L.order):
            raise ValidationError(
                f"need 0 < alpha < eta < m, got alpha={self.alpha} eta={self.eta} m={L.order}")
        if not self.allow_integer_orders:
            for name, v in (("alpha", self.alpha), ("eta", self.eta)):
                if float(v).is_integer():
                    raise ValidationError(
                        f"{name}={v} is an integer order; pass allow_integer_orders to override")
        if self.ensemble < 1:
            raise ValidationError("ensemble size must be >= 1")
        if self.radius < 1:
            raise ValidationError("window radius must be >= 1")
        if any(e <= 0 for e in self.eps_list):
            raise ValidationError("grid scales must be positive")
        if self.germ not in ("jet", "frozen", "file"):
            raise ValidationError(f"unknown germ constructor {self.germ!r}")
        if self.germ == "file" and not self.germ_file:
            raise ValidationError("germ=file requires germ_file")
        return L


@dataclass(frozen=True)
class RatioReport:
    member: int
    eps: float
    lhs: float
    rhs_operator: float
    rhs_eta_alpha: float
    rhs_initial: float
    rhs_local_sup: float
    ratio: float
    window: dict
    flags: str = ""

    @property
    def rhs(self) -> float:
        return self.rhs_operator + self.rhs_eta_alpha + self.rhs_initial + self.rhs_local_sup


CSV_COLUMNS = ("member", "eps", "lhs", "rhs_operator", "rhs_eta_alpha",
               "rhs_initial", "rhs_local_sup", "rhs", "ratio", "flags")


def member_rng(seed: int, member: int) -> np.random.Generator:
    """Counter-based stream: one Philox key per (seed, member)."""
    return np.random.Generator(np.random.Philox(key=np.array(
        [seed % 2 ** 64, member % 2 ** 64], dtype=np.uint64)))


@dataclass(frozen=True)
class PoissonResult:
    u: np.ndarray
    window: Window
    residual_inf: float
    zero_mode: float


def solve_poisson(L: DiffOperator, f: np.ndarray, window: Window) -> PoissonResult:
    """Solve ``L u = f`` on the periodized window by dual division.

    The zero mode is dropped, so the solve is exact for sources summing to
    zero; the reported residual is the interior sup of ``L u - f``.
    """
    f = np.asarray(f)
    if f.shape != window.shape:
        raise ValidationError("source shape does not match window")
    sym = fft_symbol_grid(L, window.eps, window.shape)
    scale = L.coeff_scale() * window.eps ** (-L.order)
    flat = np.abs(sym).ravel()
    if np.any(flat[1:] <= 1e-12 * max(scale, 1e-300)):
        raise IllPosedSourceError(
            "operator symbol (near-)vanishes on the discrete frequency grid")
    fhat = np.fft.fftn(f)
    zero_mode = abs(complex(fhat.ravel()[0])) / f.size
    with np.errstate(divide="ignore", invalid="ignore"):
        uhat = fhat / sym
    uhat.ravel()[0] = 0.0
    u = np.fft.ifftn(uhat)
    if np.all(np.abs(u.imag) <= 1e-12 * np.max(np.abs(u.real), initial=1e-300)):
        u = u.real.copy()
    applied, inner = apply_to_field(L, u, window)
    sel = tuple(slice(inner.lo[j] - window.lo[j], inner.hi[j] - window.lo[j] + 1)
                for j in range(window.d))
    residual = float(np.max(np.abs(applied - f[sel])))
    return PoissonResult(u, window, residual, zero_mode)


def draw_source(rng: np.random.Generator, window: Window, scale: float = 1.0) -> np.ndarray:
    """Gaussian source on the inner half of the window, mean-zero over its
    support (the outer margin suppresses periodization artifacts)."""
    margins = tuple(max(1, (h - l) // 4) for l, h in zip(window.lo, window.hi))
    support = window.shrink(lo_margin=margins, hi_margin=margins)
    f = np.zeros(window.shape)
    block = rng.standard_normal(support.shape) * scale
    block -= block.mean()
    sel = tuple(slice(support.lo[j] - window.lo[j], support.hi[j] - window.lo[j] + 1)
                for j in range(window.d))
    f[sel] = block
    return f


def _build_germ(cfg: ExperimentConfig, L: DiffOperator, window: Window,
                rng: np.random.Generator) -> Germ:
    order = math.floor(cfg.eta)
    if cfg.germ == "file":
        return load_germ(cfg.germ_file)
    u = solve_poisson(L, draw_source(rng, window, cfg.source_scale), window).u
    if cfg.germ == "jet":
        return jet_germ(u, window, order)
    v = solve_poisson(L, draw_source(rng, window, cfg.source_scale), window).u
    a = solve_poisson(L, draw_source(rng, window, cfg.source_scale), window).u
    a = a / max(1.0, float(np.max(np.abs(a))))
    return frozen_coefficient_germ(u, v, a, window, order)


def _probe_window(cfg: ExperimentConfig, eps: float) -> Window:
    if cfg.time_extent is not None:
        lo = (0,) + (-cfg.radius,) * (cfg.scaling.d - 1)
        hi = (cfg.time_extent,) + (cfg.radius,) * (cfg.scaling.d - 1)
        return Window(cfg.scaling, eps, lo, hi)
    return Window(cfg.scaling, eps, (-cfg.radius,) * cfg.scaling.d,
                  (cfg.radius,) * cfg.scaling.d)


def schauder_sides(U: Germ, L: DiffOperator, eta: float, alpha: float,
                   family=None) -> dict:
    """Both sides of the whole-window inequality for one germ."""
    if family is None:
        family = build_default_family(U.scaling, int(math.ceil(L.order - eta)))
    LU = apply_to_germ(L, U)
    lhs = norm_G_eta(U, eta).value
    rhs_op = seminorm_G_gamma(LU, eta - L.order, family=family).value
    rhs_ea = seminorm_G_eta_alpha(U, eta, alpha).value
    return {"lhs": lhs, "rhs_operator": rhs_op, "rhs_eta_alpha": rhs_ea}


def _ratio(lhs: float, rhs: float) -> tuple[float, str]:
    if rhs > 0:
        return lhs / rhs, ""
    return (0.0, "") if lhs == 0 else (math.inf, "rhs-zero")


def _run_members(cfg: ExperimentConfig, worker) -> list:
    """Evaluate one worker per (grid scale, member); members are independent
    and may run in a thread pool, but results merge in member order."""
    jobs = [(eps, member) for eps in cfg.eps_list for member in range(cfg.ensemble)]
    if cfg.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(lambda j: worker(*j), jobs))
    return [worker(*j) for j in jobs]


def run_schauder_probe(cfg: ExperimentConfig) -> list[RatioReport]:
    """Ensemble of manufactured germs; one report per (member, grid scale)."""
    L = cfg.validate()
    family = build_default_family(cfg.scaling, int(math.ceil(L.order - cfg.eta)))

    def worker(eps, member):
        window = _probe_window(cfg, eps)
        rng = member_rng(cfg.seed, member)
        U = _build_germ(cfg, L, window, rng)
        sides = schauder_sides(U, L, cfg.eta, cfg.alpha, family)
        rhs = sides["rhs_operator"] + sides["rhs_eta_alpha"]
        ratio, flags = _ratio(sides["lhs"], rhs)
        return RatioReport(member, eps, sides["lhs"], sides["rhs_operator"],
                           sides["rhs_eta_alpha"], 0.0, 0.0, ratio,
                           _window_dict(window), flags)

    return _run_members(cfg, worker)


def run_ivp_probe(cfg: ExperimentConfig, zero_initial: bool = False) -> list[RatioReport]:
    """Initial-value variant: parabolic scaling, time slab window, and an
    extra initial-slice norm on the right-hand side."""
    if cfg.time_extent is None:
        cfg = replace(cfg, time_extent=2 * cfg.radius)
    if cfg.scaling.s[0] != 2 or any(s != 1 for s in cfg.scaling.s[1:]):
        raise ValidationError("initial-value probe expects scaling (2, 1, ..., 1)")
    L = cfg.validate()
    family = build_default_family(cfg.scaling, int(math.ceil(L.order - cfg.eta)))
    order = math.floor(cfg.eta)

    def worker(eps, member):
        window = _probe_window(cfg, eps)
        rng = member_rng(cfg.seed, member)
        u = solve_poisson(L, draw_source(rng, window, cfg.source_scale), window).u
        if zero_initial:
            u = u - u[0][None, ...]
        U = jet_germ(u, window, order)
        sides = schauder_sides(U, L, cfg.eta, cfg.alpha, family)
        rhs_init = norm_G_eta(restrict_initial(U), cfg.eta).value
        rhs = sides["rhs_operator"] + sides["rhs_eta_alpha"] + rhs_init
        ratio, flags = _ratio(sides["lhs"], rhs)
        return RatioReport(member, eps, sides["lhs"], sides["rhs_operator"],
                           sides["rhs_eta_alpha"], rhs_init, 0.0, ratio,
                           _window_dict(window), flags)

    return _run_members(cfg, worker)


def run_local_probe(cfg: ExperimentConfig, rho: float) -> list[RatioReport]:
    """Locally uniform variant: every norm restricted below rho, plus the
    rho**(-eta)-weighted sup term on the right-hand side."""
    if not rho > 0:
        raise ValidationError("rho must be positive")
    L = cfg.validate()
    family = build_default_family(cfg.scaling, int(math.ceil(L.order - cfg.eta)))

    def worker(eps, member):
        window = _probe_window(cfg, eps)
        rng = member_rng(cfg.seed, member)
        U = _build_germ(cfg, L, window, rng)
        LU = apply_to_germ(L, U)
        lhs = norm_G_eta(U, cfg.eta, R=rho).value
        rhs_op = seminorm_G_gamma(LU, cfg.eta - L.order, family=family, R=rho).value
        rhs_ea = seminorm_G_eta_alpha(U, cfg.eta, cfg.alpha, R=rho).value
        rhs_sup = rho ** (-cfg.eta) * sup_below(U, rho).value
        rhs = rhs_op + rhs_ea + rhs_sup
        ratio, flags = _ratio(lhs, rhs)
        return RatioReport(member, eps, lhs, rhs_op, rhs_ea, 0.0,
                           rhs_sup, ratio, _window_dict(window), flags)

    return _run_members(cfg, worker)


def rescaled_sides(U: Germ, L: DiffOperator, eta: float, alpha: float, R: float,
                   family=None) -> dict:
    """Both sides recomputed after jointly rescaling germ, window and grid.

    Under the joint rescale every component scales by ``R**eta``, so the
    ratio must be invariant; this is the computational core of the reduction
    to unit grid scale."""
    Us = scale_germ(U, ScaleMap(U.scaling, (0.0,) * U.scaling.d, R))
    return schauder_sides(Us, L, eta, alpha, family)


def _window_dict(window: Window) -> dict:
    return {"s": list(window.scaling.s), "eps": window.eps,
            "lo": list(window.lo), "hi": list(window.hi)}


# ---------------------------------------------------------------------------
# report serialization


def reports_to_csv(reports: list[RatioReport]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        row = [str(r.member), _FMT % r.eps, _FMT % r.lhs, _FMT % r.rhs_operator,
               _FMT % r.rhs_eta_alpha, _FMT % r.rhs_initial, _FMT % r.rhs_local_sup,
               _FMT % r.rhs, _FMT % r.ratio, r.flags]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def summarize(reports: list[RatioReport]) -> dict:
    """Per grid-scale max/median/percentile ratio summary."""
    out: dict = {"eps": {}}
    for eps in sorted({r.eps for r in reports}):
        ratios = np.array([r.ratio for r in reports if r.eps == eps])
        finite = ratios[np.isfinite(ratios)]
        entry = {
            "count": int(ratios.size),
            "infinite": int(np.sum(~np.isfinite(ratios))),
            "max": float(np.max(finite)) if finite.size else 0.0,
            "median": float(np.median(finite)) if finite.size else 0.0,
            "p90": float(np.percentile(finite, 90)) if finite.size else 0.0,
        }
        out["eps"][_FMT % eps] = entry
    return out


def summary_to_json(reports: list[RatioReport], cfg: ExperimentConfig | None = None) -> str:
    payload = summarize(reports)
    if cfg is not None:
        payload["config"] = config_to_dict(cfg)
    return json.dumps(payload, sort_keys=True)


# ---------------------------------------------------------------------------
# flat key=value config files


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "scaling": ",".join(str(x) for x in cfg.scaling.s),
        "operator": cfg.operator,
        "operator_file": cfg.operator_file or "",
        "eta": cfg.eta, "alpha": cfg.alpha, "radius": cfg.radius,
        "eps": ",".join(_FMT % e for e in cfg.eps_list),
        "ensemble": cfg.ensemble, "seed": cfg.seed,
        "germ": cfg.germ, "germ_file": cfg.germ_file or "",
        "source_scale": cfg.source_scale,
        "time_extent": "" if cfg.time_extent is None else cfg.time_extent,
        "threads": cfg.threads,
    }


def parse_config_text(text: str) -> dict:
    out = {}
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if "=" not in ln:
            raise ValidationError(f"config line is not key=value: {ln!r}")
        k, v = ln.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def config_from_mapping(kv: dict) -> ExperimentConfig:
    def get(key, default=None):
        v = kv.get(key, default)
        return default if v in ("", None) else v

    scaling = Scaling(tuple(int(x) for x in str(get("scaling", "1,1")).split(",")))
    eps_raw = str(get("eps", "1"))
    te = get("time_extent")
    return ExperimentConfig(
        scaling=scaling,
        operator=str(get("operator", "laplacian")),
        operator_file=get("operator_file"),
        eta=float(get("eta", 1.5)),
        alpha=float(get("alpha", 0.5)),
        radius=int(get("radius", 8)),
        eps_list=tuple(float(x) for x in eps_raw.split(",")),
        ensemble=int(get("ensemble", 1)),
        seed=int(get("seed", 0)),
        germ=str(get("germ", "jet")),
        germ_file=get("germ_file"),
        source_scale=float(get("source_scale", 1.0)),
        time_extent=None if te is None else int(te),
        allow_integer_orders=str(get("allow_integer_orders", "0")) in ("1", "true", "yes"),
        threads=int(get("threads", 1)),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_mapping(parse_config_text(fh.read()))
