"""Germ semi-norms on lattice windows.

Implements the positive-order germ norm (best vanishing constant at the base
point), the three-point semi-norm with polynomial recentering (a weighted
minimax fit per base pair), negative-order semi-norms against a fixed family
of rescaled bump functions, locally uniform variants, local Holder norms,
ratio diagnostics, and the inf-convolution (McShane) extension.

All values computed here are window-restricted: the suprema run over the
finite window only, and every report carries its window so comparisons
across windows stay explicit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._minimax import solve_minimax, weighted_lstsq
from .errors import DimensionError, DomainTooSmallError, UnderdeterminedFitError, InputNotHolderError
from .geometry import MultiIndex, Scaling, multi_indices
from .germs import Germ, Window

_JSON_SEP = (",", ":")


@dataclass(frozen=True)
class NormReport:
    """Value of a window-restricted norm plus the witness realizing it."""

    name: str
    value: float
    params: dict
    witness: dict
    window: dict

    def to_json(self) -> str:
        payload = {"name": self.name, "value": self.value, "params": self.params,
                   "witness": self.witness, "window": self.window}
        return json.dumps(payload, sort_keys=True, separators=_JSON_SEP, default=_coerce)


def _coerce(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj)}")


def window_descriptor(U: Germ) -> dict:
    return {
        "s": list(U.scaling.s), "eps": U.eps,
        "base_lo": list(U.base.lo), "base_hi": list(U.base.hi),
        "act_lo": list(U.active.lo), "act_hi": list(U.active.hi),
    }


def norm_reports_to_csv(reports) -> str:
    """Batch mode: one row per report (name, value, params, witness, window)."""
    lines = ["name,value,params,witness,window"]
    for rep in reports:
        fields = [rep.name, "%.17g" % rep.value]
        for part in (rep.params, rep.witness, rep.window):
            fields.append(json.dumps(part, sort_keys=True, separators=_JSON_SEP,
                                     default=_coerce).replace(",", ";"))
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# test-function family for negative-order norms


def _bump(t: np.ndarray) -> np.ndarray:
    u = 1.0 - t * t
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
    return out


@dataclass(frozen=True)
class BumpMember:
    """Tensor bump (optionally odd-modulated along one axis).

    Supported in the box with half-width ``d**(-s_j)`` per axis, which sits
    inside the closed unit anisotropic ball.
    """

    scaling: Scaling
    axis: int | None
    norm_const: float = 1.0

    def raw(self, Y: np.ndarray) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        d = self.scaling.d
        out = np.ones(Y.shape[0])
        for j, s in enumerate(self.scaling.s):
            t = Y[:, j] * float(d ** s)
            out = out * _bump(t)
            if self.axis == j:
                out = out * t
        return out

    def __call__(self, Y: np.ndarray) -> np.ndarray:
        return self.raw(Y) * self.norm_const


@dataclass(frozen=True)
class TestFunctionFamily:
    """Finite family of smooth bumps with unit-ball support and C^k norm <= 1."""

    scaling: Scaling
    k: int
    members: tuple[BumpMember, ...]

    @property
    def size(self) -> int:
        return len(self.members)


def _derivative_sup_estimate(member: BumpMember, k: int) -> float:
    """Largest sup of any derivative with weighted order <= k (grid estimate)."""
    scaling = member.scaling
    d = scaling.d
    n = {1: 801, 2: 161, 3: 61}.get(d, 41)
    axes = []
    spacings = []
    for s in scaling.s:
        b = float(d ** (-s))
        axes.append(np.linspace(-b, b, n))
        spacings.append(axes[-1][1] - axes[-1][0])
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    base_vals = member.raw(pts).reshape([n] * d)
    worst = 0.0
    for gamma in multi_indices(scaling, k):
        arr = base_vals
        for j, g in enumerate(gamma):
            for _ in range(g):
                arr = np.gradient(arr, spacings[j], axis=j)
        worst = max(worst, float(np.max(np.abs(arr))))
    return worst


_FAMILY_CACHE: dict[tuple, TestFunctionFamily] = {}


def build_default_family(scaling: Scaling, k: int) -> TestFunctionFamily:
    """Canonical bump plus one odd modulation per axis, C^k-normalized.

    This fixed family yields a reproducible lower bound of the supremum over
    the full unit C^k ball; enlarging the family can only increase the
    reported negative-order norms.
    """
    key = (scaling.s, int(k))
    if key not in _FAMILY_CACHE:
        members = []
        for axis in [None] + list(range(scaling.d)):
            raw = BumpMember(scaling, axis)
            cap = _derivative_sup_estimate(raw, k)
            members.append(BumpMember(scaling, axis, 1.0 / (cap * 1.02)))
        _FAMILY_CACHE[key] = TestFunctionFamily(scaling, int(k), tuple(members))
    return _FAMILY_CACHE[key]


def verify_family(family: TestFunctionFamily, slack: float = 1e-4) -> bool:
    """Re-estimate every member's C^k norm; true when all are <= 1 + slack."""
    return all(_derivative_sup_estimate(m, family.k) * abs(m.norm_const) <= 1 + slack
               for m in family.members)


def lambda_grid(eps: float, lam_max: float, ratio: float = math.sqrt(2.0)) -> np.ndarray:
    """Geometric grid of convolution scales from eps up to lam_max."""
    if lam_max < eps * (1 - 1e-12):
        return np.zeros(0)
    n = int(math.floor(math.log(lam_max / eps) / math.log(ratio) + 1e-9)) + 1
    return eps * ratio ** np.arange(max(n, 1))


def scaled_test_values(member: BumpMember, lam: float, xcoord: np.ndarray,
                       pts: np.ndarray) -> np.ndarray:
    """Values of the recentered, rescaled member at the given points."""
    scaling = member.scaling
    T = (pts - xcoord[None, :]) / np.array([lam ** s for s in scaling.s])[None, :]
    return member(T) * lam ** (-scaling.homogeneity)


def pairing(f: np.ndarray, g: np.ndarray, eps: float, scaling: Scaling) -> complex:
    """Discrete pairing: eps**(sum s) times the plain sum of products."""
    return (eps ** scaling.homogeneity) * complex(np.sum(np.asarray(f) * np.asarray(g)))


# ---------------------------------------------------------------------------
# positive-order norms


def _pow_dist(D: np.ndarray, expo: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.power(D, expo)


def norm_G_eta(U: Germ, eta: float, R: float | None = None) -> NormReport:
    """Best constant M with ``|U_x(y)| <= M d(x, y)**eta`` over the window."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    D = U.scaling.pairwise_distance(U.base.coords(), U.active.coords())
    mask = D > 0
    if R is not None:
        mask &= D < R
    name = "G_eta" if R is None else "G_eta_local"
    params = {"eta": eta} | ({} if R is None else {"R": R})
    if not mask.any():
        return NormReport(name, 0.0, params, {}, window_descriptor(U))
    ratios = np.zeros_like(D)
    ratios[mask] = np.abs(U.values[mask]) / _pow_dist(D[mask], eta)
    b, a = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
    wit = {"base": tuple(U.base.indices()[b]), "active": tuple(U.active.indices()[a])}
    return NormReport(name, float(ratios[b, a]), params, wit, window_descriptor(U))


def sup_below(U: Germ, R: float) -> NormReport:
    """Plain sup of |U_x(y)| over pairs with d(x, y) < R."""
    D = U.scaling.pairwise_distance(U.base.coords(), U.active.coords())
    mask = D < R
    if not mask.any():
        return NormReport("sup_below", 0.0, {"R": R}, {}, window_descriptor(U))
    vals = np.where(mask, np.abs(U.values), -np.inf)
    b, a = np.unravel_index(int(np.argmax(vals)), vals.shape)
    wit = {"base": tuple(U.base.indices()[b]), "active": tuple(U.active.indices()[a])}
    return NormReport("sup_below", float(vals[b, a]), {"R": R}, wit, window_descriptor(U))


# ---------------------------------------------------------------------------
# three-point semi-norm (weighted minimax fit per base pair)


def _poly_columns(Z: np.ndarray, gammas: list[MultiIndex]) -> np.ndarray:
    """Ordinary centered monomial columns ``prod_j Z_j**g_j``."""
    cols = np.ones((Z.shape[0], len(gammas)))
    for i, g in enumerate(gammas):
        for j, e in enumerate(g):
            if e:
                cols[:, i] *= Z[:, j] ** e
    return cols


def _require_base_in_active(U: Germ) -> None:
    for j in range(U.scaling.d):
        if U.base.lo[j] < U.active.lo[j] or U.base.hi[j] > U.active.hi[j]:
            raise DimensionError("base window must sit inside the active window")


def _pair_problem(U: Germ, xf: int, yf: int, eta: float, alpha: float,
                  R: float | None):
    """Assemble (Phi, r, w) for one base pair; constant term pinned at z = y."""
    act = U.active
    ycoord = U.base.coords()[yf]
    dyz = U.scaling.pairwise_distance(ycoord[None, :], act.coords())[0]
    dxy = float(U.scaling.pairwise_distance(
        U.base.coords()[xf][None, :], ycoord[None, :])[0, 0])
    zmask = dyz > 0
    if R is not None:
        zmask &= dyz < R
    a_y = act.flat(U.base.indices()[yf])
    r_full = U.values[xf] - U.values[yf]
    r = r_full[zmask] - r_full[a_y]
    gammas = [g for g in multi_indices(U.scaling, math.floor(eta)) if any(g)]
    Z = act.coords()[zmask] - ycoord[None, :]
    Phi = _poly_columns(Z, gammas) if gammas else np.zeros((Z.shape[0], 0))
    w = _pow_dist(dyz[zmask], alpha) * _pow_dist(dxy + dyz[zmask], eta - alpha)
    return Phi, r, w, gammas


def pair_minimax(U: Germ, xf: int, yf: int, eta: float, alpha: float,
                 R: float | None = None, method: str = "exchange"):
    """Weighted minimax value for one base pair (x, y).

    Pairs whose least-squares bound already sits below the germ's numerical
    noise level (1e-12 times the germ sup, divided by the smallest weight in
    play) keep that bound: at that scale the increments are rounding noise
    and the exact solve would only reshuffle it.  All other pairs are solved
    exactly.
    """
    Phi, r, w, gammas = _pair_problem(U, xf, yf, eta, alpha, R)
    if r.size:
        c_ls = weighted_lstsq(Phi, np.ascontiguousarray(r.real), w)
        if np.iscomplexobj(r) and np.any(r.imag):
            c_ls = c_ls + 1j * weighted_lstsq(Phi, np.ascontiguousarray(r.imag), w)
        res = r - Phi @ c_ls if Phi.shape[1] else r
        ub = float(np.max(np.abs(res) / w))
        noise = 1e-12 * float(np.max(np.abs(U.values)))
        if ub * float(np.min(w)) <= noise:
            return ub, c_ls, gammas
    val, coeffs = solve_minimax(Phi, r, w, method=method)
    return val, coeffs, gammas


def seminorm_G_eta_alpha(U: Germ, eta: float, alpha: float, R: float | None = None,
                         method: str = "exchange") -> NormReport:
    """Three-point semi-norm: per base pair (x, y), the minimax over
    polynomials of weighted degree <= floor(eta) of the recentered increment,
    weighted by ``d(y,z)**alpha (d(x,y) + d(y,z))**(eta-alpha)``; the value is
    the max over pairs.

    The weight vanishes at z = y, so the fit interpolates there exactly and
    z = y is excluded from the max.  A cheap least-squares upper bound per
    pair orders the exact solves; pairs that provably cannot beat the current
    max are skipped, so the reported value is exact up to a 1e-12 relative
    slack.
    """
    if not (0 < alpha < eta):
        raise ValueError("need 0 < alpha < eta")
    _require_base_in_active(U)
    scaling = U.scaling
    act = U.active
    base = U.base
    gammas = [g for g in multi_indices(scaling, math.floor(eta)) if any(g)]
    p = len(gammas)
    if act.npoints - 1 < p:
        raise UnderdeterminedFitError(
            f"{act.npoints - 1} sample points cannot determine {p + 1} coefficients")
    name = "G_eta_alpha" if R is None else "G_eta_alpha_local"
    params = {"eta": eta, "alpha": alpha} | ({} if R is None else {"R": R})

    B = base.coords()
    A = act.coords()
    Dxy = scaling.pairwise_distance(B, B)
    base_idx = base.indices()
    a_pos = np.array([act.flat(base_idx[i]) for i in range(base.npoints)])

    cand_ub, cand_lb, cand_wmin, cand_x, cand_y = [], [], [], [], []
    for yf in range(base.npoints):
        dyz = scaling.pairwise_distance(B[yf][None, :], A)[0]
        zmask = dyz > 0
        xs = np.nonzero(Dxy[:, yf] > 0)[0]
        if R is not None:
            zmask &= dyz < R
            xs = xs[Dxy[xs, yf] < R]
        if xs.size == 0 or not zmask.any():
            continue
        r_full = U.values[xs] - U.values[yf][None, :]
        r = r_full[:, zmask] - r_full[:, a_pos[yf]][:, None]
        W = (_pow_dist(dyz[zmask], alpha)[None, :] *
             _pow_dist(Dxy[xs, yf][:, None] + dyz[zmask][None, :], eta - alpha))
        if p == 0:
            ub = np.max(np.abs(r) / W, axis=1)
            lb = ub  # no free coefficients: the bound is the exact value
        else:
            Phi = _poly_columns(A[zmask] - B[yf][None, :], gammas)
            Winv2 = 1.0 / (W * W)
            Amat = np.einsum("xz,zp,zq->xpq", Winv2, Phi, Phi)
            ridge = 1e-13 * np.maximum(np.trace(Amat, axis1=1, axis2=2), 1e-300)
            Amat += ridge[:, None, None] * np.eye(p)[None, :, :]
            if np.iscomplexobj(r):
                bvec = np.einsum("xz,zp->xp", r.real * Winv2, Phi) + \
                    1j * np.einsum("xz,zp->xp", r.imag * Winv2, Phi)
            else:
                bvec = np.einsum("xz,zp->xp", r * Winv2, Phi)
            C = np.linalg.solve(Amat, bvec[..., None])[..., 0]
            res = r - np.einsum("zp,xp->xz", Phi, C)
            ub = np.max(np.abs(res) / W, axis=1)
            lb = _dual_lower_bound(Phi, r, W, dyz[zmask], p)
        cand_ub.append(ub)
        cand_lb.append(lb)
        cand_wmin.append(np.min(W, axis=1))
        cand_x.append(xs)
        cand_y.append(np.full(xs.size, yf))
    if not cand_ub:
        return NormReport(name, 0.0, params, {}, window_descriptor(U))
    ub = np.concatenate(cand_ub)
    lb = np.concatenate(cand_lb)
    wmin = np.concatenate(cand_wmin)
    xs = np.concatenate(cand_x)
    ys = np.concatenate(cand_y)
    # pairs at the germ's numerical noise level are screened in bulk; the
    # exact solves run only where the fit bound carries signal
    noise = 1e-12 * float(np.max(np.abs(U.values)))
    quiet = ub * wmin <= noise
    # pairs whose upper bound cannot reach the best certified lower bound
    # cannot realize the max and are never solved exactly
    floor = float(np.max(lb)) * (1 - 1e-12)
    keep = np.nonzero(~quiet & (ub >= floor))[0]
    order = keep[np.lexsort((ys[keep], xs[keep], -ub[keep]))]

    best = -1.0
    bw: dict = {}
    for i in order:
        if best >= 0 and ub[i] <= best * (1 + 1e-12) + 1e-300:
            break
        val, coeffs, _ = pair_minimax(U, int(xs[i]), int(ys[i]), eta, alpha, R, method)
        if val > best:
            best = val
            bw = {"base_x": tuple(base_idx[xs[i]]), "base_y": tuple(base_idx[ys[i]]),
                  "coeffs": np.asarray(coeffs)}
    if quiet.any():
        top = np.nonzero(quiet)[0][int(np.argmax(ub[quiet]))]
        if best < float(ub[top]):
            val, coeffs, _ = pair_minimax(U, int(xs[top]), int(ys[top]), eta, alpha,
                                          R, method)
            if val > best:
                best = val
                bw = {"base_x": tuple(base_idx[xs[top]]),
                      "base_y": tuple(base_idx[ys[top]]),
                      "coeffs": np.asarray(coeffs)}
    return NormReport(name, max(best, 0.0), params, bw, window_descriptor(U))


def _dual_lower_bound(Phi: np.ndarray, r: np.ndarray, W: np.ndarray,
                      dyz: np.ndarray, p: int) -> np.ndarray:
    """Certified per-pair lower bounds from one shared reference subset.

    Any p+1 points with a null vector of the design columns give, by weak
    duality, ``|y . r| / sum(|y| w) <= minimax``.  The subset nearest the
    pinned point (smallest weights) is shared across all x for this y, so
    the bound vectorizes over pairs.
    """
    n = Phi.shape[0]
    if n < p + 1:
        return np.zeros(r.shape[0])
    S = np.argsort(dyz, kind="stable")[:p + 1]
    _, sv, Vh = np.linalg.svd(Phi[S].T, full_matrices=True)
    if sv.size < p or sv[-1] <= 1e-13 * max(sv[0], 1e-300):
        return np.zeros(r.shape[0])
    y = Vh[-1]
    den = W[:, S] @ np.abs(y)
    num = np.abs(r[:, S] @ y)
    return np.where(den > 0, num / np.maximum(den, 1e-300), 0.0)


# ---------------------------------------------------------------------------
# negative-order semi-norm against the test family


def seminorm_G_gamma(V: Germ, gamma: float, family: TestFunctionFamily | None = None,
                     R: float | None = None) -> NormReport:
    """Sup over family members, base points and admissible scales of
    ``lam**(-gamma) |<V_x, phi_x^lam>_eps|``.

    Scales run over a geometric grid from eps up to the window radius (or R
    when given); placements whose closed ball exits the active window are
    skipped.
    """
    if not gamma < 0:
        raise ValueError("gamma must be negative")
    scaling = V.scaling
    if family is None:
        family = build_default_family(scaling, int(math.ceil(-gamma)))
    act = V.active
    lam_cap = act.diameter() / 2
    strict = False
    if R is not None:
        lam_cap = min(lam_cap, R)
        strict = True
    lams = lambda_grid(V.eps, lam_cap)
    if strict:
        lams = lams[lams < R]
    name = "G_gamma" if R is None else "G_gamma_local"
    params = {"gamma": gamma, "k": family.k} | ({} if R is None else {"R": R})
    base_idx = V.base.indices()
    B = V.base.coords()
    A = act.coords()
    best = -1.0
    bw: dict = {}
    admissible = False
    for xf in range(V.base.npoints):
        for lam in lams:
            if not act.ball_fits(base_idx[xf], lam):
                continue
            admissible = True
            pos = act.ball(base_idx[xf], lam)
            pts = A[pos]
            vx = V.values[xf][pos]
            for mi, member in enumerate(family.members):
                phi = scaled_test_values(member, float(lam), B[xf], pts)
                val = abs(pairing(vx, phi, V.eps, scaling)) * lam ** (-gamma)
                if val > best:
                    best = float(val)
                    bw = {"base": tuple(base_idx[xf]), "lam": float(lam), "member": mi}
    if not admissible:
        raise DomainTooSmallError("no test-function placement fits the window")
    return NormReport(name, max(best, 0.0), params, bw, window_descriptor(V))


def local_norms(U: Germ, R: float, eta: float | None = None,
                gamma: float | None = None,
                family: TestFunctionFamily | None = None) -> NormReport:
    """Locally uniform variants: distance-restricted positive norm, scale-
    restricted negative norm, or the plain sup below R."""
    if eta is not None:
        return norm_G_eta(U, eta, R=R)
    if gamma is not None:
        return seminorm_G_gamma(U, gamma, family=family, R=R)
    return sup_below(U, R)


# ---------------------------------------------------------------------------
# local Holder semi-norms and the two-sided ratio diagnostics


def holder_local(f: np.ndarray, window: Window, alpha: float, center_idx,
                 R: float, method: str = "exchange") -> float:
    """Recentered local Holder semi-norm of a field on a ball.

    For each y in the ball, fit a polynomial of weighted degree <= floor(alpha)
    minimizing ``max_z |f(z) - P(z)| / d(z, y)**alpha``, interpolating at y;
    return the max over y.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    scaling = window.scaling
    f = np.asarray(f).reshape(-1)
    pos = window.ball(center_idx, R)
    if pos.size == 0:
        return 0.0
    pts = window.coords()[pos]
    vals = f[pos]
    gammas = [g for g in multi_indices(scaling, math.floor(alpha)) if any(g)]
    worst = 0.0
    for i in range(pos.size):
        dzy = scaling.pairwise_distance(pts, pts[i][None, :])[:, 0]
        zmask = dzy > 0
        if not zmask.any():
            continue
        r = vals[zmask] - vals[i]
        w = _pow_dist(dzy[zmask], alpha)
        Phi = (_poly_columns(pts[zmask] - pts[i][None, :], gammas)
               if gammas else np.zeros((int(zmask.sum()), 0)))
        val, _ = solve_minimax(Phi, r, w, method=method)
        worst = max(worst, val)
    return worst


def neg_holder_local(g: np.ndarray, window: Window, order: float, center_idx,
                     R: float, family: TestFunctionFamily | None = None) -> float:
    """Negative-order local Holder norm, tested against the bump family.

    Sup over placements whose lattice test ball sits inside the diagnostic
    ball around the center, of ``lam**(-order) |<g, phi_y^lam>_eps|``.
    """
    if not order < 0:
        raise ValueError("order must be negative")
    scaling = window.scaling
    if family is None:
        family = build_default_family(scaling, int(math.ceil(-order)))
    g = np.asarray(g).reshape(-1)
    eps = window.eps
    cpos = window.ball(center_idx, R)
    idx = window.indices()
    A = window.coords()
    ccoord = np.asarray(center_idx, dtype=float) * np.array(window.steps)
    d_to_center = scaling.pairwise_distance(ccoord[None, :], A)[0]
    worst = 0.0
    lams = lambda_grid(eps, R)
    for yflat in cpos:
        for lam in lams:
            if not window.ball_fits(idx[yflat], lam):
                continue
            bpos = window.ball(idx[yflat], lam)
            if np.max(d_to_center[bpos]) > R * (1 + 1e-12):
                continue
            for member in family.members:
                phi = scaled_test_values(member, float(lam), A[yflat], A[bpos])
                val = abs(pairing(g[bpos], phi, eps, scaling)) * lam ** (-order)
                worst = max(worst, float(val))
    return worst


@dataclass(frozen=True)
class RatioDiagnostic:
    lhs: float
    rhs: float
    ratio: float
    parts: dict = field(default_factory=dict)
    violation: bool = False


def _ratio(lhs: float, rhs: float) -> tuple[float, bool]:
    if rhs > 0:
        return lhs / rhs, False
    return (0.0, False) if lhs == 0 else (math.inf, True)


def holder_bound_ratio(U: Germ, eta: float, alpha: float, R: float,
                       method: str = "exchange") -> RatioDiagnostic:
    """Computable two-sided check: local Holder norms of the germ slices
    against the germ-norm bound ``(G_eta + G_eta_alpha) * R**(eta-alpha)``."""
    base_idx = U.base.indices()
    lhs = 0.0
    for i in range(U.base.npoints):
        lhs = max(lhs, holder_local(U.values[i], U.active, alpha,
                                    tuple(base_idx[i]), R, method=method))
    n1 = norm_G_eta(U, eta)
    n2 = seminorm_G_eta_alpha(U, eta, alpha, method=method)
    rhs = (n1.value + n2.value) * R ** (eta - alpha)
    ratio, viol = _ratio(lhs, rhs)
    return RatioDiagnostic(lhs, rhs, ratio,
                           {"G_eta": n1.value, "G_eta_alpha": n2.value, "R": R},
                           viol)


def operator_holder_bound_ratio(U: Germ, L, eta: float, alpha: float, R: float,
                                family: TestFunctionFamily | None = None,
                                method: str = "exchange") -> RatioDiagnostic:
    """Negative-order analogue: tested local norms of the operator applied to
    each germ slice against ``(G_(eta-m) of LU + G_eta_alpha of U) * R**(eta-alpha)``."""
    from .discrete_ops import apply_to_germ

    m = L.order
    if not (0 < alpha < eta < m):
        raise ValueError("need 0 < alpha < eta < operator order")
    LU = apply_to_germ(L, U)
    if family is None:
        family = build_default_family(U.scaling, int(math.ceil(m - alpha)))
    base_idx = LU.base.indices()
    lhs = 0.0
    for i in range(LU.base.npoints):
        lhs = max(lhs, neg_holder_local(LU.values[i], LU.active, alpha - m,
                                        tuple(base_idx[i]), R, family))
    n1 = seminorm_G_gamma(LU, eta - m, family=family)
    n2 = seminorm_G_eta_alpha(U, eta, alpha, method=method)
    rhs = (n1.value + n2.value) * R ** (eta - alpha)
    ratio, viol = _ratio(lhs, rhs)
    return RatioDiagnostic(lhs, rhs, ratio,
                           {"G_eta_minus_m": n1.value, "G_eta_alpha": n2.value, "R": R},
                           viol)


# ---------------------------------------------------------------------------
# McShane extension


def mcshane_extend(f: np.ndarray, mask: np.ndarray, window: Window, alpha: float,
                   M: float, check: bool = True, variant: str = "inf") -> np.ndarray:
    """Inf-convolution extension ``g(x) = min_y (f(y) + M d(x,y)**alpha)``.

    Extends from the masked subset to the whole window without increasing the
    Holder constant (alpha in (0, 1), so the powered distance is a metric).
    The default is the one-sided formula above; ``variant="midpoint"``
    averages it with the matching sup-convolution, which additionally leaves
    constant inputs constant.
    """
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0, 1)")
    if variant not in ("inf", "midpoint"):
        raise ValueError(f"unknown extension variant {variant!r}")
    f = np.asarray(f, dtype=float).reshape(-1)
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if f.shape[0] != window.npoints or mask.shape[0] != window.npoints:
        raise DimensionError("field and mask must cover the window")
    if not mask.any():
        raise DomainTooSmallError("extension needs at least one defined point")
    pts = window.coords()
    sub = pts[mask]
    fsub = f[mask]
    Dsub = window.scaling.pairwise_distance(sub, sub)
    if check:
        spread = np.abs(fsub[:, None] - fsub[None, :])
        bound = M * _pow_dist(Dsub, alpha)
        np.fill_diagonal(bound, np.inf)
        scale = max(1.0, float(np.max(np.abs(fsub))))
        if np.any(spread > bound * (1 + 1e-12) + 1e-12 * scale):
            raise InputNotHolderError(
                "input violates the stated Holder bound on its domain")
    D = window.scaling.pairwise_distance(pts, sub)
    caps = M * _pow_dist(D, alpha)
    g = np.min(fsub[None, :] + caps, axis=1)
    if variant == "midpoint":
        g = 0.5 * (g + np.max(fsub[None, :] - caps, axis=1))
    g[mask] = fsub
    return g


# ---------------------------------------------------------------------------
# witness replay


def reevaluate_report(report: NormReport, U: Germ,
                      family: TestFunctionFamily | None = None) -> float:
    """Recompute the reported value from its witness alone."""
    w = report.witness
    if not w:
        return 0.0
    scaling = U.scaling
    if report.name.startswith("G_eta_alpha"):
        xf = U.base.flat(w["base_x"])
        yf = U.base.flat(w["base_y"])
        val, _, _ = pair_minimax(U, xf, yf, report.params["eta"],
                                 report.params["alpha"], report.params.get("R"))
        return val
    if report.name.startswith("G_eta"):
        x = np.asarray(w["base"], dtype=float) * np.array(U.base.steps)
        y = np.asarray(w["active"], dtype=float) * np.array(U.active.steps)
        d = scaling.distance(x, y)
        v = U.values[U.base.flat(w["base"]), U.active.flat(w["active"])]
        return float(abs(v) / d ** report.params["eta"])
    if report.name.startswith("G_gamma"):
        if family is None:
            family = build_default_family(scaling, report.params["k"])
        xf = U.base.flat(w["base"])
        lam = w["lam"]
        pos = U.active.ball(w["base"], lam)
        pts = U.active.coords()[pos]
        phi = scaled_test_values(family.members[w["member"]], lam,
                                 U.base.coords()[xf], pts)
        val = abs(pairing(U.values[xf][pos], phi, U.eps, scaling))
        return float(val * lam ** (-report.params["gamma"]))
    if report.name == "sup_below":
        return float(abs(U.values[U.base.flat(w["base"]), U.active.flat(w["active"])]))
    raise ValueError(f"unknown report kind {report.name}")
