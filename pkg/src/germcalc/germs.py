"""Germs tabulated on lattice windows.

A germ is a family of functions, one per base point, evaluated at an active
point.  On a finite window it is stored densely as a (base x active) table.
Base points whose construction stencils would exit the window are excluded
from the base set rather than extrapolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundaryError,
    DimensionError,
    DomainTooSmallError,
    LatticeCompatibilityError,
)
from .geometry import MultiIndex, ScaleMap, Scaling, multi_indices

#: Soft cap on window points per axis; dense tables are O(N^2) in the number
#: of window points, so larger windows are refused by default.
MAX_POINTS_PER_AXIS = 33


@dataclass(frozen=True)
class Window:
    """Finite box of lattice indices.

    Index ``k`` sits at physical coordinates ``k[j] * eps**s[j]`` on axis j,
    so the underlying lattice is ``eps**s[1] Z x ... x eps**s[d] Z``.
    """

    scaling: Scaling
    eps: float
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "lo", tuple(int(x) for x in self.lo))
        object.__setattr__(self, "hi", tuple(int(x) for x in self.hi))
        self.scaling.check_dim(self.lo)
        self.scaling.check_dim(self.hi)
        if not self.eps > 0:
            raise ValueError(f"grid scale must be positive, got {self.eps}")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"empty window: lo={self.lo} hi={self.hi}")
        if any(h - l + 1 > MAX_POINTS_PER_AXIS for l, h in zip(self.lo, self.hi)):
            raise ValueError(
                f"window exceeds {MAX_POINTS_PER_AXIS} points on an axis; "
                "dense germ tables would be too large")

    @property
    def d(self) -> int:
        return self.scaling.d

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def npoints(self) -> int:
        return int(np.prod(self.shape))

    @property
    def steps(self) -> tuple[float, ...]:
        return tuple(self.eps ** s for s in self.scaling.s)

    def indices(self) -> np.ndarray:
        """(npoints, d) integer indices in C order."""
        grids = np.meshgrid(*[np.arange(l, h + 1) for l, h in zip(self.lo, self.hi)],
                            indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def coords(self) -> np.ndarray:
        """(npoints, d) physical coordinates in C order."""
        return self.indices().astype(float) * np.array(self.steps)[None, :]

    def flat(self, idx) -> int:
        """Flat position of an index tuple, C order."""
        off = tuple(int(i) - l for i, l in zip(idx, self.lo))
        return int(np.ravel_multi_index(off, self.shape))

    def contains(self, idx) -> bool:
        return all(l <= int(i) <= h for i, l, h in zip(idx, self.lo, self.hi))

    def shrink(self, lo_margin=None, hi_margin=None) -> "Window":
        lo_margin = lo_margin or (0,) * self.d
        hi_margin = hi_margin or (0,) * self.d
        lo = tuple(l + int(m) for l, m in zip(self.lo, lo_margin))
        hi = tuple(h - int(m) for h, m in zip(self.hi, hi_margin))
        if any(l > h for l, h in zip(lo, hi)):
            raise BoundaryError("window too small for the requested margins")
        return Window(self.scaling, self.eps, lo, hi)

    def shift(self, offset) -> "Window":
        lo = tuple(l + int(o) for l, o in zip(self.lo, offset))
        hi = tuple(h + int(o) for h, o in zip(self.hi, offset))
        return Window(self.scaling, self.eps, lo, hi)

    def diameter(self) -> float:
        """Largest anisotropic distance between two window points."""
        return float(sum(_root(float(h - l) * st, s) for l, h, st, s in
                         zip(self.lo, self.hi, self.steps, self.scaling.s)))

    def ball(self, center_idx, r: float) -> np.ndarray:
        """Flat positions of window points within closed distance r of center.

        Iterates the bounding box of half-widths ``r**s[j]`` and filters by
        the exact distance predicate.
        """
        c = np.asarray(center_idx, dtype=np.int64)
        idx = self.indices()
        dist = np.zeros(idx.shape[0])
        for j, (st, s) in enumerate(zip(self.steps, self.scaling.s)):
            dist += _root_arr(np.abs(idx[:, j] - c[j]) * st, s)
        return np.nonzero(dist <= r * (1 + 1e-12))[0]

    def ball_fits(self, center_idx, r: float) -> bool:
        """Whether the closed ball's lattice bounding box stays in the window."""
        for j, (st, s) in enumerate(zip(self.steps, self.scaling.s)):
            reach = int(math.floor((r ** s) / st + 1e-12))
            if center_idx[j] - reach < self.lo[j] or center_idx[j] + reach > self.hi[j]:
                return False
        return True


def _root(t: float, s: int) -> float:
    if s == 1:
        return t
    if s == 2:
        return float(np.sqrt(t))
    return float(t ** (1.0 / s))


def _root_arr(t: np.ndarray, s: int) -> np.ndarray:
    if s == 1:
        return t
    if s == 2:
        return np.sqrt(t)
    return t ** (1.0 / s)


def iterated_diff(arr: np.ndarray, axis: int, n: int, h: float) -> np.ndarray:
    """n-fold first difference along an axis, divided by h**n.

    The returned array is the raw difference table; the caller tracks which
    lattice indices it represents (forward differences keep the lower edge,
    backward differences shift it up by one per application).
    """
    out = arr
    for _ in range(n):
        upper = np.take(out, range(1, out.shape[axis]), axis=axis)
        lower = np.take(out, range(0, out.shape[axis] - 1), axis=axis)
        out = upper - lower
        if h != 1:
            out = out / h
    return out


@dataclass(frozen=True)
class Germ:
    """Dense germ table over a base window and an active window."""

    base: Window
    active: Window
    values: np.ndarray  # (base.npoints, active.npoints)

    def __post_init__(self):
        if self.base.scaling != self.active.scaling:
            raise DimensionError("base and active windows disagree on scaling")
        if self.base.eps != self.active.eps:
            raise LatticeCompatibilityError("base and active windows disagree on eps")
        v = np.asarray(self.values)
        if v.shape != (self.base.npoints, self.active.npoints):
            raise DimensionError(
                f"values shape {v.shape} does not match windows "
                f"({self.base.npoints}, {self.active.npoints})")
        if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
            raise ValueError("germ values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def scaling(self) -> Scaling:
        return self.base.scaling

    @property
    def eps(self) -> float:
        return self.base.eps

    @classmethod
    def from_function(cls, base: Window, active: Window, fn) -> "Germ":
        """Tabulate ``fn(x_coords, y_coords)`` over all base/active pairs."""
        X = base.coords()
        Y = active.coords()
        vals = fn(X[:, None, :], Y[None, :, :])
        return cls(base, active, np.asarray(vals))

    def row(self, base_idx) -> np.ndarray:
        """The function attached to one base point, over the active window."""
        return self.values[self.base.flat(base_idx)]

    def __add__(self, other: "Germ") -> "Germ":
        if self.base != other.base or self.active != other.active:
            raise DimensionError("germ windows do not match")
        return type(self)(self.base, self.active, self.values + other.values)

    def __mul__(self, c) -> "Germ":
        return type(self)(self.base, self.active, self.values * c)

    __rmul__ = __mul__


class DistGerm(Germ):
    """Germ read against the discrete pairing (a distribution per base point)."""


def jet_margins(scaling: Scaling, order: float) -> tuple[int, ...]:
    """Forward-stencil reach per axis for degree <= order differences."""
    return tuple(int(math.floor(order / s + 1e-12)) for s in scaling.s)


def _difference_coefficients(u: np.ndarray, window: Window, gammas, base: Window):
    """Forward differences D^gamma u evaluated at the base points."""
    u = np.asarray(u)
    if u.shape != window.shape:
        raise DimensionError(f"field shape {u.shape} != window shape {window.shape}")
    tables: dict[MultiIndex, np.ndarray] = {}
    zero = (0,) * window.d
    tables[zero] = u
    coeffs = {}
    sel = tuple(slice(base.lo[j] - window.lo[j],
                      base.hi[j] - window.lo[j] + 1) for j in range(window.d))
    for g in gammas:
        if g not in tables:
            # build from a predecessor by one more forward difference
            j = next(ax for ax in range(window.d) if g[ax] > 0)
            prev = tuple(x - (1 if ax == j else 0) for ax, x in enumerate(g))
            if prev not in tables:
                _difference_coefficients(u, window, [prev], base)  # pragma: no cover
            tables[g] = iterated_diff(tables[prev], j, 1, window.steps[j])
        arr = tables[g]
        if any(arr.shape[j] < base.hi[j] - base.lo[j] + 1 for j in range(window.d)):
            raise BoundaryError("difference stencil exits the window; shrink the base set")
        coeffs[g] = arr[sel].reshape(-1)
        # keep predecessors for later gammas
        tables[g] = arr
    return coeffs


def lattice_monomial_pair(base: Window, active: Window, gamma: MultiIndex) -> np.ndarray:
    """Table of the centered falling-factorial monomial over base/active pairs.

    Entry (x, y) is the product over axes of
    ``(y_j - x_j)(y_j - x_j - h_j) ... (y_j - x_j - (gamma_j - 1) h_j)``
    with ``h_j`` the axis step.  These monomials diagonalize the forward
    differences, which makes jet centering exact on the lattice.
    """
    X = base.coords()
    Y = active.coords()
    out = np.ones((X.shape[0], Y.shape[0]))
    for j, h in enumerate(base.steps):
        t = Y[None, :, j] - X[:, None, j]
        for m in range(gamma[j]):
            out = out * (t - m * h)
    return out


def jet_germ(u: np.ndarray, window: Window, order: int) -> Germ:
    """Germ ``U_x = u - Q_x`` with Q_x the discrete Taylor jet of u at x.

    The jet uses falling-factorial monomials, so ``D^gamma U_x (x) = 0`` holds
    exactly for every weighted degree ``|gamma| <= order``.
    """
    scaling = window.scaling
    if order < 0:
        raise ValueError("jet order must be >= 0")
    base = window.shrink(hi_margin=jet_margins(scaling, order))
    gammas = multi_indices(scaling, order)
    coeffs = _difference_coefficients(u, window, gammas, base)
    vals = np.repeat(np.asarray(u).reshape(1, -1), base.npoints, axis=0)
    vals = np.array(vals, dtype=np.result_type(u, float))
    for g in gammas:
        fact = math.prod(math.factorial(k) for k in g)
        vals -= (coeffs[g] / fact)[:, None] * lattice_monomial_pair(base, window, g)
    return Germ(base, window, vals)


def frozen_coefficient_germ(u: np.ndarray, v: np.ndarray, a: np.ndarray,
                            window: Window, order: int) -> Germ:
    """Germ ``U_x = u - a(x) v - P_x`` with P_x the jet of ``u - a(x) v`` at x."""
    scaling = window.scaling
    base = window.shrink(hi_margin=jet_margins(scaling, order))
    gammas = multi_indices(scaling, order)
    cu = _difference_coefficients(u, window, gammas, base)
    cv = _difference_coefficients(v, window, gammas, base)
    a = np.asarray(a)
    if a.shape != window.shape:
        raise DimensionError("coefficient field shape does not match window")
    sel = tuple(slice(base.lo[j] - window.lo[j],
                      base.hi[j] - window.lo[j] + 1) for j in range(window.d))
    a_base = a[sel].reshape(-1)
    uf = np.asarray(u).reshape(-1)
    vf = np.asarray(v).reshape(-1)
    vals = uf[None, :] - a_base[:, None] * vf[None, :]
    vals = np.array(vals, dtype=np.result_type(u, v, a, float))
    for g in gammas:
        fact = math.prod(math.factorial(k) for k in g)
        coef = (cu[g] - a_base * cv[g]) / fact
        vals -= coef[:, None] * lattice_monomial_pair(base, window, g)
    return Germ(base, window, vals)


def scale_germ(U: Germ, m: ScaleMap) -> Germ:
    """Pull a germ back through the recentering/dilation map.

    The result lives on the lattice with grid scale ``eps / R``; its table is
    the original one with the index boxes shifted by the recentering offset.
    The recentering point must lie on the source lattice.
    """
    if m.scaling != U.scaling:
        raise DimensionError("scale map and germ disagree on scaling")
    steps = U.base.steps
    w_idx = []
    for j, (wj, st) in enumerate(zip(m.w, steps)):
        k = wj / st
        ki = round(k)
        if abs(k - ki) > 1e-9:
            raise LatticeCompatibilityError(
                f"recentering coordinate {wj} on axis {j} is off-lattice (step {st})")
        w_idx.append(int(ki))
    eps_new = U.eps / m.R
    base = Window(U.scaling, eps_new, *_shifted_bounds(U.base, w_idx))
    active = Window(U.scaling, eps_new, *_shifted_bounds(U.active, w_idx))
    cls = type(U)
    return cls(base, active, U.values)


def _shifted_bounds(win: Window, w_idx):
    lo = tuple(l - o for l, o in zip(win.lo, w_idx))
    hi = tuple(h - o for h, o in zip(win.hi, w_idx))
    return lo, hi


def restrict_initial(U: Germ) -> Germ:
    """Restrict to the time-zero slice: base (0, x'), active (0, y')."""
    if U.scaling.d < 2:
        raise DimensionError("initial-slice restriction needs at least two axes")
    for win, name in ((U.base, "base"), (U.active, "active")):
        if not (win.lo[0] <= 0 <= win.hi[0]):
            raise DomainTooSmallError(f"{name} window has no time-zero slice")
    sub = Scaling(U.scaling.s[1:])
    base = Window(sub, U.eps, U.base.lo[1:], U.base.hi[1:])
    active = Window(sub, U.eps, U.active.lo[1:], U.active.hi[1:])
    v = U.values.reshape(U.base.shape + U.active.shape)
    v = np.take(v, -U.base.lo[0], axis=0)
    v = np.take(v, -U.active.lo[0], axis=U.base.d - 1)
    return type(U)(base, active, v.reshape(base.npoints, active.npoints))


@dataclass(frozen=True)
class CenterReport:
    centered: bool
    worst: float
    witness_base: tuple[int, ...] | None
    witness_gamma: MultiIndex | None


def center_check(U: Germ, eta: float, tol: float = 1e-10) -> CenterReport:
    """Check ``D^gamma U_x (x) = 0`` for all weighted degrees <= eta.

    Only base points whose forward stencils stay inside the active window are
    tested.  Differences act on the active variable, per fixed base point.
    """
    scaling = U.scaling
    gammas = multi_indices(scaling, eta)
    act = U.active
    vals = U.values.reshape((U.base.npoints,) + act.shape)
    base_idx = U.base.indices()
    worst = 0.0
    wit_x = None
    wit_g = None
    for g in gammas:
        arr = vals
        for j, n in enumerate(g):
            if n:
                arr = iterated_diff(arr, j + 1, n, act.steps[j])
        # arr entry (b, k) is D^g U_b at active index act.lo + k
        ok = np.ones(base_idx.shape[0], dtype=bool)
        pos = np.empty((base_idx.shape[0], act.d), dtype=np.int64)
        for j in range(act.d):
            pos[:, j] = base_idx[:, j] - act.lo[j]
            ok &= (base_idx[:, j] >= act.lo[j]) & \
                  (base_idx[:, j] + g[j] <= act.hi[j])
        rows = np.nonzero(ok)[0]
        if rows.size == 0:
            continue
        picked = arr[(rows,) + tuple(pos[rows, j] for j in range(act.d))]
        viol = np.abs(picked)
        i = int(np.argmax(viol))
        if viol[i] > worst:
            worst = float(viol[i])
            wit_x = tuple(base_idx[rows[i]])
            wit_g = g
    return CenterReport(worst <= tol, worst, wit_x, wit_g)


# ---------------------------------------------------------------------------
# plain-text germ interchange format

_FMT = "%.17g"


def germ_to_text(U: Germ) -> str:
    s = ",".join(str(x) for x in U.scaling.s)
    head = (f"# germcalc germ v1\n"
            f"d={U.scaling.d} s={s} eps={_FMT % U.eps} "
            f"base_lo={_ints(U.base.lo)} base_hi={_ints(U.base.hi)} "
            f"act_lo={_ints(U.active.lo)} act_hi={_ints(U.active.hi)} "
            f"kind={'dist' if isinstance(U, DistGerm) else 'germ'}\n")
    bi = U.base.indices()
    ai = U.active.indices()
    lines = []
    for b in range(bi.shape[0]):
        for a in range(ai.shape[0]):
            z = complex(U.values[b, a])
            lines.append(",".join(
                [_ints(bi[b]), _ints(ai[a]), _FMT % z.real, _FMT % z.imag]))
    return head + "\n".join(lines) + "\n"


def _ints(t) -> str:
    return ";".join(str(int(x)) for x in t)


def _parse_ints(t) -> tuple[int, ...]:
    return tuple(int(x) for x in t.split(";"))


def germ_from_text(text: str) -> Germ:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    fields = dict(kv.split("=", 1) for kv in lines[0].split())
    scaling = Scaling(_parse_ints(fields["s"].replace(",", ";")))
    eps = float(fields["eps"])
    base = Window(scaling, eps, _parse_ints(fields["base_lo"]), _parse_ints(fields["base_hi"]))
    active = Window(scaling, eps, _parse_ints(fields["act_lo"]), _parse_ints(fields["act_hi"]))
    vals = np.zeros((base.npoints, active.npoints), dtype=complex)
    seen = np.zeros(vals.shape, dtype=bool)
    for ln in lines[1:]:
        bidx, aidx, re, im = ln.split(",")
        b = base.flat(_parse_ints(bidx))
        a = active.flat(_parse_ints(aidx))
        vals[b, a] = float(re) + 1j * float(im)
        seen[b, a] = True
    if not seen.all():
        raise ValueError("germ file is missing base/active pairs")
    if np.all(vals.imag == 0):
        vals = vals.real
    cls = DistGerm if fields.get("kind") == "dist" else Germ
    return cls(base, active, vals)


def save_germ(U: Germ, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(germ_to_text(U))


def load_germ(path) -> Germ:
    with open(path, encoding="utf-8") as fh:
        return germ_from_text(fh.read())


def field_to_text(values: np.ndarray, mask, window: Window) -> str:
    """Scalar field on a window, one row per point: index tuple, value,
    defined flag (0 marks points outside the field's domain)."""
    values = np.asarray(values, dtype=float).reshape(-1)
    mask = (np.ones(window.npoints, dtype=bool) if mask is None
            else np.asarray(mask, dtype=bool).reshape(-1))
    s = ",".join(str(x) for x in window.scaling.s)
    head = (f"# germcalc field v1\n"
            f"d={window.scaling.d} s={s} eps={_FMT % window.eps} "
            f"lo={_ints(window.lo)} hi={_ints(window.hi)}\n")
    idx = window.indices()
    lines = [",".join([_ints(idx[i]), _FMT % values[i], str(int(mask[i]))])
             for i in range(window.npoints)]
    return head + "\n".join(lines) + "\n"


def field_from_text(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    fields = dict(kv.split("=", 1) for kv in lines[0].split())
    scaling = Scaling(_parse_ints(fields["s"].replace(",", ";")))
    window = Window(scaling, float(fields["eps"]),
                    _parse_ints(fields["lo"]), _parse_ints(fields["hi"]))
    values = np.zeros(window.npoints)
    mask = np.zeros(window.npoints, dtype=bool)
    for ln in lines[1:]:
        iidx, val, flag = ln.split(",")
        p = window.flat(_parse_ints(iidx))
        values[p] = float(val)
        mask[p] = bool(int(flag))
    return values, mask, window
