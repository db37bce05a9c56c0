"""Anisotropic grading, distance, balls, and the rescaling/recentering group.

The grading assigns a positive integer weight to each coordinate axis.  It
induces the degree of a multi-index (weighted sum of its entries), a
quasi-distance (sum of per-axis root-distances), and a one-parameter family
of dilations that stretch axis ``j`` by ``R**s[j]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class Scaling:
    """Grading of the coordinate axes.

    Parameters
    ----------
    s : tuple of int
        One weight >= 1 per axis.  ``(1, ..., 1)`` is the isotropic case,
        ``(2, 1, ..., 1)`` the parabolic (time-space) case.
    """

    s: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(x) for x in self.s)
        if len(s) < 1:
            raise DimensionError("scaling needs at least one axis")
        if any(x < 1 for x in s):
            raise DimensionError(f"scaling entries must be >= 1, got {s}")
        object.__setattr__(self, "s", s)

    @property
    def d(self) -> int:
        return len(self.s)

    @property
    def homogeneity(self) -> int:
        """Sum of the weights; the volume exponent of dilations."""
        return sum(self.s)

    def check_dim(self, v) -> None:
        if len(v) != self.d:
            raise DimensionError(f"expected length {self.d}, got {len(v)}")

    def degree(self, gamma: MultiIndex) -> int:
        """Weighted degree of a multi-index."""
        self.check_dim(gamma)
        if any(g < 0 for g in gamma):
            raise ValueError(f"multi-index entries must be >= 0, got {gamma}")
        return sum(w * int(g) for w, g in zip(self.s, gamma))

    def dilate(self, R: float, y):
        """Apply the pure dilation ``y_j -> R**s[j] * y_j``."""
        y = np.asarray(y, dtype=float)
        return y * np.array([R ** w for w in self.s])

    def distance(self, x, y) -> float:
        """Anisotropic distance: sum over axes of ``|x_j - y_j|**(1/s[j])``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.check_dim(x)
        self.check_dim(y)
        return float(sum(_root(abs(float(a) - float(b)), w)
                         for a, b, w in zip(x, y, self.s)))

    def pairwise_distance(self, X, Y) -> np.ndarray:
        """Distance matrix between point sets X (n, d) and Y (m, d)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[1] != self.d or Y.shape[1] != self.d:
            raise DimensionError("point arrays must have d columns")
        out = np.zeros((X.shape[0], Y.shape[0]))
        for j, w in enumerate(self.s):
            out += _root_arr(np.abs(X[:, j, None] - Y[None, :, j]), w)
        return out


def _root(t: float, w: int) -> float:
    if w == 1:
        return t
    if w == 2:
        return float(np.sqrt(t))
    return float(t ** (1.0 / w))


def _root_arr(t: np.ndarray, w: int) -> np.ndarray:
    if w == 1:
        return t
    if w == 2:
        return np.sqrt(t)
    return t ** (1.0 / w)


def aniso_degree(scaling: Scaling, gamma: MultiIndex) -> int:
    return scaling.degree(gamma)


def aniso_distance(scaling: Scaling, x, y) -> float:
    return scaling.distance(x, y)


def multi_indices(scaling: Scaling, max_degree: float) -> list[MultiIndex]:
    """All multi-indices with weighted degree <= max_degree, in degree-lex order.

    Ordering: lower degree first; within a degree level, lexicographic with
    the first differing component deciding.
    """
    if max_degree < 0:
        return []
    out: list[MultiIndex] = []

    def rec(prefix, remaining_axes, budget):
        if not remaining_axes:
            out.append(tuple(prefix))
            return
        w = remaining_axes[0]
        for g in range(int(budget // w) + 1):
            rec(prefix + [g], remaining_axes[1:], budget - w * g)

    rec([], list(scaling.s), float(max_degree))
    out.sort(key=lambda g: (scaling.degree(g), g))
    return out


@dataclass(frozen=True)
class ScaleMap:
    """Recentering/dilation map ``y -> w + (R**s[1] y_1, ..., R**s[d] y_d)``."""

    scaling: Scaling
    w: tuple[float, ...]
    R: float

    def __post_init__(self):
        self.scaling.check_dim(self.w)
        if not self.R > 0:
            raise ValueError(f"scale must be positive, got {self.R}")
        object.__setattr__(self, "w", tuple(float(x) for x in self.w))
        object.__setattr__(self, "R", float(self.R))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        self.scaling.check_dim(y)
        return np.asarray(self.w) + self.scaling.dilate(self.R, y)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Apply to an (n, d) array of points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        factors = np.array([self.R ** s for s in self.scaling.s])
        return np.asarray(self.w)[None, :] + points * factors[None, :]

    def inverse(self) -> "ScaleMap":
        Rinv = 1.0 / self.R
        w = -self.scaling.dilate(Rinv, np.asarray(self.w))
        return ScaleMap(self.scaling, tuple(w), Rinv)


def scale_point(m: ScaleMap, y):
    return m(y)


def compose_scale(a: ScaleMap, b: ScaleMap) -> ScaleMap:
    """Composition a o b, i.e. first apply b, then a."""
    if a.scaling != b.scaling:
        raise DimensionError("scale maps live over different gradings")
    return ScaleMap(a.scaling, tuple(a(np.asarray(b.w))), a.R * b.R)


def invert_scale(a: ScaleMap) -> ScaleMap:
    return a.inverse()
