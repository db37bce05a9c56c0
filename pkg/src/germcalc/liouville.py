"""Brute-force rigidity checks behind the blow-up arguments.

Three computable shadows of the Liouville-type classification: the polynomial
kernel of a difference operator at a degree cutoff (null-space linear
algebra), nonsingularity of the centered-derivative system on polynomials
(triangular in the falling-factorial basis), and a search for nonzero
dual-torus symbol zeros, each certified by constructing the corresponding
bounded exponential solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discrete_ops import DiffOperator, apply_to_field, discrete_monomial, discrete_symbol, dual_torus_bounds
from .geometry import MultiIndex, Scaling, multi_indices
from .germs import Window, iterated_diff

_SVD_CUTOFF = 1e-10


@dataclass(frozen=True)
class KernelBasis:
    """Null-space basis of an operator acting on polynomials up to a degree.

    Basis vectors are coefficient rows over the falling-factorial monomials
    listed in ``gammas`` (degree-lex order).
    """

    operator: DiffOperator
    eps: float
    eta: float
    gammas: tuple[MultiIndex, ...]
    vectors: np.ndarray  # (dim, len(gammas))

    @property
    def dimension(self) -> int:
        return self.vectors.shape[0]

    def evaluate(self, vector_idx: int, pts: np.ndarray) -> np.ndarray:
        """Evaluate one kernel element at physical lattice points."""
        out = np.zeros(np.atleast_2d(pts).shape[0], dtype=complex)
        for c, g in zip(self.vectors[vector_idx], self.gammas):
            if c != 0:
                out = out + c * discrete_monomial(self.operator.scaling, self.eps, g,
                                                  np.atleast_2d(pts)).astype(float)
        return out

    def contains(self, coeffs, tol: float = 1e-8) -> bool:
        """Whether a coefficient vector lies in the span of the basis."""
        v = np.asarray(coeffs, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            return True
        if self.dimension == 0:
            return False
        sol, *_ = np.linalg.lstsq(self.vectors.T, v, rcond=None)
        return bool(np.linalg.norm(self.vectors.T @ sol - v) <= tol * nrm)


def _determination_window(scaling: Scaling, eps: float, eta: float, m: int) -> Window:
    # a polynomial of weighted degree <= eta is pinned down by this many
    # points per axis, with room for the operator stencil
    widths = [int(math.floor(eta / s + 1e-12)) + m + 2 for s in scaling.s]
    return Window(scaling, eps, (0,) * scaling.d, tuple(w - 1 for w in widths))


def _monomial_fields(scaling: Scaling, eps: float, gammas, win: Window) -> list[np.ndarray]:
    pts = win.coords()
    return [np.asarray(discrete_monomial(scaling, eps, g, pts), dtype=float).reshape(win.shape)
            for g in gammas]


def polynomial_kernel(L: DiffOperator, eps: float, eta: float) -> KernelBasis:
    """Null space of the operator on polynomials of weighted degree <= eta.

    The action of a homogeneous operator on a polynomial is again a
    polynomial, so vanishing on the determination window forces vanishing
    everywhere; the null space comes from a singular-value cutoff relative to
    the largest singular value.
    """
    if eta < 0:
        raise ValueError("degree cutoff must be >= 0")
    scaling = L.scaling
    gammas = tuple(multi_indices(scaling, eta))
    win = _determination_window(scaling, eps, eta, L.order)
    cols = []
    for f in _monomial_fields(scaling, eps, gammas, win):
        vals, _ = apply_to_field(L, f, win)
        cols.append(np.asarray(vals, dtype=complex).ravel())
    A = np.stack(cols, axis=1)
    if np.iscomplexobj(A) and np.all(A.imag == 0):
        A = A.real
    U_, sv, Vh = np.linalg.svd(A, full_matrices=True)
    smax = sv[0] if sv.size else 0.0
    if smax == 0:
        vectors = np.eye(len(gammas))
    else:
        null_rows = [Vh[i] for i in range(Vh.shape[0])
                     if i >= sv.size or sv[i] <= _SVD_CUTOFF * smax]
        vectors = (np.stack(null_rows) if null_rows
                   else np.zeros((0, len(gammas))))
    basis = KernelBasis(L, eps, eta, gammas, vectors)
    _verify_annihilated(basis)
    return basis


def _verify_annihilated(basis: KernelBasis, tol: float = 1e-10) -> None:
    L = basis.operator
    win = _determination_window(L.scaling, basis.eps, basis.eta, L.order)
    test = Window(L.scaling, basis.eps,
                  tuple(l - 1 for l in win.lo), tuple(h + 1 for h in win.hi))
    for i in range(basis.dimension):
        f = basis.evaluate(i, test.coords()).reshape(test.shape)
        if np.all(f.imag == 0):
            f = f.real
        vals, _ = apply_to_field(L, f, test)
        scale = max(1.0, float(np.max(np.abs(f))))
        if float(np.max(np.abs(vals))) > tol * scale:
            raise AssertionError("kernel element is not annihilated on the test window")


def rigidity_matrix(scaling: Scaling, eps: float, eta: float) -> np.ndarray:
    """Matrix of centered forward-difference values: entry (i, j) is
    D^gamma_i applied to the j-th falling-factorial monomial, at the origin."""
    gammas = multi_indices(scaling, eta)
    reach = tuple(int(math.floor(eta / s + 1e-12)) for s in scaling.s)
    win = Window(scaling, eps, (0,) * scaling.d, tuple(max(r, 0) for r in reach))
    fields = _monomial_fields(scaling, eps, gammas, win)
    T = np.zeros((len(gammas), len(gammas)))
    for j, f in enumerate(fields):
        for i, g in enumerate(gammas):
            arr = f
            for ax, n in enumerate(g):
                if n:
                    arr = iterated_diff(arr, ax, n, win.steps[ax])
            T[i, j] = arr[(0,) * scaling.d]
    return T


def centered_rigidity_check(scaling: Scaling, eps: float, eta: float) -> bool:
    """True when vanishing centered differences up to degree eta force a
    polynomial of that degree to vanish (the system is nonsingular)."""
    T = rigidity_matrix(scaling, eps, eta)
    sv = np.linalg.svd(T, compute_uv=False)
    return bool(sv.size and sv[-1] > _SVD_CUTOFF * sv[0])


@dataclass(frozen=True)
class SymbolZero:
    theta: tuple[float, ...]
    symbol_abs: float
    residual_inf: float


def symbol_zero_search(L: DiffOperator, eps: float = 1.0, resolution: int = 64,
                       residual_halfwidth: int = 8) -> list[SymbolZero]:
    """Nonzero dual-torus points where the lattice symbol (near-)vanishes.

    Grid scan plus local refinement; refined points that slide into the
    origin neighborhood are the trivial zero and are not reported.  Each hit
    is certified by applying the operator to the corresponding complex
    exponential on a window and recording the sup residual.
    """
    from scipy.optimize import minimize

    scaling = L.scaling
    bounds = dual_torus_bounds(scaling, eps)
    axes = [(-b + 2 * b * np.arange(resolution) / resolution) for b in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    T = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.abs(discrete_symbol(L, eps, T))
    scale = max(1.0, L.coeff_scale() * eps ** (-L.order))
    tol = 1e-10 * scale
    cell = np.array([2 * b / resolution for b in bounds])
    seeds = list(np.argsort(vals)[:16])
    zeros: list[tuple[float, ...]] = []
    records: list[SymbolZero] = []
    box = [(-b, b) for b in bounds]
    for i in seeds:
        res = minimize(lambda t: float(abs(discrete_symbol(L, eps, t)) ** 2),
                       T[i], method="Nelder-Mead", bounds=box,
                       options={"xatol": 1e-13, "fatol": 1e-300, "maxiter": 800})
        v = math.sqrt(max(res.fun, 0.0))
        theta = np.asarray(res.x)
        if v > tol:
            continue
        if np.all(np.abs(theta) <= 1.5 * cell):
            continue  # the trivial zero at the origin
        if any(np.all(np.abs(theta - np.asarray(z)) <= cell) for z in zeros):
            continue
        zeros.append(tuple(float(x) for x in theta))
        records.append(SymbolZero(zeros[-1], v,
                                  _exponential_residual(L, eps, theta, residual_halfwidth)))
    records.sort(key=lambda z: z.theta)
    return records


def _exponential_residual(L: DiffOperator, eps: float, theta: np.ndarray,
                          halfwidth: int) -> float:
    win = Window(L.scaling, eps, (-halfwidth,) * L.d, (halfwidth,) * L.d)
    f = np.exp(1j * win.coords() @ np.asarray(theta, dtype=float)).reshape(win.shape)
    vals, _ = apply_to_field(L, f, win)
    return float(np.max(np.abs(vals)))


def kernel_basis_to_text(basis: KernelBasis) -> str:
    s = ",".join(str(x) for x in basis.operator.scaling.s)
    lines = ["# germcalc kernel-basis v1",
             f"d={basis.operator.d} s={s} eps={basis.eps!r} eta={basis.eta!r} "
             f"dim={basis.dimension}",
             "# monomials: " + " | ".join(",".join(map(str, g)) for g in basis.gammas)]
    for row in basis.vectors:
        lines.append(",".join("%.17g" % float(x) for x in row.real))
    return "\n".join(lines) + "\n"
