"""Weighted discrete Chebyshev (minimax) fitting.

Solves  min over c  of  max_i |r_i - (Phi c)_i| / w_i  on a finite point set
with strictly positive weights.  Three routes are provided:

* ``exchange`` -- reference/exchange iteration (a dual-simplex walk on the
  classical reformulation).  Deterministic, fast, and self-certifying: it
  returns once the reference value (a weak-duality lower bound) matches the
  achieved maximum of its fit.  Falls back to the LP route on stall.
* ``lp`` -- scipy ``linprog`` (HiGHS) on the standard epigraph formulation.
* ``grid`` -- brute-force coefficient-grid refinement; test oracle only.

All routes report the *achieved* maximum ratio of the fit they return, so
values are reproducible by direct evaluation.
"""

from __future__ import annotations

import numpy as np

_CERT_RTOL = 1e-12
_MAX_EXCHANGE_ITERS = 120


def achieved_value(Phi: np.ndarray, r: np.ndarray, w: np.ndarray, c: np.ndarray) -> float:
    if Phi.shape[1]:
        res = r - Phi @ c
    else:
        res = r
    return float(np.max(np.abs(res) / w)) if r.size else 0.0


def weighted_lstsq(Phi: np.ndarray, r: np.ndarray, w: np.ndarray) -> np.ndarray:
    if Phi.shape[1] == 0:
        return np.zeros(0, dtype=r.dtype)
    sol, *_ = np.linalg.lstsq(Phi / w[:, None], r / w, rcond=None)
    return sol


def _reference_value(Phi_S, r_S, w_S):
    """Lower bound + tentative fit from a (p+1)-point reference set.

    Returns (t, c) where t is a weak-duality lower bound for the full
    problem restricted to S, or None when the reference is degenerate.
    """
    p = Phi_S.shape[1]
    if p == 0:
        i = int(np.argmax(np.abs(r_S) / w_S))
        return float(np.abs(r_S[i]) / w_S[i]), np.zeros(0)
    # null vector of Phi_S^T selects the equioscillation signs
    _, sv, Vh = np.linalg.svd(Phi_S.T, full_matrices=True)
    if sv.size < p or sv[-1] <= 1e-13 * max(sv[0], 1e-300):
        return None
    y = Vh[-1]
    den = float(np.sum(np.abs(y) * w_S))
    if den <= 1e-300:
        return None
    num = float(y @ r_S)
    t = abs(num) / den
    s0 = 1.0 if num >= 0 else -1.0
    sigma = np.where(y >= 0, s0, -s0)
    c, *_ = np.linalg.lstsq(Phi_S, r_S - t * sigma * w_S, rcond=None)
    return t, c


def _initial_reference(Phi, r, w):
    n, p = Phi.shape
    c0 = weighted_lstsq(Phi, r, w)
    res = np.abs(r - Phi @ c0) / w if p else np.abs(r) / w
    order = np.argsort(-res, kind="stable")
    return np.sort(order[:p + 1])


def _rank_repaired_reference(Phi, r, w):
    """Pivoted-QR reference selection for rank-deficient starts."""
    n, p = Phi.shape
    c0 = weighted_lstsq(Phi, r, w)
    res = np.abs(r - Phi @ c0) / w if p else np.abs(r) / w
    order = np.argsort(-res, kind="stable")
    if p == 0:
        return order[:1]
    pool = order[: max(8 * (p + 1), p + 1)]
    import scipy.linalg

    _, _, piv = scipy.linalg.qr(Phi[pool].T, pivoting=True)
    S = list(pool[piv[:p]])
    for j in order:
        if j not in S:
            S.append(j)
            break
    return np.array(sorted(S), dtype=np.intp)


def exchange_minimax(Phi: np.ndarray, r: np.ndarray, w: np.ndarray):
    """Reference/exchange iteration; returns (value, coefficients).

    Certifies optimality by matching the reference lower bound against the
    achieved maximum; falls back to the LP route when a reference turns
    degenerate or the ascent stalls.
    """
    n, p = Phi.shape
    if n == 0:
        return 0.0, np.zeros(p)
    if n <= p:
        c, *_ = np.linalg.lstsq(Phi, r, rcond=None)
        return achieved_value(Phi, r, w, c), c
    S = _initial_reference(Phi, r, w)
    if _reference_value(Phi[S], r[S], w[S]) is None:
        S = _rank_repaired_reference(Phi, r, w)
    best = None
    for _ in range(_MAX_EXCHANGE_ITERS):
        ref = _reference_value(Phi[S], r[S], w[S])
        if ref is None:
            break
        t, c = ref
        res = np.abs(r - Phi @ c) / w if p else np.abs(r) / w
        j_star = int(np.argmax(res))
        if best is None or res[j_star] < best[0]:
            best = (float(res[j_star]), c)
        if res[j_star] <= t * (1 + _CERT_RTOL) + 1e-300:
            return float(res[j_star]), c
        if j_star in S:
            break
        # greedy single exchange: admit the worst point, drop to maximize t
        t_next, S_next = t, None
        for i in range(S.size):
            cand = S.copy()
            cand[i] = j_star
            ref_i = _reference_value(Phi[cand], r[cand], w[cand])
            if ref_i is not None and ref_i[0] > t_next * (1 + 1e-15):
                t_next, S_next = ref_i[0], np.sort(cand)
        if S_next is None:
            break
        S = S_next
    value, c = lp_minimax(Phi, r, w)
    if best is not None and best[0] < value:
        return best
    return value, c


def lp_minimax(Phi: np.ndarray, r: np.ndarray, w: np.ndarray):
    """Epigraph LP via scipy linprog (HiGHS); returns (value, coefficients)."""
    from scipy.optimize import linprog

    n, p = Phi.shape
    if n == 0:
        return 0.0, np.zeros(p)
    if p == 0:
        return float(np.max(np.abs(r) / w)), np.zeros(0)
    A_ub = np.block([[Phi, -w[:, None]], [-Phi, -w[:, None]]])
    b_ub = np.concatenate([r, -r])
    cost = np.zeros(p + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub,
                  bounds=[(None, None)] * p + [(0, None)], method="highs")
    if not res.success:
        raise RuntimeError(f"minimax LP failed: {res.message}")
    c = res.x[:p]
    return achieved_value(Phi, r, w, c), c


def grid_minimax(Phi: np.ndarray, r: np.ndarray, w: np.ndarray,
                 rounds: int = 7, pts: int = 9):
    """Brute-force coefficient-grid refinement (oracle for tests).

    The objective is convex in the coefficients, so refining around the grid
    argmin is sound; the box is widened whenever the argmin touches its
    boundary.  Returns (value, coefficients, final_step) where final_step is
    the last per-axis grid spacing.
    """
    n, p = Phi.shape
    if p == 0:
        return float(np.max(np.abs(r) / w)), np.zeros(0), 0.0
    center = weighted_lstsq(Phi, r, w)
    half = 4.0 * (np.max(np.abs(center)) + 1.0)
    best_v, best_c = np.inf, center.copy()
    step = 0.0
    for _ in range(rounds):
        axes = [np.linspace(-half, half, pts)] * p
        offs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, p)
        cand = center[None, :] + offs
        resid = np.abs(r[None, :] - cand @ Phi.T) / w[None, :]
        vals = resid.max(axis=1)
        k = int(np.argmin(vals))
        if vals[k] < best_v:
            best_v, best_c = float(vals[k]), cand[k].copy()
        on_edge = np.any(np.abs(offs[k]) >= half * (1 - 1e-12))
        step = 2 * half / (pts - 1)
        if on_edge:
            half *= 2.0
        else:
            center = cand[k]
            half = 1.5 * step
    return best_v, best_c, step


def solve_minimax(Phi: np.ndarray, r: np.ndarray, w: np.ndarray, method: str = "exchange"):
    """Front end handling complex data by splitting into real and imaginary parts.

    For complex data the returned value is the achieved modulus ratio of the
    combined fit: an attainable upper bound within sqrt(2) of the modulus
    infimum, and exactly the minimax value for real data.
    """
    Phi = np.asarray(Phi, dtype=float)
    r = np.asarray(r)
    w = np.asarray(w, dtype=float)
    solver = {"exchange": exchange_minimax, "lp": lp_minimax}[method]
    if np.iscomplexobj(r):
        if np.any(r.imag):
            _, cre = solver(Phi, np.ascontiguousarray(r.real), w)
            _, cim = solver(Phi, np.ascontiguousarray(r.imag), w)
            c = cre + 1j * cim
            if Phi.shape[1]:
                res = r - Phi @ c
            else:
                res = r
            val = float(np.max(np.abs(res) / w)) if r.size else 0.0
            return val, c
        r = np.ascontiguousarray(r.real)
    val, c = solver(Phi, r, w)
    return val, c
