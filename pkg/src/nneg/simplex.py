"""Dense two-phase simplex: Dantzig pricing with a permanent switch to Bland's rule.

Solves ``max c.x  s.t.  A x = b, x >= 0`` for the small, dense problems that
arise from superhedging (a handful of equality rows, up to a few thousand
columns). Pivots update a dense tableau in place; the basis is refactorised
from scratch at regular intervals and once more at the end, so the reported
solution and multipliers never carry accumulated update error.

Besides the optimum the solver returns the simplex multipliers ``y`` (the
solution of the dual ``min b.y  s.t.  A^T y >= c``) and, when the problem is
infeasible, a Farkas vector ``z`` with ``A^T z <= 0`` and ``b.z > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11
REFACTOR = 25
DEGENERATE_STREAK = 20


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    objective: float = float("nan")
    iterations: int = 0
    farkas: np.ndarray | None = None
    basis: np.ndarray | None = None


def _iterate(A, b, c, basis, tol, max_iter, allowed=None):
    """Simplex for ``max c.x`` from a feasible basis.

    Columns enter by largest reduced cost until ``DEGENERATE_STREAK``
    consecutive pivots fail to move; from then on Bland's smallest-index rule
    is used for the rest of the solve, which rules out cycling.

    Works on the tableau ``[B^-1 A | B^-1 b]`` with rank-one pivot updates,
    refactorising from scratch every ``REFACTOR`` pivots to limit drift.
    Returns (status, basis, iterations). ``allowed`` masks columns that may
    enter (artificial columns are frozen out in phase two).
    """
    basis = basis.copy()
    scale = max(1.0, float(np.max(np.abs(c))))
    it = 0
    tab = None
    bland = False
    stalled = 0
    while True:
        if tab is None or it % REFACTOR == 0:
            Binv = np.linalg.inv(A[:, basis])
            tab = Binv @ A
            xb = Binv @ b
        reduced = c - c[basis] @ tab
        reduced[basis] = 0.0
        if allowed is not None:
            reduced[~allowed] = 0.0
        entering = np.flatnonzero(reduced > tol * scale)
        if entering.size == 0:
            return OPTIMAL, basis, it
        if it >= max_iter:
            raise RuntimeError(f"simplex exceeded {max_iter} iterations")
        j = int(entering[0]) if bland else int(np.argmax(reduced))
        direction = tab[:, j]
        rows = np.flatnonzero(direction > PIVOT_TOL)
        if rows.size == 0:
            return UNBOUNDED, basis, it
        ratios = np.maximum(xb[rows], 0.0) / direction[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        # among tied rows leave the basic variable with smallest index
        leave = int(ties[np.argmin(basis[ties])])
        stalled = stalled + 1 if best <= 1e-14 else 0
        if stalled >= DEGENERATE_STREAK:
            bland = True
        piv = direction[leave]
        col = direction.copy()
        col[leave] = 0.0
        prow = tab[leave] / piv
        xl = xb[leave] / piv
        tab -= np.outer(col, prow)
        tab[leave] = prow
        xb = xb - col * xl
        xb[leave] = xl
        basis[leave] = j
        it += 1


def simplex(
    A, b, c, maximize: bool = True, tol: float = 1e-10, max_iter: int = 50_000,
    warm_basis=None,
):
    """Solve ``max c.x  s.t.  A x = b, x >= 0`` (``min`` when ``maximize`` is False).

    ``warm_basis`` is an optional guess of ``m`` column indices; if it is
    nonsingular and primal feasible, phase one is skipped.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if warm_basis is not None:
        warm = _warm_start(A, b, c if maximize else -c, np.asarray(warm_basis), tol, max_iter)
        if warm is not None:
            return _finish(A, b, c, np.ones(m), np.arange(m), *warm, maximize)
    sign = np.where(b < 0.0, -1.0, 1.0)
    As = A * sign[:, None]
    bs = b * sign
    cs = c if maximize else -c

    # phase one: maximise minus the sum of artificials
    full = np.hstack([As, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), -np.ones(m)])
    basis = np.arange(n, n + m)
    status, basis, it1 = _iterate(full, bs, c1, basis, tol, max_iter)
    Binv = np.linalg.inv(full[:, basis])
    xb = Binv @ bs
    infeas = float(np.sum(xb[basis >= n]))
    if infeas > FEAS_TOL * max(1.0, float(np.max(np.abs(bs)))):
        w = -(Binv.T @ c1[basis])
        return SimplexResult(INFEASIBLE, farkas=sign * w, iterations=it1)

    # drive zero-level artificials out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for pos in range(m):
        if basis[pos] < n:
            continue
        row = (Binv @ As)[pos]
        cand = [j for j in np.flatnonzero(np.abs(row) > 1e-9) if j not in basis]
        if cand:
            basis[pos] = cand[0]
            Binv = np.linalg.inv(full[:, basis])
        else:
            keep[pos] = False
    rows = np.flatnonzero(keep)
    # rows whose artificial stayed basic are linear combinations of the others
    dropped = [int(basis[p]) - n for p in range(m) if not keep[p]]
    live = np.setdiff1d(np.arange(m), dropped)
    A2 = As[live]
    b2 = bs[live]
    basis2 = basis[rows]
    status, basis2, it2 = _iterate(A2, b2, cs, basis2, tol, max_iter)
    return _finish(As, bs, c, sign, live, status, basis2, it1 + it2, maximize)


def _warm_start(A, b, cs, basis, tol, max_iter):
    m = A.shape[0]
    if basis.shape != (m,) or len(set(basis.tolist())) != m or basis.max() >= A.shape[1]:
        return None
    B = A[:, basis]
    if np.linalg.cond(B) > 1e10:
        return None
    xb = np.linalg.solve(B, b)
    if np.any(xb < -FEAS_TOL * max(1.0, float(np.max(np.abs(b))))):
        return None
    status, basis, it = _iterate(A, b, cs, basis, tol, max_iter)
    return status, basis, it


def _finish(As, bs, c, sign, live, status, basis2, iterations, maximize):
    """Recover primal, multipliers and objective from a final phase-two basis."""
    if status == UNBOUNDED:
        return SimplexResult(UNBOUNDED, iterations=iterations)
    m, n = As.shape
    A2, b2 = As[live], bs[live]
    cs = c if maximize else -c
    Binv = np.linalg.inv(A2[:, basis2])
    x = np.zeros(n)
    x[basis2] = np.maximum(Binv @ b2, 0.0)
    y_live = Binv.T @ cs[basis2]
    y = np.zeros(m)
    y[live] = y_live
    y = sign * y
    if not maximize:
        y = -y
    return SimplexResult(
        OPTIMAL,
        x=x,
        y=y,
        objective=float(c @ x),
        iterations=iterations,
        basis=basis2,
    )
