"""Exact equilibria of zero-sum matrix games.

``solve_lp`` runs a dense tableau simplex with Bland's rule on the classic
positive-shift reduction; ``solve_support_enum`` is a brute-force oracle for
small games, used to cross-check the LP.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import SolverError, UnsupportedSizeError
from .game_core import MatrixLike, MixedStrategy, as_matrix, nash_gap

FEAS_TOL = 1e-10
ENUM_MAX_DIM = 5


@dataclass(frozen=True)
class ExactSolution:
    x_star: MixedStrategy
    y_star: MixedStrategy
    value: float
    iterations: int = 0


def _shift(entries: np.ndarray) -> tuple[np.ndarray, float]:
    # Smallest entry becomes 1 so the shifted game value is >= 1.
    shift = 1.0 - float(entries.min())
    return entries + shift, shift


def _simplex_max(B: np.ndarray, max_iter: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Maximize ``1^T w`` subject to ``B w <= 1, w >= 0`` (with ``B > 0``).

    Returns the primal ``w``, the dual ``u`` (optimal for
    ``min 1^T u, B^T u >= 1, u >= 0``) and the pivot count.
    """
    m, n = B.shape
    tab = np.zeros((m, n + m + 1))
    tab[:, :n] = B
    tab[:, n:n + m] = np.eye(m)
    tab[:, -1] = 1.0
    # Reduced-cost row; a positive entry marks an improving column.
    cost = np.zeros(n + m + 1)
    cost[:n] = 1.0
    basis = list(range(n, n + m))

    for it in range(max_iter):
        improving = np.flatnonzero(cost[:-1] > FEAS_TOL)
        if improving.size == 0:
            w = np.zeros(n + m)
            w[basis] = tab[:, -1]
            return w[:n], -cost[n:n + m], it
        col = int(improving[0])  # Bland: lowest index enters
        column = tab[:, col]
        rows = np.flatnonzero(column > FEAS_TOL)
        if rows.size == 0:
            # Cannot happen with B > 0; guard anyway.
            raise SolverError("LP unbounded", it)
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + FEAS_TOL * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))  # Bland: lowest basic index leaves

        tab[row] /= tab[row, col]
        for r in range(m):
            if r != row and tab[r, col] != 0.0:
                tab[r] -= tab[r, col] * tab[row]
        cost -= cost[col] * tab[row]
        basis[row] = col
    raise SolverError("simplex iteration limit exceeded", max_iter)


def _to_strategy(v: np.ndarray) -> MixedStrategy:
    v = np.clip(v, 0.0, None)
    return MixedStrategy(v / v.sum())


def solve_lp(a: MatrixLike, max_iter: int | None = None) -> ExactSolution:
    """Game value and one equilibrium via a single simplex solve.

    The column player's program ``max 1^T w, B w <= 1`` is solved in the
    tableau; the row player's strategy is read off the slack reduced costs.
    """
    a = as_matrix(a)
    B, shift = _shift(a.entries)
    m, n = B.shape
    if max_iter is None:
        max_iter = 100 * (m + n) + 1000
    w, u, iters = _simplex_max(B, max_iter)
    total = w.sum()
    if not total > 0 or u.sum() <= 0:
        raise SolverError("degenerate LP solution", iters)
    value = 1.0 / total - shift
    return ExactSolution(_to_strategy(u), _to_strategy(w), float(value), iters)


def _solve_bordered(sub: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Solve ``p^T sub = v 1^T, 1^T p = 1`` for a square block; ``None`` if singular."""
    k = sub.shape[0]
    lhs = np.zeros((k + 1, k + 1))
    lhs[:k, :k] = sub.T
    lhs[:k, k] = -1.0
    lhs[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    if np.linalg.cond(lhs) > 1e12:
        return None
    sol = np.linalg.solve(lhs, rhs)
    return sol[:k], float(sol[k])


def solve_support_enum(a: MatrixLike, tol: float = 1e-9) -> ExactSolution:
    """Enumerate equal-size support pairs and return the first verified equilibrium.

    After a positive shift every extreme equilibrium comes from a nonsingular
    square sub-block, so square supports are enough. ``tol`` is relative to
    the largest absolute payoff.
    """
    a = as_matrix(a)
    m, n = a.shape
    if m > ENUM_MAX_DIM or n > ENUM_MAX_DIM:
        raise UnsupportedSizeError(f"support enumeration handles at most {ENUM_MAX_DIM}x{ENUM_MAX_DIM}, got {m}x{n}")
    B, shift = _shift(a.entries)
    # Unit scale keeps the bordered systems well conditioned.
    scale = float(B.max())
    B = B / scale
    tol = tol * max(1.0, a.inf_norm())
    for k in range(1, min(m, n) + 1):
        for rows in combinations(range(m), k):
            for cols in combinations(range(n), k):
                sub = B[np.ix_(rows, cols)]
                xs = _solve_bordered(sub)
                ys = _solve_bordered(sub.T)
                if xs is None or ys is None:
                    continue
                (xi, vx), (yj, vy) = xs, ys
                if xi.min() < -tol or yj.min() < -tol:
                    continue
                x = np.zeros(m)
                y = np.zeros(n)
                x[list(rows)] = np.clip(xi, 0.0, None)
                y[list(cols)] = np.clip(yj, 0.0, None)
                x_s, y_s = MixedStrategy(x), MixedStrategy(y)
                if nash_gap(a, x_s, y_s) <= tol:
                    return ExactSolution(x_s, y_s, 0.5 * (vx + vy) * scale - shift)
    raise SolverError("support enumeration found no equilibrium", 0)
