"""Dense tableau simplex for small LPs of the form max c.x, A x <= b, x >= 0.

Only right-hand sides ``b >= 0`` are accepted, so the slack basis is an
initial feasible point and no phase one is needed. Bland's rule is used
throughout: the LPs built in this package are highly degenerate (singular
reflection matrices give many ties) and must not cycle.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["LPError", "LPResult", "maximize"]


class LPError(ArithmeticError):
    """The LP could not be solved reliably; carries diagnostics."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float
    dual: np.ndarray
    iterations: int


def maximize(c, A, b, tol=1e-12, max_iter=None):
    """Solve ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

    Returns the optimal primal ``x``, the objective value and the optimal
    dual ``y >= 0`` (so that ``A.T y >= c`` and ``b.y == value``).
    Raises LPError when the problem is unbounded or the iteration cap is hit.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")
    if np.any(b < 0):
        raise ValueError("maximize requires b >= 0")
    if max_iter is None:
        max_iter = 50 * (m + n) + 100

    # tableau rows: constraints; columns: x, slacks, rhs
    tab = np.zeros((m, n + m + 1))
    tab[:, :n] = A
    tab[:, n:n + m] = np.eye(m)
    tab[:, -1] = b
    cost = np.concatenate([c, np.zeros(m)])
    basis = np.arange(n, n + m)
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))

    for it in range(max_iter):
        reduced = cost - cost[basis] @ tab[:, :-1]
        enter = np.flatnonzero(reduced > tol * scale)
        if enter.size == 0:
            break
        j = int(enter[0])
        col = tab[:, j]
        rows = np.flatnonzero(col > tol * scale)
        if rows.size == 0:
            raise LPError("LP is unbounded", column=j, iteration=it)
        ratios = tab[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        r = int(ties[np.argmin(basis[ties])])
        tab[r] /= tab[r, j]
        for i in range(m):
            if i != r and tab[i, j] != 0.0:
                tab[i] -= tab[i, j] * tab[r]
        basis[r] = j
    else:
        raise LPError("simplex iteration limit reached", iterations=max_iter)

    x_full = np.zeros(n + m)
    x_full[basis] = np.maximum(tab[:, -1], 0.0)
    # B^{-1} sits in the slack columns
    dual = np.maximum(cost[basis] @ tab[:, n:n + m], 0.0)
    x = x_full[:n]
    return LPResult(x=x, value=float(c @ x), dual=dual, iterations=it)
