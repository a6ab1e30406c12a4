"""Residuals of exponential candidates in the absorption and dual PDEs.

Boundary operators act exactly on exponentials, so only the interior
generator gets a finite-difference cross-check.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .decay import SingularMatrixError, dual_boundary_matrix, stationary_rates

__all__ = [
    "ResidualReport",
    "absorption_pde_residuals",
    "dual_pde_residuals",
    "fd_generator_residuals",
    "fd_generator_check",
]


@dataclass(frozen=True)
class ResidualReport:
    generator_residual: float = None
    neumann_residuals: np.ndarray = None
    dual_generator_residual: float = None
    dual_boundary_residuals: np.ndarray = None
    valid: bool = True
    status: str = "ok"

    def to_dict(self):
        def arr(v):
            return None if v is None else np.asarray(v).tolist()
        return {
            "generator_residual": self.generator_residual,
            "neumann_residuals": arr(self.neumann_residuals),
            "dual_generator_residual": self.dual_generator_residual,
            "dual_boundary_residuals": arr(self.dual_boundary_residuals),
            "valid": self.valid,
            "status": self.status,
        }


def absorption_pde_residuals(sigma, mu, R, a):
    """Residuals of ``exp(a.x)`` divided by the function itself.

    Interior: ``a Sigma a / 2 + a.mu``. Face ``i``: ``a.R_i``. A zero vector
    satisfies both trivially but cannot vanish at infinity, so it is
    reported with ``valid=False``.
    """
    sigma = np.asarray(sigma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    R = np.asarray(R, dtype=float)
    a = np.asarray(a, dtype=float)
    gen = float(0.5 * a @ sigma @ a + a @ mu)
    neumann = a @ R
    if not np.any(a):
        return ResidualReport(gen, neumann, valid=False,
                              status="zero vector: no decay at infinity")
    return ResidualReport(gen, neumann)


def dual_pde_residuals(sigma, mu, R, c=None):
    """Residuals of the candidate density ``exp(-c.x)`` in the dual PDE.

    Interior: ``c Sigma c / 2 + mu.c``; face ``i``: ``-R*_i.c - 2 mu_i``.
    Without ``c`` the stationary rates are used, which needs an invertible
    ``R``; a singular ``R`` gives an ``inapplicable`` report.
    """
    sigma = np.asarray(sigma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if c is None:
        try:
            c = stationary_rates(sigma, R, mu).c
        except SingularMatrixError as exc:
            return ResidualReport(valid=False, status=f"inapplicable: {exc}")
    c = np.asarray(c, dtype=float)
    r_star = dual_boundary_matrix(sigma, R)
    gen = float(0.5 * c @ sigma @ c + mu @ c)
    boundary = -(r_star.T @ c) - 2.0 * mu
    return ResidualReport(dual_generator_residual=gen,
                          dual_boundary_residuals=boundary)


def _grid(box, points):
    lo, hi = (np.asarray(v, dtype=float) for v in box)
    axes = [np.linspace(l, h, points) for l, h in zip(lo, hi)]
    return np.array(list(itertools.product(*axes)))


def fd_generator_residuals(sigma, mu, a, h, box, points=5):
    """Central-difference generator of ``exp(a.x)`` minus its exact value.

    ``box`` is ``(lower, upper)`` corner arrays; the stencil reaches ``h``
    beyond the box, so the lower corner must exceed ``h``. Returns the grid
    and the signed residual at each grid point.
    """
    sigma = np.asarray(sigma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    a = np.asarray(a, dtype=float)
    if not h > 0:
        raise ValueError("grid step must be positive")
    lo = np.asarray(box[0], dtype=float)
    if np.any(lo - h <= 0):
        raise ValueError("box too close to the boundary: stencil leaves the orthant")
    X = _grid(box, points)
    d = a.size
    E = np.eye(d) * h

    def f(pts):
        return np.exp(pts @ a)

    fx = f(X)
    gen = np.zeros(len(X))
    for i in range(d):
        fp, fm = f(X + E[i]), f(X - E[i])
        gen += mu[i] * (fp - fm) / (2 * h)
        gen += 0.5 * sigma[i, i] * (fp - 2 * fx + fm) / h**2
        for j in range(i + 1, d):
            if sigma[i, j] == 0.0:
                continue
            mixed = (f(X + E[i] + E[j]) - f(X + E[i] - E[j])
                     - f(X - E[i] + E[j]) + f(X - E[i] - E[j])) / (4 * h**2)
            gen += sigma[i, j] * mixed  # both (i,j) and (j,i) halves
    exact = (0.5 * a @ sigma @ a + a @ mu) * fx
    return X, gen - exact


def fd_generator_check(sigma, mu, a, h, box, points=5):
    """Max absolute finite-difference generator error over the grid; O(h^2)."""
    _, res = fd_generator_residuals(sigma, mu, a, h, box, points)
    return float(np.max(np.abs(res)))
