"""S-matrix certificates, assumption checks and the Perron construction.

Index sets that appear in reports are 1-based, matching the facet format.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .model import FacetSpec, facet_restrict
from .simplex import LPError, maximize

__all__ = [
    "STRICT_TOL",
    "SCertificate",
    "AssumptionReport",
    "Lemma2Certificate",
    "CertificateError",
    "is_s_matrix",
    "is_completely_s",
    "check_assumptions",
    "lemma1_check",
    "power_iteration",
    "matrix_rank",
    "lemma2_certificate",
    "infeasibility_witness",
    "subsets",
]

STRICT_TOL = 1e-9
MAX_ENUM_DIM = 20
RANK_TOL = 1e-10


class CertificateError(ArithmeticError):
    """A constructed certificate fails its own invariants."""


@dataclass(frozen=True)
class SCertificate:
    """Verdict on S-membership with a checkable witness.

    ``margin`` is the LP optimum ``max_x min_i (Mx)_i`` over the simplex;
    ``marginal`` flags ``|margin| <= STRICT_TOL``, where the verdict rests on
    the tolerance rather than a clear sign.
    """

    verdict: bool
    primal: np.ndarray = None
    dual: np.ndarray = None
    margin: float = 0.0
    marginal: bool = False

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "primal": None if self.primal is None else self.primal.tolist(),
            "dual": None if self.dual is None else self.dual.tolist(),
            "margin": self.margin,
            "marginal": self.marginal,
        }


def _inf_norm(M):
    return float(np.max(np.sum(np.abs(M), axis=1))) if M.size else 0.0


def is_s_matrix(M):
    """Decide whether some ``x >= 0`` gives ``M x > 0``.

    Solves ``max t  s.t. M x >= t 1, sum(x) = 1, x >= 0`` in its matrix-game
    form: after shifting ``M`` to a positive matrix ``A = M + s`` the value
    ``V = t + s`` satisfies ``1 / V = max 1.w  s.t. A^T w <= 1, w >= 0``,
    whose optimal dual is the column strategy ``x`` and whose primal is the
    row strategy ``u``. When ``t <= STRICT_TOL`` the row strategy satisfies
    ``u^T M <= t``, which is the dual certificate of the theorem of the
    alternative.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValueError(f"is_s_matrix needs a non-empty square matrix, got {M.shape}")
    n = M.shape[0]
    shift = 1.0 - float(M.min())
    A = M + shift
    try:
        res = maximize(np.ones(n), A.T, np.ones(n))
    except LPError as exc:
        raise LPError(f"S-matrix LP failed: {exc}", matrix=M.tolist(),
                      **exc.diagnostics) from exc
    if not res.value > 0:
        raise LPError("S-matrix LP returned a non-positive game value",
                      matrix=M.tolist(), value=res.value)
    value = 1.0 / res.value
    t = value - shift
    marginal = abs(t) <= STRICT_TOL
    scale = max(_inf_norm(M), 1.0)
    if t > STRICT_TOL:
        x = res.dual / res.dual.sum()
        if not np.min(M @ x) > STRICT_TOL * 0.5:
            raise LPError("primal certificate failed verification",
                          matrix=M.tolist(), margin=t, min_mx=float(np.min(M @ x)))
        return SCertificate(True, primal=x, margin=t, marginal=marginal)
    u = res.x / res.x.sum()
    if not np.max(u @ M) <= STRICT_TOL * scale:
        raise LPError("dual certificate failed verification",
                      matrix=M.tolist(), margin=t, max_um=float(np.max(u @ M)))
    return SCertificate(False, dual=u, margin=t, marginal=marginal)


def subsets(n, proper=False):
    """Non-empty subsets of range(n) by increasing size, lexicographic within."""
    top = n - 1 if proper else n
    for k in range(1, top + 1):
        yield from combinations(range(n), k)


def is_completely_s(M):
    """Return ``(True, None)`` or ``(False, first failing 1-based index set)``.

    Enumerates all ``2^n - 1`` principal sub-matrices; ``n <= 20``.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n > MAX_ENUM_DIM:
        raise ValueError(f"completely-S enumeration limited to n <= {MAX_ENUM_DIM}")
    for idx in subsets(n):
        if not is_s_matrix(M[np.ix_(idx, idx)]).verdict:
            return False, tuple(i + 1 for i in idx)
    return True, None


@dataclass(frozen=True)
class AssumptionReport:
    a1_not_s: bool
    a1_certificate: SCertificate
    a2_strict_submatrices: bool
    a2_failing_set: tuple
    a3_positive_drift: bool
    a3_failing_coordinate: int
    facet_mode: FacetSpec = None

    @property
    def all_hold(self):
        return self.a1_not_s and self.a2_strict_submatrices and self.a3_positive_drift

    def to_dict(self):
        return {
            "a1_not_s": self.a1_not_s,
            "a1_certificate": self.a1_certificate.to_dict(),
            "a2_strict_submatrices": self.a2_strict_submatrices,
            "a2_failing_set": None if self.a2_failing_set is None else list(self.a2_failing_set),
            "a3_positive_drift": self.a3_positive_drift,
            "a3_failing_coordinate": self.a3_failing_coordinate,
            "facet": None if self.facet_mode is None else list(self.facet_mode.indices),
            "all_hold": self.all_hold,
        }


def check_assumptions(spec, facet=None):
    """Evaluate the three structural assumptions on ``spec``.

    Apex mode: R is not S, every strict principal sub-matrix is S (which is
    the same as every strict principal sub-matrix being completely-S), and
    the drift is positive. Facet mode: the facet block is not S and every
    principal sub-matrix whose index set does not contain the facet is S.
    """
    R = spec.reflection
    d = spec.dimension
    if d > MAX_ENUM_DIM:
        raise ValueError(f"assumption check limited to d <= {MAX_ENUM_DIM}")
    if facet is None:
        a1 = is_s_matrix(R)
        candidates = subsets(d, proper=True)
    else:
        _, _, R_f = facet_restrict(spec, facet)
        a1 = is_s_matrix(R_f)
        fset = set(facet.zero_based.tolist())
        candidates = (s for s in subsets(d) if not fset.issubset(s))
    failing = None
    for idx in candidates:
        if not is_s_matrix(R[np.ix_(idx, idx)]).verdict:
            failing = tuple(i + 1 for i in idx)
            break
    nonpos = np.flatnonzero(spec.mu <= 0)
    return AssumptionReport(
        a1_not_s=not a1.verdict,
        a1_certificate=a1,
        a2_strict_submatrices=failing is None,
        a2_failing_set=failing,
        a3_positive_drift=nonpos.size == 0,
        a3_failing_coordinate=int(nonpos[0]) + 1 if nonpos.size else None,
        facet_mode=facet,
    )


def lemma1_check(R):
    """Every row has a non-zero off-diagonal entry: ``(ok, first bad row)``."""
    R = np.asarray(R, dtype=float)
    off = R - np.diag(np.diag(R))
    bad = np.flatnonzero(~np.any(off != 0.0, axis=1))
    if bad.size:
        return False, int(bad[0]) + 1
    return True, None


def power_iteration(T, max_iter=200, tol=1e-14, v0=None):
    """Dominant eigenpair of an entrywise-positive matrix.

    Returns ``(r, v, iterations)`` with ``v > 0`` normalized to unit sum.
    Stops when the sup-norm relative change of ``v`` drops below ``tol``.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    v = np.full(n, 1.0 / n) if v0 is None else np.asarray(v0, dtype=float) / np.sum(v0)
    it = 0
    for it in range(1, max_iter + 1):
        w = T @ v
        w /= w.sum()
        change = np.max(np.abs(w - v)) / np.max(np.abs(w))
        v = w
        if change < tol:
            break
    r = float((T @ v).sum() / v.sum())
    return r, v, it


def matrix_rank(R, rel_tol=RANK_TOL):
    """Rank from singular values with a threshold relative to the largest."""
    s = np.linalg.svd(np.asarray(R, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0, s
    return int(np.sum(s > rel_tol * s[0])), s


@dataclass(frozen=True)
class Lemma2Certificate:
    rank: int
    right_kernel: np.ndarray
    a_prime: np.ndarray
    perron_matrix: np.ndarray
    perron_root: float
    transfer: np.ndarray
    iterations: int

    def check(self, R):
        """Return a dict of invariant name -> bool."""
        R = np.asarray(R, dtype=float)
        d = R.shape[0]
        U, a = self.right_kernel, self.a_prime
        scale_u = 1e-10 * _inf_norm(R) * np.max(np.abs(U))
        scale_a = 1e-10 * _inf_norm(R) * np.max(np.abs(a))
        T = self.perron_matrix
        return {
            "rank": self.rank == d - 1,
            "right_kernel_residual": bool(np.max(np.abs(R @ U)) <= scale_u),
            "left_kernel_residual": bool(np.max(np.abs(a @ R)) <= scale_a),
            "right_kernel_positive": bool(np.all(U > 0)),
            "left_kernel_positive": bool(np.all(a > 0)),
            "perron_root": abs(self.perron_root - 2.0) <= 1e-8,
            "perron_matrix_positive": bool(np.all(T > 0)),
            "perron_matrix_unit_diagonal": bool(np.allclose(np.diag(T), 1.0, rtol=0, atol=1e-12)),
        }

    def to_dict(self):
        return {
            "rank": self.rank,
            "right_kernel": self.right_kernel.tolist(),
            "a_prime": self.a_prime.tolist(),
            "perron_matrix": self.perron_matrix.tolist(),
            "perron_root": self.perron_root,
            "iterations": self.iterations,
        }


def lemma2_certificate(R, max_iter=200, tol=1e-14):
    """Positive right and left kernel vectors of a singular, non-S ``R``.

    For each ``j`` an S-certificate ``x`` of ``R`` with row and column ``j``
    removed is padded with a zero at ``j``; ``(R x)_j`` is then negative
    (otherwise ``R`` would be S) and ``x`` is rescaled so that this entry is
    ``-1``. With ``P`` the matrix of these columns, ``T = 2 I + R P`` is
    positive with unit diagonal, its Perron root is 2 when ``det R = 0`` and
    its right and left Perron vectors give ``U = P V`` with ``R U = 0`` and
    ``a' R = 0``.
    """
    R = np.asarray(R, dtype=float)
    d = R.shape[0]
    if d < 2:
        raise CertificateError("the kernel construction needs d >= 2")
    P = np.zeros((d, d))
    for j in range(d):
        keep = [i for i in range(d) if i != j]
        cert = is_s_matrix(R[np.ix_(keep, keep)])
        if not cert.verdict:
            raise CertificateError(
                f"principal sub-matrix without index {j + 1} is not S")
        x = np.zeros(d)
        x[keep] = cert.primal
        y_jj = float(R[j] @ x)
        if not y_jj < 0:
            raise CertificateError(
                f"column {j + 1}: (R x)_j = {y_jj:.3g} >= 0, so R is S")
        P[:, j] = x / -y_jj
    T = 2.0 * np.eye(d) + R @ P
    if not np.all(T > 0):
        raise CertificateError("Perron matrix is not entrywise positive")
    r, V, it_r = power_iteration(T, max_iter=max_iter, tol=tol)
    r_left, W, it_l = power_iteration(T.T, max_iter=max_iter, tol=tol)
    if abs(r - 2.0) > 1e-6:
        raise CertificateError(
            f"Perron root {r:.12g} differs from 2: assumptions violated or det R != 0")
    U = P @ V
    U = U / U.sum()
    a_prime = W / W.sum()
    if not (np.all(U > 0) and np.all(a_prime > 0)):
        raise CertificateError("kernel vectors are not strictly positive")
    rank, _ = matrix_rank(R)
    return Lemma2Certificate(rank=rank, right_kernel=U, a_prime=a_prime,
                             perron_matrix=T, perron_root=r, transfer=P,
                             iterations=max(it_r, it_l))


def infeasibility_witness(R, y, rows=None, tol=1e-12):
    """Farkas witness that no ``dl >= 0`` gives ``y + R dl >= 0`` on ``rows``.

    Solves ``max -y_F.u  s.t. R_F^T u <= 0, sum(u) <= 1, u >= 0`` over the
    selected rows ``F`` (default: all). Returns ``u`` normalized to unit sum,
    embedded in R^d, or None when the optimum does not exceed ``tol``.
    """
    R = np.asarray(R, dtype=float)
    y = np.asarray(y, dtype=float)
    d = R.shape[0]
    rows = np.arange(d) if rows is None else np.asarray(rows, dtype=np.intp)
    RF = R[rows, :]
    A = np.vstack([RF.T, np.ones((1, rows.size))])
    b = np.zeros(d + 1)
    b[-1] = 1.0
    res = maximize(-y[rows], A, b)
    if res.value <= tol * max(1.0, float(np.max(np.abs(y)))):
        return None
    u = np.zeros(d)
    u[rows] = res.x / res.x.sum()
    return u
