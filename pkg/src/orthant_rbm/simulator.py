"""Euler simulation of the absorbed reflected Brownian motion.

Each step draws ``y = z + mu dt + G sqrt(dt) xi`` (``G G^T = Sigma``) and
projects it back onto the orthant with a discrete Skorokhod step: find a push
``dl >= 0`` with ``z = y + R dl >= 0`` and ``z_i dl_i = 0``. The step
problem is a small linear complementarity problem solved by active-set
enumeration. A trajectory is absorbed when it enters the ``eps_abs`` ball
around the apex (or the facet) or when no push exists, escaped beyond
``escape_radius``, and undecided at ``max_time``.
"""

import csv
import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numba as nb
import numpy as np

from .matrix import check_assumptions, infeasibility_witness
from .model import FacetSpec, ModelError, ModelSpec
from .rng import normal_block

__all__ = [
    "Outcome",
    "SimConfig",
    "StepOutcome",
    "TrajectoryResult",
    "BatchResult",
    "skorokhod_step",
    "simulate_trajectory",
    "simulate_facet_trajectory",
    "halfline_hitting",
    "halfline_model",
    "run_batch",
    "write_path_csv",
    "lexicographic_masks",
]

LCP_TOL = 1e-12
MAX_LCP_DIM = 20

# kernel outcome codes
_BALL, _INFEASIBLE, _ESCAPED, _UNDECIDED = 0, 1, 2, 3


class Outcome(str, enum.Enum):
    ABSORBED = "Absorbed"
    ESCAPED = "Escaped"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class SimConfig:
    """Discretization and stopping thresholds.

    ``eps_abs`` and ``escape_radius`` default to ``1e-3 (1 + |x0|)`` and
    ``50 (1 + |x0|)`` for the start ``x0`` (facet coordinates in facet mode);
    call :meth:`resolve` to pin them.
    """

    dt: float = 1e-3
    eps_abs: float = None
    escape_radius: float = None
    max_time: float = 100.0
    path_stride: int = None

    def resolve(self, x0):
        r = float(np.linalg.norm(x0))
        cfg = replace(
            self,
            eps_abs=1e-3 * (1 + r) if self.eps_abs is None else float(self.eps_abs),
            escape_radius=50.0 * (1 + r) if self.escape_radius is None else float(self.escape_radius),
        )
        cfg.validate()
        return cfg

    def validate(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.eps_abs < self.escape_radius:
            raise ValueError("need 0 < eps_abs < escape_radius")
        if not self.max_time >= self.dt:
            raise ValueError("max_time must be at least dt")
        if self.path_stride is not None and self.path_stride < 1:
            raise ValueError("path_stride must be a positive integer")

    @property
    def max_steps(self):
        return int(math.floor(self.max_time / self.dt + 1e-9))

    def to_dict(self):
        return {"dt": self.dt, "eps_abs": self.eps_abs,
                "escape_radius": self.escape_radius, "max_time": self.max_time}


@dataclass(frozen=True)
class StepOutcome:
    """Projected state and push of one Skorokhod step, or infeasibility."""

    state: np.ndarray = None
    push: np.ndarray = None

    @property
    def feasible(self):
        return self.state is not None


@dataclass(frozen=True)
class TrajectoryResult:
    outcome: Outcome
    time: float
    final_state: np.ndarray
    local_time: np.ndarray
    steps: int
    absorbed_by: str = None
    path: np.ndarray = None

    def to_dict(self):
        return {
            "outcome": self.outcome.value,
            "time": self.time,
            "steps": self.steps,
            "absorbed_by": self.absorbed_by,
            "final_state": self.final_state.tolist(),
            "local_time": self.local_time.tolist(),
        }


# ---------------------------------------------------------------------------
# numba kernels


@nb.njit(nogil=True, cache=True)
def _solve_small(A, b, k, x):
    """Gaussian elimination with partial pivoting on the leading k x k block.

    Returns False when a pivot falls below LCP_TOL times the largest entry.
    A and b are overwritten.
    """
    scale = 0.0
    for i in range(k):
        for j in range(k):
            v = abs(A[i, j])
            if v > scale:
                scale = v
    tol = LCP_TOL * scale
    for c in range(k):
        p = c
        best = abs(A[c, c])
        for r in range(c + 1, k):
            if abs(A[r, c]) > best:
                best = abs(A[r, c])
                p = r
        if best <= tol:
            return False
        if p != c:
            for j in range(k):
                A[c, j], A[p, j] = A[p, j], A[c, j]
            b[c], b[p] = b[p], b[c]
        for r in range(c + 1, k):
            f = A[r, c] / A[c, c]
            if f != 0.0:
                for j in range(c, k):
                    A[r, j] -= f * A[c, j]
                b[r] -= f * b[c]
    for r in range(k - 1, -1, -1):
        s = b[r]
        for j in range(r + 1, k):
            s -= A[r, j] * x[j]
        x[r] = s / A[r, r]
    return True


@nb.njit(nogil=True, cache=True)
def _lcp_project(R, y, masks, z_out, dl_out, idx, A, rhs, sol, zc):
    """Minimal-push solution of the step LCP over all active sets.

    ``masks`` lists the active sets in lexicographic order of their sorted
    index tuples; a later set replaces the incumbent only with a strictly
    smaller push, so ties go to the lexicographically smallest set.
    """
    d = y.shape[0]
    found = False
    best = np.inf
    for m in masks:
        k = 0
        for i in range(d):
            if (m >> i) & 1:
                idx[k] = i
                k += 1
        for a in range(k):
            rhs[a] = -y[idx[a]]
            for b in range(k):
                A[a, b] = R[idx[a], idx[b]]
        if not _solve_small(A, rhs, k, sol):
            continue
        ok = True
        total = 0.0
        for a in range(k):
            if sol[a] < -LCP_TOL:
                ok = False
                break
            if sol[a] > 0.0:
                total += sol[a]
        if not ok:
            continue
        for i in range(d):
            s = y[i]
            for a in range(k):
                if sol[a] > 0.0:
                    s += R[i, idx[a]] * sol[a]
            zc[i] = s
        for a in range(k):
            zc[idx[a]] = 0.0
        for i in range(d):
            if zc[i] < -LCP_TOL:
                ok = False
                break
        if not ok:
            continue
        if not found or total < best - LCP_TOL * (1.0 + best):
            best = total
            found = True
            for i in range(d):
                z_out[i] = zc[i] if zc[i] > 0.0 else 0.0
                dl_out[i] = 0.0
            for a in range(k):
                dl_out[idx[a]] = sol[a] if sol[a] > 0.0 else 0.0
    return found


@nb.njit(nogil=True, cache=True)
def _norm_masked(z, fmask):
    s = 0.0
    for i in range(z.shape[0]):
        if fmask[i]:
            s += z[i] * z[i]
    return math.sqrt(s)


@nb.njit(nogil=True, cache=True)
def _trajectory(R, G, mu, x0, dt, eps_abs, esc, max_steps, seed, index,
                fmask, masks, stride, path, z, L, y_last):
    """Run one trajectory; returns (code, steps, recorded path rows).

    On return ``z`` and ``L`` hold the last feasible state and local time;
    for an infeasible step ``y_last`` holds the unprojected point.
    """
    d = x0.shape[0]
    for i in range(d):
        z[i] = x0[i]
        L[i] = 0.0
    nrec = 0
    if stride > 0:
        path[0, 0] = 0.0
        for i in range(d):
            path[0, 1 + i] = z[i]
            path[0, 1 + d + i] = 0.0
        nrec = 1
    if _norm_masked(z, fmask) < eps_abs:
        return _BALL, 0, nrec
    sq = math.sqrt(dt)
    xi = np.empty(d)
    y = np.empty(d)
    zn = np.empty(d)
    dl = np.empty(d)
    nbuf = np.empty(4)
    idx = np.empty(d, dtype=np.int64)
    A = np.empty((d, d))
    rhs = np.empty(d)
    sol = np.empty(d)
    zc = np.empty(d)
    cur = -1
    code = _UNDECIDED
    steps = max_steps
    for step in range(max_steps):
        base = step * d
        for i in range(d):
            k = base + i
            blk = k >> 2
            if blk != cur:
                normal_block(seed, index, blk, nbuf)
                cur = blk
            xi[i] = nbuf[k & 3]
        neg = False
        for i in range(d):
            s = 0.0
            for j in range(i + 1):
                s += G[i, j] * xi[j]
            y[i] = z[i] + mu[i] * dt + sq * s
            if y[i] < 0.0:
                neg = True
        if neg:
            if not _lcp_project(R, y, masks, zn, dl, idx, A, rhs, sol, zc):
                for i in range(d):
                    y_last[i] = y[i]
                code = _INFEASIBLE
                steps = step + 1
                break
            for i in range(d):
                z[i] = zn[i]
                L[i] += dl[i]
        else:
            for i in range(d):
                z[i] = y[i]
        if stride > 0 and (step + 1) % stride == 0:
            path[nrec, 0] = (step + 1) * dt
            for i in range(d):
                path[nrec, 1 + i] = z[i]
                path[nrec, 1 + d + i] = L[i]
            nrec += 1
        r = _norm_masked(z, fmask)
        if r < eps_abs:
            code = _BALL
            steps = step + 1
            break
        if r > esc:
            code = _ESCAPED
            steps = step + 1
            break
    if stride > 0 and steps % stride != 0:
        path[nrec, 0] = steps * dt
        for i in range(d):
            path[nrec, 1 + i] = z[i]
            path[nrec, 1 + d + i] = L[i]
        nrec += 1
    return code, steps, nrec


@nb.njit(nogil=True, cache=True)
def _batch(R, G, mu, x0, dt, eps_abs, esc, max_steps, seed, lo, hi,
           fmask, masks, codes, steps, y_inf):
    d = x0.shape[0]
    z = np.empty(d)
    L = np.empty(d)
    y_last = np.empty(d)
    path = np.empty((1, 1 + 2 * d))
    for t in range(lo, hi):
        c, s, _ = _trajectory(R, G, mu, x0, dt, eps_abs, esc, max_steps, seed,
                              np.uint64(t), fmask, masks, 0, path, z, L, y_last)
        codes[t - lo] = c
        steps[t - lo] = s
        if c == _INFEASIBLE:
            for i in range(d):
                y_inf[t - lo, i] = y_last[i]


# ---------------------------------------------------------------------------
# Python-facing API


def lexicographic_masks(d):
    """Bit masks of the non-empty subsets of range(d), lexicographically."""
    if d > MAX_LCP_DIM:
        raise ValueError(f"active-set enumeration limited to d <= {MAX_LCP_DIM}")
    order = sorted(
        (tuple(i for i in range(d) if (m >> i) & 1) for m in range(1, 1 << d)))
    return np.array([sum(1 << i for i in s) for s in order], dtype=np.int64)


_MASK_CACHE = {}


def _masks(d):
    if d not in _MASK_CACHE:
        _MASK_CACHE[d] = lexicographic_masks(d)
    return _MASK_CACHE[d]


def skorokhod_step(R, y):
    """Project a tentative point onto the orthant along the columns of ``R``.

    Returns a StepOutcome with the projected state and the push, or an
    infeasible StepOutcome (``state is None``) when no push exists.
    """
    R = np.ascontiguousarray(R, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    d = y.shape[0]
    if R.shape != (d, d):
        raise ValueError("R and y dimensions disagree")
    if np.all(y >= 0):
        return StepOutcome(y.copy(), np.zeros(d))
    z, dl = np.empty(d), np.empty(d)
    work = (np.empty(d, dtype=np.int64), np.empty((d, d)), np.empty(d),
            np.empty(d), np.empty(d))
    if _lcp_project(R, y, _masks(d), z, dl, *work):
        return StepOutcome(z, dl)
    return StepOutcome()


def _cholesky(sigma):
    return np.ascontiguousarray(np.linalg.cholesky(sigma))


def _check_start(spec, x0):
    x0 = np.ascontiguousarray(x0, dtype=float)
    if x0.shape != (spec.dimension,):
        raise ValueError(f"start must have length {spec.dimension}")
    if np.any(x0 < 0) or not np.all(np.isfinite(x0)):
        raise ValueError(f"start {x0.tolist()} is not in the orthant")
    return x0


def _require_scientific(spec, facet, allow_degenerate):
    spec.require_valid()
    if allow_degenerate:
        return
    if spec.dimension < 2:
        raise ModelError("one-dimensional models need allow_degenerate=True")
    report = check_assumptions(spec, facet)
    if not report.all_hold:
        raise ModelError("model violates the structural assumptions; "
                         "pass allow_degenerate=True for calibration runs", report)


def _facet_mask(spec, facet):
    if facet is None:
        return np.ones(spec.dimension, dtype=np.bool_), None
    facet.check(spec.dimension)
    if facet.is_full(spec.dimension):
        return np.ones(spec.dimension, dtype=np.bool_), None
    return facet.mask(spec.dimension), facet


def _facet_start_norm(x0, fmask):
    return float(np.linalg.norm(x0[fmask]))


def _single(spec, x0, config, seed, index, facet, allow_degenerate):
    _require_scientific(spec, facet, allow_degenerate)
    x0 = _check_start(spec, x0)
    fmask, facet = _facet_mask(spec, facet)
    cfg = config.resolve(x0[fmask])
    d = spec.dimension
    stride = cfg.path_stride or 0
    rows = cfg.max_steps // stride + 2 if stride else 1
    path = np.empty((rows, 1 + 2 * d))
    z, L, y_last = np.empty(d), np.empty(d), np.empty(d)
    code, steps, nrec = _trajectory(
        np.ascontiguousarray(spec.reflection), _cholesky(spec.sigma),
        np.ascontiguousarray(spec.mu), x0, cfg.dt, cfg.eps_abs,
        cfg.escape_radius, cfg.max_steps, np.uint64(seed), np.uint64(index),
        fmask, _masks(d), stride, path, z, L, y_last)
    absorbed_by = None
    if code == _BALL:
        outcome, absorbed_by = Outcome.ABSORBED, "ball"
    elif code == _INFEASIBLE:
        outcome, absorbed_by = _resolve_infeasible(spec.reflection, y_last, facet)
    elif code == _ESCAPED:
        outcome = Outcome.ESCAPED
    else:
        outcome = Outcome.UNDECIDED
    return TrajectoryResult(
        outcome=outcome, time=steps * cfg.dt, final_state=z.copy(),
        local_time=L.copy(), steps=int(steps), absorbed_by=absorbed_by,
        path=path[:nrec].copy() if stride else None)


def _resolve_infeasible(R, y, facet):
    if facet is None:
        return Outcome.ABSORBED, "infeasible"
    if infeasibility_witness(R, y, rows=facet.zero_based) is not None:
        return Outcome.ABSORBED, "infeasible"
    return Outcome.UNDECIDED, "infeasible_outside_facet"


def simulate_trajectory(spec, x0, config=SimConfig(), seed=0, index=0,
                        allow_degenerate=False):
    """Simulate one trajectory absorbed at the apex.

    Deterministic in ``(seed, index)``. Raises ModelError when the model
    violates the assumptions unless ``allow_degenerate`` is set.
    """
    return _single(spec, x0, config, seed, index, None, allow_degenerate)


def simulate_facet_trajectory(spec, facet, x0, config=SimConfig(), seed=0,
                              index=0, allow_degenerate=False):
    """Simulate one trajectory absorbed at the facet ``x_F = 0``.

    Absorption and escape are measured on the facet coordinates only; the
    other faces keep reflecting. An infeasible step counts as absorption
    when a Farkas witness supported on the facet rows exists.
    """
    return _single(spec, x0, config, seed, index, facet, allow_degenerate)


def halfline_model(sigma2, mu):
    """One-dimensional model used as a calibration oracle."""
    return ModelSpec(1, [[sigma2]], [mu], [[1.0]])


def halfline_hitting(sigma2, mu, x0, config=SimConfig(), seed=0, index=0):
    """Brownian motion with drift on the half-line, absorbed at 0.

    The exact absorption probability is ``exp(-2 mu x0 / sigma2)``.
    """
    if not mu > 0 or not x0 > 0:
        raise ValueError("halfline oracle needs mu > 0 and x0 > 0")
    return simulate_trajectory(halfline_model(sigma2, mu), [x0], config, seed,
                               index, allow_degenerate=True)


@dataclass(frozen=True)
class BatchResult:
    """Outcomes of trajectories ``0 .. n-1`` for one start point."""

    outcomes: np.ndarray  # Outcome codes: 0 absorbed, 1 escaped, 2 undecided
    steps: np.ndarray
    absorbed_ball: int
    absorbed_infeasible: int
    infeasible_outside_facet: int
    config: SimConfig

    ABSORBED, ESCAPED, UNDECIDED = 0, 1, 2

    def counts(self):
        return tuple(int(np.sum(self.outcomes == k)) for k in (0, 1, 2))

    def truncate(self, max_time):
        """Outcomes as if the horizon had been ``max_time`` instead."""
        limit = int(math.floor(max_time / self.config.dt + 1e-9))
        out = self.outcomes.copy()
        out[self.steps > limit] = self.UNDECIDED
        return out


def _worker_cap():
    env = os.environ.get("ORTHANT_RBM_THREADS")
    return int(env) if env else None


def run_batch(spec, x0, n, config=SimConfig(), seed=0, facet=None, workers=1,
              allow_degenerate=False):
    """Simulate trajectories ``0 .. n-1`` from ``x0``.

    Work is split into contiguous index chunks over ``workers`` threads (the
    kernel releases the GIL); every trajectory depends only on
    ``(seed, index)`` so the result does not depend on ``workers``.
    ``ORTHANT_RBM_THREADS`` caps the number of threads.
    """
    _require_scientific(spec, facet, allow_degenerate)
    x0 = _check_start(spec, x0)
    if n < 1:
        raise ValueError("need at least one trajectory")
    fmask, facet = _facet_mask(spec, facet)
    cfg = config.resolve(x0[fmask])
    cap = _worker_cap()
    workers = max(1, min(int(workers), cap) if cap else int(workers))
    d = spec.dimension
    codes = np.empty(n, dtype=np.int8)
    steps = np.empty(n, dtype=np.int64)
    y_inf = np.zeros((n, d))
    args = (np.ascontiguousarray(spec.reflection), _cholesky(spec.sigma),
            np.ascontiguousarray(spec.mu), x0, cfg.dt, cfg.eps_abs,
            cfg.escape_radius, cfg.max_steps, np.uint64(seed))
    masks = _masks(d)
    bounds = np.linspace(0, n, workers + 1).astype(np.int64)

    def work(k):
        lo, hi = int(bounds[k]), int(bounds[k + 1])
        if hi > lo:
            _batch(*args, lo, hi, fmask, masks, codes[lo:hi], steps[lo:hi],
                   y_inf[lo:hi])

    if workers == 1:
        work(0)
    else:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, range(workers)))

    outcomes = np.full(n, BatchResult.UNDECIDED, dtype=np.int8)
    outcomes[codes == _BALL] = BatchResult.ABSORBED
    outcomes[codes == _ESCAPED] = BatchResult.ESCAPED
    infeasible = np.flatnonzero(codes == _INFEASIBLE)
    outside = 0
    for t in infeasible:
        outcome, _ = _resolve_infeasible(spec.reflection, y_inf[t], facet)
        if outcome is Outcome.ABSORBED:
            outcomes[t] = BatchResult.ABSORBED
        else:
            outside += 1
    return BatchResult(
        outcomes=outcomes, steps=steps,
        absorbed_ball=int(np.sum(codes == _BALL)),
        absorbed_infeasible=int(infeasible.size - outside),
        infeasible_outside_facet=outside, config=cfg)


def write_path_csv(result, path):
    """Write a sampled path as ``t,z1..zd,l1..ld`` rows."""
    if result.path is None:
        raise ValueError("trajectory was simulated without path sampling")
    d = (result.path.shape[1] - 1) // 2
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"z{i}" for i in range(1, d + 1)]
                   + [f"l{i}" for i in range(1, d + 1)])
        for row in result.path:
            w.writerow([repr(float(v)) for v in row])
