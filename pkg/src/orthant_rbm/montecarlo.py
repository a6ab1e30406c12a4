"""Monte Carlo absorption probabilities and the limit experiments.

All statistics are pure functions of integer outcome counts, so reports are
reproducible from ``(seed, n)`` regardless of how the work was scheduled.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .decay import Normalization, Verdict, classify, compute_decay_vector, predicted_absorption
from .simulator import BatchResult, SimConfig, halfline_model, run_batch

__all__ = [
    "Z95",
    "EstimateReport",
    "SweepReport",
    "wilson_interval",
    "binomial_sigma",
    "closed_form_tolerance",
    "estimate_absorption",
    "estimate_halfline",
    "compare_exponential",
    "boundary_limit_experiment",
    "dichotomy_experiment",
]

Z95 = 1.96
UNRELIABLE_UNDECIDED = 0.05


def wilson_interval(successes, n, z=Z95):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need n >= 1")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    # the bound at an extreme count is exactly 0 or 1; rounding must not cross p
    lo = 0.0 if successes == 0 else min(center - half, p)
    hi = 1.0 if successes == n else max(center + half, p)
    return max(0.0, lo), min(1.0, hi)


def binomial_sigma(p, n):
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def closed_form_tolerance(p, n, floor=0.02):
    """Allowance ``max(3 sigma, floor)`` for comparing an estimate to ``p``.

    ``floor`` absorbs the systematic O(sqrt(dt)) bias of the Euler scheme.
    """
    return max(3.0 * binomial_sigma(p, n), floor)


@dataclass(frozen=True)
class EstimateReport:
    n: int
    absorbed: int
    escaped: int
    undecided: int
    p_hat: float
    ci_low: float
    ci_high: float
    start: tuple
    prediction: float = None
    z_score: float = None
    absorbed_ball: int = 0
    absorbed_infeasible: int = 0
    infeasible_outside_facet: int = 0
    facet: tuple = None
    config: dict = field(default_factory=dict)

    @property
    def bounds(self):
        """Absorption probability bracket when undecided runs go either way."""
        return self.absorbed / self.n, (self.absorbed + self.undecided) / self.n

    @property
    def undecided_fraction(self):
        return self.undecided / self.n

    @property
    def unreliable(self):
        return self.undecided_fraction > UNRELIABLE_UNDECIDED

    @property
    def sigma(self):
        return binomial_sigma(self.p_hat, self.n)

    def z_against(self, p):
        return _z_score(self.p_hat, p, self.n)

    def to_dict(self):
        return {
            "n": self.n,
            "absorbed": self.absorbed,
            "escaped": self.escaped,
            "undecided": self.undecided,
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "bounds": list(self.bounds),
            "prediction": self.prediction,
            "z_score": self.z_score,
            "start": list(self.start),
            "facet": None if self.facet is None else list(self.facet),
            "unreliable": self.unreliable,
            "diagnostics": {
                "absorbed_ball": self.absorbed_ball,
                "absorbed_infeasible": self.absorbed_infeasible,
                "infeasible_outside_facet": self.infeasible_outside_facet,
            },
            "config": self.config,
        }


def _z_score(p_hat, p, n):
    se = binomial_sigma(p_hat, n)
    if se == 0.0:
        se = binomial_sigma(p, n)
    if se == 0.0:
        return 0.0 if p_hat == p else math.copysign(math.inf, p_hat - p)
    return (p_hat - p) / se


def _report(counts, n, start, prediction, batch, facet):
    absorbed, escaped, undecided = counts
    p_hat = absorbed / n
    lo, hi = wilson_interval(absorbed, n)
    return EstimateReport(
        n=n, absorbed=absorbed, escaped=escaped, undecided=undecided,
        p_hat=p_hat, ci_low=lo, ci_high=hi, start=tuple(float(v) for v in start),
        prediction=prediction,
        z_score=None if prediction is None else _z_score(p_hat, prediction, n),
        absorbed_ball=batch.absorbed_ball,
        absorbed_infeasible=batch.absorbed_infeasible,
        infeasible_outside_facet=batch.infeasible_outside_facet,
        facet=None if facet is None else tuple(facet.indices),
        config=batch.config.to_dict(),
    )


def _decay_or_none(spec, facet, normalization):
    if spec.dimension < 2 or classify(spec, facet).verdict is not Verdict.DUAL_SKEW_SYMMETRIC:
        return None
    return compute_decay_vector(spec, facet, normalization)


def estimate_absorption(spec, x, n, config=SimConfig(), seed=0, facet=None,
                        workers=1, allow_degenerate=False,
                        normalization=Normalization.HARMONIC, decay=None):
    """Absorbed fraction over trajectories ``0 .. n-1`` with a Wilson 95% CI.

    When the model is dual skew symmetric the exponential prediction and a
    z-score are attached. Reports with more than 5% undecided runs are
    flagged ``unreliable`` but still returned.
    """
    x = np.asarray(x, dtype=float)
    batch = run_batch(spec, x, n, config, seed, facet, workers, allow_degenerate)
    if decay is None:
        decay = _decay_or_none(spec, facet, normalization)
    prediction = None if decay is None else float(predicted_absorption(decay, x))
    return _report(batch.counts(), n, x, prediction, batch, facet)


def estimate_halfline(sigma2, mu, x0, n, config=SimConfig(), seed=0, workers=1):
    """Calibration run on the half-line with prediction ``exp(-2 mu x0 / sigma2)``."""
    if not mu > 0 or not x0 > 0:
        raise ValueError("halfline oracle needs mu > 0 and x0 > 0")
    spec = halfline_model(sigma2, mu)
    batch = run_batch(spec, [x0], n, config, seed, None, workers, allow_degenerate=True)
    return _report(batch.counts(), n, [x0], math.exp(-2 * mu * x0 / sigma2), batch, None)


@dataclass(frozen=True)
class SweepReport:
    parameter: str
    values: tuple
    reports: tuple
    extra: tuple = ()
    checks: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(zip(self.values, self.reports))

    def to_dict(self):
        entries = []
        for i, (v, r) in enumerate(self):
            entry = {"param": v, "estimate": r.to_dict()}
            if self.extra:
                entry.update(self.extra[i])
            entries.append(entry)
        return {"parameter": self.parameter, "entries": entries, "checks": self.checks}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["param", "p_hat", "ci_low", "ci_high", "prediction"])
            for v, r in self:
                param = ";".join(repr(float(c)) for c in v) if isinstance(v, (tuple, list)) else repr(v)
                w.writerow([param, repr(r.p_hat), repr(r.ci_low), repr(r.ci_high),
                            "" if r.prediction is None else repr(r.prediction)])


def compare_exponential(spec, points, n, config=SimConfig(), seed=0, facet=None,
                        workers=1):
    """Estimates at each point against both decay normalizations."""
    cls = classify(spec, facet)
    if cls.verdict is not Verdict.DUAL_SKEW_SYMMETRIC:
        raise ValueError(f"model is {cls.verdict.value}, not DualSkewSymmetric")
    harmonic = compute_decay_vector(spec, facet, Normalization.HARMONIC)
    literal = compute_decay_vector(spec, facet, Normalization.PAPER_LITERAL)
    values, reports, extra = [], [], []
    for x in points:
        x = np.asarray(x, dtype=float)
        rep = estimate_absorption(spec, x, n, config, seed, facet, workers, decay=harmonic)
        p_lit = float(predicted_absorption(literal, x))
        values.append(tuple(float(v) for v in x))
        reports.append(rep)
        extra.append({
            "harmonic_prediction": rep.prediction,
            "harmonic_z": rep.z_score,
            "paper_prediction": p_lit,
            "paper_z": rep.z_against(p_lit),
        })
    return SweepReport("start", tuple(values), tuple(reports), tuple(extra))


def boundary_limit_experiment(spec, direction, scales, n, config=SimConfig(),
                              seed=0, facet=None, workers=1):
    """Estimates along the ray ``scale * direction``.

    ``checks['contrast']`` is ``p_hat`` at the smallest scale minus ``p_hat``
    at the largest.
    """
    direction = np.asarray(direction, dtype=float)
    if np.any(direction < 0) or not np.any(direction > 0):
        raise ValueError("direction must be a non-zero vector in the orthant")
    direction = direction / np.linalg.norm(direction)
    scales = sorted(float(s) for s in scales)
    reports = tuple(
        estimate_absorption(spec, s * direction, n, config, seed, facet, workers)
        for s in scales)
    checks = {"contrast": reports[0].p_hat - reports[-1].p_hat}
    return SweepReport("scale", tuple(scales), reports, checks=checks)


def dichotomy_experiment(spec, x, horizons, n, config=SimConfig(), seed=0,
                         facet=None, workers=1, terminal_max=0.01):
    """Undecided fraction as a function of the horizon ``max_time``.

    Trajectories are deterministic in ``(seed, index)`` and the horizon only
    truncates them, so one run at the largest horizon yields every smaller
    horizon exactly.
    """
    x = np.asarray(x, dtype=float)
    horizons = sorted(float(h) for h in horizons)
    cfg = SimConfig(dt=config.dt, eps_abs=config.eps_abs,
                    escape_radius=config.escape_radius, max_time=horizons[-1])
    batch = run_batch(spec, x, n, cfg, seed, facet, workers)
    decay = _decay_or_none(spec, facet, Normalization.HARMONIC)
    prediction = None if decay is None else float(predicted_absorption(decay, x))
    reports, fractions = [], []
    for h in horizons:
        out = batch.truncate(h)
        counts = tuple(int(np.sum(out == k)) for k in
                       (BatchResult.ABSORBED, BatchResult.ESCAPED, BatchResult.UNDECIDED))
        truncated = BatchResult(out, batch.steps, batch.absorbed_ball,
                                batch.absorbed_infeasible,
                                batch.infeasible_outside_facet,
                                SimConfig(cfg.dt, batch.config.eps_abs,
                                          batch.config.escape_radius, h))
        reports.append(_report(counts, n, x, prediction, truncated, facet))
        fractions.append(counts[2] / n)
    monotone = all(
        b <= a + 2.0 * math.sqrt(binomial_sigma(a, n) ** 2 + binomial_sigma(b, n) ** 2)
        for a, b in zip(fractions, fractions[1:]))
    checks = {
        "undecided_fractions": fractions,
        "non_increasing": monotone,
        "terminal_below": fractions[-1] < terminal_max,
    }
    return SweepReport("horizon", tuple(horizons), tuple(reports), checks=checks)
