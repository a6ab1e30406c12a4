import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.stats.proportion import proportion_confint

from conftest import E1, E2, E3, spec_of
from orthant_rbm.montecarlo import (
    boundary_limit_experiment,
    closed_form_tolerance,
    compare_exponential,
    dichotomy_experiment,
    estimate_absorption,
    estimate_halfline,
    wilson_interval,
)
from orthant_rbm.simulator import SimConfig

FAST = SimConfig(escape_radius=5.0)


def test_wilson_worked_example():
    lo, hi = wilson_interval(1353, 10_000)
    assert lo == pytest.approx(0.1288, abs=1e-4)
    assert hi == pytest.approx(0.1421, abs=1e-4)
    # hand arithmetic at z = 1.96
    assert lo == pytest.approx(0.128736, abs=1e-6)
    assert hi == pytest.approx(0.142144, abs=1e-6)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 100_000), st.floats(0, 1))
def test_wilson_matches_statsmodels(n, frac):
    k = int(frac * n)
    lo, hi = wilson_interval(k, n)
    ref_lo, ref_hi = proportion_confint(k, n, alpha=0.05, method="wilson")
    # statsmodels uses the exact normal quantile 1.95996...
    assert lo == pytest.approx(ref_lo, abs=2e-5)
    assert hi == pytest.approx(ref_hi, abs=2e-5)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_closed_form_tolerance_floor():
    assert closed_form_tolerance(0.1353, 100_000) == 0.02
    assert closed_form_tolerance(0.5, 100) == pytest.approx(0.15)


def test_estimate_report_basics(e1):
    rep = estimate_absorption(e1, [0.5, 0.5], 2_000, FAST, seed=0)
    assert rep.absorbed + rep.escaped + rep.undecided == rep.n == 2_000
    assert rep.p_hat == rep.absorbed / rep.n
    assert 0 <= rep.ci_low <= rep.p_hat <= rep.ci_high <= 1
    assert rep.prediction == pytest.approx(math.exp(-2))
    assert rep.z_score == pytest.approx((rep.p_hat - rep.prediction) / rep.sigma)
    assert rep.bounds == (rep.p_hat, rep.p_hat)
    assert rep.absorbed_ball + rep.absorbed_infeasible == rep.absorbed
    d = rep.to_dict()
    assert d["start"] == [0.5, 0.5] and not d["unreliable"]


def test_estimate_at_apex(e1):
    rep = estimate_absorption(e1, [0.0, 0.0], 500, FAST)
    assert rep.p_hat == 1.0 and rep.ci_high == 1.0
    assert rep.ci_low == pytest.approx(wilson_interval(500, 500)[0])


def test_estimate_is_deterministic(e2):
    a = estimate_absorption(e2, [0.3, 0.3, 0.3], 500, FAST, seed=4)
    b = estimate_absorption(e2, [0.3, 0.3, 0.3], 500, FAST, seed=4, workers=4)
    assert a == b


def test_compare_predictions(e1, e2):
    sweep = compare_exponential(e1, [[0.5, 0.5], [0.0, 0.0]], 200, FAST)
    first, apex = sweep.to_dict()["entries"]
    assert first["harmonic_prediction"] == pytest.approx(math.exp(-2))
    assert first["paper_prediction"] == pytest.approx(math.exp(-1))
    assert apex["harmonic_prediction"] == apex["paper_prediction"] == 1.0
    sweep = compare_exponential(e2, [[0.3, 0.3, 0.3]], 200, FAST)
    assert sweep.reports[0].prediction == pytest.approx(math.exp(-1.8))


def test_compare_requires_dual_skew_symmetry(e1):
    with pytest.raises(ValueError):
        compare_exponential(e1.replace(reflection=[[1, -2], [-2, 1]]), [[1, 1]], 10)


def test_boundary_limit_scale_zero(e1):
    sweep = boundary_limit_experiment(e1, [1, 1], [0.0, 1.0], 300, FAST)
    assert sweep.values == (0.0, 1.0)
    assert sweep.reports[0].p_hat == 1.0
    assert sweep.checks["contrast"] == 1.0 - sweep.reports[1].p_hat


def test_boundary_limit_rejects_bad_direction(e1):
    with pytest.raises(ValueError):
        boundary_limit_experiment(e1, [1, -1], [1.0], 10)


def test_dichotomy_horizon_one_step(e1):
    sweep = dichotomy_experiment(e1, [0.5, 0.5], [1e-3, 0.01], 300, FAST)
    first = sweep.reports[0]
    assert first.undecided == 300 and first.unreliable
    assert first.bounds == (0.0, 1.0)


def test_dichotomy_far_start(e1):
    sweep = dichotomy_experiment(e1, [50.0, 50.0], [20.0, 40.0], 300,
                                 SimConfig(escape_radius=100.0))
    assert sweep.checks["undecided_fractions"][-1] == 0.0
    assert sweep.checks["non_increasing"] and sweep.checks["terminal_below"]


def test_halfline_estimate():
    rep = estimate_halfline(1.0, 1.0, 0.5, 2_000, SimConfig(escape_radius=5.0), seed=0)
    assert rep.prediction == pytest.approx(math.exp(-1))
    with pytest.raises(ValueError):
        estimate_halfline(1.0, 0.0, 0.5, 10)


def test_sweep_csv(tmp_path, e1):
    sweep = boundary_limit_experiment(e1, [1, 1], [0.5, 1.0], 100, FAST)
    path = tmp_path / "sweep.csv"
    sweep.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "param,p_hat,ci_low,ci_high,prediction"
    assert len(lines) == 3
    assert float(lines[1].split(",")[0]) == 0.5


@pytest.mark.parametrize("model,x", [
    (E1, [1.0, 1.0]),
    (E2, [0.5, 0.5, 0.5]),
    (E3, [1.5, 0.5]),
])
def test_positivity(model, x):
    spec = spec_of(model)
    assert np.linalg.norm(x) <= 3
    rep = estimate_absorption(spec, x, 100_000, SimConfig(escape_radius=4.0), seed=0)
    assert rep.absorbed > 0
