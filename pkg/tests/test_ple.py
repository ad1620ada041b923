import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biased_npmle.core import Constant, Sample, UndefinedEstimatorError
from biased_npmle.em import EmConfig, fit_npmle
from biased_npmle.ple import fit_ple, ple_defined
from conftest import kaplan_meier, random_sample


def test_untruncated_matches_kaplan_meier():
    f = fit_ple([(0, 1, True), (0, 2, False)])
    assert f.hazards.tolist() == [0.5]
    assert f.survival(1.0) == 0.5
    assert f.points.tolist() == [1.0, 2.0]
    assert f.tail_mass == 0.5


def test_risk_set_gap_kills_the_estimate():
    recs = [(0.5, 1, True), (1.5, 2, True)]
    f = fit_ple(recs)
    assert f.hazards[0] == 1.0
    assert f.survival(1.0) == 0.0
    assert f.survival(1.7) == 0.0
    assert not f.defined
    assert not ple_defined(recs)


def test_single_event():
    f = fit_ple([(0, 5, True)])
    assert f.points.tolist() == [5.0] and f.masses.tolist() == [1.0]
    assert ple_defined([(0, 1, True)])
    assert ple_defined([(0, 1, True), (0, 2, False)])


def test_no_events_raises():
    with pytest.raises(UndefinedEstimatorError):
        fit_ple([(0, 1, False), (0.2, 3, False)])


def test_entry_counts_at_risk_from_entry_time():
    # the record entering at 1.5 is at risk at its own event time 2 only
    f = fit_ple([(0, 1, True), (0, 3, True), (1.5, 2, True)])
    assert f.at_risk.tolist() == [2, 2, 1]


def test_to_dict_is_json_ready():
    import json
    json.dumps(fit_ple([(0, 1, True), (0.3, 2, False)]).to_dict())


@given(st.integers(0, 2**32 - 1), st.booleans())
@settings(max_examples=50)
def test_zero_entries_equal_kaplan_meier_and_constant_weight_npmle(seed, discrete):
    rng = np.random.default_rng(seed)
    sample = random_sample(rng, 30, discrete)
    if sample.m == 0:
        return
    values = np.concatenate([sample.exact, sample.censored])
    event = np.r_[np.ones(sample.m, bool), np.zeros(sample.n, bool)]
    f = fit_ple([(0.0, v, e) for v, e in zip(values, event)])
    pts, mass = kaplan_meier(values, event)
    np.testing.assert_allclose(f.cdf(pts), np.cumsum(mass), atol=1e-12)
    npmle = fit_npmle(Sample(sample.exact, sample.censored), Constant(1),
                      EmConfig(mass_tol=1e-13, loglik_tol=1e-16, record_trace=False))
    np.testing.assert_allclose(f.cdf(pts), npmle.cdf(pts), atol=1e-8)
