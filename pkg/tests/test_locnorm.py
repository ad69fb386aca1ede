import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats

from relbelief.evidence import Verdict
from relbelief.locnorm import LocationNormal, PredictionSetup, baseline_bias_against_pred, baseline_bias_favor_pred
from relbelief.mc import stream

MC_DRAWS = 10**6


def mc_check(estimate, hits, draws=MC_DRAWS):
    p = hits.mean()
    se = max(np.sqrt(p * (1 - p) / draws), 1 / draws)
    assert abs(estimate - p) <= 3 * se, (estimate, p, se)


# -- relative belief ratio -----------------------------------------------------

def test_rb_centered_value():
    model = LocationNormal(n=5)
    assert model.relative_belief(0.0, xbar=0.0) == pytest.approx(np.sqrt(6))


@pytest.mark.parametrize("n,tau0,mu0,xbar,mu", [(5, 1, 0, 0.3, -0.2), (20, 0.5, 1, 1.4, 0.9), (1, 3, -2, 0.0, 4.0)])
def test_rb_equals_density_ratio(n, tau0, mu0, xbar, mu):
    model = LocationNormal(n=n, mu0=mu0, tau0=tau0, sigma0=1.3)
    prec = n / 1.3**2 + 1 / tau0**2
    post_mean = (n * xbar / 1.3**2 + mu0 / tau0**2) / prec
    ratio = stats.norm.pdf(mu, post_mean, prec**-0.5) / stats.norm.pdf(mu, mu0, tau0)
    assert model.relative_belief(mu, xbar=xbar) == pytest.approx(ratio, rel=1e-10)


def test_diffuse_prior_blows_up_rb():
    model = LocationNormal(n=100, tau0=1e3)
    xbar = 1.96 / np.sqrt(100)
    assert model.relative_belief(0.0, xbar=xbar) > 1e3


def test_rb_log_space_survives_huge_prior_variance():
    assert np.isfinite(LocationNormal(n=10, tau0=1e150).log_rb(0.0, xbar=0.1))


def test_fit_and_predict():
    x = np.array([0.2, -0.1, 0.4, 0.3])
    model = LocationNormal(n=4).fit(x)
    assert model.xbar_ == pytest.approx(x.mean()) and model.n_obs_ == 4
    verdicts = model.predict([x.mean(), 10.0])
    assert list(verdicts) == [Verdict.IN_FAVOR.value, Verdict.AGAINST.value]
    lo, hi = model.plausible_interval()
    assert model.relative_belief(lo) == pytest.approx(1.0) and model.relative_belief(hi) == pytest.approx(1.0)


def test_predict_before_fit():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        LocationNormal().predict(0.0)


def test_bad_parameters():
    with pytest.raises(ValueError):
        LocationNormal(sigma0=-1).bias_against(0.0)
    with pytest.raises(ValueError):
        LocationNormal(n=0).bias_against(0.0)


# -- p-value difference --------------------------------------------------------

def test_pvalue_examples():
    xbar = 1.96 / np.sqrt(10)
    diff, verdict, second = LocationNormal(n=10).pvalue_diff_evidence(0.0, xbar=xbar, n=10, form="printed")
    assert second == pytest.approx(0.119, abs=5e-4) and verdict is Verdict.AGAINST
    diff, verdict, second = LocationNormal(n=10, tau0=10).pvalue_diff_evidence(0.0, xbar=xbar, n=10, form="printed")
    assert second == pytest.approx(0.009, abs=5e-4) and verdict is Verdict.IN_FAVOR


def test_pvalue_centered():
    model = LocationNormal(n=7, mu0=1.0)
    diff, verdict, second = model.pvalue_diff_evidence(1.0, xbar=1.0, n=7)
    assert diff == pytest.approx(1 - second) and verdict is Verdict.IN_FAVOR


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(1, 200),
    tau0=st.floats(0.05, 50),
    mu0=st.floats(-3, 3),
    xbar=st.floats(-5, 5),
    mu_star=st.floats(-5, 5),
)
def test_pvalue_sign_matches_rb(n, tau0, mu0, xbar, mu_star):
    model = LocationNormal(n=n, mu0=mu0, tau0=tau0)
    lrb = model.log_rb(mu_star, xbar=xbar, n=n)
    diff, verdict, _ = model.pvalue_diff_evidence(mu_star, xbar=xbar, n=n)
    # far in the tails both p-values underflow to 0 and carry no sign
    assume(diff != 0.0)
    if abs(lrb) > 1e-9:
        assert np.sign(diff) == np.sign(lrb)


# -- coefficients and hypothesis bias -----------------------------------------

def test_coefficients():
    c = LocationNormal(n=5, mu0=1.0).coeffs(0.0, mu=0.0)
    assert c.a == pytest.approx(-1 / np.sqrt(5)) and c.c == pytest.approx(c.a)
    c0 = LocationNormal(n=5).coeffs(0.0)
    assert c0.a == 0 and c0.b == pytest.approx(np.sqrt(1.2 * np.log(6)))


@pytest.mark.parametrize(
    "fn,kw,expected",
    [
        ("bias_against", dict(n=5), 0.143),
        ("bias_against", dict(n=5, mu0=1.0), 0.095),
    ],
)
def test_bias_against_examples(fn, kw, expected):
    assert getattr(LocationNormal(**kw), fn)(0.0) == pytest.approx(expected, abs=5e-4)


def test_bias_favor_examples():
    assert LocationNormal(n=20).bias_favor_delta(0.0, 0.5) == pytest.approx(0.327, abs=5e-4)
    assert LocationNormal(n=5, mu0=1.0).bias_favor_delta(0.0, 0.5) == pytest.approx(0.871, abs=5e-4)
    assert LocationNormal(n=5).bias_favor(0.0, 50.0) < 1e-12


def test_against_plus_favor_at_truth_is_one():
    for n in (1, 5, 50):
        for mu_star in (-2.0, 0.0, 0.7):
            m = LocationNormal(n=n, mu0=0.3, tau0=0.8)
            assert m.bias_against(mu_star) + m.bias_favor(mu_star, mu_star) == pytest.approx(1.0, abs=1e-9)


def test_bias_against_decreases_in_n():
    m = LocationNormal(mu0=1.0)
    vals = [m.bias_against(0.0, n) for n in (5, 10, 20, 50, 100)]
    avgs = [m.avg_bias_against(n) for n in (5, 10, 20, 50, 100)]
    assert np.all(np.diff(vals) < 0) and np.all(np.diff(avgs) < 0)


def test_diffuse_prior_forces_bias_in_favor_up():
    assert LocationNormal(n=10, tau0=100.0).bias_favor_delta(0.0, 0.5) > 0.99


def test_bias_in_favor_tends_to_one_with_prior_variance():
    vals = [LocationNormal(n=10, tau0=t).bias_favor_delta(0.0, 0.5) for t in (1, 10, 100, 1000, 1e5)]
    assert np.all(np.diff(vals) > 0) and vals[-1] > 0.999


def test_unconditional_routes():
    for kw, expected in [(dict(n=5), 0.451), (dict(n=100, mu0=1.0), 0.116)]:
        m = LocationNormal(**kw)
        assert m.bias_favor_unconditional(0.0) == pytest.approx(m.bias_favor_unconditional_closed(0.0), abs=1e-6)


# -- estimation ---------------------------------------------------------------

def test_estimation_examples():
    m = LocationNormal(n=20)
    assert m.avg_bias_against() == pytest.approx(0.051, abs=0.002)
    assert m.avg_bias_favor(1.0) == pytest.approx(0.025, abs=0.003)
    assert LocationNormal(n=50).avg_bias_favor(0.5) == pytest.approx(0.131, abs=0.003)
    mu, value = LocationNormal(n=5).max_bias_against()
    assert mu == pytest.approx(0.0, abs=1e-4) and value == pytest.approx(0.143, abs=5e-4)
    assert LocationNormal(n=5).avg_bias_favor(20.0) < 1e-6


def test_average_bias_against_ignores_prior_mean():
    a = LocationNormal(n=10, mu0=0.0).avg_bias_against()
    assert LocationNormal(n=10, mu0=3.7).avg_bias_against() == pytest.approx(a, rel=1e-8)


def test_halfwidth_and_coverage():
    half, cover = LocationNormal(n=20).expected_halfwidth_and_coverage()
    assert half == pytest.approx(0.393, abs=5e-4) and cover == pytest.approx(0.949, abs=0.002)
    half, cover = LocationNormal(n=5, tau0=0.5).expected_halfwidth_and_coverage()
    assert half == pytest.approx(0.491, abs=0.002) and cover == pytest.approx(0.807, abs=0.002)


# -- Monte Carlo oracles --------------------------------------------------------

def test_bias_against_mc():
    m = LocationNormal(n=5, mu0=1.0, tau0=0.8)
    xbar = stream(11).normal(0.0, 1 / np.sqrt(5), MC_DRAWS)
    mc_check(m.bias_against(0.0), m.log_rb(0.0, xbar=xbar, n=5) <= 0)


def test_bias_favor_mc():
    m = LocationNormal(n=10)
    xbar = stream(12).normal(0.5, 1 / np.sqrt(10), MC_DRAWS)
    mc_check(m.bias_favor(0.0, 0.5), m.log_rb(0.0, xbar=xbar, n=10) >= 0)


def test_unconditional_nested_mc():
    m = LocationNormal(n=5)
    rng = stream(13)
    mu = rng.normal(0.0, 1.0, MC_DRAWS)
    xbar = rng.normal(mu, 1 / np.sqrt(5))
    mc_check(m.bias_favor_unconditional(0.0), m.log_rb(0.0, xbar=xbar, n=5) >= 0)


def test_strength_limit():
    m = LocationNormal(n=10, tau0=np.sqrt(1000.0))
    xbar = 1.96 / np.sqrt(10)
    assert m.strength_mc(0.0, xbar=xbar, n=10, draws=200_000) == pytest.approx(2 * stats.norm.sf(1.96), abs=0.01)


# -- prediction ---------------------------------------------------------------

def test_prediction_examples():
    assert baseline_bias_against_pred(PredictionSetup(r=1.0, y=0.0)) == pytest.approx(0.239, abs=5e-4)
    assert baseline_bias_against_pred(PredictionSetup(r=0.01, y=1.0)) == pytest.approx(0.460, abs=5e-4)
    assert LocationNormal(n=10).bias_against_pred(0.0) == pytest.approx(0.248, abs=5e-4)


def test_finite_n_prediction_tends_to_baseline():
    m = LocationNormal(n=10**7, tau0=1.0)
    assert m.bias_against_pred(0.5) == pytest.approx(baseline_bias_against_pred(m.prediction_setup(0.5)), abs=1e-5)
    assert m.bias_favor_pred(0.5, 1.0) == pytest.approx(baseline_bias_favor_pred(m.prediction_setup(0.5, 1.0)), abs=1e-5)


def test_rb_pred_is_density_ratio():
    m = LocationNormal(n=4, mu0=0.5, tau0=2.0)
    prec = 4 + 1 / 4
    mux = (4 * 1.1 + 0.5 / 4) / prec
    ratio = stats.norm.pdf(0.3, mux, np.sqrt(1 / prec + 1)) / stats.norm.pdf(0.3, 0.5, np.sqrt(5))
    assert m.rb_pred(0.3, xbar=1.1, n=4) == pytest.approx(ratio, rel=1e-10)


def test_prediction_bias_mc():
    m = LocationNormal(n=10)
    rng = stream(14)
    # mu | y ~ N(y/2, 1/2) for tau0 = sigma0 = 1
    mu = rng.normal(0.0, np.sqrt(0.5), MC_DRAWS)
    xbar = rng.normal(mu, 1 / np.sqrt(10))
    mc_check(m.bias_against_pred(0.0), m.log_rb_pred(0.0, xbar=xbar, n=10) <= 0)


def test_baseline_favor_mc():
    s = PredictionSetup(r=1.0, y=0.0, delta=5.0)
    rng = stream(15)
    # limit law: posterior mean equals mu, and mu | y_true ~ N(y_true/2, 1/2)
    best = 0.0
    for y_true in (-5.0, 5.0):
        mu = rng.normal(y_true / 2, np.sqrt(0.5), MC_DRAWS)
        lrb = 0.5 * np.log(2.0) - 0.5 * ((0.0 - mu) ** 2 - 0.0**2 / 2)
        best = max(best, (lrb >= 0).mean())
    assert baseline_bias_favor_pred(s) == pytest.approx(best, abs=3 * np.sqrt(best * (1 - best) / MC_DRAWS) + 1e-6)
