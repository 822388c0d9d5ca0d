import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volinv.filtering import forecast, qlik, qlik_terms, run_filter, write_trajectory_csv
from volinv.invertibility import empirical_lyapunov
from volinv.mcstats import batch_means_se
from volinv.models import link, sre_step
from volinv.simulate import simulate

REF = (0.0, 0.5, -0.1, 0.3)
# (1 + E log sigma^2)/2 with E log sigma^2 = 0.3 sqrt(2/pi)/(1 - 0.5), at (0, 0.5, 0, 0.3)
QLIK_AT_THETA0 = 0.7393653682408596


@pytest.fixture(scope="module")
def ref_path():
    return simulate("egarch11", REF, n=2000, seed=31)


def test_intercept_only_filter_forgets_in_one_step():
    x = np.random.default_rng(1).standard_normal(20)
    for g0 in (0.3, 5.0, 40.0):
        tr = run_filter("egarch11", (0.3, 0, 0, 0), x, g_init=g0)
        np.testing.assert_array_equal(tr.g, 0.3)


def test_constant_garch_filter():
    x = np.random.default_rng(1).standard_normal(20)
    tr = run_filter("garch11", (1.0, 0, 0), x, g_init=7.0)
    np.testing.assert_array_equal(tr.g, 1.0)


def test_init_clamped_to_state_space(ref_path):
    tr = run_filter("egarch11", (1.0, 0.5, -0.1, 0.3), ref_path, g_init=-30.0)
    assert tr.g_init == 2.0
    assert np.all(tr.g >= 2.0)


def _forgetting(theta, path, offset=10.0):
    floor = theta[0] / (1 - theta[1])
    a = run_filter("egarch11", theta, path, g_init=floor)
    b = run_filter("egarch11", theta, path, g_init=floor + offset)
    return a, np.abs(a.g - b.g)


@pytest.mark.parametrize("theta", [REF, (0.0, 0.9, 0.1, 0.2), (0.5, 0.8, -0.1, 0.3)])
def test_filter_forgetting(theta):
    path = simulate("egarch11", theta, n=3000, seed=8)
    a, gap = _forgetting(theta, path)
    if theta == REF:
        assert gap[200:].max() < 1e-10
    t = np.arange(gap.size)
    keep = gap > 1e-12
    slope = np.polyfit(t[keep], np.log(gap[keep]), 1)[0]
    assert slope < 0
    # the per-step log contraction is log|d phi/dg| along the trajectory, bounded by the Lipschitz term
    x, g = path.x, a.g
    th = a.theta
    deriv = th.beta - 0.5 * (th.gamma * x[:-1] + th.delta * np.abs(x[:-1])) * np.exp(-g[:-1] / 2)
    realized = np.mean(np.log(np.abs(deriv[keep[1:]])))
    bound = empirical_lyapunov(th, path.x[: int(keep.sum())]).value
    assert slope <= bound + 0.05 * abs(bound)
    assert abs(slope - realized) <= 0.5 * abs(realized)


def test_divergent_trajectory_flagged():
    x = np.random.default_rng(2).standard_normal(200) * 3
    tr = run_filter("egarch11", (-5.0, 0.9, 0.0, 5.0), x)
    assert tr.divergent
    assert np.all(np.isfinite(tr.g)) and np.abs(tr.g).max() <= 700
    assert qlik("egarch11", (-5.0, 0.9, 0.0, 5.0), x).value == math.inf


def test_qlik_examples():
    x0 = np.zeros(100)
    assert qlik("garch11", (1.0, 0, 0), x0, burn=0).value == 0.0
    x = np.random.default_rng(4).standard_normal(300)
    q = qlik("egarch11", (0, 0, 0, 0), x, burn=50)
    assert q.value == pytest.approx(np.mean(x[50:] ** 2) / 2, rel=1e-13)
    assert q.n_effective == 250
    with pytest.raises(ValueError):
        qlik("egarch11", REF, x, burn=300)


def test_qlik_matches_per_term_mean(ref_path):
    tr = run_filter("egarch11", REF, ref_path, burn=50)
    terms = qlik_terms(tr, ref_path)
    assert qlik("egarch11", REF, ref_path, burn=50).value == pytest.approx(terms[50:].mean(), rel=1e-12)


def test_qlik_at_theta0_long_path():
    th0 = (0.0, 0.5, 0.0, 0.3)
    path = simulate("egarch11", th0, n=1_000_000, seed=77)
    tr = run_filter("egarch11", th0, path)
    terms = qlik_terms(tr, path)[50:]
    assert abs(terms.mean() - QLIK_AT_THETA0) < 4 * batch_means_se(terms)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-2, 2), st.floats(0, 0.95), st.floats(0, 2), st.floats(-1, 1),
    st.lists(st.floats(-5, 5), min_size=5, max_size=40),
)
def test_zero_observation_terms_bounded_below(alpha, beta, delta, gfrac, xs):
    th = (alpha, beta, gfrac * delta, delta)
    x = np.array(xs)
    x[::2] = 0.0
    tr = run_filter("egarch11", th, x)
    s = qlik_terms(tr, x)
    floor = alpha / (1 - beta)
    assert np.all(s[x == 0] >= floor / 2 - 1e-12)


def test_qlik_identifiable_on_grid():
    path = simulate("egarch11", REF, n=100_000, seed=5)
    q0 = qlik("egarch11", REF, path).value
    steps = (0.1, 0.1, 0.05, 0.1)
    for signs in itertools.product((-1, 0, 1), repeat=4):
        if not any(signs):
            continue
        th = tuple(v + s * h for v, s, h in zip(REF, signs, steps))
        assert qlik("egarch11", th, path).value > q0, th


def test_forecast_examples(ref_path):
    f = forecast("egarch11", (0, 0, 0, 0), ref_path)
    np.testing.assert_array_equal(f.sigma2_hat, 1.0)
    assert f.next_variance == 1.0
    f = forecast("garch11", (1.0, 0, 0), ref_path)
    np.testing.assert_array_equal(f.sigma2_hat, 1.0)
    f = forecast("egarch11", REF, ref_path)
    tr = run_filter("egarch11", REF, ref_path)
    expected = link("egarch11", sre_step("egarch11", REF, tr.g[-1], ref_path.x[-1]))
    assert f.next_variance == pytest.approx(expected, rel=1e-14)
    np.testing.assert_allclose(f.sigma2_hat, np.exp(tr.g), rtol=1e-15)


def test_trajectory_csv(tmp_path, ref_path):
    tr = run_filter("egarch11", REF, ref_path.head(10))
    f = tmp_path / "traj.csv"
    write_trajectory_csv(tr, f)
    lines = f.read_text().splitlines()
    assert lines[0] == "t,g,sigma2_hat"
    assert len(lines) == 11
    t, g, s2 = lines[1].split(",")
    assert t == "1" and float(g) == tr.g[0] and float(s2) == pytest.approx(math.exp(tr.g[0]), rel=1e-15)
