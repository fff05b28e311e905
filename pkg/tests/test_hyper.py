"""Hyperprior families, link maps and local log-density deltas."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from maternhyper.grid import Field, make_grid
from maternhyper.hyper import (
    BoundedExpLink,
    CauchyLink,
    CauchyNoiseHyper,
    CauchyWalkHyper,
    ExpLink,
    GaussianMaternHyper,
    apply_link,
    log_density,
    log_density_delta,
    sample_hyper,
)

finite_floats = st.floats(min_value=-50.0, max_value=50.0,
                          allow_nan=False, allow_infinity=False)


# -- link maps --------------------------------------------------------

def test_exp_link_at_zero():
    assert ExpLink()(0.0) == 1.0


def test_exp_link_clamps_large_input():
    out = ExpLink()(1e6)
    assert np.isfinite(out)


def test_cauchy_link_maximum_at_zero():
    link = CauchyLink(a=1.0, b=1.0, c=1.0, d=0.05)
    assert link(0.0) == pytest.approx(1.05)


def test_cauchy_link_rejects_bad_params():
    with pytest.raises(ValueError):
        CauchyLink(a=1.0, b=1.0, c=1.0, d=0.0)


def test_bounded_exp_lower_bound_at_zero():
    # with lower = 1 - b the map attains its lower bound at s = 0
    link = BoundedExpLink(a=1.0, b=0.95, lower=0.05, upper=2.0)
    assert link(0.0) == pytest.approx(0.05)


def test_bounded_exp_saturates():
    link = BoundedExpLink()
    assert link(100.0) == link.upper


@given(finite_floats)
def test_links_positive_and_in_range(s):
    assert ExpLink()(s) > 0
    c = CauchyLink()
    assert c.d < c(s) <= c.a / c.b + c.d
    b = BoundedExpLink()
    assert b.lower <= b(s) <= b.upper


@given(finite_floats)
def test_even_links_symmetric(s):
    assert CauchyLink()(s) == CauchyLink()(-s)
    assert BoundedExpLink()(s) == BoundedExpLink()(-s)


def test_apply_link_returns_field():
    g = make_grid(1, 8, 8.0)
    out = apply_link(ExpLink(), Field.constant(g, 0.0))
    assert np.allclose(out.values, 1.0)
    assert out.grid == g


# -- sampling ---------------------------------------------------------

def test_cauchy_walk_starts_at_zero():
    g = make_grid(1, 50, 10.0)
    u = sample_hyper(CauchyWalkHyper(), g, np.random.default_rng(0))
    assert u.values[0] == 0.0


def test_cauchy_walk_median_increment():
    g = make_grid(1, 20001, 20001.0)  # h = 1
    u = sample_hyper(CauchyWalkHyper(), g, np.random.default_rng(1))
    med = np.median(np.abs(np.diff(u.values)))
    # median |Cauchy(1, 0)| = scale; wide tolerance for sampling noise
    assert med == pytest.approx(1.0, rel=0.05)


def test_cauchy_walk_increments_ks():
    g = make_grid(1, 10001, 10001.0)
    u = sample_hyper(CauchyWalkHyper(), g, np.random.default_rng(2))
    incr = np.diff(u.values) / g.h
    _, p = stats.kstest(incr, stats.cauchy.cdf)
    assert p > 0.01


def test_cauchy_walk_rejects_2d():
    g = make_grid(2, [5, 5], [5.0, 5.0])
    with pytest.raises(ValueError):
        sample_hyper(CauchyWalkHyper(), g, np.random.default_rng(0))


def test_cauchy_noise_scale_defaults_to_h():
    g = make_grid(1, 20, 10.0)
    assert CauchyNoiseHyper().step_scale(g) == pytest.approx(0.5)
    assert CauchyNoiseHyper(scale=2.0).step_scale(g) == 2.0


def test_gaussian_hyper_small_sigma0_is_nearly_zero():
    g = make_grid(1, 30, 10.0)
    model = GaussianMaternHyper(g, ell0=1.0, sigma0=1e-8)
    u = sample_hyper(model, g, np.random.default_rng(3))
    assert np.max(np.abs(u.values)) < 1e-6


def test_gaussian_hyper_rejects_bad_params():
    g = make_grid(1, 10, 10.0)
    with pytest.raises(ValueError):
        GaussianMaternHyper(g, ell0=0.0, sigma0=1.0)


# -- log densities ----------------------------------------------------

def _dense_delta(model, u, node, new_value):
    u2 = u.copy()
    u2.values[node] = new_value
    return log_density(model, u2) - log_density(model, u)


@pytest.mark.parametrize("family", ["gaussian", "walk", "noise"])
def test_delta_zero_for_identity(family):
    g = make_grid(1, 16, 16.0)
    model = {
        "gaussian": GaussianMaternHyper(g, 1.0, 2.0),
        "walk": CauchyWalkHyper(),
        "noise": CauchyNoiseHyper(),
    }[family]
    u = Field(g, np.random.default_rng(4).standard_normal(16))
    assert log_density_delta(model, u, 5, float(u.values[5])) == 0.0


@given(st.integers(min_value=0, max_value=15), finite_floats)
@settings(max_examples=40, deadline=None)
def test_delta_matches_dense_walk(node, new_value):
    g = make_grid(1, 16, 16.0)
    model = CauchyWalkHyper()
    u = Field(g, np.random.default_rng(5).standard_normal(16))
    local = log_density_delta(model, u, node, new_value)
    assert local == pytest.approx(_dense_delta(model, u, node, new_value), abs=1e-10)


@given(st.integers(min_value=0, max_value=15), finite_floats)
@settings(max_examples=40, deadline=None)
def test_delta_matches_dense_noise(node, new_value):
    g = make_grid(1, 16, 16.0)
    model = CauchyNoiseHyper()
    u = Field(g, np.random.default_rng(6).standard_normal(16))
    local = log_density_delta(model, u, node, new_value)
    assert local == pytest.approx(_dense_delta(model, u, node, new_value), abs=1e-10)


@given(st.integers(min_value=0, max_value=24), finite_floats)
@settings(max_examples=40, deadline=None)
def test_delta_matches_dense_gaussian(node, new_value):
    g = make_grid(1, 25, 25.0)
    model = GaussianMaternHyper(g, ell0=1.5, sigma0=2.0)
    u = Field(g, np.random.default_rng(7).standard_normal(25))
    local = log_density_delta(model, u, node, new_value)
    dense = _dense_delta(model, u, node, new_value)
    assert local == pytest.approx(dense, abs=1e-8 * max(1.0, abs(dense)))


def test_delta_matches_dense_gaussian_2d():
    g = make_grid(2, [6, 6], [6.0, 6.0])
    model = GaussianMaternHyper(g, ell0=1.0, sigma0=1.0)
    u = Field(g, np.random.default_rng(8).standard_normal(36))
    for node in (0, 7, 35):
        local = log_density_delta(model, u, node, 0.7)
        assert local == pytest.approx(_dense_delta(model, u, node, 0.7), abs=1e-10)


def test_delta_antisymmetric():
    g = make_grid(1, 12, 12.0)
    model = CauchyWalkHyper()
    u = Field(g, np.random.default_rng(9).standard_normal(12))
    fwd = log_density_delta(model, u, 4, 2.5)
    u2 = u.copy()
    u2.values[4] = 2.5
    back = log_density_delta(model, u2, 4, float(u.values[4]))
    assert fwd == pytest.approx(-back, abs=1e-12)


def test_walk_boundary_node_touches_one_increment():
    g = make_grid(1, 10, 10.0)
    model = CauchyWalkHyper()
    u = Field(g, np.zeros(10))
    # moving node 0 changes only the first increment
    d0 = log_density_delta(model, u, 0, 1.0)
    gamma = model.step_scale(g)
    expect = np.log(gamma**2) - np.log(gamma**2 + (u.values[1] - 1.0) ** 2)
    assert d0 == pytest.approx(expect)
