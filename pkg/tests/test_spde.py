"""Precision factor assembly, row updates, white noise and realisations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maternhyper.grid import Boundary, Field, make_grid
from maternhyper.oracle import dense_covariance, matern_cov, stationary_amplitude
from maternhyper.spde import (
    AnisoSpec,
    assemble_anisotropic_factor,
    assemble_precision_factor,
    replace_row,
    sample_realization,
    sample_white_noise,
)


def test_white_noise_variance_h_eighth():
    # h = 1/8 in 1-D gives per-node variance 8
    g = make_grid(1, 80, 10.0)
    assert g.h == pytest.approx(1.0 / 8.0)
    rng = np.random.default_rng(0)
    w = sample_white_noise(g, rng)
    # a single draw only checks the scale wiring, not statistics
    assert w.values.shape == (80,)


def test_white_noise_variance_2d_unit():
    g = make_grid(2, [10, 10], [10.0, 10.0])
    assert g.h == 1.0
    rng = np.random.default_rng(1)
    draws = np.array([sample_white_noise(g, rng).values for _ in range(500)])
    assert np.var(draws) == pytest.approx(1.0, rel=0.1)


def test_white_noise_variance_statistics():
    """Empirical variance of 1e5 nodes at h=0.1 is close to 10."""
    g = make_grid(1, 100000, 10000.0)
    assert g.h == pytest.approx(0.1)
    w = sample_white_noise(g, np.random.default_rng(2)).values
    var = w.var()
    se = 10.0 * np.sqrt(2.0 / (len(w) - 1))  # sd of sample variance of N(0,10)
    assert abs(var - 10.0) < 3 * se


def test_stencil_coefficients_constant_ell():
    g = make_grid(1, 16, 16.0)
    ell, sigma = 0.7, 1.0
    L = assemble_precision_factor(g, ell, sigma)
    s = sigma * np.sqrt(ell) / np.sqrt(g.h)
    row = L.row(5)
    vals = dict(zip(row.indices.tolist(), row.values.tolist()))
    lam = ell**2 / g.h**2
    assert vals[5] == pytest.approx((1 + 2 * lam) / s)
    assert vals[4] == pytest.approx(-lam / s)
    assert vals[6] == pytest.approx(-lam / s)


def test_small_ell_limit_is_mass_term():
    g = make_grid(1, 16, 16.0)
    L = assemble_precision_factor(g, 1e-8, 1.0)
    row = L.row(3)
    s = np.sqrt(1e-8) / np.sqrt(g.h)
    assert row.values[np.searchsorted(row.indices, 3)] == pytest.approx(1.0 / s, rel=1e-6)
    off = row.values[row.indices != 3]
    assert np.all(np.abs(off) < 1e-10 / s)


def test_rejects_nonpositive_ell():
    g = make_grid(1, 8, 8.0)
    with pytest.raises(ValueError):
        assemble_precision_factor(g, 0.0, 1.0)
    with pytest.raises(ValueError):
        assemble_precision_factor(g, -1.0, 1.0)


def test_stationary_covariance_1d():
    """Interior rows of (L^T L)^{-1} follow the analytic nu=3/2 covariance."""
    ell = 1.0
    g = make_grid(1, 64, 64 * 0.15)
    L = assemble_precision_factor(g, ell, 1.0)
    cov = dense_covariance(L)
    x = g.axis_coords(0)
    n0 = g.n_nodes // 2
    dist = np.abs(x - x[n0])
    dist = np.minimum(dist, g.extent[0] - dist)  # periodic distance
    ana = stationary_amplitude(1.0, 1) * matern_cov(dist, 1.5, ell)
    err = np.max(np.abs(cov[n0] - ana)) / np.max(np.abs(ana))
    assert err < 0.05


def test_sigma_scale_equivariance():
    g = make_grid(1, 32, 10.0)
    c1 = dense_covariance(assemble_precision_factor(g, 0.8, 1.0))
    c3 = dense_covariance(assemble_precision_factor(g, 0.8, 3.0))
    assert np.allclose(c3, 9.0 * c1, rtol=1e-10)


def test_replace_row_identity():
    g = make_grid(1, 12, 12.0)
    L = assemble_precision_factor(g, 1.0, 1.0)
    old, new = replace_row(L, 4, 1.0)
    assert np.array_equal(old.indices, new.indices)
    assert np.allclose(old.values, new.values)


def test_replace_row_commit_matches_fresh_assembly():
    g = make_grid(1, 12, 12.0)
    ell = np.full(12, 1.0)
    L = assemble_precision_factor(g, ell.copy(), 1.0)
    _, new = replace_row(L, 7, 0.3)
    L.commit_row(7, 0.3, new)
    ell[7] = 0.3
    fresh = assemble_precision_factor(g, ell, 1.0)
    assert np.allclose(L.matrix().toarray(), fresh.matrix().toarray(), atol=0, rtol=0)


def test_replace_row_leaves_other_rows_untouched():
    g = make_grid(2, [5, 5], [5.0, 5.0])
    L = assemble_precision_factor(g, 1.0, 1.0)
    before = L.matrix().toarray()
    _, new = replace_row(L, 12, 2.5)
    L.commit_row(12, 2.5, new)
    after = L.matrix().toarray()
    mask = np.ones(25, dtype=bool)
    mask[12] = False
    assert np.array_equal(before[mask], after[mask])
    assert not np.array_equal(before[12], after[12])


@given(st.integers(min_value=0, max_value=19),
       st.floats(min_value=0.05, max_value=5.0))
@settings(max_examples=30, deadline=None)
def test_row_locality_property(node, new_ell):
    """Changing ell at one node changes exactly that row of L."""
    g = make_grid(1, 20, 20.0)
    base = np.full(20, 1.0)
    other = base.copy()
    other[node] = new_ell
    La = assemble_precision_factor(g, base, 1.0).matrix().toarray()
    Lb = assemble_precision_factor(g, other, 1.0).matrix().toarray()
    diff_rows = np.nonzero(np.any(La != Lb, axis=1))[0]
    assert set(diff_rows.tolist()) <= {node}


@given(st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=20, deadline=None)
def test_realizations_finite(ell):
    g = make_grid(1, 24, 24.0)
    L = assemble_precision_factor(g, ell, 1.0)
    v = sample_realization(L, np.random.default_rng(3))
    assert np.all(np.isfinite(v.values))


def test_realization_deterministic_per_seed():
    g = make_grid(1, 30, 10.0)
    L = assemble_precision_factor(g, 1.0, 1.0)
    a = sample_realization(L, np.random.default_rng(42)).values
    b = sample_realization(L, np.random.default_rng(42)).values
    assert np.array_equal(a, b)


def test_realization_covariance_matches_dense():
    g = make_grid(1, 32, 8.0)
    L = assemble_precision_factor(g, 0.5, 1.0)
    cov = dense_covariance(L)
    rng = np.random.default_rng(5)
    draws = np.array([sample_realization(L, rng).values for _ in range(10000)])
    emp = draws.var(axis=0)
    diag = np.diag(cov)
    se = diag * np.sqrt(2.0 / (len(draws) - 1))
    assert np.all(np.abs(emp - diag) < 4 * se)


def test_aniso_reduces_to_isotropic():
    g = make_grid(2, [8, 8], [8.0, 8.0])
    ell = Field.constant(g, 0.9)
    iso = assemble_precision_factor(g, 0.9, 1.0).matrix().toarray()
    spec = AnisoSpec(ell1=ell, ell2=ell.values, theta=0.0)
    aniso = assemble_anisotropic_factor(g, spec, 1.0).matrix().toarray()
    assert np.allclose(iso, aniso, atol=1e-12)


def test_aniso_quarter_turn_swaps_axes():
    g = make_grid(2, [8, 8], [8.0, 8.0])
    e1 = Field.constant(g, 1.2)
    e2 = Field.constant(g, 0.4)
    a = assemble_anisotropic_factor(g, AnisoSpec(e1, e2.values, 0.0), 1.0)
    b = assemble_anisotropic_factor(g, AnisoSpec(e2, e1.values, np.pi / 2), 1.0)
    assert np.allclose(a.matrix().toarray(), b.matrix().toarray(), atol=1e-10)


def test_aniso_directional_correlation():
    """With ell1 = 2 ell2 at 45 degrees, correlation is larger along the tilt."""
    g = make_grid(2, [24, 24], [24.0, 24.0])
    e1 = Field.constant(g, 4.0)
    spec = AnisoSpec(ell1=e1, ell2=2.0, theta=np.pi / 4)
    L = assemble_anisotropic_factor(g, spec, 1.0)
    rng = np.random.default_rng(11)
    draws = np.array([sample_realization(L, rng).values for _ in range(200)])
    c = g.multi_to_index((12, 12))
    along = g.multi_to_index((15, 15))   # step along theta = pi/4
    across = g.multi_to_index((15, 9))   # same distance, perpendicular
    vc, va, vx = draws[:, c], draws[:, along], draws[:, across]
    corr_along = np.corrcoef(vc, va)[0, 1]
    corr_across = np.corrcoef(vc, vx)[0, 1]
    assert corr_along > corr_across


def test_aniso_rejects_1d():
    g = make_grid(1, 8, 8.0)
    with pytest.raises(ValueError):
        assemble_anisotropic_factor(
            g, AnisoSpec(Field.constant(g, 1.0), 1.0, 0.0), 1.0
        )


def test_coo_export_roundtrip():
    g = make_grid(1, 6, 6.0)
    L = assemble_precision_factor(g, 1.0, 1.0)
    text = L.to_coo_csv()
    assert text.splitlines()[0] == "row,col,value"
    rows = [line.split(",") for line in text.splitlines()[1:]]
    dense = np.zeros((6, 6))
    for r, c, v in rows:
        dense[int(r), int(c)] = float(v)
    assert np.allclose(dense, L.matrix().toarray())
