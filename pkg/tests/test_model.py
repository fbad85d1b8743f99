import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starlab import model
from starlab.errors import DomainError, ParameterError, UnsupportedModelError
from starlab.model import INFINITY, DensityProfile, ModelParams


def uniform_ball(N=None, R=1.0, rho=1.0, **kw):
    prof = DensityProfile.from_function(lambda r: np.full_like(r, rho), R, **kw)
    return prof if N is None else prof.scale(N / prof.mass)


# -- parameters ---------------------------------------------------------------


def test_params_defaults_and_constants():
    p = ModelParams()
    assert p.is_limit
    assert p.A0 == pytest.approx((6 * math.pi**2) ** (2 / 3))
    assert p.K_cl == pytest.approx(0.75 * (6 * math.pi**2) ** (1 / 3))


@pytest.mark.parametrize("kw", [{"m": 0}, {"q": -1}, {"kappa": math.nan}, {"c": 0}, {"c": -INFINITY}])
def test_params_rejects_invalid(kw):
    with pytest.raises(ParameterError):
        ModelParams(**kw)


# -- dispersion -----------------------------------------------------------------


def test_dispersion_examples():
    assert model.dispersion(0.0, ModelParams(c=3.0)) == 0.0
    assert model.dispersion(1.0, ModelParams(c=1.0)) == pytest.approx(math.sqrt(2) - 1, rel=1e-15)
    assert model.dispersion(3.0, ModelParams()) == pytest.approx(4.5)
    gap = 0.5 - model.dispersion(1.0, ModelParams(c=10.0))
    assert 6.25e-4 <= gap <= 1.25e-3
    assert gap == pytest.approx(1.244e-3, abs=1e-6)


def test_dispersion_is_cancellation_free_at_large_c():
    p = ModelParams(c=1e6)
    assert model.dispersion(1e-3, p) == pytest.approx(0.5e-6, rel=1e-12)
    assert model.dispersion_gap(1.0, p) == pytest.approx(1 / (8 * 1e12), rel=1e-6)


def test_inverse_dispersion_examples():
    p = ModelParams(c=1.0)
    rho = model.inverse_dispersion(1.0, p)
    assert rho == pytest.approx(3**1.5 / (6 * math.pi**2), rel=1e-14)
    assert model.eta(rho, p) == pytest.approx(math.sqrt(3), rel=1e-14)
    assert model.inverse_dispersion(2.0, ModelParams()) == pytest.approx(8 / (6 * math.pi**2), rel=1e-14)
    assert model.inverse_dispersion(0.0, p) == 0.0
    with pytest.raises(DomainError):
        model.inverse_dispersion(-1e-3, p)


@settings(max_examples=300, deadline=None)
@given(w=st.floats(1e-12, 1e8), c=st.one_of(st.just(INFINITY), st.floats(0.5, 1e5)),
       m=st.floats(0.1, 10.0))
def test_inverse_dispersion_round_trip(w, c, m):
    p = ModelParams(m=m, c=c)
    eta = model.eta(model.inverse_dispersion(w, p), p)
    assert model.dispersion(eta, p) == pytest.approx(w, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0.0, 1e4), b=st.floats(0.0, 1e4), c=st.floats(1.0, 1e3))
def test_inverse_dispersion_monotone(a, b, c):
    p = ModelParams(c=c)
    lo, hi = sorted((a, b))
    assert model.inverse_dispersion(lo, p) <= model.inverse_dispersion(hi, p)


# -- kinetic densities ----------------------------------------------------------


def test_kinetic_density_zero_and_limit_form():
    assert model.kinetic_density(0.0, ModelParams(c=2.0)) == 0.0
    p = ModelParams()
    assert model.kinetic_density(2.0, p) == pytest.approx(0.3 * p.A0 * 2.0 ** (5 / 3), rel=1e-15)


def test_kinetic_density_bar_rejects_limit():
    with pytest.raises(UnsupportedModelError):
        model.kinetic_density_bar(1.0, ModelParams())


def _gap_ratio(c):
    j_inf = model.kinetic_density(1.0, ModelParams())
    g1 = j_inf - model.kinetic_density(1.0, ModelParams(c=c))
    g2 = j_inf - model.kinetic_density(1.0, ModelParams(c=2 * c))
    return g1 / g2


def test_kinetic_gap_ratio_matches_quadrature():
    # mpmath quadrature of the momentum integrals at rho = 1 gives 3.8361110537648501
    # for c = 10 vs 20; eta/(mc) is about 0.39 there, so the 1/c^2 law is not yet exact
    assert _gap_ratio(10.0) == pytest.approx(3.8361110537648501, rel=1e-9)


def test_kinetic_gap_shrinks_like_inverse_c_squared():
    assert _gap_ratio(100.0) == pytest.approx(4.0, abs=0.01)
    assert _gap_ratio(1000.0) == pytest.approx(4.0, abs=1e-4)


def test_series_branch_is_continuous():
    p = ModelParams(c=1.0)
    # t = eta / (m c) straddling the switch
    t = model.SERIES_SWITCH * np.array([1 - 1e-9, 1 + 1e-9])
    rho = model.density_from_eta(t, p)
    for fn in (model.kinetic_density, model.kinetic_density_bar, model.rest_energy_deficit):
        v = fn(rho, p)
        # a jump between the series and closed-form branches would show here
        assert abs(v[1] / v[0] - 1.0) < 1e-7


def test_kinetic_density_approaches_limit():
    rho = np.geomspace(1e-6, 1e2, 9)
    j_inf = model.kinetic_density(rho, ModelParams())
    j_c = model.kinetic_density(rho, ModelParams(c=1e5))
    np.testing.assert_allclose(j_c, j_inf, rtol=1e-6)


@settings(max_examples=200, deadline=None)
@given(rho=st.floats(1e-10, 1e6), c=st.floats(1.0, 1e4))
def test_defect_nonnegative(rho, c):
    p = ModelParams(c=c)
    assert model.kinetic_defect(rho, p) >= 0.0


@settings(max_examples=100, deadline=None)
@given(rho=st.floats(1e-6, 1e4), c=st.floats(1.0, 1e3))
def test_relativistic_kinetic_below_limit(rho, c):
    j_c = model.kinetic_density(rho, ModelParams(c=c))
    assert j_c <= model.kinetic_density(rho, ModelParams()) * (1 + 1e-14)


def test_kinetic_density_convex():
    p = ModelParams(c=3.0)
    rho = np.geomspace(1e-4, 1e4, 400)
    j = model.kinetic_density(rho, p)
    # chord test on a log grid: j(mid) <= average of neighbours (weighted)
    x0, x1, x2 = rho[:-2], rho[1:-1], rho[2:]
    w = (x2 - x1) / (x2 - x0)
    assert np.all(j[1:-1] <= (w * j[:-2] + (1 - w) * j[2:]) * (1 + 1e-12))


# -- quadrature and grids -------------------------------------------------------


def test_cumulative_simpson_exact_for_quadratics():
    x = np.sort(np.concatenate(([0.0, 2.0], np.random.default_rng(1).uniform(0, 2, 37))))
    f = 1 - 2 * x + 3 * x**2
    F = x - x**2 + x**3
    np.testing.assert_allclose(model.cumulative_simpson(f, x), F, rtol=0, atol=1e-13)
    assert model.integrate(f, x) == pytest.approx(F[-1], abs=1e-13)


def test_cumulative_simpson_fourth_order_on_smooth_data():
    errs = []
    for n in (64, 128):
        x = model.graded_grid(1.0, n, 0)
        errs.append(abs(model.integrate(np.exp(x), x) - (math.e - 1)))
    assert errs[0] / errs[1] > 12.0


def test_graded_grid_layout():
    g = model.graded_grid(2.0, 100, 10)
    assert g.size == 111 and g[0] == 0.0 and g[100] == 2.0
    assert g[-1] == pytest.approx(2.1)
    assert np.all(np.diff(g) > 0)
    # spacing refines towards the boundary
    assert g[100] - g[99] < g[1] - g[0]


# -- profiles --------------------------------------------------------------------


def test_profile_validation():
    g = np.linspace(0, 1, 11)
    with pytest.raises(DomainError):
        DensityProfile(g, -np.ones(11), 1.0)
    with pytest.raises(DomainError):
        DensityProfile(g, np.ones(11), 0.55)
    with pytest.raises(DomainError):
        DensityProfile(g[1:], np.ones(10), 1.0)
    v = np.ones(11)
    with pytest.raises(DomainError):
        DensityProfile(g, v, 0.5)


def test_profile_mass_of_uniform_ball():
    assert uniform_ball().mass == pytest.approx(4 * math.pi / 3, rel=1e-13)


def test_profile_dilation_preserves_mass():
    prof = DensityProfile.from_function(lambda r: (1 - r * r) ** 1.5, 1.0)
    assert prof.dilate(2.5).mass == pytest.approx(prof.mass, rel=1e-13)


def test_profile_evaluate_interpolates():
    prof = DensityProfile.from_function(lambda r: (1 - r * r) ** 1.5, 1.0)
    r = np.array([0.1, 0.5, 0.999, 1.5])
    np.testing.assert_allclose(prof.evaluate(r), np.maximum(1 - r * r, 0) ** 1.5, rtol=1e-8, atol=1e-14)


# -- potential and Coulomb energy -----------------------------------------------


def test_newton_potential_uniform_ball():
    grid = np.concatenate((np.linspace(0.0, 1.0, 2001), 1.0 + np.linspace(0.0, 0.05, 101)[1:]))
    prof = DensityProfile(grid, np.where(grid <= 1.0, 1.0, 0.0), 1.0)
    pot = model.newton_potential(prof)
    assert pot.values[0] == pytest.approx(2 * math.pi, rel=1e-12)
    assert pot.values[1000] == pytest.approx(11 * math.pi / 6, rel=1e-12)
    outside = grid >= 1.0
    np.testing.assert_allclose(pot.values[outside], (4 * math.pi / 3) / grid[outside], rtol=1e-12)
    np.testing.assert_allclose(pot.exterior(2.0), (4 * math.pi / 3) / 2.0, rtol=1e-12)


def test_newton_potential_monotone_and_exterior_law():
    prof = DensityProfile.from_function(lambda r: (1 - r * r) ** 1.5, 1.0)
    pot = model.newton_potential(prof)
    assert np.all(np.diff(pot.values) <= 1e-14)
    rV = pot.values * prof.grid
    assert np.all(rV <= prof.mass * (1 + 1e-12))
    outside = prof.grid >= 1.0
    np.testing.assert_allclose(rV[outside], prof.mass, rtol=1e-10)


def test_newton_potential_rejects_empty():
    g = np.linspace(0, 1, 11)
    with pytest.raises(DomainError):
        model.newton_potential(DensityProfile(g, np.zeros(11), 1.0))


def test_coulomb_energy_oracles():
    g = np.linspace(0, 1, 11)
    assert model.coulomb_energy(DensityProfile(g, np.zeros(11), 1.0)) == 0.0
    assert model.coulomb_energy(uniform_ball(N=1.0)) == pytest.approx(0.6, rel=1e-12)
    prof = DensityProfile.from_function(lambda r: (1 - r * r) ** 1.5, 1.0)
    D = model.coulomb_energy(prof)
    assert model.coulomb_energy(prof.dilate(3.0)) == pytest.approx(3.0 * D, rel=1e-8)


# -- energies and identities ---------------------------------------------------


def test_total_energy_zero_profile():
    g = np.linspace(0, 1, 11)
    assert tuple(model.total_energy(DensityProfile(g, np.zeros(11), 1.0), ModelParams())) == (0.0, 0.0, 0.0)


def test_energy_sandwich_on_fixed_profile():
    prof = DensityProfile.from_function(lambda r: 0.3 * (1 - r * r / 4) ** 1.5, 2.0)
    e_inf = model.total_energy(prof, ModelParams()).total
    for c in (2.0, 8.0, 50.0):
        p = ModelParams(c=c)
        e_c = model.total_energy(prof, p).total
        assert e_inf - model.kinetic_correction_bound(prof, p) <= e_c <= e_inf


def test_virial_residual_nonzero_off_minimizer():
    assert abs(model.virial_residual(uniform_ball(N=1.0), ModelParams())) > 1e-2


def test_multiplier_residual_flags_perturbed_mu(limit_star):
    bumped = limit_star.with_mu(limit_star.mu * 1.01)
    assert bumped.multiplier_residual == pytest.approx(0.01 / 1.01, rel=1e-3)
    assert bumped.boundary_residual > 1e-3


def test_limit_multiplier_from_coulomb(limit_star):
    mu = 7.0 * limit_star.params.kappa * limit_star.coulomb_energy / (6.0 * limit_star.mass)
    assert mu == pytest.approx(limit_star.mu, rel=1e-6)


def test_gns_ratio_positive_and_scale_free():
    prof = DensityProfile.from_function(lambda r: (1 - r * r) ** 1.5, 1.0)
    p = ModelParams()
    r0 = model.gns_ratio(prof, p)
    assert 0.0 < r0 < math.inf
    assert model.gns_ratio(prof.dilate(4.0), p) == pytest.approx(r0, rel=1e-8)
    assert model.gns_ratio(prof.scale(7.0), p) == pytest.approx(r0, rel=1e-12)


# -- operator bounds --------------------------------------------------------------


def test_operator_bound_branch_point():
    p = ModelParams(c=3.0)
    delta = 1.0
    B = model.operator_bound_constant(delta, p)
    pp = 2 * p.m * p.c
    assert model.dispersion(pp, p) + delta >= B * pp
    assert model.dispersion(0.0, p) + delta >= 0.0


def test_dispersion_bound_check_small_run():
    report = model.dispersion_bound_check(samples=2000, seed=7)
    assert report.passed and report.samples == 2000
    assert report.worst_violation <= report.tolerance


def test_dispersion_bound_check_rejects_bad_ranges():
    with pytest.raises(DomainError):
        model.dispersion_bound_check(samples=0)
    with pytest.raises(DomainError):
        model.dispersion_bound_check(c_range=(0.5, 2.0))
