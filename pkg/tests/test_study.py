import math

import numpy as np
import pytest

from starlab import study
from starlab.errors import ConfigError, DomainError, FitDomainError
from starlab.model import INFINITY, DensityProfile


def test_fit_exact_power_law():
    c = [4.0, 8.0, 16.0, 32.0]
    fit = study.fit_power_law(c, [7 / x**2 for x in c], "dE")
    assert fit.exponent == pytest.approx(-2.0, abs=1e-12)
    assert fit.amplitude == pytest.approx(7.0, rel=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(fit.predict(c), fit.y, rtol=1e-12)


def test_fit_perturbed_power_law():
    c = np.array([4.0, 8.0, 16.0, 32.0])
    fit = study.fit_power_law(c, 3 * c**-2 + 0.01 * c**-3, "dE")
    assert -2.05 < fit.exponent < -2.0


def test_fit_refuses_bad_data():
    with pytest.raises(FitDomainError):
        study.fit_power_law([1.0, 2.0], [1.0, 0.5], "dE")
    with pytest.raises(FitDomainError, match="c=8"):
        study.fit_power_law([4.0, 8.0, 16.0], [1.0, -1e-12, 0.1], "dE")


def test_sweep_c_records(c_sweep):
    assert [r.c for r in c_sweep.records] == [4.0, 8.0, 16.0, 32.0, 64.0]
    assert c_sweep.status == 0
    assert not c_sweep.sign_violations()
    for rec in c_sweep.records:
        assert rec.ok and rec.N == 1.0
        assert min(rec.dE, rec.dKin, rec.dMu, rec.dR) > 0
        assert rec.identity_residual <= 1e-6
    # deltas shrink along the ladder
    dR = [r.dR for r in c_sweep.records]
    assert all(a > b for a, b in zip(dR, dR[1:]))


def test_sweep_c_rates(c_sweep):
    for name in study.DELTA_FIELDS:
        fit = study.fit_rate(c_sweep.records, name)
        assert -2.1 <= fit.exponent <= -1.9
        assert fit.r2 >= 0.999


def test_sweep_c_validation(unit):
    with pytest.raises(ConfigError):
        study.sweep_c(unit, 1.0, [8.0, INFINITY])
    with pytest.raises(ConfigError):
        study.sweep_c(unit, 1.0, [8.0, 4.0])
    with pytest.raises(ConfigError):
        study.sweep_c(unit, 1.0, [])


def test_single_point_ladder_refused_by_fit(unit):
    res = study.sweep_c(unit, 1.0, [8.0], workers=1)
    assert len(res.records) == 1 and res.records[0].ok
    with pytest.raises(FitDomainError):
        study.fit_rate(res.records, "dR")


def test_sweep_c_reports_partial_failure(unit):
    res = study.sweep_c(unit, 20.0, [2.0, 8.0], workers=1)
    assert res.status == 3
    assert res.records[0].status == "error" and "CriticalMassExceeded" in res.records[0].message
    assert res.records[1].ok


def test_parallel_sweep_matches_sequential(unit):
    seq = study.sweep_c(unit, 1.0, [8.0, 16.0], workers=1)
    par = study.sweep_c(unit, 1.0, [8.0, 16.0], workers=2)
    assert seq.records == par.records


def test_default_workers_reads_env(monkeypatch):
    monkeypatch.setenv("STARLAB_THREADS", "3")
    assert study.default_workers() == 3
    monkeypatch.setenv("STARLAB_THREADS", "zero")
    with pytest.raises(ConfigError):
        study.default_workers()


def test_sweep_n_limit_exact(unit):
    res = study.sweep_n(unit, [0.5, 1.0, 2.0, 4.0], workers=1)
    for name, target in study.N_SCALING.items():
        assert res.fits[name].exponent == pytest.approx(target, abs=1e-6)
    assert all(r.rescale_residual <= 1e-8 for r in res.records)


def test_sweep_n_single_point(unit):
    res = study.sweep_n(unit, [1.0], workers=1)
    assert res.fits == {}
    with pytest.raises(FitDomainError):
        study.fit_rate(res.records, "radius", against="N")


def test_corner_layer_report(unit):
    report = study.corner_layer_report(unit, 1.0, [8.0, 16.0, 32.0, 64.0], workers=1)
    assert report.status == "ok"
    assert report.containment
    assert report.K1 == pytest.approx(report.dR_fit.amplitude)
    assert -3.3 <= report.decay_fit.exponent <= -2.7
    for row in report.rows:
        assert row.rho_inf_at_Rc > 0 and row.rho_c_at_inner > 0


def test_corner_layer_inconclusive_when_unresolved(unit):
    report = study.corner_layer_report(unit, 1.0, [8.0, 16.0, 32.0], workers=1, noise_floor=1e-3)
    assert report.status == "inconclusive" and report.rows == []


def test_trial_energy_limit_scaling(limit_star):
    prof, p = limit_star.profile, limit_star.params
    kin, D = limit_star.kinetic_energy, limit_star.coulomb_energy
    for lam in (0.1, 3.0, 40.0):
        assert study.trial_energy(prof, p, lam) == pytest.approx(lam**2 * kin - lam * D, rel=1e-12)


def test_critical_probe_verdicts(unit):
    tracker = study.NStarTracker()
    assert study.critical_probe(unit, 1.0, tracker=tracker).verdict == study.STABLE
    assert study.critical_probe(unit, 50.0, tracker=tracker).verdict == study.STABLE
    assert study.critical_probe(unit.with_c(8.0), 1.0, tracker=tracker).verdict == study.STABLE
    est = study.critical_probe(unit.with_c(2.0), 1e6, tracker=tracker)
    assert est.verdict == study.UNBOUNDED_BELOW
    assert 0 < est.n_star_upper < math.inf
    assert all(a >= b for a, b in zip(tracker.history, tracker.history[1:]))


def test_critical_probe_with_supplied_reference(unit):
    prof = DensityProfile.from_function(lambda r: (1 - r * r) ** 1.5, 1.0)
    est = study.critical_probe(unit.with_c(2.0), 1e6, reference=prof)
    assert est.verdict == study.UNBOUNDED_BELOW
    assert "supplied" in est.family


def test_critical_probe_span_validation(unit):
    with pytest.raises(DomainError):
        study.critical_probe(unit, 1.0, (1e-2, 1e3, 5))
    with pytest.raises(DomainError):
        study.critical_probe(unit, 1.0, (1.0, 0.5, 10))


def test_classify_inconclusive_on_mixed_tail():
    lam = np.geomspace(0.1, 10, 10)
    e = np.sin(np.arange(10.0))
    assert study.classify(lam, e) == study.INCONCLUSIVE


def test_tracker_is_running_minimum(limit_star, star_c8):
    tracker = study.NStarTracker()
    first = tracker.update(limit_star.profile, limit_star.params)
    second = tracker.update(star_c8.profile, star_c8.params)
    assert second <= first
    again = tracker.update(limit_star.profile, limit_star.params)
    assert again == second
