from __future__ import annotations

import logging

import pytest

from apps.collisionlab.certificates import residual_certificates
from apps.collisionlab.collision_lab import CollisionReport, LateResidual, ModulationTrack


def _report(**overrides) -> CollisionReport:
    values = dict(
        config={"c1": 1.0, "c2": 0.01, "model": {"p": 2}},
        c1_minus=1.0,
        c2_minus=0.01,
        c1_plus=1.0 + 2.1e-6,
        c2_plus=0.01 * (1.0 - 6e-8),
        c1_plus_fitted=1.0,
        c2_plus_fitted=0.01,
        delta1=0.4,
        delta2=-4.0,
        delta1_at_window=0.4,
        delta2_at_window=-4.0,
        M_plus=1e-5,
        E_plus=1e-6,
        M_bookkeeping=1e-5,
        E_bookkeeping=1e-6,
        closure={
            "mass": 2e-9,
            "mass_tolerance": 1e-9,
            "energy": 1e-10,
            "energy_tolerance": 1e-9,
        },
        late=[
            LateResidual(
                t=100.0,
                mass=1e-5,
                energy=1e-6,
                quadratic_lower=2e-6,
                quadratic_upper=3e-6,
                h1=3e-3,
            )
        ],
        cauchy={"mass": 0.0, "energy": 0.0},
        drifts={"mass": 0.0, "energy": 0.0},
        sup_w_h1=0.02,
        windows={},
        resolution={},
    )
    values.update(overrides)
    return CollisionReport(**values)


def _track(worst: float = 1e-12) -> ModulationTrack:
    return ModulationTrack(orthogonality=[worst, 0.5 * worst])


def test_consistent_report_passes():
    report = _report()
    table = residual_certificates(report, _track())
    assert table.passed
    assert table.failures() == []
    constants = table.constants()
    assert constants["stability"] == pytest.approx(2.0)
    assert constants["speed_gain"] == pytest.approx(1.0)
    assert constants["speed_loss"] == pytest.approx(5.0)
    assert report.fitted_constants["speed_loss"] == pytest.approx(5.0)


def test_negative_residual_energy_fails(caplog):
    report = _report(E_plus=-1e-5)
    with caplog.at_level(logging.WARNING):
        table = residual_certificates(report, _track())
    assert not table.passed
    assert {"sign", "sandwich"} <= set(table.failures())
    assert "FAIL" in caplog.text


def test_noise_level_speed_changes_have_no_constant():
    report = _report(E_plus=0.0, M_plus=0.0, c1_plus=1.0, c2_plus=0.01)
    table = residual_certificates(report, _track())
    by_name = {item.name: item for item in table.certificates}
    assert by_name["speed_gain"].constant is None
    assert by_name["speed_loss"].constant is None
    assert by_name["speed_gain"].passed


def test_speed_gain_with_wrong_sign_is_unbounded():
    table = residual_certificates(_report(c1_plus=1.0 - 1e-5), _track())
    by_name = {item.name: item for item in table.certificates}
    assert by_name["speed_gain"].constant == float("inf")
    assert not by_name["speed_gain"].passed


def test_least_squares_orthogonality_is_reported():
    table = residual_certificates(_report(), _track(1e-4))
    orthogonality = next(item for item in table.certificates if item.name == "orthogonality")
    assert orthogonality.passed
    assert orthogonality.informational
    assert "least-squares" in orthogonality.detail
    assert table.to_payload()[-1]["constant"] == pytest.approx(1e-4)


def test_report_without_late_samples():
    with pytest.raises(ValueError):
        residual_certificates(_report(late=[]), _track())


def _certificate(table, name):
    return next(item for item in table.certificates if item.name == name)


def test_bookkeeping_closes_within_its_tolerance():
    table = residual_certificates(_report(), _track())
    bookkeeping = _certificate(table, "bookkeeping")
    assert bookkeeping.passed
    assert "M_book" in bookkeeping.detail


def test_bookkeeping_mismatch_fails():
    closure = {"mass": 1e-5, "mass_tolerance": 1e-9, "energy": 0.0, "energy_tolerance": 0.0}
    table = residual_certificates(_report(closure=closure), _track())
    assert table.failures() == ["bookkeeping"]


def test_refined_orthogonality_has_a_threshold():
    config = {"c1": 1.0, "c2": 0.01, "model": {"p": 2}, "refine": True}

    clean = residual_certificates(_report(config=config), _track(1e-12))
    loose = residual_certificates(_report(config=config), _track(1e-4))

    assert _certificate(clean, "orthogonality").passed
    assert not _certificate(clean, "orthogonality").informational
    assert loose.failures() == ["orthogonality"]
    assert "1.500e-08" in _certificate(loose, "orthogonality").detail
