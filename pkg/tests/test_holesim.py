import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holeburn.errors import DomainError, FitError
from holeburn.holesim import (
    BroadeningParams,
    default_grid,
    fit_hole,
    gamma_hom_from_hole,
    hole_features,
    hole_fwhm,
    synthesize_spectrum,
    t2_from_hole,
)
from holeburn.levelmodel import FeatureClass, HyperfineModel, predict_hole_pattern

# mpmath, 30 digits: 2 / (pi * (746.1e3 - gamma_laser))
T2_HOLE = 1.16575677049547947825587814226e-6
T2_HOLE_LASER_150K = 1.06797479008149864632701736871e-6
T2_HOLE_LASER_250K = 1.2832488860463240134560271185e-6


def test_t2_from_hole_oracle():
    assert t2_from_hole(746.10e3, 200e3) == pytest.approx(T2_HOLE, rel=1e-13)
    assert t2_from_hole(746.10e3, 150e3) == pytest.approx(T2_HOLE_LASER_150K, rel=1e-13)
    assert t2_from_hole(746.10e3, 250e3) == pytest.approx(T2_HOLE_LASER_250K, rel=1e-13)


def test_weak_burn_width():
    p = BroadeningParams(273e3, 200e3)
    assert hole_fwhm(p) == pytest.approx(746e3)
    assert gamma_hom_from_hole(746e3, 200e3) == pytest.approx(273e3)


def test_power_broadening():
    # chi^2 T1 T2 = 3 doubles the sqrt term
    t2 = 1 / (math.pi * 273e3)
    t1 = 0.85e-3
    p = BroadeningParams(273e3, 0.0, rabi=math.sqrt(3 / (t1 * t2)), t1=t1)
    assert p.saturation == pytest.approx(3.0)
    assert hole_fwhm(p) == pytest.approx(3 * 273e3)


def test_laser_limited_hole():
    with pytest.raises(DomainError, match="laser-limited"):
        t2_from_hole(200e3, 200e3)
    with pytest.raises(DomainError):
        BroadeningParams(0.0)
    with pytest.raises(DomainError):
        BroadeningParams(1e5, rabi=1.0)


@settings(max_examples=100, deadline=None)
@given(gamma_hom=st.floats(1e3, 1e8), gamma_laser=st.floats(0, 1e7))
def test_t2_round_trip_hole(gamma_hom, gamma_laser):
    p = BroadeningParams(gamma_hom, gamma_laser)
    assert t2_from_hole(hole_fwhm(p), gamma_laser) == pytest.approx(p.t2, rel=0.02)


def _spectrum(field, wait, **kw):
    pattern = predict_hole_pattern(HyperfineModel(), field, include_antiholes=kw.pop("anti", False))
    return synthesize_spectrum(pattern, BroadeningParams(273e3), wait, default_grid(), **kw)


def test_zero_field_single_dip():
    s = _spectrum(0.0, 1e-5)
    res = fit_hole(s.grid, s.od)
    assert res["center"] == pytest.approx(0.0, abs=10.0)
    assert res["fwhm"] == pytest.approx(746e3, rel=1e-4)


def test_side_holes_detectable_at_two_tesla():
    s = _spectrum(2.0, 1e-5)
    for c in (48.15e6, 54.25e6, 80.85e6, 85.55e6, -48.15e6, -85.55e6):
        keep = np.abs(s.grid - c) < 2.5e6
        res = fit_hole(s.grid[keep], s.od[keep])
        assert res["center"] == pytest.approx(c, abs=20e3)


def test_inner_clusters_decay_with_x1_lifetime():
    short = hole_features(predict_hole_pattern(HyperfineModel(), 2.0), BroadeningParams(273e3), 0.0)
    long = hole_features(predict_hole_pattern(HyperfineModel(), 2.0), BroadeningParams(273e3), 2.5e-3)
    r = {f.detuning: g.depth_at(2.5e-3) / f.depth_at(0.0) for f, g in zip(short, long)
         if f.feature_class is FeatureClass.INNER}
    assert r
    for ratio in r.values():
        assert ratio == pytest.approx(math.exp(-2.5 / 0.85), rel=1e-12)


def test_antiholes_only_after_x1_decay():
    pattern = predict_hole_pattern(HyperfineModel(), 2.0, include_antiholes=True)
    early = hole_features(pattern, BroadeningParams(273e3), 1e-5)
    late = hole_features(pattern, BroadeningParams(273e3), 2e-3)
    assert not any(f.sign < 0 for f in early)
    assert any(f.sign < 0 for f in late)


def test_narrow_grid_rejected():
    pattern = predict_hole_pattern(HyperfineModel(), 2.0)
    with pytest.raises(DomainError, match="grid too narrow"):
        synthesize_spectrum(pattern, BroadeningParams(273e3), 0.0, default_grid(100e6))
    s = synthesize_spectrum(pattern, BroadeningParams(273e3), 0.0, default_grid(100e6), allow_truncation=True)
    assert np.all(s.od >= 0)


def test_od_clamped_non_negative():
    s = _spectrum(0.0, 0.0, depth=5.0)
    assert s.od.min() == 0.0


def test_fit_hole_rejects_peak_and_short():
    x = np.linspace(-1e6, 1e6, 50)
    with pytest.raises(FitError, match="peak"):
        fit_hole(x, 1 + 1 / (1 + (x / 1e5) ** 2))
    with pytest.raises(FitError, match="at least 8"):
        fit_hole(x[:5], x[:5])


def test_fit_hole_noise_coverage():
    rng = np.random.default_rng(1)
    x = np.linspace(-4e6, 4e6, 161)
    clean = 1 - 0.3 / (1 + (2 * x / 746.1e3) ** 2)
    hits = 0
    for seed in range(120):
        rng = np.random.default_rng(seed)
        res = fit_hole(x, clean + rng.normal(0, 0.005, x.size), np.full(x.size, 0.005))
        hits += abs(res["fwhm"] - 746.1e3) < res.sigmas["fwhm"]
    assert 0.55 < hits / 120 < 0.8
