import pytest
from hypothesis import given, settings, strategies as st

from holeburn.errors import DomainError
from holeburn.levelmodel import (
    Doublet,
    FeatureClass,
    HyperfineModel,
    SelectionRule,
    Spin,
    cluster_summary,
    enumerate_levels,
    enumerate_transitions,
    predict_hole_pattern,
)

MHZ = 1e6
MODEL = HyperfineModel()


def _mhz(values):
    return [round(v / MHZ, 6) for v in values]


def test_levels_and_transitions_count():
    levels = enumerate_levels(MODEL, 2.0)
    assert len(levels) == 8
    lines = enumerate_transitions(levels, MODEL)
    assert len(lines) == 16
    assert sum(t.allowed for t in lines) == 8


def test_hole_positions_at_two_tesla():
    # inner: 25.6*2 -/+ 3.05; outer: 41.6*2 -/+ 2.35 (MHz)
    p = predict_hole_pattern(MODEL, 2.0)
    assert _mhz(p.detunings(FeatureClass.CENTRAL)) == [0.0]
    assert _mhz(p.detunings(FeatureClass.INNER)) == [-54.25, -48.15, 48.15, 54.25]
    assert _mhz(p.detunings(FeatureClass.OUTER)) == [-85.55, -80.85, 80.85, 85.55]
    assert not p.inconsistent_with_data
    weights = {round(f.detuning / MHZ, 3): f.weight for f in p.features}
    assert weights[0.0] == 1.0
    assert weights[48.15] == pytest.approx(0.125)
    assert weights[-85.55] == pytest.approx(0.125)


def test_cluster_summary_matches_pattern():
    s = cluster_summary(MODEL, 2.0)
    assert s["inner_center_hz"] == pytest.approx(51.2e6)
    assert s["outer_center_hz"] == pytest.approx(83.2e6)
    assert s["inner_splitting_hz"] == pytest.approx(6.10e6)
    assert s["outer_splitting_hz"] == pytest.approx(4.70e6)


def test_antiholes_at_two_tesla():
    p = predict_hole_pattern(MODEL, 2.0, include_antiholes=True)
    anti = sorted({abs(round(v / MHZ, 2)) for v in p.detunings(FeatureClass.ANTIHOLE)})
    assert anti == [31.3, 32.7, 48.15, 54.25, 129.0, 139.8]
    assert all(f.sign == -1 for f in p.antiholes)


def test_zero_field_collapses_to_single_dip():
    p = predict_hole_pattern(MODEL, 0.0)
    assert {f.detuning for f in p.features} == {0.0}
    w = {f.feature_class: f.weight for f in p.features}
    assert w == {FeatureClass.CENTRAL: 1.0, FeatureClass.INNER: 0.5, FeatureClass.OUTER: 0.5}


def test_spin_free_rule_flags_satellites():
    m = HyperfineModel(selection_rule=SelectionRule.SPIN_FREE)
    p = predict_hole_pattern(m, 2.0)
    assert p.inconsistent_with_data
    central = sorted({abs(round(v / MHZ, 3)) for v in p.detunings(FeatureClass.CENTRAL)})
    assert central == [0.0, 4.7, 6.1]


def test_shf_convention():
    assert MODEL.shf_splitting(Doublet.Y1, Spin.DOWN, 2.0) == 0.0


def test_domain_errors():
    with pytest.raises(DomainError):
        predict_hole_pattern(MODEL, -1.0)
    with pytest.raises(DomainError):
        HyperfineModel(rate_y1=-1.0)
    with pytest.raises(ValueError):
        HyperfineModel(selection_rule="bogus")


@settings(max_examples=200, deadline=None)
@given(
    field=st.floats(0.0, 10.0),
    rates=st.tuples(st.floats(0, 1e8), st.floats(0, 1e8), st.floats(0, 5e6), st.floats(0, 5e6)),
    anti=st.booleans(),
    rule=st.sampled_from(list(SelectionRule)),
)
def test_mirror_symmetry(field, rates, anti, rule):
    p = predict_hole_pattern(HyperfineModel(*rates, selection_rule=rule), field, include_antiholes=anti)
    feats = {}
    for f in p.features:
        key = (f.feature_class, f.sign, f.detuning)
        assert key not in feats  # merged features are unique
        feats[key] = f.weight
    for (cls, sign, det), w in feats.items():
        assert feats.get((cls, sign, -det + 0.0)) == w


@settings(max_examples=40, deadline=None)
@given(field=st.floats(0.01, 10.0))
def test_cluster_geometry_scales_linearly(field):
    p = predict_hole_pattern(MODEL, field)
    inner = [d for d in p.detunings(FeatureClass.INNER) if d > 0]
    outer = [d for d in p.detunings(FeatureClass.OUTER) if d > 0]
    assert sum(inner) / 2 == pytest.approx(MODEL.rate_y1 * field, rel=1e-12)
    assert inner[1] - inner[0] == pytest.approx(MODEL.shf_diff_y1 * field, rel=1e-9)
    assert sum(outer) / 2 == pytest.approx(MODEL.rate_x1 * field, rel=1e-12)
    assert outer[1] - outer[0] == pytest.approx(MODEL.shf_diff_x1 * field, rel=1e-9)
