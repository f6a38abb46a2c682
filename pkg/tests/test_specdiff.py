import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holeburn.errors import DomainError, FitError
from holeburn.specdiff import (
    COTH_SERIES_SWITCH,
    PHYS,
    TM_SERIES_SWITCH,
    CoherencePoint,
    SdParams,
    a_d_scale,
    fit_sd,
    gamma_sd_r,
    t_m,
    t_m_from_rate,
)

P = SdParams()
# mpmath, 30 digits, CODATA 2018 mu_B and k_B
TM_ORACLE = {
    0.0: 2.34036877727851159649658902272e-7,
    0.5: 2.79192641572172846161541484378e-7,
    1.0: 4.34702411527647216739784742913e-7,
    2.0: 1.03189034895044032633966474034e-6,
    5.0: 1.22520571338599329036277630578e-6,
}


@pytest.mark.parametrize("field", sorted(TM_ORACLE))
def test_t_m_oracle(field):
    assert t_m(field, 1.7, P) == pytest.approx(TM_ORACLE[field], rel=1e-7)


def test_asymptote():
    assert t_m(100.0, 1.7, P) == pytest.approx(1 / (math.pi * 259.8e3), rel=1e-12)


def test_monotone_on_zero_to_two_tesla():
    B = np.linspace(0, 2, 401)
    assert np.all(np.diff(t_m(B, 1.7, P)) > 0)


def test_series_branches_continuous():
    g0 = P.gamma0
    u = TM_SERIES_SWITCH
    x_lo = u * (1 - 1e-9) * math.pi * g0**2
    x_hi = u * (1 + 1e-9) * math.pi * g0**2
    assert t_m_from_rate(x_lo, g0) == pytest.approx(t_m_from_rate(x_hi, g0), rel=1e-10)
    assert t_m_from_rate(0.0, g0) == 1 / (math.pi * g0)

    p = replace(P, a_d=1e8)
    b_switch = COTH_SERIES_SWITCH * 2 * PHYS.k_b * 1.7 / (p.g_env * PHYS.mu_b)
    lo = gamma_sd_r(b_switch * (1 - 1e-9), 1.7, p)
    hi = gamma_sd_r(b_switch * (1 + 1e-9), 1.7, p)
    assert lo == pytest.approx(hi, rel=1e-10)


def test_flip_term_vanishes_at_zero_field():
    p = replace(P, a_d=1e8, b_f=0.0)
    assert gamma_sd_r(0.0, 1.7, p) == 0.0


def test_domain():
    with pytest.raises(DomainError):
        gamma_sd_r(1.0, 0.0, P)
    with pytest.raises(DomainError):
        gamma_sd_r(-1.0, 1.0, P)
    with pytest.raises(DomainError):
        SdParams(gamma0=0.0)
    with pytest.raises(DomainError):
        CoherencePoint(1.0, 1.7, -1e-6, 1e-8)


def _synthetic(p=P, fields=(0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0), rel_sigma=0.02):
    return [CoherencePoint(B, 1.7, t_m(B, 1.7, p), rel_sigma * t_m(B, 1.7, p)) for B in fields]


def test_fit_recovers_parameters():
    start = SdParams(b_f=3e10, gamma0=300e3)
    res = fit_sd(_synthetic(), frozen=("a_d", "c0", "g_env"), init=start)
    assert res.result.converged
    assert res.params.b_f == pytest.approx(4.2e10, rel=1e-6)
    assert res.params.gamma0 == pytest.approx(259.8e3, rel=1e-6)


def test_free_a_d_driven_to_zero():
    data = _synthetic()
    seed = a_d_scale(data, P)
    res = fit_sd(data, frozen=("c0", "g_env"), init=SdParams(b_f=3e10, gamma0=300e3))
    assert res.params.a_d < 1e-3 * seed
    assert res.params.b_f == pytest.approx(4.2e10, rel=1e-2)


def test_fit_errors():
    with pytest.raises(FitError, match="at least 4"):
        fit_sd(_synthetic(fields=(0.0, 1.0, 2.0)), frozen=("a_d", "c0", "g_env"))
    with pytest.raises(FitError, match="underdetermined"):
        fit_sd(_synthetic(fields=(0.0, 1.0, 2.0, 2.0)), frozen=())
    with pytest.raises(FitError, match="unknown"):
        fit_sd(_synthetic(), frozen=("bogus",))


@settings(max_examples=30, deadline=None)
@given(b_f=st.floats(1e10, 1e11), gamma0=st.floats(1e5, 5e5))
def test_fit_self_consistency(b_f, gamma0):
    truth = SdParams(b_f=b_f, gamma0=gamma0)
    res = fit_sd(_synthetic(truth), frozen=("a_d", "c0", "g_env"), init=SdParams(b_f=b_f * 1.3, gamma0=gamma0 * 0.8))
    assert res.params.b_f == pytest.approx(b_f, rel=1e-6)
    assert res.params.gamma0 == pytest.approx(gamma0, rel=1e-6)


def test_fit_noise_coverage():
    truth = _synthetic()
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noisy = [replace(pt, t2=pt.t2 + rng.normal(0, pt.t2_sigma)) for pt in truth]
        res = fit_sd(noisy, frozen=("a_d", "c0", "g_env"))
        hits += abs(res.params.gamma0 - 259.8e3) < res.result.sigmas["gamma0"]
    assert 0.55 < hits / 100 < 0.82
