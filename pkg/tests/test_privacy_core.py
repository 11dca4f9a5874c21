import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levydp.errors import DomainError
from levydp.privacy_core import (
    EnvelopeParams,
    RdpGuarantee,
    Regime,
    envelope_closed_form,
    envelope_guarantee,
    envelope_regime,
    optimize_beta,
    rdp_to_eps_delta,
    rdp_to_zero_delta,
    solve_envelope,
    stationary_level,
)
from oracles import rk4_envelope_ode


def test_zero_drive():
    for t in (0.0, 1.0, 1e6):
        assert solve_envelope(EnvelopeParams(0.0, 2.0), t) == 0.0


def test_linear_then_uniform():
    p = EnvelopeParams(1.0, 2.0)
    assert solve_envelope(p, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert solve_envelope(p, 2.0) == pytest.approx(math.log(2), abs=1e-15)
    g = envelope_guarantee(2.0, p, 2.0)
    assert g.regime is Regime.TIME_UNIFORM and g.uniform_kappa == pytest.approx(math.log(2))
    assert envelope_guarantee(2.0, p, 0.5).regime is Regime.LINEAR


def test_decaying_case():
    p = EnvelopeParams(1.0, 2.0, f0=1.0)
    assert envelope_regime(p) is Regime.DECAYING
    assert solve_envelope(p, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert solve_envelope(p, 60.0) == pytest.approx(math.log(2), abs=1e-15)
    assert solve_envelope(p, 1.0) < 1.0


def test_boundary_k_equals_a_is_linear():
    p = EnvelopeParams(2.0, 2.0)
    assert not p.contracting
    g = envelope_guarantee(2.0, p, 100.0)
    assert g.regime is Regime.LINEAR and g.uniform_kappa is None and g.kappa == 200.0


def test_case2_case3_agree_at_level():
    K, a = 0.7, 1.9
    level = stationary_level(K, a)
    t = np.linspace(0, 20, 41)
    assert np.allclose(envelope_closed_form(K, a, level, t), level, rtol=0, atol=1e-14)


def test_closed_form_large_f0_no_overflow():
    v = envelope_closed_form(0.5, 1.0, 2000.0, 1.0)
    assert math.isfinite(v) and v == pytest.approx(2000.0 - 0.5, abs=1e-9)


def test_envelope_dominates_rk4_and_matches_closed_form():
    rng = np.random.default_rng(11)
    n = 2000
    a = rng.uniform(1e-3, 5.0, n)
    K = rng.uniform(0.0, 5.0, n)
    f0 = rng.uniform(0.0, 3.0, n)
    times, vals = rk4_envelope_ode(K, a, f0)
    env = np.array([[solve_envelope(EnvelopeParams(K[j], a[j], f0[j]), t) for j in range(n)] for t in times[::10]])
    assert np.max(vals[::10] - env) <= 1e-6
    c = K < a
    closed = envelope_closed_form(K[c][None, :], a[c][None, :], f0[c][None, :], times[:, None])
    assert np.max(np.abs(closed - vals[:, c])) <= 1e-6


@settings(max_examples=300, deadline=None)
@given(
    K=st.floats(0, 5),
    a=st.floats(0.01, 5),
    f0=st.floats(0, 3),
    t=st.floats(0, 50),
    dK=st.floats(0, 1),
    da=st.floats(0, 1),
    df=st.floats(0, 1),
)
def test_envelope_monotonicity(K, a, f0, t, dK, da, df):
    base = solve_envelope(EnvelopeParams(K, a, f0), t)
    assert base >= 0
    assert solve_envelope(EnvelopeParams(K + dK, a, f0), t) >= base - 1e-12
    assert solve_envelope(EnvelopeParams(K, a + da, f0), t) <= base + 1e-12
    assert solve_envelope(EnvelopeParams(K, a, f0 + df), t) >= base - 1e-12


def test_envelope_continuity_in_t():
    p = EnvelopeParams(0.3, 1.0, 2.0)
    ts = np.linspace(0, 10, 10001)
    v = np.array([solve_envelope(p, t) for t in ts])
    assert np.max(np.abs(np.diff(v))) < 1e-2


@pytest.mark.parametrize("kwargs", [dict(K=-1, a=1), dict(K=1, a=0), dict(K=1, a=-1), dict(K=1, a=1, f0=-0.1), dict(K=math.nan, a=1)])
def test_envelope_param_errors(kwargs):
    with pytest.raises(DomainError):
        EnvelopeParams(**kwargs)


def test_negative_time_rejected():
    with pytest.raises(DomainError):
        solve_envelope(EnvelopeParams(1, 1), -1)


def test_eps_delta_examples():
    assert rdp_to_eps_delta(RdpGuarantee(2.0, 2.0), 1.0) == 2.0
    assert rdp_to_eps_delta(RdpGuarantee(2.0, 2.0), 0.01) == pytest.approx(2 + math.log(100), rel=1e-15)
    assert rdp_to_eps_delta(RdpGuarantee(2.0, 2.0), 0.01) == pytest.approx(6.6052, abs=1e-4)
    beta = 5.5
    assert rdp_to_eps_delta(RdpGuarantee(beta, 0.3), math.exp(-(beta - 1))) == pytest.approx(1.3, rel=1e-14)
    for bad in (0.0, 1.5, -0.1):
        with pytest.raises(DomainError):
            rdp_to_eps_delta(RdpGuarantee(2.0, 1.0), bad)
    with pytest.raises(DomainError):
        rdp_to_eps_delta(RdpGuarantee(1.0, 1.0), 0.5)


def test_eps_strictly_decreasing():
    ds = [1e-9, 1e-5, 1e-2, 0.5]
    e = [rdp_to_eps_delta(RdpGuarantee(3.0, 0.1), d) for d in ds]
    assert all(x > y for x, y in zip(e, e[1:]))
    e = [rdp_to_eps_delta(RdpGuarantee(b, 0.1), 1e-5) for b in (1.5, 2, 4, 8)]
    assert all(x > y for x, y in zip(e, e[1:]))


def test_zero_delta_examples():
    assert rdp_to_zero_delta(RdpGuarantee(2.0, 0.0)) == 0.0
    assert rdp_to_zero_delta(RdpGuarantee(2.0, 0.02)) == pytest.approx(0.1, rel=1e-15)
    assert rdp_to_zero_delta(RdpGuarantee(2.0, 50.0)) == 1.0


def test_optimize_beta_examples():
    beta, eps = optimize_beta(lambda b: 0.3, [2, 4, 16, 8], 1e-3)
    assert beta == 16 and eps == pytest.approx(0.3 + math.log(1e3) / 15)
    assert optimize_beta(lambda b: 0.3, [3.0], 1e-3)[0] == 3.0
    grid = list(range(2, 65))
    beta, eps = optimize_beta(lambda b: 0.001 * b, grid, 0.01)
    scan = [(0.001 * b + math.log(100) / (b - 1), b) for b in grid]
    best = min(scan)
    assert (beta, eps) == (best[1], pytest.approx(best[0]))


def test_optimize_beta_ties_and_errors():
    # eps(2) == eps(3) for kappa(b) chosen to tie; smaller order wins
    d = math.exp(-1)
    beta, _ = optimize_beta(lambda b: {2: 0.5, 3: 1.0}[b], [3, 2], d)
    assert beta == 2
    with pytest.raises(DomainError):
        optimize_beta(lambda b: 0.1, [], 0.1)
    with pytest.raises(DomainError):
        optimize_beta(lambda b: 0.1, [1.5, 2], 0.1)
