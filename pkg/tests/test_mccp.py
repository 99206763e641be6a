import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hipvp import mccp as mccp_mod
from hipvp.errors import ConfigurationError, ReturnMapError
from hipvp.integrator import HydrostaticHip, IntegratorOptions, LoadingProgram, integrate
from hipvp.mccp import MccpParams, mccp_step, yield_gradient, yield_value
from hipvp.state import PointState
from hipvp.synthetic import calibration_schedule, dense_test_tables, synthetic_mccp
from hipvp.tables import Table1D, Table2D
from hipvp.tensors import StressInvariants, SymTensor3, invariants

PARAMS = synthetic_mccp()
# constant moduli so that strain-driven paths are exactly path independent
CONST = dense_test_tables(E=50e3, nu=0.3)


def inv_pq(p, q):
    return StressInvariants(-3.0 * p, q * q / 3.0, p, q)


def test_yield_value_vertices():
    assert yield_value(inv_pq(10.0, 0.0), 10.0, 1.2) == 0.0
    assert yield_value(inv_pq(0.0, 12.0), 10.0, 1.2) == pytest.approx(0.0, abs=1e-15)
    assert yield_value(inv_pq(0.0, 0.0), 10.0, 1.2) == -1.0


def test_params_validation():
    with pytest.raises(ConfigurationError):
        MccpParams(M=Table2D.constant(0.0), hardening=Table1D((0.0, 1.0), (1.0, 2.0)))
    with pytest.raises(ConfigurationError):
        MccpParams(M=Table2D.constant(1.0), hardening=Table1D((0.0, 1.0), (2.0, 1.0)))
    with pytest.raises(ConfigurationError):
        MccpParams(M=Table2D.constant(1.0), hardening=Table1D((0.0, 1.0), (0.0, 1.0)))


def test_from_pairs_accepts_signed_strain():
    a = MccpParams.from_pairs(((2.0, 0.0), (6.0, -0.05)))
    b = MccpParams.from_pairs(((2.0, 0.0), (6.0, 0.05)))
    assert a.hardening == b.hardening and a.a(0.1) == 10.0


def _state(rho0=0.69):
    return PointState.initial(rho0, 20.0)


def test_elastic_step_inside_surface():
    s0 = _state()
    new, info = mccp_step(s0, SymTensor3.identity(-1e-6), PARAMS, CONST, 1.0)
    assert not info.plastic
    assert new.eps_vp == s0.eps_vp and new.rho == s0.rho
    assert invariants(new.stress).p == pytest.approx(50e3 / (3 * 0.4) * 3e-6)


def test_hydrostatic_return_stays_on_axis():
    s0 = _state()
    new, info = mccp_step(s0, SymTensor3.identity(-0.01), PARAMS, CONST, 1.0)
    assert info.plastic
    inv = invariants(new.stress)
    kappa = -new.eps_vp.trace()
    assert inv.q == pytest.approx(0.0, abs=1e-9)
    assert inv.p == pytest.approx(PARAMS.a(kappa), rel=1e-10)
    assert new.eps_vp.deviator().norm() <= 1e-14
    assert new.rho == pytest.approx(0.69 * math.exp(kappa), rel=1e-14)


def _angle(a: SymTensor3, b: SymTensor3) -> float:
    cosv = a.ddot(b) / math.sqrt(a.ddot(a) * b.ddot(b))
    return math.acos(min(1.0, max(-1.0, cosv)))


strain_incr = st.tuples(st.floats(-2e-2, 2e-3), st.floats(-5e-3, 5e-3), st.floats(-5e-3, 5e-3),
                        st.floats(-3e-3, 3e-3), st.floats(-3e-3, 3e-3), st.floats(-3e-3, 3e-3))


@settings(max_examples=300, deadline=None)
@given(strain_incr, st.floats(0.6, 0.95))
def test_return_map_on_surface_and_associative(d, rho0):
    s0 = _state(rho0)
    # pre-load into the plastic range first, then apply the random increment
    s1, _ = mccp_step(s0, SymTensor3.identity(-0.004), PARAMS, CONST, 1.0)
    new, info = mccp_step(s1, SymTensor3(d), PARAMS, CONST, 1.0)
    if not info.plastic:
        return
    a = PARAMS.a(-new.eps_vp.trace())
    M = PARAMS.M(s1.rho, s1.T)
    assert abs(yield_value(invariants(new.stress), a, M)) < 1e-8
    d_ep = new.eps_vp - s1.eps_vp
    if d_ep.norm() < 1e-12:
        return
    grad = yield_gradient(new.stress, a, M)
    assert _angle(d_ep, grad) < 1e-6
    assert abs(new.rho - min(1.0, rho0 * math.exp(-new.eps_vp.trace()))) < 1e-12


def test_result_independent_of_dt():
    s0 = _state()
    d = SymTensor3((-0.01, 0.002, 0.001, 0.001, 0.0, 0.0))
    a, _ = mccp_step(s0, d, PARAMS, CONST, 1.0)
    b, _ = mccp_step(s0, d, PARAMS, CONST, 1e-3)
    assert a.stress == b.stress and a.eps_vp == b.eps_vp


@pytest.mark.parametrize("n", [2, 4, 8])
def test_hydrostatic_subdivision_invariance(n):
    total = SymTensor3.identity(-0.02)
    one, _ = mccp_step(_state(), total, PARAMS, CONST, 1.0)
    s = _state()
    for _ in range(n):
        s, _ = mccp_step(s, total * (1.0 / n), PARAMS, CONST, 1.0 / n)
    assert s.eps_vp.allclose(one.eps_vp, rtol=1e-8)
    assert s.stress.allclose(one.stress, rtol=1e-8)
    assert s.rho == pytest.approx(one.rho, rel=1e-8)


def test_hip_halving_dt_invariance(tables):
    prog = LoadingProgram(HydrostaticHip(calibration_schedule()), rho0=0.69)
    a = integrate(prog, PARAMS, tables, IntegratorOptions(dt_max=60.0))
    b = integrate(prog, PARAMS, tables, IntegratorOptions(dt_max=30.0))
    assert b.rho[-1] == pytest.approx(a.rho[-1], rel=1e-8)
    assert np.allclose(b.eps_vp[-1], a.eps_vp[-1], rtol=1e-8, atol=1e-14)
    peak = np.argmax(a.P)
    assert b.rho.max() == pytest.approx(a.rho[peak], rel=1e-8)


def test_non_convergence_signals_rejection(monkeypatch):
    monkeypatch.setattr(mccp_mod, "MAX_ITER", 1)
    with pytest.raises(ReturnMapError):
        mccp_step(_state(), SymTensor3.identity(-0.02), PARAMS, CONST, 1.0)


def test_hardening_extrapolates_linearly():
    last = PARAMS.hardening.keys[-1]
    slope = PARAMS.da(last - 1e-9)
    assert PARAMS.a(last + 0.1) == pytest.approx(PARAMS.a(last) + 0.1 * slope)
