import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hipvp.abouaf import (bulk_shear, density_update, derivatives_pq, elastic_strain,
                          elastic_stress, equivalent_stress, increments_pq, vp_derivatives,
                          vp_increments, vp_strain_rate, thermal_strain)
from hipvp.errors import SingularDerivativeError
from hipvp.synthetic import dense_test_tables
from hipvp.tables import Table2D, cf_slopes, lookup_AN, lookup_cf
from hipvp.tensors import SymTensor3, invariants

from oracles import derivative_errors, fd_derivatives, random_admissible_states

comp = st.floats(-300.0, 300.0, allow_nan=False)
stresses = st.tuples(*[comp] * 6).map(SymTensor3)
densities = st.floats(0.5, 1.0)


def test_equivalent_stress_dense_uniaxial():
    inv = invariants(SymTensor3.diag(-100.0, 0.0, 0.0))
    assert equivalent_stress(inv, 1.0, 0.0) == pytest.approx(100.0, rel=1e-14)


def test_equivalent_stress_zero():
    assert equivalent_stress(invariants(SymTensor3.zeros()), 2.0, 0.3) == 0.0


@pytest.mark.parametrize("c", [1.0, 3.7])
def test_equivalent_stress_hydrostatic(c):
    # 300 * sqrt(0.2), evaluated independently
    inv = invariants(SymTensor3.identity(-100.0))
    assert equivalent_stress(inv, c, 0.2) == pytest.approx(134.16407864998737, rel=1e-12)


def test_strain_rate_dense_uniaxial():
    tab = dense_test_tables(A=1e-12, N=5.0)
    rate = vp_strain_rate(SymTensor3.diag(-50.0, 0.0, 0.0), 1000.0, 1.0, tab)
    # axial -1e-12 * 50^5, lateral half of it with opposite sign
    rate = rate.components
    assert rate[0] == pytest.approx(-3.125e-4, rel=1e-12)
    assert rate[1] == pytest.approx(1.5625e-4, rel=1e-12)
    assert rate[2] == pytest.approx(1.5625e-4, rel=1e-12)
    assert list(rate[3:]) == [0.0, 0.0, 0.0]


def test_strain_rate_zero_stress(tables):
    assert vp_strain_rate(SymTensor3.zeros(), 1100.0, 0.7, tables) == SymTensor3.zeros()


def test_strain_rate_hydrostatic_is_volumetric(tables):
    rate = vp_strain_rate(SymTensor3.identity(-80.0), 1100.0, 0.7, tables)
    assert rate.deviator().norm() <= 1e-15 * rate.norm()
    assert rate.trace() < 0.0


def test_swelling_increment_value():
    # f = 0.1, I1 = -300 (p = 100), A = 1e-12, N = 5: 3 f I1 A (f I1^2)^2
    d_sw, d_cr = increments_pq(100.0, 0.0, 1e-12, 5.0, 2.0, 0.1, 1.0)
    assert d_sw == pytest.approx(-7.29e-3, rel=1e-12)
    assert d_cr == 0.0


@settings(max_examples=300)
@given(stresses, densities, st.floats(600.0, 1200.0), st.floats(1e-3, 100.0))
def test_increments_reassemble_rate(tables, stress, rho, T, dt):
    inc = vp_increments(stress, T, rho, tables, dt)
    assert abs(inc.direction.trace()) <= 1e-12
    ref = vp_strain_rate(stress, T, rho, tables) * dt
    assert inc.tensor().allclose(ref, rtol=1e-12, atol=1e-12 * ref.norm() + 1e-300)


@settings(max_examples=200)
@given(stresses, st.floats(600.0, 1200.0))
def test_dense_reduction(stress, T):
    tab = dense_test_tables()
    rate = vp_strain_rate(stress, T, 1.0, tab)
    assert abs(rate.trace()) <= 1e-12 * np.abs(rate.components).max()
    inv = invariants(stress)
    assert equivalent_stress(inv, 1.0, 0.0) == pytest.approx(inv.q, rel=1e-12, abs=1e-12)


@settings(max_examples=200)
@given(stresses, densities, st.floats(1.0, 3.0))
def test_rate_monotone_in_stress_scale(tables, stress, rho, k):
    r1 = vp_strain_rate(stress, 1100.0, rho, tables).norm()
    r2 = vp_strain_rate(stress * k, 1100.0, rho, tables).norm()
    assert r2 >= r1 * (1.0 - 1e-12)


def test_dense_derivative_dsw_dq_zero():
    d = derivatives_pq(10.0, 50.0, 1.0, 1e-12, 5.0, 1.0, 0.0, 0.0, 0.0, 1.0)
    assert d.dsw_dq == 0.0


def test_derivatives_singular_at_zero_stress(tables):
    with pytest.raises(SingularDerivativeError):
        vp_derivatives(SymTensor3.zeros(), 1100.0, 0.8, tables, 1.0)


def test_dcr_dq_hydrostatic_limit():
    p, A, N, c, f, dt = 80.0, 1e-11, 5.0, 2.5, 0.036, 3.0
    s = math.sqrt(9.0 * f * p * p)
    limit = c * A * s ** (N - 1.0) * dt
    for q in (1e-3, 1e-6):
        d = derivatives_pq(p, q, 0.7, A, N, c, f, 0.0, 0.0, dt)
        assert d.dcr_dq == pytest.approx(limit, rel=10 * q / p)
    # cross-check the limit with a one-sided difference of the increment
    h = 1e-6
    fd = (increments_pq(p, h, A, N, c, f, dt)[1] - increments_pq(p, 0.0, A, N, c, f, dt)[1]) / h
    assert fd == pytest.approx(limit, rel=1e-9)


def analytic_derivatives(p, q, rho, T, dt, tables):
    A, N = lookup_AN(tables, T)
    c, f = lookup_cf(tables, rho)
    dc, df = cf_slopes(tables, rho)
    return derivatives_pq(p, q, rho, A, N, c, f, dc, df, dt), increments_pq(p, q, A, N, c, f, dt)


def test_derivatives_match_finite_differences(tables):
    rng = np.random.default_rng(1)
    worst = 0.0
    for p, q, rho, T, dt in random_admissible_states(rng, tables, 1000):
        ana, (d_sw, d_cr) = analytic_derivatives(p, q, rho, T, dt, tables)
        fd = fd_derivatives(p, q, rho, T, dt, tables)
        worst = max(worst, max(derivative_errors(ana.as_tuple(), fd, d_sw, d_cr, p, q)))
    assert worst < 1e-5


def test_tensor_derivatives_match_invariant_form(tables):
    stress = SymTensor3((-120.0, -80.0, -60.0, 10.0, -5.0, 3.0))
    inv = invariants(stress)
    d = vp_derivatives(stress, 1050.0, 0.77, tables, 2.0)
    ref, _ = analytic_derivatives(inv.p, inv.q, 0.77, 1050.0, 2.0, tables)
    assert d == ref


def test_density_update():
    assert density_update(0.69, 0.0) == 0.69
    assert density_update(0.69, -0.1) == pytest.approx(0.76256793347219686112, rel=1e-15)
    assert density_update(0.69, -0.5) == 1.0


@settings(max_examples=200)
@given(st.floats(0.3, 1.0), st.floats(-0.3, 0.0))
def test_density_monotone_under_compaction(rho0, e):
    assert density_update(rho0, e) >= rho0


def test_elastic_identities(tables):
    assert elastic_stress(SymTensor3.zeros(), 1100.0, 0.8, tables) == SymTensor3.zeros()
    E, nu = tables.E(0.8, 1100.0), tables.nu(0.8, 1100.0)
    K = E / (3.0 * (1.0 - 2.0 * nu))
    e = 1e-3
    s = elastic_stress(SymTensor3.identity(e / 3.0), 1100.0, 0.8, tables)
    assert s.allclose(SymTensor3.identity(K * e), rtol=1e-13)
    g = 2e-4
    s = elastic_stress(SymTensor3((0.0, 0.0, 0.0, g, 0.0, 0.0)), 1100.0, 0.8, tables)
    assert s.components[3] == pytest.approx(E / (1.0 + nu) * g, rel=1e-13)
    assert bulk_shear(tables, 0.8, 1100.0)[0] == pytest.approx(K)


@settings(max_examples=100)
@given(st.tuples(*[st.floats(-1e-2, 1e-2)] * 6).map(SymTensor3))
def test_elastic_inverse(tables, eps):
    back = elastic_strain(elastic_stress(eps, 900.0, 0.75, tables), 900.0, 0.75, tables)
    assert back.allclose(eps, rtol=1e-9, atol=1e-15)


def test_thermal_strain(tables):
    assert thermal_strain(20.0, 20.0, 0.7, tables) == SymTensor3.zeros()
    tab = tables.replace(alpha=Table2D.constant(1e-5))
    e = thermal_strain(120.0, 20.0, 0.7, tab)
    assert e.components[:3] == pytest.approx((1e-3,) * 3, rel=1e-14)
    assert list(e.components[3:]) == [0.0, 0.0, 0.0]
    e = thermal_strain(1000.0, 20.0, 0.9, tables)
    assert e.trace() == pytest.approx(3.0 * tables.alpha(0.9, 1000.0) * 980.0)
