"""Density-dependent power-law visco-plasticity for porous powder compacts.

The strain rate is

    eps_dot = A(T) s_eqv^(N-1) (3/2 c(rho) s + f(rho) I1 I),
    s_eqv   = sqrt(3 c J2 + f I1^2),

split into an equivalent swelling increment ``d_sw`` (volumetric) and an
equivalent creep increment ``d_cr`` along the von Mises direction, the form
required by an implicit creep integrator. Scalar kernels work in
(p, q) space; the tensor functions wrap them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import SingularDerivativeError
from .tables import MaterialTables, check_density, cf_slopes, lookup_AN, lookup_cf
from .tensors import StressInvariants, SymTensor3, flow_direction, invariants


class VpIncrement(NamedTuple):
    """Swelling/creep split of one visco-plastic strain increment."""

    d_sw: float
    d_cr: float
    direction: SymTensor3

    def tensor(self) -> SymTensor3:
        """Reassembled increment ``d_sw/3 I + d_cr n``."""
        return SymTensor3.identity(self.d_sw / 3.0) + self.direction * self.d_cr


@dataclass(frozen=True)
class VpDerivatives:
    """Derivatives of the increments with respect to the accumulated swelling
    strain ``eps_sw``, the pressure ``p`` and the von Mises stress ``q``."""

    dcr_deps_sw: float
    dcr_dp: float
    dcr_dq: float
    dsw_deps_sw: float
    dsw_dp: float
    dsw_dq: float

    def as_tuple(self) -> tuple:
        return (self.dcr_deps_sw, self.dcr_dp, self.dcr_dq,
                self.dsw_deps_sw, self.dsw_dp, self.dsw_dq)


def equivalent_stress(inv: StressInvariants, c: float, f: float) -> float:
    """Density-weighted equivalent stress ``sqrt(3 c J2 + f I1^2)``."""
    return math.sqrt(max(3.0 * c * inv.J2 + f * inv.I1 * inv.I1, 0.0))


def equivalent_stress_pq(p: float, q: float, c: float, f: float) -> float:
    return math.sqrt(max(c * q * q + 9.0 * f * p * p, 0.0))


def rate_factor(A: float, N: float, s_eqv: float) -> float:
    """``A s_eqv^(N-1)`` with the zero-stress singularity guarded."""
    if s_eqv == 0.0:
        return A if N == 1.0 else 0.0
    return A * s_eqv ** (N - 1.0)


def increments_pq(p, q, A, N, c, f, dt) -> tuple[float, float]:
    """Swelling and creep increments ``(d_sw, d_cr)`` in invariant space."""
    g = rate_factor(A, N, equivalent_stress_pq(p, q, c, f)) * dt
    return -9.0 * f * p * g, c * q * g


def derivatives_pq(p, q, rho, A, N, c, f, dc_drho, df_drho, dt) -> VpDerivatives:
    """Analytic derivatives of the increments.

    The dependence on the accumulated swelling strain enters only through
    ``rho = rho0 exp(-eps_sw)``, so ``d rho / d eps_sw = -rho``.
    """
    s = equivalent_stress_pq(p, q, c, f)
    if s == 0.0:
        raise SingularDerivativeError("equivalent stress is zero")
    g1 = A * s ** (N - 1.0) * dt            # A s^(N-1) dt
    g2 = A * (N - 1.0) * s ** (N - 2.0) * dt  # A (N-1) s^(N-2) dt
    drho = -rho
    dc_de = dc_drho * drho
    df_de = df_drho * drho
    ds_dp = 9.0 * f * p / s
    ds_dq = c * q / s
    ds_de = (dc_de * q * q + 9.0 * df_de * p * p) / (2.0 * s)
    return VpDerivatives(
        dcr_deps_sw=dc_de * g1 * q + c * g2 * ds_de * q,
        dcr_dp=c * g2 * ds_dp * q,
        dcr_dq=c * g1 + c * g2 * ds_dq * q,
        dsw_deps_sw=-9.0 * (df_de * g1 * p + f * g2 * ds_de * p),
        dsw_dp=-9.0 * (f * g2 * ds_dp * p + f * g1),
        dsw_dq=-9.0 * f * g2 * ds_dq * p,
    )


def vp_strain_rate(stress: SymTensor3, T: float, rho: float,
                   tables: MaterialTables) -> SymTensor3:
    """Visco-plastic strain rate tensor (1/s)."""
    A, N = lookup_AN(tables, T)
    c, f = lookup_cf(tables, rho)
    inv = invariants(stress)
    g = rate_factor(A, N, equivalent_stress(inv, c, f))
    if g == 0.0:
        return SymTensor3.zeros()
    return (stress.deviator() * (1.5 * c) + SymTensor3.identity(f * inv.I1)) * g


def vp_increments(stress: SymTensor3, T: float, rho: float,
                  tables: MaterialTables, dt: float) -> VpIncrement:
    """Equivalent swelling and creep increments over ``dt``."""
    A, N = lookup_AN(tables, T)
    c, f = lookup_cf(tables, rho)
    inv = invariants(stress)
    d_sw, d_cr = increments_pq(inv.p, inv.q, A, N, c, f, dt)
    return VpIncrement(d_sw=d_sw, d_cr=d_cr, direction=flow_direction(stress))


def vp_derivatives(stress: SymTensor3, T: float, rho: float,
                   tables: MaterialTables, dt: float) -> VpDerivatives:
    """Derivatives of the increments at the given stress state.

    Raises
    ------
    SingularDerivativeError
        If the equivalent stress is zero.
    """
    A, N = lookup_AN(tables, T)
    c, f = lookup_cf(tables, rho)
    dc, df = cf_slopes(tables, rho)
    inv = invariants(stress)
    return derivatives_pq(inv.p, inv.q, rho, A, N, c, f, dc, df, dt)


def density_update(rho0: float, eps_vol_vp: float) -> float:
    """Relative density after volumetric strain ``eps_vol_vp``, capped at 1."""
    check_density(rho0)
    return min(1.0, rho0 * math.exp(-eps_vol_vp))


def lame(tables: MaterialTables, rho: float, T: float) -> tuple[float, float]:
    E = tables.E(rho, T)
    nu = tables.nu(rho, T)
    return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu))


def bulk_shear(tables: MaterialTables, rho: float, T: float) -> tuple[float, float]:
    E = tables.E(rho, T)
    nu = tables.nu(rho, T)
    return E / (3.0 * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu))


def elastic_stress(eps_e: SymTensor3, T: float, rho: float,
                   tables: MaterialTables) -> SymTensor3:
    """Isotropic linear elasticity ``lambda tr(eps_e) I + 2 mu eps_e``."""
    lam, mu = lame(tables, rho, T)
    return SymTensor3.identity(lam * eps_e.trace()) + eps_e * (2.0 * mu)


def elastic_strain(stress: SymTensor3, T: float, rho: float,
                   tables: MaterialTables) -> SymTensor3:
    """Inverse of :func:`elastic_stress`."""
    K, G = bulk_shear(tables, rho, T)
    return (SymTensor3.identity(stress.trace() / (9.0 * K))
            + stress.deviator() * (1.0 / (2.0 * G)))


def thermal_strain(T: float, T_ref: float, rho: float,
                   tables: MaterialTables) -> SymTensor3:
    """Isotropic thermal strain ``alpha(rho, T) (T - T_ref) I``."""
    return SymTensor3.identity(tables.alpha(rho, T) * (T - T_ref))
