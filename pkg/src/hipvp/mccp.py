"""Rate-independent modified Cam-Clay plasticity at a material point.

Yield surface ``F = p^2/a^2 + q^2/(M a)^2 - 1`` with associative flow and
volumetric hardening ``a = H(kappa)``, where ``kappa = -tr(eps_p)`` is the
plastic compaction. The return map is a backward-Euler projection solved by
Newton on the reduced unknowns ``(p, q, a, dlambda)``; with isotropic
elasticity and a radial deviatoric return this is equivalent to a scalar
problem in the plastic multiplier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .abouaf import bulk_shear, thermal_strain
from .errors import ConfigurationError, ReturnMapError
from .state import PointState
from .tables import MaterialTables, Table1D, Table2D
from .tensors import StressInvariants, SymTensor3, invariants

YIELD_TOL = 1e-10
MAX_ITER = 50


@dataclass(frozen=True)
class MccpParams:
    """Cam-Clay parameters.

    Attributes
    ----------
    M : Table2D
        Ellipse aspect ratio ``M(rho, T)``; bilinear, constant extrapolation.
    hardening : Table1D
        Semi-axis ``a`` (MPa) versus plastic compaction ``kappa``. Constant
        below the first key and linearly continued past the last one so a
        stress-controlled load beyond the table stays admissible.
    rho0 : float or None
        Initial relative density the parameter set was calibrated for.
    """

    M: Table2D
    hardening: Table1D
    rho0: float | None = None

    def __post_init__(self):
        if np.any(self.M.all_values() <= 0):
            raise ConfigurationError("M table: values must be positive")
        h = self.hardening
        if h.values[0] <= 0:
            raise ConfigurationError("hardening table: initial a must be positive")
        if any(b < a for a, b in zip(h.values, h.values[1:])):
            raise ConfigurationError("hardening table: a must be nondecreasing")
        if h.right != "linear":
            object.__setattr__(self, "hardening",
                               Table1D(h.keys, h.values, name=h.name, right="linear"))

    @classmethod
    def from_pairs(cls, hardening_pairs, M=1.0, rho0=None) -> MccpParams:
        """Build from ``(p, eps_vol_p)`` pairs, as hardening curves are usually
        reported; ``eps_vol_p`` may be given with either sign."""
        pairs = sorted((abs(e), p) for p, e in hardening_pairs)
        M_tab = M if isinstance(M, Table2D) else Table2D.constant(float(M), name="M")
        return cls(M=M_tab, hardening=Table1D.from_pairs(pairs, name="hardening", right="linear"),
                   rho0=rho0)

    def a(self, kappa: float) -> float:
        return self.hardening(kappa)

    def da(self, kappa: float) -> float:
        return self.hardening.slope(kappa)


def yield_value(inv: StressInvariants, a: float, M: float) -> float:
    """Normalised yield function; negative inside the ellipse."""
    return inv.p ** 2 / a ** 2 + inv.q ** 2 / (M * a) ** 2 - 1.0


def yield_gradient(stress: SymTensor3, a: float, M: float) -> SymTensor3:
    """``dF/dsigma`` at ``stress``."""
    inv = invariants(stress)
    grad = SymTensor3.identity(-2.0 * inv.p / (3.0 * a * a))
    if inv.q > 0.0:
        grad = grad + stress.deviator() * (3.0 / (M * M * a * a))
    return grad


def hardening_variable(state: PointState) -> float:
    return -state.eps_vp.trace()


def _return_map(p_tr, q_tr, a_n, kappa_n, K, G, M, params):
    x = np.array([p_tr, q_tr, a_n, 0.0])
    M2 = M * M
    for it in range(1, MAX_ITER + 1):
        p, q, a, dl = x
        a2 = a * a
        kappa = kappa_n + 2.0 * p * dl / a2
        H = params.a(kappa)
        dH = params.da(kappa)
        r = np.array([
            p * (1.0 + 2.0 * K * dl / a2) - p_tr,
            q * (1.0 + 6.0 * G * dl / (M2 * a2)) - q_tr,
            a - H,
            p * p / a2 + q * q / (M2 * a2) - 1.0,
        ])
        scale = abs(p_tr) + abs(q_tr) + a_n
        if (abs(r[3]) < YIELD_TOL and abs(r[0]) < 1e-12 * scale
                and abs(r[1]) < 1e-12 * scale and abs(r[2]) < 1e-12 * scale):
            return p, q, a, dl, it
        a3 = a2 * a
        J = np.array([
            [1.0 + 2.0 * K * dl / a2, 0.0, -4.0 * K * dl * p / a3, 2.0 * K * p / a2],
            [0.0, 1.0 + 6.0 * G * dl / (M2 * a2), -12.0 * G * dl * q / (M2 * a3),
             6.0 * G * q / (M2 * a2)],
            [-2.0 * dH * dl / a2, 0.0, 1.0 + 4.0 * dH * p * dl / a3, -2.0 * dH * p / a2],
            [2.0 * p / a2, 2.0 * q / (M2 * a2), -2.0 * (p * p + q * q / M2) / a3, 0.0],
        ])
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise ReturnMapError(f"singular return-map Jacobian: {exc}") from exc
        x = x + dx
        if x[2] <= 0.0:
            x[2] = 0.5 * a
        if x[3] < 0.0:
            x[3] = 0.0
    raise ReturnMapError(f"return map did not converge in {MAX_ITER} iterations")


@dataclass(frozen=True)
class MccpStepInfo:
    plastic: bool
    iterations: int
    dlambda: float
    yield_value: float


def mccp_step(state: PointState, d_eps: SymTensor3, params: MccpParams,
              tables: MaterialTables, dt: float, *, T_new: float | None = None,
              T_ref: float = 20.0) -> tuple[PointState, MccpStepInfo]:
    """Advance one strain-driven Cam-Clay step.

    Elastic moduli, thermal expansion and ``M`` are taken at the start-of-step
    density and end-of-step temperature. ``dt`` only advances the clock; the
    result does not depend on it.

    Raises
    ------
    ReturnMapError
        If the local Newton iteration does not converge.
    """
    T1 = state.T if T_new is None else T_new
    rho_n = state.rho
    K, G = bulk_shear(tables, rho_n, T1)
    eps_th = thermal_strain(T1, T_ref, rho_n, tables)
    eps_e_tr = state.eps_e + d_eps - (eps_th - state.eps_th)
    vol = eps_e_tr.trace()
    dev_tr = eps_e_tr.deviator()
    s_tr = dev_tr * (2.0 * G)
    p_tr = -K * vol
    q_tr = math.sqrt(1.5 * s_tr.ddot(s_tr))
    kappa_n = hardening_variable(state)
    a_n = params.a(kappa_n)
    M = params.M(rho_n, T1)
    F_tr = (p_tr / a_n) ** 2 + (q_tr / (M * a_n)) ** 2 - 1.0
    t1 = state.t + dt
    if F_tr <= 0.0:
        stress = SymTensor3.identity(-p_tr) + s_tr
        new = PointState(stress=stress, T=T1, rho=rho_n, rho0=state.rho0,
                         eps_vp=state.eps_vp, eps_e=eps_e_tr, eps_th=eps_th, t=t1)
        return new, MccpStepInfo(False, 0, 0.0, F_tr)

    p, q, a, dl, it = _return_map(p_tr, q_tr, a_n, kappa_n, K, G, M, params)
    s = s_tr * (q / q_tr) if q_tr > 0.0 else SymTensor3.zeros()
    stress = SymTensor3.identity(-p) + s
    grad = SymTensor3.identity(-2.0 * p / (3.0 * a * a))
    if q_tr > 0.0:
        grad = grad + s * (3.0 / (M * M * a * a))
    d_eps_p = grad * dl
    eps_p = state.eps_vp + d_eps_p
    eps_e = eps_e_tr - d_eps_p
    rho = min(1.0, state.rho0 * math.exp(-eps_p.trace()))
    new = PointState(stress=stress, T=T1, rho=rho, rho0=state.rho0,
                     eps_vp=eps_p, eps_e=eps_e, eps_th=eps_th, t=t1)
    F = p * p / (a * a) + q * q / (M * a) ** 2 - 1.0
    return new, MccpStepInfo(True, it, dl, F)


def current_a(state: PointState, params: MccpParams) -> float:
    return params.a(hardening_variable(state))
