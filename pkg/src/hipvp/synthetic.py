"""Synthetic material data for tests, demos and round-trip studies.

None of these numbers are calibrated values for a real powder. They are
chosen to give SS316L-like magnitudes (tens of MPa flow stress near
1100 deg C, full densification during a 100 MPa HIP cycle) so that the
models and the calibration pipeline can be exercised end to end.
"""
from __future__ import annotations

import numpy as np

from .mccp import MccpParams
from .state import HipSchedule
from .tables import MaterialTables, Table1D, Table2D

SYNTHETIC_LABEL = "synthetic (not a calibrated material)"

# deg C -> (steady flow stress at 1e-3 1/s in MPa, stress exponent)
_FLOW = {
    600.0: (300.0, 8.0),
    800.0: (150.0, 7.0),
    900.0: (90.0, 6.0),
    1000.0: (55.0, 5.5),
    1100.0: (35.0, 5.0),
    1200.0: (22.0, 4.5),
}

_F_POINTS = ((0.55, 0.10), (0.60, 0.070), (0.65, 0.050), (0.70, 0.036),
             (0.75, 0.027), (0.80, 0.021), (0.85, 0.016), (0.90, 0.012),
             (0.95, 0.008), (0.98, 0.005), (0.99, 0.003), (1.0, 0.0))
_C_POINTS = ((0.55, 3.9), (0.60, 3.4), (0.65, 2.9), (0.70, 2.5), (0.75, 2.15),
             (0.80, 1.85), (0.85, 1.6), (0.90, 1.38), (0.95, 1.18), (1.0, 1.0))


def synthetic_AN() -> tuple[Table1D, Table1D]:
    Ts = sorted(_FLOW)
    A = [1e-3 / _FLOW[T][0] ** _FLOW[T][1] for T in Ts]
    N = [_FLOW[T][1] for T in Ts]
    return Table1D(Ts, A, name="A"), Table1D(Ts, N, name="N")


def synthetic_elastic() -> tuple[Table2D, Table2D, Table2D]:
    rho = (0.5, 0.7, 0.9, 1.0)
    T = (20.0, 600.0, 1100.0, 1300.0)
    E_dense = np.array([195e3, 160e3, 120e3, 100e3])
    factor = np.array([r ** 3 for r in rho])[:, None]
    E = factor * E_dense[None, :]
    nu = np.full((4, 4), 0.3)
    alpha = np.tile(np.array([1.6e-5, 1.8e-5, 1.9e-5, 2.0e-5]), (4, 1))
    return (Table2D(rho, T, E, name="E"), Table2D(rho, T, nu, name="nu"),
            Table2D(rho, T, alpha, name="alpha"))


def synthetic_tables() -> MaterialTables:
    """Default synthetic powder tables."""
    A, N = synthetic_AN()
    E, nu, alpha = synthetic_elastic()
    return MaterialTables(
        A=A, N=N,
        c=Table1D.from_pairs(_C_POINTS, name="c"),
        f=Table1D.from_pairs(_F_POINTS, name="f"),
        E=E, nu=nu, alpha=alpha, label=SYNTHETIC_LABEL)


def dense_test_tables(A=1e-12, N=5.0, E=100e3, nu=0.3) -> MaterialTables:
    """Temperature-independent tables with the given creep constants."""
    return MaterialTables(
        A=Table1D((1000.0,), (A,), name="A"), N=Table1D((1000.0,), (N,), name="N"),
        c=Table1D((1.0,), (1.0,), name="c"), f=Table1D((1.0,), (0.0,), name="f"),
        E=Table2D.constant(E, name="E"), nu=Table2D.constant(nu, name="nu"),
        alpha=Table2D.constant(0.0, name="alpha"), label=SYNTHETIC_LABEL)


def calibration_schedule() -> HipSchedule:
    """Synthetic HIP cycle: 2 h ramp to 100 MPa / 1100 deg C, 4 h hold, 2 h cool."""
    h = 3600.0
    pressure = ((0.0, 0.0), (2 * h, 100.0), (6 * h, 100.0), (8 * h, 0.0))
    temperature = ((0.0, 20.0), (2 * h, 1100.0), (6 * h, 1100.0), (8 * h, 20.0))
    return HipSchedule(pressure, temperature)


def synthetic_mccp(rho0: float = 0.69) -> MccpParams:
    """Synthetic Cam-Clay set that nearly fully densifies from ``rho0 = 0.69``
    at 100 MPa."""
    pairs = ((2.0, 0.0), (6.0, -0.05), (12.0, -0.10), (22.0, -0.15),
             (36.0, -0.20), (55.0, -0.25), (78.0, -0.30), (100.0, -0.36),
             (130.0, -0.42))
    M = Table2D((0.6, 0.8, 1.0), (20.0, 1100.0),
                ((0.9, 0.8), (1.1, 1.0), (1.4, 1.3)), name="M")
    return MccpParams.from_pairs(pairs, M=M, rho0=rho0)


DENSE_RATES = (1e-4, 1e-3, 1e-2)
POROUS_DENSITIES = (0.70, 0.75, 0.80, 0.85, 0.90, 0.95)


def synthetic_dataset(tables: MaterialTables | None = None, *, noise: float = 0.0,
                      seed: int = 0, rho0: float = 0.69, sample_every: float = 10.0,
                      rates=DENSE_RATES, porous_rate: float = 1e-3):
    """Virtual experiments generated by the forward model.

    Dense yield stresses are simulated at every temperature key of ``A`` and
    every rate in ``rates``. Densification is sampled every ``sample_every``
    seconds of :func:`calibration_schedule` until full density or the end of
    the hold. Porous yield stresses are simulated at ``POROUS_DENSITIES`` and
    at the temperature the HIP run has when it passes each density.
    ``noise`` is the standard deviation of multiplicative Gaussian noise on
    the yield stresses; densities are left exact.
    """
    from .calibration import CalibrationDataset, simulate_yield_stress
    from .integrator import HydrostaticHip, IntegratorOptions, LoadingProgram, integrate

    tables = synthetic_tables() if tables is None else tables
    rng = np.random.default_rng(seed)

    def noisy(v):
        return float(v * (1.0 + noise * rng.standard_normal())) if noise else float(v)

    dense = []
    for T in tables.A.keys:
        for r in rates:
            dense.append((T, r, noisy(simulate_yield_stress(tables, T, 1.0, r))))
    sched = calibration_schedule()
    _, hold_end = sched.pressure_hold()
    traj = integrate(LoadingProgram(HydrostaticHip(sched), rho0=rho0), "abouaf", tables,
                     IntegratorOptions(dt_max=sample_every, cetol=1e-7))
    grid = np.arange(0.0, hold_end + 0.5 * sample_every, sample_every)
    rho_t = np.interp(grid, traj.t, traj.rho)
    dens = [(float(t), float(r)) for t, r in zip(grid, rho_t) if r < 0.999]
    porous = []
    for rho in POROUS_DENSITIES:
        t_hit = float(np.interp(rho, traj.rho, traj.t))
        T = round(sched.temperature(t_hit), 6)
        porous.append((T, rho, porous_rate,
                       noisy(simulate_yield_stress(tables, T, rho, porous_rate))))
    return CalibrationDataset(dense_yield=dense, porous_yield=porous,
                              densification=dens, schedule=sched, rho0=rho0)
