"""Three-step identification of the visco-plastic powder parameters.

1. ``A(T)``, ``N(T)`` from 0.2% yield stresses of fully dense samples.
2. ``f(rho)`` from the densification rate of interrupted HIP cycles.
3. ``c(rho)`` from 0.2% yield stresses of porous samples, seeded by a
   closed-form inversion and refined by repeated simulation.

The closed-form inversions used for step 2 and for the step-3 seed follow
from the forward model as implemented here:

    hydrostatic: rho_dot / rho = 3 A |I1|^N f^((N+1)/2)
    uniaxial:    eps_dot_1     = A |sigma_1|^N (c + f)^((N+1)/2)

``legacy_forms=True`` switches to the variants without the factor 3 and with
exponent ``2/(N-1)`` for ``c``, kept for comparison studies.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import CalibrationError, HipvpError
from .integrator import (IntegratorOptions, LoadingProgram, UniaxialCompression,
                         extract_yield_stress, integrate)
from .state import HipSchedule
from .tables import MaterialTables, Table1D

log = logging.getLogger(__name__)

C_FLOOR = 1e-6


@dataclass(frozen=True)
class CalibrationDataset:
    """Experimental inputs of the pipeline.

    Attributes
    ----------
    dense_yield : tuple of (T, strain_rate, sigma02)
    porous_yield : tuple of (T, rho, strain_rate, sigma02)
    densification : tuple of (t, rho)
        Interrupted-HIP density measurements under ``schedule``.
    schedule : HipSchedule or None
    rho0 : float
        Initial relative density of the densification samples.
    """

    dense_yield: tuple = ()
    porous_yield: tuple = ()
    densification: tuple = ()
    schedule: HipSchedule | None = None
    rho0: float = 0.69

    def __post_init__(self):
        object.__setattr__(self, "dense_yield",
                           tuple(tuple(map(float, r)) for r in self.dense_yield))
        object.__setattr__(self, "porous_yield",
                           tuple(tuple(map(float, r)) for r in self.porous_yield))
        dens = tuple(sorted(tuple(map(float, r)) for r in self.densification))
        object.__setattr__(self, "densification", dens)
        for row in self.dense_yield:
            if len(row) != 3 or row[2] <= 0 or row[1] <= 0:
                raise CalibrationError(f"invalid dense yield row {row}", step="data")
        for row in self.porous_yield:
            if len(row) != 4 or row[3] <= 0 or row[2] <= 0 or not 0 < row[1] <= 1:
                raise CalibrationError(f"invalid porous yield row {row}", step="data")
        rhos = [r for _, r in dens]
        if any(b < a for a, b in zip(rhos, rhos[1:])):
            raise CalibrationError("densification densities must be nondecreasing in time",
                                   step="data")


@dataclass(frozen=True)
class YieldTestSettings:
    """Discretisation of the simulated compression tests (fixed strain steps)."""

    strain_increment: float = 2.5e-5
    offset: float = 0.002
    max_strain: float = 0.2


@dataclass(frozen=True)
class CalibrationConfig:
    """Pipeline settings.

    ``initial_guess`` is an ``(A_table, N_table)`` pair seeding step 1 (the
    usual source is prior creep data for the alloy). Without it, step 1
    seeds from a log-log fit and therefore needs two strain rates per
    temperature.
    """

    initial_guess: tuple | None = None
    fix_N: bool = False
    tol_AN: float = 1e-3
    tol_c: float = 1e-6
    max_evaluations: int = 2000
    max_sweeps: int = 8
    legacy_forms: bool = False
    yield_test: YieldTestSettings = field(default_factory=YieldTestSettings)
    seed: int = 0


@dataclass
class StepReport:
    name: str
    status: str = "not run"
    iterations: int = 0
    residuals: list = field(default_factory=list)
    message: str = ""


@dataclass
class CalibrationResult:
    """Calibrated tables plus per-step reports."""

    base_tables: MaterialTables
    A: Table1D | None = None
    N: Table1D | None = None
    f: Table1D | None = None
    c: Table1D | None = None
    steps: dict = field(default_factory=dict)
    complete: bool = False
    failed_step: str | None = None

    @property
    def tables(self) -> MaterialTables:
        """Base tables with every calibrated entry substituted."""
        changes = {k: getattr(self, k) for k in ("A", "N", "f", "c")
                   if getattr(self, k) is not None}
        label = "calibrated" if self.complete else f"PARTIAL (failed at step {self.failed_step})"
        return self.base_tables.replace(label=label, **changes)

    def to_dict(self) -> dict:
        out = {"complete": self.complete, "failed_step": self.failed_step, "tables": {}}
        for k in ("A", "N", "f", "c"):
            tab = getattr(self, k)
            if tab is not None:
                out["tables"][k] = [list(p) for p in tab.pairs()]
        out["steps"] = {k: asdict(v) for k, v in self.steps.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def report_text(self) -> str:
        lines = ["calibration report",
                 f"status: {'complete' if self.complete else 'PARTIAL result, tables incomplete'}"]
        if self.failed_step:
            lines.append(f"failed at step: {self.failed_step}")
        for key in ("AN", "f", "c"):
            rep = self.steps.get(key)
            if rep is None:
                continue
            lines.append("")
            lines.append(f"[{rep.name}] {rep.status}, iterations={rep.iterations}")
            if rep.message:
                lines.append(f"  {rep.message}")
            for row in rep.residuals:
                lines.append("  " + ", ".join(f"{k}={_fmt(v)}" for k, v in row.items()))
        for k in ("A", "N", "f", "c"):
            tab = getattr(self, k)
            if tab is not None:
                lines.append("")
                lines.append(f"{k} table:")
                lines.extend(f"  {x!r}\t{y!r}" for x, y in tab.pairs())
        return "\n".join(lines) + "\n"


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


# -- forward model ------------------------------------------------------------

def simulate_yield_stress(tables: MaterialTables, T: float, rho: float,
                          strain_rate: float,
                          settings: YieldTestSettings = YieldTestSettings()) -> float:
    """0.2% yield stress of a simulated constant strain-rate compression test."""
    dt = settings.strain_increment / strain_rate
    prog = LoadingProgram(UniaxialCompression(
        strain_rate=strain_rate, T=T, duration=settings.max_strain / strain_rate,
        stop_offset_strain=settings.offset), rho0=rho)
    traj = integrate(prog, "abouaf", tables, IntegratorOptions.fixed(dt, max_newton=60))
    return extract_yield_stress(traj, tables.E(rho, T), offset=settings.offset)


def _single_T(tables, T, A, N):
    return tables.replace(A=Table1D((T,), (A,), name="A"), N=Table1D((T,), (N,), name="N"))


# -- step 1 ---------------------------------------------------------------------

def _guess_at(initial_guess, T):
    if initial_guess is None:
        return None
    if callable(initial_guess):
        return initial_guess(T)
    A_tab, N_tab = initial_guess
    return A_tab(T), N_tab(T)


def _loglog_seed(points):
    rates = np.log([r for r, _ in points])
    sig = np.log([s for _, s in points])
    slope = np.polyfit(rates, sig, 1)[0]
    N = 1.0 / slope
    A = float(np.exp(np.mean(rates - N * sig)))
    return A, N


def calibrate_AN(dense_yield, initial_guess=None, tol: float = 1e-3, *,
                 base_tables: MaterialTables, fix_N: bool = False,
                 settings: YieldTestSettings = YieldTestSettings(),
                 max_evaluations: int = 2000, report: StepReport | None = None):
    """Fit ``A`` and ``N`` at each tested temperature.

    Parameters
    ----------
    dense_yield : iterable of (T, strain_rate, sigma02)
    initial_guess : (Table1D, Table1D) or callable T -> (A, N), optional
    tol : float
        Largest accepted relative yield-stress residual.
    base_tables : MaterialTables
        Supplies the elastic properties of the simulated specimens.
    fix_N : bool
        Keep ``N`` at its seed and fit only ``A``.

    Returns
    -------
    (Table1D, Table1D)
    """
    report = report if report is not None else StepReport("A(T), N(T)")
    groups = {}
    for T, rate, sig in dense_yield:
        groups.setdefault(float(T), []).append((float(rate), float(sig)))
    if not groups:
        raise CalibrationError("no dense yield data", step="AN")
    dense = base_tables.replace(c=Table1D((1.0,), (1.0,), name="c"),
                                f=Table1D((1.0,), (0.0,), name="f"))
    fitted = {}
    for T in sorted(groups):
        pts = sorted(groups[T])
        seed = _guess_at(initial_guess, T)
        if seed is None:
            if len({r for r, _ in pts}) < 2:
                raise CalibrationError(
                    f"T={T}: a single strain rate needs an initial guess for (A, N)", step="AN")
            seed = _loglog_seed(pts)
        A0, N0 = float(seed[0]), float(seed[1])
        if fix_N:
            A0 = float(np.exp(np.mean([math.log(r) - N0 * math.log(s) for r, s in pts])))

        def sims(A, N):
            tab = _single_T(dense, T, A, N)
            return [simulate_yield_stress(tab, T, 1.0, r, settings) for r, _ in pts]

        def objective(x):
            logA, N = (x[0], N0) if fix_N else (x[0], x[1])
            if N < 1.0:
                return 1e6 + (1.0 - N)
            try:
                sim = sims(10.0 ** logA, N)
            except HipvpError:
                return 1e6
            return sum((s / e - 1.0) ** 2 for s, (_, e) in zip(sim, pts))

        x0 = math.log10(A0)
        if fix_N:
            res = minimize_scalar(lambda v: objective([v]), bracket=(x0 - 0.05, x0 + 0.05),
                                  tol=1e-10, options={"maxiter": max_evaluations})
            x, nfev, ok = [res.x], res.nfev, res.success
        else:
            simplex = np.array([[x0, N0], [x0 + 0.1, N0], [x0, N0 * 1.05]])
            res = minimize(objective, [x0, N0], method="Nelder-Mead",
                           options={"xatol": 1e-6, "fatol": 1e-16,
                                    "maxfev": max_evaluations, "initial_simplex": simplex})
            x, nfev, ok = res.x, res.nfev, res.success or res.nfev < max_evaluations
        A = 10.0 ** x[0]
        N = N0 if fix_N else float(x[1])
        report.iterations += int(nfev)
        if not ok:
            raise CalibrationError(f"T={T}: optimizer did not converge in "
                                   f"{max_evaluations} evaluations", step="AN",
                                   partial={"T": T, "A": A, "N": N})
        fitted[T] = (A, N)
        for (rate, sig), s in zip(pts, sims(A, N)):
            report.residuals.append({"T": T, "strain_rate": rate, "sigma02_exp": sig,
                                     "sigma02_sim": s, "rel_error": s / sig - 1.0})
        log.info("step 1: T=%g A=%.6g N=%.6g (%d evaluations)", T, A, N, nfev)
    worst = max(abs(r["rel_error"]) for r in report.residuals)
    Ts = sorted(fitted)
    A_tab = Table1D(Ts, [fitted[T][0] for T in Ts], name="A")
    N_tab = Table1D(Ts, [fitted[T][1] for T in Ts], name="N")
    if worst > tol:
        report.status = "failed"
        raise CalibrationError(f"step 1 residual {worst:.3g} exceeds tolerance {tol:.3g}",
                               step="AN", partial=(A_tab, N_tab))
    report.status = "ok"
    return A_tab, N_tab


# -- step 2 ---------------------------------------------------------------------

def densification_rate(densification):
    """Smoothed densities and their central-difference rates.

    A 3-point moving average is applied to the interior samples before
    differencing. Returns ``(t, rho_smooth, rho_dot)`` for interior samples.
    """
    data = np.array(sorted(densification), dtype=float).reshape(-1, 2)
    t, rho = data[:, 0], data[:, 1]
    sm = rho.copy()
    sm[1:-1] = (rho[:-2] + rho[1:-1] + rho[2:]) / 3.0
    rate = (sm[2:] - sm[:-2]) / (t[2:] - t[:-2])
    return t[1:-1], sm[1:-1], rate


def _kink_times(schedule: HipSchedule, T_keys) -> np.ndarray:
    """Times where the densification rate can have a slope discontinuity:
    schedule breakpoints and crossings of tabulated temperature keys."""
    bps = schedule.breakpoints()
    kinks = list(bps)
    for t0, t1 in zip(bps, bps[1:]):
        T0, T1 = schedule.temperature(t0), schedule.temperature(t1)
        for Tk in T_keys:
            if min(T0, T1) < Tk < max(T0, T1):
                kinks.append(t0 + (Tk - T0) / (T1 - T0) * (t1 - t0))
    return np.array(sorted(kinks))


def invert_f(densification, schedule: HipSchedule, A_table: Table1D, N_table: Table1D,
             *, legacy_form: bool = False, skip_kinks: bool = True,
             min_change: float = 1e-6, report: StepReport | None = None) -> Table1D:
    """Tabulate ``f(rho)`` from densification-rate data.

    Samples with non-positive rate, zero pressure or full density are skipped,
    as are samples whose density changes by less than ``min_change`` across
    the difference stencil (below measurement resolution). With ``skip_kinks`` so are samples whose difference stencil spans a
    schedule breakpoint or a temperature key of ``A``/``N``, where the
    difference quotient mixes two slopes. The fully dense point ``f(1) = 0``
    is appended.
    """
    report = report if report is not None else StepReport("f(rho)")
    if schedule is None:
        raise CalibrationError("densification data needs its HIP schedule", step="f")
    if len(densification) < 3:
        raise CalibrationError("need at least 3 densification samples", step="f")
    factor = 1.0 if legacy_form else 3.0
    times = np.array(sorted(t for t, _ in densification), dtype=float)
    kinks = _kink_times(schedule, set(A_table.keys) | set(N_table.keys)) if skip_kinks else ()
    pts = {}
    skipped = 0
    nonpositive = []
    for i, (ti, ri, rate) in enumerate(zip(*densification_rate(densification)), start=1):
        P = schedule.pressure(ti)
        if rate <= 0.0 or P <= 0.0 or ri >= 1.0:
            if ri < 1.0:
                nonpositive.append(float(ti))
            continue
        lo, hi = times[max(i - 2, 0)], times[min(i + 2, len(times) - 1)]
        if rate * (times[i + 1] - times[i - 1]) < min_change or any(lo < k < hi for k in kinks):
            skipped += 1
            continue
        T = schedule.temperature(ti)
        A, N = A_table(T), N_table(T)
        f = (rate / (factor * ri * A * (3.0 * P) ** N)) ** (2.0 / (N + 1.0))
        pts.setdefault(float(ri), f)
        report.residuals.append({"t": float(ti), "rho": float(ri), "rho_dot": float(rate),
                                 "T": T, "P": P, "f": f})
    if nonpositive:
        log.warning("step 2: skipped %d samples with non-positive rate or pressure "
                    "(t from %g to %g s)", len(nonpositive), nonpositive[0], nonpositive[-1])
    if len(pts) < 2:
        report.status = "failed"
        raise CalibrationError(f"only {len(pts)} usable densification samples", step="f")
    keys = sorted(pts)
    report.status = "ok"
    report.iterations = len(keys)
    report.message = (f"{len(nonpositive)} non-positive-rate samples skipped, "
                      f"{skipped} samples at rate kinks or below resolution skipped")
    return Table1D(keys + [1.0], [pts[k] for k in keys] + [0.0], name="f")


# -- step 3 ---------------------------------------------------------------------

def c_seed(sigma02: float, strain_rate: float, A: float, N: float, f: float,
           legacy_form: bool = False) -> float:
    """Closed-form uniaxial inversion for ``c`` (treats sigma02 as steady state)."""
    expo = 2.0 / (N - 1.0) if legacy_form else 2.0 / (N + 1.0)
    return (strain_rate / (A * abs(sigma02) ** N)) ** expo - f


def calibrate_c(porous_yield, A_table: Table1D, N_table: Table1D, f_table: Table1D,
                tol: float = 1e-6, *, base_tables: MaterialTables,
                settings: YieldTestSettings = YieldTestSettings(), max_sweeps: int = 8,
                legacy_form: bool = False, report: StepReport | None = None) -> Table1D:
    """Fit ``c`` at every tested density by matching simulated yield stresses.

    Each density's table entry is adjusted in turn (points sharing a density
    are fitted together) until every relative residual is below ``tol`` or
    ``max_sweeps`` is reached. The per-entry search is a bracketing root
    solve on the monotone map ``c -> sigma02``; the reported history holds
    the best residual so far after each evaluation.
    """
    report = report if report is not None else StepReport("c(rho)")
    groups = {}
    for T, rho, rate, sig in porous_yield:
        groups.setdefault(float(rho), []).append((float(T), float(rate), float(sig)))
    if not groups:
        raise CalibrationError("no porous yield data", step="c")
    base = base_tables.replace(A=A_table, N=N_table, f=f_table)
    keys = sorted(k for k in groups if k < 1.0)
    values = {}
    for k in keys:
        seeds = []
        for T, rate, sig in groups[k]:
            s = c_seed(sig, rate, A_table(T), N_table(T), f_table(k), legacy_form)
            if not s > 0:
                log.warning("step 3: seed c=%g at rho=%g clipped to %g", s, k, C_FLOOR)
                s = C_FLOOR
            seeds.append(s)
        values[k] = float(np.exp(np.mean(np.log(seeds))))
    seeds = dict(values)

    def table():
        return Table1D(keys + [1.0], [values[k] for k in keys] + [1.0], name="c")

    def errors_at(k, cval):
        values[k] = cval
        tab = base.replace(c=table())
        return [simulate_yield_stress(tab, T, k, rate, settings) / sig - 1.0
                for T, rate, sig in groups[k]]

    history = {k: [] for k in keys}
    worst = math.inf
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for k in keys:
            best = [math.inf]

            def g(logc, k=k):
                try:
                    e = float(np.mean(errors_at(k, math.exp(logc))))
                except HipvpError:
                    e = math.nan
                if abs(e) < best[0]:
                    best[0] = abs(e)
                history[k].append(best[0])
                return e

            x0 = math.log(values[k])
            g0 = g(x0)
            if abs(g0) <= 0.1 * tol:
                continue
            # larger c -> faster flow -> lower yield stress
            step = 0.05 if g0 > 0 else -0.05
            b = x0 + step
            gb = g(b)
            while gb * g0 > 0 and abs(b - x0) < 40:
                step *= 2.0
                b = x0 + step
                gb = g(b)
            if gb * g0 > 0 or math.isnan(gb):
                raise CalibrationError(f"could not bracket c at rho={k}", step="c",
                                       partial=table())
            root = brentq(g, min(x0, b), max(x0, b), xtol=1e-14, rtol=1e-14, maxiter=200)
            values[k] = math.exp(root)
        worst = 0.0
        tab = base.replace(c=table())
        for k in keys:
            for T, rate, sig in groups[k]:
                e = simulate_yield_stress(tab, T, k, rate, settings) / sig - 1.0
                worst = max(worst, abs(e))
        if worst < tol:
            break
    report.iterations = sweeps
    tab = base.replace(c=table())
    for k in keys:
        for T, rate, sig in groups[k]:
            s = simulate_yield_stress(tab, T, k, rate, settings)
            report.residuals.append({"T": T, "rho": k, "strain_rate": rate,
                                     "sigma02_exp": sig, "sigma02_sim": s,
                                     "rel_error": s / sig - 1.0, "c_seed": seeds[k],
                                     "c": values[k]})
    report.message = "search history (best |error| per evaluation): " + "; ".join(
        f"rho={k:g}: {len(history[k])} evals" for k in keys)
    report.history = history
    if worst >= tol:
        report.status = "failed"
        raise CalibrationError(f"step 3 residual {worst:.3g} above tolerance {tol:.3g} "
                               f"after {sweeps} sweeps", step="c", partial=table())
    report.status = "ok"
    return table()


# -- pipeline -------------------------------------------------------------------

def run_pipeline(dataset: CalibrationDataset, base_tables: MaterialTables,
                 config: CalibrationConfig = CalibrationConfig()) -> CalibrationResult:
    """Run steps 1 to 3 in order.

    Raises
    ------
    CalibrationError
        With ``partial`` set to the :class:`CalibrationResult` reached so far.
    """
    result = CalibrationResult(base_tables=base_tables)
    result.steps = {"AN": StepReport("step 1: A(T), N(T)"),
                    "f": StepReport("step 2: f(rho)"),
                    "c": StepReport("step 3: c(rho)")}

    def fail(step, exc):
        result.failed_step = step
        rep = result.steps[step]
        rep.status = "failed"
        rep.message = str(exc)
        if step == "AN" and isinstance(getattr(exc, "partial", None), tuple):
            result.A, result.N = exc.partial
        if step == "c" and isinstance(getattr(exc, "partial", None), Table1D):
            result.c = exc.partial
        raise CalibrationError(f"calibration aborted at step {step}: {exc}",
                               step=step, partial=result) from exc

    try:
        result.A, result.N = calibrate_AN(
            dataset.dense_yield, config.initial_guess, config.tol_AN,
            base_tables=base_tables, fix_N=config.fix_N, settings=config.yield_test,
            max_evaluations=config.max_evaluations, report=result.steps["AN"])
    except CalibrationError as exc:
        fail("AN", exc)
    try:
        if not dataset.densification:
            raise CalibrationError("dataset has no densification data", step="f")
        result.f = invert_f(dataset.densification, dataset.schedule, result.A, result.N,
                            legacy_form=config.legacy_forms, report=result.steps["f"])
    except CalibrationError as exc:
        fail("f", exc)
    try:
        result.c = calibrate_c(
            dataset.porous_yield, result.A, result.N, result.f, config.tol_c,
            base_tables=base_tables, settings=config.yield_test,
            max_sweeps=config.max_sweeps, legacy_form=config.legacy_forms,
            report=result.steps["c"])
    except CalibrationError as exc:
        fail("c", exc)
    result.complete = True
    return result
