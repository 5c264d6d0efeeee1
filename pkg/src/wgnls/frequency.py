"""Frequency-constrained ground states.

Two independent routes to the same infimum:

  * gamma: minimize the action S_omega over the zero-virial set {K = 0},
    the constraint maintained by the closed-form amplitude projection after
    every preconditioned descent step;
  * beta: minimize S_omega over the Nehari set {N_omega = 0} the same way.

The descent step is u <- |u - tau * g| with g the action gradient
preconditioned by (omega - Lap)^{-1}; at tau = 1 this is a stabilized
Petviashvili-type fixed point.  Convergence is measured by the component of
g transverse to the projection ray, which vanishes at the constrained
minimizer.  Minimizers of either route solve the stationary equation
-Lap u + omega u = |u|^alpha u, so the Nehari route's virial and the
equation residual are recorded as independent consistency checks.

For m = 1 the y-independent branch value equals 2 pi times the m = 0 value
on the same x-grid, so threshold detection compares the mixed-start solve
against a discretely computed reference (common-mode discretization error
cancels, leaving the solver tolerance).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .descent import SolverOptions, Workspace, el_residual
from .fields import Field
from .params import DomainSpec, ModelParams
from .spectral import dilate_axis_any, dilate_axis_rational
from . import functionals as fn

POHOZAEV_K = "pohozaev-K"
NEHARI_N = "nehari-N"
MASS_M = "mass-M"


@dataclass
class GroundState:
    field: Field
    omega: float
    constraint: str
    value: float
    report: fn.FunctionalReport
    el_residual: float
    iterations: int
    converged: bool
    boundary_mass_fraction: float
    pg_norm: float = math.nan
    status: str = ""

    @property
    def y_fraction(self) -> float:
        return self.report.y_fraction


@dataclass
class SweepRecord:
    omega: float
    gamma: float
    beta: float
    mass_c: float
    y_fraction: float
    rd_reference: float
    converged: bool = True
    half_length: float | None = None


def default_init(ws: Workspace, omega: float, y_mix: float = 0.3) -> np.ndarray:
    """Gaussian at the frequency's length scale, with a torus-mode tilt.

    The cos(y) admixture breaks the y-independent symmetry so that the
    descent can find the y-dependent branch when it is the lower one.
    """
    L = ws.domain.half_length
    x = -L + ws.domain.h_x * np.arange(ws.domain.n_x)
    prof = np.exp(-0.5 * omega * x**2)
    u = prof
    for _ in range(ws.params.d - 1):
        u = np.multiply.outer(u, prof)
    if ws.params.m == 1:
        yv = ws.domain.h_y * np.arange(ws.domain.n_y)
        u = np.multiply.outer(u, 1.0 + y_mix * np.cos(yv))
    return np.ascontiguousarray(u)


def _project_factor(ws: Workspace, constraint: str, omega: float,
                    mass: float, kin_x: float, kin_y: float, pot: float) -> float:
    a = ws.params.alpha
    if pot <= 0.0 or (constraint == POHOZAEV_K and kin_x <= 0.0):
        raise fn.DegenerateFieldError("descent iterate became degenerate")
    if constraint == NEHARI_N:
        return ((omega * mass + kin_x + kin_y) / pot) ** (1.0 / a)
    return (kin_x / (ws.params.virial_coeff * pot)) ** (1.0 / a)


def _minimize_action(
    ws: Workspace,
    omega: float,
    constraint: str,
    init: np.ndarray,
    opts: SolverOptions,
) -> tuple[np.ndarray, float, int, float, str]:
    """Projected preconditioned descent; returns (u, S, iters, pg, status)."""
    a = ws.params.alpha
    u = np.abs(np.asarray(init, dtype=float))
    prec = 1.0 / (omega + ws.k2)
    tau = opts.tau0
    best_pg = math.inf
    best_pg_it = 0
    S_cur = math.inf
    gauge_ref = None
    status = "maxiter"
    it = 0
    for it in range(opts.max_iter):
        uh = ws.rfft(u)
        mass, kin_x, kin_y = ws.sums(uh)
        pot = ws.potential(u)
        s = _project_factor(ws, constraint, omega, mass, kin_x, kin_y, pot)
        u = u * s
        mass *= s * s
        kin_x *= s * s
        kin_y *= s * s
        pot *= s ** (a + 2.0)
        S_cur = 0.5 * (kin_x + kin_y) - pot / (a + 2.0) + 0.5 * omega * mass
        f = u ** (a + 1.0)
        g = u - ws.irfft(prec * ws.rfft(f))
        g -= (ws.quad(g * u) / mass) * u
        pg = math.sqrt(ws.quad(g * g) / mass)
        if pg < opts.tol:
            status = "ok"
            break
        if pg < 0.9 * best_pg:
            best_pg, best_pg_it = pg, it
        elif it - best_pg_it > opts.floor_window and it > 2 * opts.floor_window:
            status = "floor"
            break
        # mass-critical gamma solves drift along the neutral dilation family;
        # re-center the x-scale with an exact rational dilation if it runs away
        if (
            constraint == POHOZAEV_K
            and ws.params.mass_critical
            and it % 100 == 50
        ):
            if gauge_ref is None:
                gauge_ref = kin_x
            elif not (gauge_ref / 16.0 < kin_x < gauge_ref * 16.0):
                t = 2 if kin_x < gauge_ref else 0.5
                from fractions import Fraction

                vals = u
                for ax in range(ws.params.d):
                    vals = dilate_axis_rational(vals, ax, Fraction(t))
                u = np.abs(float(t) ** (ws.params.d / 2.0) * vals.real)
                continue
        accepted = False
        tt = tau
        for _ in range(30):
            trial = np.abs(u - tt * g)
            th = ws.rfft(trial)
            tm, tkx, tky = ws.sums(th)
            tpot = ws.potential(trial)
            try:
                ts = _project_factor(ws, constraint, omega, tm, tkx, tky, tpot)
            except fn.DegenerateFieldError:
                tt *= 0.5
                continue
            S_new = (
                ts**2 * (0.5 * (tkx + tky) + 0.5 * omega * tm)
                - ts ** (a + 2.0) * tpot / (a + 2.0)
            )
            if S_new <= S_cur + 1e-13 * abs(S_cur):
                accepted = True
                break
            tt *= 0.5
        if not accepted:
            status = "linesearch"
            break
        u = trial
        tau = min(tt * 1.25, opts.tau0)
    return u, S_cur, it + 1, pg, status


def _finalize(
    ws: Workspace, u: np.ndarray, omega: float, constraint: str,
    S: float, iters: int, pg: float, status: str, opts: SolverOptions,
) -> GroundState:
    fld = ws.field(u)
    rep = fn.evaluate(fld, omega)
    if constraint == NEHARI_N:
        cons = abs(rep.nehari) / max(omega * rep.mass + rep.kinetic_x + rep.kinetic_y, 1e-300)
    else:
        cons = abs(rep.virial) / max(rep.kinetic_x, 1e-300)
    converged = (status == "ok" and cons < opts.constraint_tol) or (
        status == "floor" and pg < opts.floor_tol and cons < opts.constraint_tol
    )
    return GroundState(
        field=fld,
        omega=omega,
        constraint=constraint,
        value=S,
        report=rep,
        el_residual=el_residual(ws, u, omega),
        iterations=iters,
        converged=converged,
        boundary_mass_fraction=ws.boundary_fraction(u),
        pg_norm=pg,
        status=status,
    )


def solve_beta(
    params: ModelParams,
    domain: DomainSpec,
    omega: float,
    init: Field | np.ndarray | None = None,
    opts: SolverOptions | None = None,
) -> GroundState:
    """Nehari-route ground state (value beta_omega)."""
    opts = opts or SolverOptions()
    ws = Workspace(params, domain)
    u0 = _coerce_init(ws, omega, init)
    u, S, iters, pg, status = _minimize_action(ws, omega, NEHARI_N, u0, opts)
    return _finalize(ws, u, omega, NEHARI_N, S, iters, pg, status, opts)


def solve_gamma(
    params: ModelParams,
    domain: DomainSpec,
    omega: float,
    init: Field | np.ndarray | None = None,
    opts: SolverOptions | None = None,
) -> GroundState:
    """Zero-virial-route ground state (value gamma_omega)."""
    opts = opts or SolverOptions()
    ws = Workspace(params, domain)
    u0 = _coerce_init(ws, omega, init)
    u, S, iters, pg, status = _minimize_action(ws, omega, POHOZAEV_K, u0, opts)
    return _finalize(ws, u, omega, POHOZAEV_K, S, iters, pg, status, opts)


def _coerce_init(ws: Workspace, omega: float, init) -> np.ndarray:
    if init is None:
        return default_init(ws, omega)
    if isinstance(init, Field):
        return np.abs(init.values)
    return np.abs(np.asarray(init, dtype=float))


def reference_action_discrete(
    params: ModelParams, domain: DomainSpec, omega: float,
    opts: SolverOptions | None = None,
) -> float:
    """(2 pi)^m times the m = 0 ground-state action on the same x-grid.

    Computed by a Nehari solve of the reduced problem, so that comparisons
    with full solves share the x-discretization exactly.
    """
    flat = ModelParams(params.d, 0, params.alpha)
    fdom = DomainSpec(domain.half_length, domain.n_x, 0)
    o = opts or SolverOptions(tol=1e-10)
    gs = solve_beta(flat, fdom, omega, opts=o)
    return (2.0 * math.pi) ** params.m * gs.value


@dataclass
class ThresholdResult:
    omega_lo: float
    omega_hi: float
    value_bracket: tuple[float, float]
    y_bracket: tuple[float, float]
    agree: bool
    probes: list = dc_field(default_factory=list)

    @property
    def omega_star(self) -> float:
        return 0.5 * (self.omega_lo + self.omega_hi)

    @property
    def width(self) -> float:
        return self.omega_hi - self.omega_lo


def _probe(params, domain, omega, opts, margin_rel, y_hi, y_lo):
    gs = solve_gamma(params, domain, omega, opts=opts)
    ref_hat = reference_action_discrete(params, domain, omega) / (2.0 * math.pi) ** params.m
    rd_ref = (2.0 * math.pi) ** params.m * ref_hat
    value_above = gs.value < rd_ref - margin_rel * ref_hat
    yf = gs.y_fraction
    y_above = yf >= y_hi
    y_below = yf <= y_lo
    rec = SweepRecord(
        omega=omega, gamma=gs.value, beta=math.nan, mass_c=gs.report.mass,
        y_fraction=yf, rd_reference=rd_ref, converged=gs.converged,
        half_length=domain.half_length,
    )
    return value_above, y_above, y_below, rec


def find_omega_star(
    params: ModelParams,
    domain: DomainSpec,
    bracket: tuple[float, float],
    tol: float,
    opts: SolverOptions | None = None,
    margin_rel: float = 1e-4,
    y_fraction_hi: float = 1e-3,
    y_fraction_lo: float = 1e-6,
) -> ThresholdResult:
    """Bisection for the frequency separating y-independent from y-dependent
    ground states.

    The value indicator tests gamma < (2 pi)^m gamma_hat - margin; the
    y-gradient fraction of the minimizer is tracked as an independent
    indicator.  When the two disagree the interval hull of both brackets
    is reported with agree=False.
    """
    if params.m != 1:
        raise ValueError("threshold detection needs a torus factor")
    opts = opts or SolverOptions()
    lo, hi = bracket
    probes = []
    y_above: list[float] = []
    y_below: list[float] = []

    def run(omega):
        va, ya, yb, rec = _probe(params, domain, omega, opts, margin_rel,
                                 y_fraction_hi, y_fraction_lo)
        probes.append(rec)
        if ya:
            y_above.append(omega)
        if yb:
            y_below.append(omega)
        return va

    va_lo = run(lo)
    va_hi = run(hi)
    if va_lo or not va_hi:
        raise ValueError(
            f"bracket {bracket} does not straddle the threshold "
            f"(indicators {va_lo}, {va_hi})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if run(mid):
            hi = mid
        else:
            lo = mid
    yb_max = max(y_below) if y_below else -math.inf
    ya_min = min(y_above) if y_above else math.inf
    eps = 1e-12 * hi
    agree = (yb_max <= hi + eps) and (ya_min >= lo - eps) and (yb_max <= ya_min)
    if agree:
        out_lo, out_hi = lo, hi
    else:
        out_lo = min(lo, *( [yb_max] if np.isfinite(yb_max) else [] ), lo)
        out_hi = max(hi, *( [ya_min] if np.isfinite(ya_min) else [] ), hi)
    probes.sort(key=lambda r: r.omega)
    return ThresholdResult(
        omega_lo=out_lo, omega_hi=out_hi,
        value_bracket=(lo, hi), y_bracket=(yb_max, ya_min),
        agree=agree, probes=probes,
    )


def _warm_start(ws_new: Workspace, prev_u: np.ndarray, ws_prev: Workspace,
                kappa: float) -> np.ndarray:
    """Transfer a minimizer between frequencies with the dilation
    kappa^{2/alpha} u(kappa x, y); exact scalar transfer when the box is
    rescaled with the frequency, spectral interpolation otherwise."""
    a = ws_prev.params.alpha
    vals = prev_u.astype(complex)
    if ws_new.shape[-1] != ws_prev.shape[-1] and ws_prev.params.m == 1:
        from .spectral import _resample_axis
        vals = _resample_axis(vals, len(ws_prev.shape) - 1, ws_new.shape[-1])
    L_prev, L_new = ws_prev.domain.half_length, ws_new.domain.half_length
    if abs(L_new * kappa - L_prev) < 1e-12 * L_prev:
        out = kappa ** (2.0 / a) * vals
    else:
        for ax in range(ws_prev.params.d):
            vals = dilate_axis_any(vals, ax, kappa * L_new / L_prev, L_new)
        out = kappa ** (2.0 / a) * vals
    return np.abs(out.real)


def sweep(
    params: ModelParams,
    domain: DomainSpec,
    omega_list: list[float],
    opts: SolverOptions | None = None,
    adapt_domain: bool = False,
    n_y_cap: int = 512,
    on_record: Callable[[SweepRecord], None] | None = None,
) -> list[SweepRecord]:
    """Ground-state pair (gamma and beta) at each frequency, warm-started.

    With adapt_domain=True the box is shrunk like omega^{-1/2} from the
    first entry and the torus grid refined as the minimizer concentrates,
    keeping the profile equally resolved across decades.
    """
    opts = opts or SolverOptions()
    records: list[SweepRecord] = []
    prev: tuple[np.ndarray, Workspace, float] | None = None
    omega0 = omega_list[0] if omega_list else 1.0
    for omega in omega_list:
        if adapt_domain:
            L = domain.half_length * math.sqrt(omega0 / omega)
            n_y = domain.n_y
            if params.m == 1 and n_y:
                grow = max(1.0, math.sqrt(omega / omega0))
                n_y = min(n_y_cap, domain.n_y << max(0, round(math.log2(grow))))
            dom = DomainSpec(L, domain.n_x, n_y)
        else:
            dom = domain
        ws = Workspace(params, dom)
        if prev is not None:
            kappa = math.sqrt(omega / prev[2])
            init = _warm_start(ws, prev[0], prev[1], kappa)
        else:
            init = default_init(ws, omega)
        gs_g = solve_gamma(params, dom, omega, init=init, opts=opts)
        gs_b = solve_beta(params, dom, omega, init=gs_g.field.values.real, opts=opts)
        rd = reference_action_discrete(params, dom, omega)
        rec = SweepRecord(
            omega=omega, gamma=gs_g.value, beta=gs_b.value,
            mass_c=gs_g.report.mass, y_fraction=gs_g.y_fraction,
            rd_reference=rd, converged=gs_g.converged and gs_b.converged,
            half_length=dom.half_length,
        )
        records.append(rec)
        if on_record is not None:
            on_record(rec)
        prev = (gs_g.field.values.real.copy(), ws, omega)
    return records
