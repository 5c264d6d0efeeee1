"""Reference profiles on R^d (no torus factor).

For d = 1 the mass-critical stationary profile solving -Q'' + Q = Q^5 is
explicit, Q(x) = 3^{1/4} sech^{1/2}(2x), with squared L^2 norm
sqrt(3) pi / 2.  For d = 2 the radial profile of -Lap Q + Q = Q^3 (the
Townes profile) is computed by shooting on the radial ODE with bisection
on the center value; its squared norm is the classic collapse threshold
(about 11.70).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .fields import Field, field_from_function
from .params import DomainSpec, ModelParams

CLOSED_FORM_1D = "closed-form-1d"
SHOOTING_2D = "shooting-2d"

#: squared L^2 norm of the 1d mass-critical profile, sqrt(3)*pi/2
MASS_1D = math.sqrt(3.0) * math.pi / 2.0


@dataclass(frozen=True)
class ReferenceSoliton:
    profile: Field
    mass: float
    method: str


def soliton_1d(x: np.ndarray, omega: float = 1.0) -> np.ndarray:
    """Mass-critical profile at frequency omega: omega^{1/4} Q(sqrt(omega) x)."""
    r = np.sqrt(omega)
    return omega**0.25 * 3.0**0.25 / np.sqrt(np.cosh(2.0 * r * x))


def _townes_rhs(r, z):
    q, p, mass = z
    rr = r if r > 1e-12 else 1e-12
    return [p, -p / rr + q - q**3, 2.0 * math.pi * r * q * q]


def townes_shoot(
    bracket: tuple[float, float] = (2.0, 2.5),
    r_max: float = 14.0,
    bisection_steps: int = 60,
):
    """Bisection on Q(0) for the radial cubic profile.

    Center values above the critical one make Q cross zero; below it Q
    turns around and grows.  Returns (center value, dense radial solution).
    """
    lo, hi = bracket

    def crosses_zero(b: float):
        sol = solve_ivp(
            _townes_rhs, (1e-10, r_max), [b, 0.0, 0.0],
            rtol=1e-12, atol=1e-14, dense_output=True, max_step=0.05,
        )
        return bool(np.any(sol.y[0] < 0.0)), sol

    c_lo, _ = crosses_zero(lo)
    c_hi, _ = crosses_zero(hi)
    if c_lo or not c_hi:
        raise RuntimeError(f"shooting bracket {bracket} does not straddle")
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        crossed, _ = crosses_zero(mid)
        if crossed:
            hi = mid
        else:
            lo = mid
    b = 0.5 * (lo + hi)
    _, sol = crosses_zero(b)
    return b, sol


def townes_mass(sol) -> float:
    """Mass integral 2 pi int r Q^2 dr up to the turning point of |Q|."""
    q = sol.y[0]
    idx = int(np.argmin(np.abs(q)))
    return float(sol.y[2][idx])


def _townes_radial_interp(sol):
    q = sol.y[0]
    idx = int(np.argmin(np.abs(q)))
    r_cut = sol.t[idx]
    r_dense = np.linspace(0.0, r_cut, 4096)
    q_dense = sol.sol(r_dense)[0]
    spline = CubicSpline(r_dense, q_dense, bc_type=((1, 0.0), "not-a-knot"))
    # beyond the cut the profile decays like e^{-r}/sqrt(r)
    amp = q_dense[-1]

    def profile(r):
        r = np.asarray(r)
        out = np.zeros_like(r, dtype=float)
        inside = r <= r_cut
        out[inside] = spline(r[inside])
        tail = ~inside
        out[tail] = amp * np.sqrt(r_cut / np.maximum(r[tail], r_cut)) * np.exp(
            -(r[tail] - r_cut)
        )
        return out

    return profile


def solve_reference(
    params: ModelParams, domain: DomainSpec, omega: float
) -> ReferenceSoliton:
    """Stationary profile of -Lap Q + omega Q = Q^{1+4/d} sampled on the grid.

    Only defined for mass-critical exponents (alpha = 4/d) with m = 0.
    """
    if params.m != 0:
        raise ValueError("reference profile lives on the m = 0 configuration")
    if not params.mass_critical:
        raise ValueError("closed-form references exist at alpha = 4/d only")
    if params.d == 1:
        prof = field_from_function(
            params, domain, lambda x: soliton_1d(x, omega).astype(complex)
        )
        return ReferenceSoliton(profile=prof, mass=MASS_1D, method=CLOSED_FORM_1D)
    b, sol = townes_shoot()
    mass = townes_mass(sol)
    radial = _townes_radial_interp(sol)
    root = math.sqrt(omega)

    def sampled(x1, x2):
        r = np.sqrt(x1**2 + x2**2)
        return (root * radial(root * r)).astype(complex)

    prof = field_from_function(params, domain, sampled)
    return ReferenceSoliton(profile=prof, mass=mass, method=SHOOTING_2D)


def gamma_hat_closed_form(params: ModelParams, omega: float,
                          reference_mass: float | None = None) -> float:
    """Frequency ground-state value on R^d at mass-critical exponent.

    The constrained action there equals (omega/2) * M(Q): the stationary
    identities force the kinetic and potential contributions to cancel.
    """
    if not params.mass_critical:
        raise ValueError("closed form needs alpha = 4/d")
    if reference_mass is None:
        if params.d == 1:
            reference_mass = MASS_1D
        else:
            _, sol = townes_shoot()
            reference_mass = townes_mass(sol)
    return 0.5 * omega * reference_mass
