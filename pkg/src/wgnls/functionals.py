"""Scalar functionals of a field and the scaling operators that move along
constraint manifolds.

For u on R^d x T^m and frequency omega > 0 the quantities are

    mass        M  = ||u||_2^2
    kinetic_x   ||grad_x u||_2^2        kinetic_y  ||grad_y u||_2^2
    potential   ||u||_{a+2}^{a+2}
    energy      E  = (kinetic_x + kinetic_y)/2 - potential/(a+2)
    action      S  = E + (omega/2) M
    virial      K  = kinetic_x - a d/(2(a+2)) potential
    nehari      N  = omega M + kinetic_x + kinetic_y - potential
    i_omega     S - K/2
    i_plain     E - K/2

i_plain reduces to kinetic_y/2 in the mass-critical case a = 4/d, which is
what makes the mass-constrained problem non-trivial there: the x-dilation
u -> t^{d/2} u(tx, y) preserves mass, kinetic_y and the sign of K.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .fields import Field
from .params import ModelParams
from .spectral import dilate_axis_rational, gradient_x, gradient_y, quadrature


class DegenerateFieldError(ValueError):
    """No projection exists (zero gradient or zero potential)."""


@dataclass(frozen=True)
class FunctionalReport:
    mass: float
    kinetic_x: float
    kinetic_y: float
    potential: float
    energy: float
    action: float
    virial: float
    nehari: float
    i_omega: float
    i_plain: float
    omega: float

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def y_fraction(self) -> float:
        kin = self.kinetic_x + self.kinetic_y
        return self.kinetic_y / kin if kin > 0 else 0.0


def base_quantities(u: Field) -> tuple[float, float, float, float]:
    """(mass, kinetic_x, kinetic_y, potential) via spectral gradients."""
    p = u.params
    dens = np.abs(u.values) ** 2
    mass = quadrature(dens, p, u.domain)
    kin_x = sum(
        quadrature(np.abs(g.values) ** 2, p, u.domain) for g in gradient_x(u)
    )
    kin_y = 0.0
    if p.m == 1:
        gy = gradient_y(u)
        kin_y = quadrature(np.abs(gy.values) ** 2, p, u.domain)
    pot = quadrature(np.abs(u.values) ** (p.alpha + 2.0), p, u.domain)
    return mass, kin_x, kin_y, pot


def report_from_quantities(
    params: ModelParams, mass: float, kin_x: float, kin_y: float,
    pot: float, omega: float,
) -> FunctionalReport:
    a = params.alpha
    energy = 0.5 * (kin_x + kin_y) - pot / (a + 2.0)
    action = energy + 0.5 * omega * mass
    virial = kin_x - params.virial_coeff * pot
    nehari = omega * mass + kin_x + kin_y - pot
    return FunctionalReport(
        mass=mass, kinetic_x=kin_x, kinetic_y=kin_y, potential=pot,
        energy=energy, action=action, virial=virial, nehari=nehari,
        i_omega=action - 0.5 * virial, i_plain=energy - 0.5 * virial,
        omega=omega,
    )


def evaluate(u: Field, omega: float) -> FunctionalReport:
    if omega <= 0:
        raise ValueError("omega must be positive")
    mass, kin_x, kin_y, pot = base_quantities(u)
    return report_from_quantities(u.params, mass, kin_x, kin_y, pot, omega)


def project_K(u: Field) -> tuple[float, Field]:
    """Amplitude scaling s*u with vanishing virial.

    K(su) = s^2 kinetic_x - s^{a+2} c_K potential has the closed-form
    positive root s = (kinetic_x / (c_K potential))^{1/a}.
    """
    _, kin_x, _, pot = base_quantities(u)
    if kin_x <= 0.0 or pot <= 0.0:
        raise DegenerateFieldError(
            f"no virial projection: kinetic_x={kin_x}, potential={pot}"
        )
    s = (kin_x / (u.params.virial_coeff * pot)) ** (1.0 / u.params.alpha)
    return s, u * s


def project_N(u: Field, omega: float) -> tuple[float, Field]:
    """Amplitude scaling s*u onto the Nehari set N_omega = 0."""
    mass, kin_x, kin_y, pot = base_quantities(u)
    if pot <= 0.0:
        raise DegenerateFieldError("no Nehari projection: zero potential")
    s = ((omega * mass + kin_x + kin_y) / pot) ** (1.0 / u.params.alpha)
    return s, u * s


def dilate_v(u: Field, t: Fraction | int | float) -> Field:
    """Mass-preserving x-dilation t^{d/2} u(t x, y) on the same grid.

    Exact for rational t via grid refinement and striding.  In the
    mass-critical case kinetic_x and potential both scale by t^2, so the
    sign of K and the constrained action value are preserved.
    """
    t = Fraction(t).limit_denominator(1 << 20)
    vals = u.values
    for ax in range(u.params.d):
        vals = dilate_axis_rational(vals, ax, t)
    return u.with_values(float(t) ** (u.params.d / 2.0) * vals)


def scale_T(u: Field, kappa: Fraction | int | float) -> Field:
    """Frequency-rescaling dilation kappa^{2/a} u(kappa x, y).

    Scaling laws: kinetic_x, potential and K pick up kappa^{2+4/a-d};
    kinetic_y and mass pick up kappa^{4/a-d}.
    """
    kappa = Fraction(kappa).limit_denominator(1 << 20)
    vals = u.values
    for ax in range(u.params.d):
        vals = dilate_axis_rational(vals, ax, kappa)
    return u.with_values(float(kappa) ** (2.0 / u.params.alpha) * vals)


def gn_ratio(u: Field) -> float:
    """Gagliardo-Nirenberg quotient bounded by the interpolation inequality

        ||u||_{a+2}^{a+2} <= C ||grad_x u||^{ad/2} ||u||_2^{(4-a(d+m-2))/2}
                               (||u||_2^{am/2} + ||grad_y u||_2^{am/2}).
    """
    p = u.params
    mass, kin_x, kin_y, pot = base_quantities(u)
    if mass <= 0.0:
        raise DegenerateFieldError("gn_ratio of the zero field")
    a, d, m = p.alpha, p.d, p.m
    denom = kin_x ** (a * d / 4.0) * mass ** ((4.0 - a * (d + m - 2.0)) / 4.0)
    denom *= mass ** (a * m / 4.0) + kin_y ** (a * m / 4.0)
    return pot / denom


def rho_admissible_min(alpha: float) -> float:
    """Smallest admissible plateau edge for the torus test profile."""
    return math.pi - 3.0 * math.pi * (3.0 / (alpha + 3.0)) ** (2.0 / alpha)


def rho_profile(a: float, alpha: float, n_y: int) -> np.ndarray:
    """Piecewise-linear torus profile with equal L^2 and L^{a+2} norms.

    rho vanishes on [0, a] and [2pi - a, 2pi], rises linearly to the peak
    ((alpha+3)/3)^{1/alpha} at pi, and descends symmetrically.  By
    construction ||rho||_2^2 = ||rho||_{a+2}^{a+2} = (2/3)(pi - a) *
    ((alpha+3)/3)^{2/alpha}, which is < 2pi exactly when a exceeds
    rho_admissible_min(alpha).
    """
    if not (0.0 < a < math.pi):
        raise ValueError("plateau edge a must lie in (0, pi)")
    if a <= rho_admissible_min(alpha):
        raise ValueError(
            f"a={a} inadmissible: needs a > {rho_admissible_min(alpha)}"
        )
    y = 2.0 * math.pi * np.arange(n_y) / n_y
    peak = ((alpha + 3.0) / 3.0) ** (1.0 / alpha)
    slope = peak / (math.pi - a)
    out = np.zeros(n_y)
    up = (y >= a) & (y <= math.pi)
    down = (y > math.pi) & (y <= 2.0 * math.pi - a)
    out[up] = slope * (y[up] - a)
    out[down] = slope * (2.0 * math.pi - a - y[down])
    return out


def rho_norms_closed_form(a: float, alpha: float) -> float:
    """Common value of ||rho||_2^2 and ||rho||_{a+2}^{a+2} in the continuum."""
    peak2 = ((alpha + 3.0) / 3.0) ** (2.0 / alpha)
    return (2.0 / 3.0) * (math.pi - a) * peak2


def rho_norms_piecewise(rho: np.ndarray, alpha: float) -> tuple[float, float]:
    """L^2 and L^{a+2} norms of the piecewise-linear embedding of samples.

    The sampled profile is linear between grid nodes (its kinks sit on
    nodes), so cell-wise Gauss quadrature of the interpolant is exact; the
    plain trapezoid sum carries an O(h^2) kink error instead.
    """
    n = rho.size
    h = 2.0 * math.pi / n
    v0 = rho
    v1 = np.roll(rho, -1)
    nodes, weights = np.polynomial.legendre.leggauss(8)
    frac = nodes * 0.5 + 0.5
    vals = v0[:, None] + (v1 - v0)[:, None] * frac[None, :]
    l2 = 0.5 * h * float(np.sum(weights[None, :] * np.abs(vals) ** 2))
    lp = 0.5 * h * float(np.sum(weights[None, :] * np.abs(vals) ** (alpha + 2.0)))
    return l2, lp
