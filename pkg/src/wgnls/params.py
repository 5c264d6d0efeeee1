"""Model and discretization parameters.

The PDE instance lives on R^d x T^m with T = R/2piZ.  The R^d factor is
truncated to a periodic box [-L, L)^d; solitary profiles decay exponentially,
so for L large compared to the decay length the truncation error sits far
below solver tolerances.  Every solver records the mass fraction in the
outermost 10% shell of the box so that under-sized runs are flagged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

TORUS_LENGTH = 2.0 * math.pi

MASS_CRITICAL = "mass-critical"
INTERCRITICAL = "intercritical"


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def alpha_range(d: int, m: int) -> tuple[float, float]:
    """Admissible nonlinearity exponents [4/d, upper) for dimensions (d, m)."""
    lo = 4.0 / d
    hi = math.inf if d + m <= 2 else 4.0 / (d + m - 2)
    return lo, hi


@dataclass(frozen=True)
class ModelParams:
    """Dimensions and nonlinearity exponent of one NLS instance.

    d: dimension of the R factor (1 or 2).
    m: dimension of the torus factor (0 or 1).
    alpha: nonlinearity exponent; must satisfy 4/d <= alpha, and
        alpha < 4/(d+m-2) whenever d+m >= 3.
    """

    d: int
    m: int
    alpha: float

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {self.d}")
        if self.m not in (0, 1):
            raise ValueError(f"m must be 0 or 1, got {self.m}")
        lo, hi = alpha_range(self.d, self.m)
        if not (lo <= self.alpha < hi):
            raise ValueError(
                f"alpha={self.alpha} outside admissible range [{lo}, {hi}) "
                f"for d={self.d}, m={self.m}"
            )

    @property
    def mode(self) -> str:
        """'mass-critical' iff alpha == 4/d exactly, else 'intercritical'."""
        return MASS_CRITICAL if self.alpha == 4.0 / self.d else INTERCRITICAL

    @property
    def mass_critical(self) -> bool:
        return self.alpha == 4.0 / self.d

    @property
    def virial_coeff(self) -> float:
        """Coefficient alpha*d / (2(alpha+2)) multiplying the potential in K."""
        return self.alpha * self.d / (2.0 * (self.alpha + 2.0))


@dataclass(frozen=True)
class DomainSpec:
    """Tensor grid on [-L, L)^d x [0, 2pi)^m.

    Grid sizes are powers of two for transform efficiency.  n_y is ignored
    when the model has no torus factor.
    """

    half_length: float
    n_x: int
    n_y: int = 0

    def __post_init__(self) -> None:
        if self.half_length <= 0:
            raise ValueError("half_length must be positive")
        if not _is_pow2(self.n_x):
            raise ValueError(f"n_x={self.n_x} is not a power of two")
        if self.n_y and not _is_pow2(self.n_y):
            raise ValueError(f"n_y={self.n_y} is not a power of two")

    @property
    def h_x(self) -> float:
        return 2.0 * self.half_length / self.n_x

    @property
    def h_y(self) -> float:
        if self.n_y == 0:
            raise ValueError("domain has no torus axis")
        return TORUS_LENGTH / self.n_y

    def shape(self, params: ModelParams) -> tuple[int, ...]:
        """Array shape for fields: x-axes first (x-major), then the torus axis."""
        return (self.n_x,) * params.d + ((self.n_y,) if params.m == 1 else ())

    def cell_volume(self, params: ModelParams) -> float:
        vol = self.h_x**params.d
        if params.m == 1:
            vol *= self.h_y
        return vol

    def with_n_x(self, n_x: int) -> "DomainSpec":
        return DomainSpec(self.half_length, n_x, self.n_y)
