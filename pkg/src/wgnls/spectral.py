"""FFT-based differentiation, quadrature and resampling on the tensor grid.

Wavenumbers are pi*j/L on the box axes (period 2L) and integers on the torus
axis (period 2pi).  All integrals are the uniform-grid trapezoid rule, which
on a periodic grid is the plain cell-weighted sum and is spectrally accurate
for smooth periodic integrands.
"""
from __future__ import annotations

import warnings
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .fields import Field
from .params import DomainSpec, ModelParams


class AliasingWarning(UserWarning):
    """Raised when spectrum truncation discards non-negligible mass."""


@lru_cache(maxsize=64)
def _axis_freqs(n: int, length: float) -> np.ndarray:
    # wavenumbers 2*pi*fftfreq scaled to the axis period
    return 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)


class Grid:
    """Cached wavenumber meshes and quadrature weights for one (params, domain)."""

    def __init__(self, params: ModelParams, domain: DomainSpec):
        self.params = params
        self.domain = domain
        shape = domain.shape(params)
        self.shape = shape
        axes_k = [_axis_freqs(domain.n_x, 2.0 * domain.half_length)] * params.d
        if params.m == 1:
            axes_k.append(_axis_freqs(domain.n_y, 2.0 * np.pi))
        self.k_axes = tuple(
            k.reshape([n if i == ax else 1 for i, n in enumerate(shape)])
            for ax, k in enumerate(axes_k)
        )
        self.k2 = sum(k**2 for k in self.k_axes)
        self.cell = domain.cell_volume(params)
        self.npts = int(np.prod(shape))

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values).real * self.cell)


@lru_cache(maxsize=32)
def get_grid(params: ModelParams, domain: DomainSpec) -> Grid:
    return Grid(params, domain)


def quadrature(f: np.ndarray | Field, params: ModelParams | None = None,
               domain: DomainSpec | None = None) -> float:
    """Integral of a real grid array: sum * h_x^d * h_y^m."""
    if isinstance(f, Field):
        params, domain, f = f.params, f.domain, f.values
    if params is None or domain is None:
        raise ValueError("quadrature of a bare array needs params and domain")
    if not np.all(np.isfinite(f)):
        raise ValueError("non-finite integrand")
    return get_grid(params, domain).integrate(f)


def gradient_x(u: Field) -> tuple[Field, ...]:
    """Spectral derivative along each box axis."""
    g = get_grid(u.params, u.domain)
    uh = np.fft.fftn(u.values)
    out = []
    for ax in range(u.params.d):
        out.append(u.with_values(np.fft.ifftn(1j * g.k_axes[ax] * uh)))
    return tuple(out)


def gradient_y(u: Field) -> Field:
    """Spectral derivative along the torus axis; requires m = 1."""
    if u.params.m != 1:
        raise ValueError("gradient_y needs a torus factor (m = 1)")
    g = get_grid(u.params, u.domain)
    uh = np.fft.fftn(u.values)
    return u.with_values(np.fft.ifftn(1j * g.k_axes[u.params.d] * uh))


def laplacian(u: Field) -> Field:
    g = get_grid(u.params, u.domain)
    return u.with_values(np.fft.ifftn(-g.k2 * np.fft.fftn(u.values)))


def spectral_mass(u: Field) -> float:
    """||u||_2^2 evaluated from the Fourier coefficients (Parseval)."""
    g = get_grid(u.params, u.domain)
    uh = np.fft.fftn(u.values)
    return float(np.sum(np.abs(uh) ** 2)) * g.cell / g.npts


def _resample_axis(values: np.ndarray, axis: int, n_new: int) -> np.ndarray:
    """Fourier zero-pad/truncate one axis to n_new points (same domain)."""
    n = values.shape[axis]
    if n_new == n:
        return values
    vh = np.moveaxis(np.fft.fft(values, axis=axis), axis, 0)
    out = np.zeros((n_new,) + vh.shape[1:], dtype=complex)
    if n_new > n:
        h = n // 2
        out[: h] = vh[: h]
        if h > 1:
            out[-(h - 1):] = vh[-(h - 1):]
        # split the shared +-n/2 coefficient between the now-distinct modes
        out[h] = 0.5 * vh[h]
        out[n_new - h] = 0.5 * vh[h]
    else:
        h = n_new // 2
        out[: h] = vh[: h]
        if h > 1:
            out[-(h - 1):] = vh[-(h - 1):]
        # modes +-h of the fine grid alias to the coarse shared slot
        out[h] = vh[h] + vh[n - h]
        kept = np.sum(np.abs(vh[:h]) ** 2) + np.sum(np.abs(vh[n - h + 1:]) ** 2) \
            + np.sum(np.abs(vh[h]) ** 2) + np.sum(np.abs(vh[n - h]) ** 2)
        total = np.sum(np.abs(vh) ** 2)
        if total > 0 and (total - kept) > 1e-8 * total:
            warnings.warn(
                f"resample truncation discards {(total - kept) / total:.2e} "
                "of spectral mass", AliasingWarning, stacklevel=3,
            )
    out = np.moveaxis(out, 0, axis)
    return np.fft.ifft(out, axis=axis) * (n_new / n)


def resample(u: Field, factor: Fraction | int | float) -> Field:
    """Trigonometric resampling of the box axes onto a rescaled grid.

    The new grid size n_x * factor must be a power of two; the torus axis
    is untouched.  Upsampling is exact for the interpolant; downsampling
    truncates the spectrum and warns when the discarded mass is visible.
    """
    frac = Fraction(factor).limit_denominator(1 << 20)
    n_new_q = u.domain.n_x * frac
    if n_new_q.denominator != 1:
        raise ValueError(f"factor {factor} does not give an integer grid")
    n_new = int(n_new_q)
    if n_new < 2 or (n_new & (n_new - 1)) != 0:
        raise ValueError(f"factor {factor} gives non power-of-two grid {n_new}")
    vals = u.values
    for ax in range(u.params.d):
        vals = _resample_axis(vals, ax, n_new)
    dom = u.domain.with_n_x(n_new)
    return Field(u.params, dom, vals)


def dilate_axis_rational(values: np.ndarray, axis: int, t: Fraction) -> np.ndarray:
    """Samples of v(x) = u(t x) on the same grid, t = p/q rational, for
    fields decaying inside the box.

    Refines by zero-padding to q*n points (exact for the interpolant), then
    strides through the refined samples: with x_j = -L + j h one has
    t*x_j = X_i at refined index i = (q - p) n/2 + j p.  Arguments t*x_j
    beyond the box read zero rather than wrapping periodically: the
    operator realizes the dilation of a decaying function on the line, for
    which compression must not alias the profile back into the window.
    """
    t = Fraction(t)
    p, q = t.numerator, t.denominator
    n = values.shape[axis]
    if p <= 0:
        raise ValueError("dilation factor must be positive")
    refined = _resample_axis(values, axis, q * n) if q > 1 else values
    refined = np.moveaxis(refined, axis, 0)
    j = np.arange(n)
    raw = (q - p) * (n // 2) + j * p
    inside = (raw >= 0) & (raw < q * n)
    out = np.zeros((n,) + refined.shape[1:], dtype=refined.dtype)
    out[inside] = refined[raw[inside]]
    return np.moveaxis(out, 0, axis)


def dilate_axis_any(values: np.ndarray, axis: int, t: float,
                    half_length: float) -> np.ndarray:
    """Samples of u(t x) by direct evaluation of the trigonometric interpolant.

    O(n^2) per axis; used for warm starts and gauge diagnostics where t is
    not rational.  As in the rational path, arguments beyond the box read
    zero (dilation of a decaying function, no periodic alias).
    """
    n = values.shape[axis]
    L = half_length
    x = -L + (2 * L / n) * np.arange(n)
    k = _axis_freqs(n, 2.0 * L)
    # interpolant: u(x') = (1/n) sum_k uh_k exp(i k x'), x' = t x
    E = np.exp(1j * np.outer(t * x, k)) / n
    E[np.abs(t * x) > L] = 0.0
    vh = np.fft.fft(values, axis=axis)
    vh = np.moveaxis(vh, axis, 0)
    out = np.tensordot(E, vh, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def boundary_mass_fraction(u: Field) -> float:
    """Mass fraction in the outermost 10% shell of the box (any x-axis)."""
    from .fields import grid_meshes

    meshes = grid_meshes(u.params, u.domain)
    L = u.domain.half_length
    shell = np.zeros(u.values.shape, dtype=bool)
    for ax in range(u.params.d):
        shell |= np.abs(meshes[ax]) > 0.9 * L
    dens = np.abs(u.values) ** 2
    total = quadrature(dens, u.params, u.domain)
    if total == 0:
        return 0.0
    return quadrature(dens * shell, u.params, u.domain) / total
