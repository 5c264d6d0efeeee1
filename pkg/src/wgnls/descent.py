"""Shared kernel for the ground-state descent iterations.

Solvers work on real nonnegative arrays (the constrained infima are stable
under u -> |u|) with real FFTs along the last axis.  One rfftn per iterate
supplies mass and both kinetic terms through Parseval sums; the potential
integral is a pointwise sum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field
from .params import DomainSpec, ModelParams
from .spectral import _axis_freqs


class Workspace:
    """Wavenumber meshes for the real-FFT layout of one (params, domain)."""

    def __init__(self, params: ModelParams, domain: DomainSpec):
        self.params = params
        self.domain = domain
        self.shape = domain.shape(params)
        self.axes = tuple(range(len(self.shape)))
        half_shape = self.shape[:-1] + (self.shape[-1] // 2 + 1,)
        ks = []
        for ax, n in enumerate(self.shape):
            length = 2.0 * domain.half_length if ax < params.d else 2.0 * np.pi
            k = _axis_freqs(n, length)
            if ax == len(self.shape) - 1:
                k = np.abs(k[: half_shape[-1]])
            dims = [1] * len(self.shape)
            dims[ax] = half_shape[ax] if ax == len(self.shape) - 1 else n
            ks.append(k.reshape(dims))
        self.kx2 = sum(ks[ax] ** 2 for ax in range(params.d))
        self.ky2 = ks[params.d] ** 2 if params.m == 1 else 0.0
        self.k2 = self.kx2 + (self.ky2 if params.m == 1 else 0.0)
        # Parseval weights: last-axis modes 0 and Nyquist counted once
        w = np.full(half_shape[-1], 2.0)
        w[0] = 1.0
        if self.shape[-1] % 2 == 0:
            w[-1] = 1.0
        dims = [1] * len(self.shape)
        dims[-1] = half_shape[-1]
        self.pw = w.reshape(dims)
        self.cell = domain.cell_volume(params)
        self.npts = int(np.prod(self.shape))
        self._norm = self.cell / self.npts

    def rfft(self, u: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(u, axes=self.axes)

    def irfft(self, uh: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(uh, s=self.shape, axes=self.axes)

    def quad(self, f: np.ndarray) -> float:
        return float(np.sum(f)) * self.cell

    def sums(self, uh: np.ndarray) -> tuple[float, float, float]:
        """(mass, kinetic_x, kinetic_y) from the half-spectrum."""
        a2 = self.pw * (uh.real**2 + uh.imag**2)
        mass = float(np.sum(a2)) * self._norm
        kin_x = float(np.sum(self.kx2 * a2)) * self._norm
        kin_y = (
            float(np.sum(self.ky2 * a2)) * self._norm if self.params.m == 1 else 0.0
        )
        return mass, kin_x, kin_y

    def potential(self, u: np.ndarray) -> float:
        return self.quad(np.abs(u) ** (self.params.alpha + 2.0))

    def field(self, u: np.ndarray) -> Field:
        return Field(self.params, self.domain, u.astype(complex))

    def boundary_fraction(self, u: np.ndarray) -> float:
        L = self.domain.half_length
        x = -L + self.domain.h_x * np.arange(self.domain.n_x)
        shell = np.zeros(self.shape, dtype=bool)
        for ax in range(self.params.d):
            dims = [1] * len(self.shape)
            dims[ax] = self.domain.n_x
            shell |= (np.abs(x) > 0.9 * L).reshape(dims)
        dens = u * u
        total = self.quad(dens)
        if total <= 0:
            return 0.0
        return self.quad(dens * shell) / total


@dataclass
class SolverOptions:
    """Iteration controls shared by the constrained descent solvers."""

    tol: float = 1e-7
    max_iter: int = 20000
    tau0: float = 1.0
    floor_window: int = 250
    floor_tol: float = 1e-3
    constraint_tol: float = 1e-8
    seed: int = 0


def el_residual(ws: Workspace, u: np.ndarray, omega: float) -> float:
    """Relative L^2 residual of -Lap u + omega u - |u|^a u."""
    uh = ws.rfft(u)
    lin = ws.irfft((omega + ws.k2) * uh)
    res = lin - np.abs(u) ** ws.params.alpha * u
    denom = np.sqrt(ws.quad(lin**2))
    if denom == 0:
        return 0.0
    return float(np.sqrt(ws.quad(res**2)) / denom)
