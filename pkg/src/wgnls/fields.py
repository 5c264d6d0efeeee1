"""Complex fields on the tensor grid, with binary snapshot IO.

Snapshot format: 64-byte header, then interleaved little-endian float64
re/im pairs in x-major (C) order.  Header layout:

    bytes 0..5    magic "WGNLS1"
    bytes 6..7    zero padding
    bytes 8..55   six little-endian float64: d, m, alpha, L, n_x, n_y
    bytes 56..63  zero padding
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import DomainSpec, ModelParams

SNAPSHOT_MAGIC = b"WGNLS1"


@dataclass(frozen=True)
class Field:
    """Immutable complex-valued function samples on the tensor grid."""

    params: ModelParams
    domain: DomainSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        expected = self.domain.shape(self.params)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != grid {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite entries")
        v = np.ascontiguousarray(self.values, dtype=np.complex128)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.params, self.domain, values)

    def __mul__(self, scalar: complex) -> "Field":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__


def x_coords(domain: DomainSpec) -> np.ndarray:
    return -domain.half_length + domain.h_x * np.arange(domain.n_x)

def y_coords(domain: DomainSpec) -> np.ndarray:
    return domain.h_y * np.arange(domain.n_y)


def grid_meshes(params: ModelParams, domain: DomainSpec) -> tuple[np.ndarray, ...]:
    """Coordinate meshes (one per axis), x-axes first then the torus axis."""
    axes = [x_coords(domain)] * params.d
    if params.m == 1:
        axes.append(y_coords(domain))
    return tuple(np.meshgrid(*axes, indexing="ij"))


def field_from_function(
    params: ModelParams, domain: DomainSpec, fn: Callable[..., np.ndarray]
) -> Field:
    """Sample fn(x1[, x2][, y]) on the grid."""
    return Field(params, domain, np.asarray(fn(*grid_meshes(params, domain))))


def zero_field(params: ModelParams, domain: DomainSpec) -> Field:
    return Field(params, domain, np.zeros(domain.shape(params), dtype=complex))


def random_band_limited(
    params: ModelParams,
    domain: DomainSpec,
    rng: np.random.Generator,
    band_fraction: float = 0.125,
    localized: bool = True,
    real: bool = False,
    envelope_fraction: float = 0.25,
) -> Field:
    """Random smooth field: Gaussian-weighted low Fourier modes.

    With localized=True the sample is multiplied by a Gaussian envelope of
    width envelope_fraction * L so that it decays inside the box (dilation
    identities need room to compress or stretch without touching the
    boundary).
    """
    shape = domain.shape(params)
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    mask = np.ones(shape)
    for ax, n in enumerate(shape):
        k = np.fft.fftfreq(n) * n
        cut = band_fraction * n / 2.0
        w = np.exp(-((k / max(cut, 1.0)) ** 2))
        w[np.abs(k) > 2 * cut] = 0.0
        dims = [1] * len(shape)
        dims[ax] = n
        mask = mask * w.reshape(dims)
    vals = np.fft.ifftn(coeffs * mask)
    if real:
        vals = vals.real.astype(complex)
    if localized:
        meshes = grid_meshes(params, domain)
        L = domain.half_length
        env = np.ones(shape)
        for ax in range(params.d):
            env = env * np.exp(-((meshes[ax] / (envelope_fraction * L)) ** 2))
        vals = vals * env
    norm = np.max(np.abs(vals))
    if norm > 0:
        vals = vals / norm
    return Field(params, domain, vals)


def save_field(path, field: Field) -> None:
    d = field.params
    dom = field.domain
    header = SNAPSHOT_MAGIC + b"\x00\x00"
    header += struct.pack(
        "<6d", float(d.d), float(d.m), d.alpha, dom.half_length,
        float(dom.n_x), float(dom.n_y),
    )
    header += b"\x00" * (64 - len(header))
    flat = np.ascontiguousarray(field.values).ravel()
    inter = np.empty(2 * flat.size, dtype="<f8")
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(inter.tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        header = fh.read(64)
        if header[:6] != SNAPSHOT_MAGIC:
            raise ValueError(f"bad snapshot magic {header[:6]!r}")
        d, m, alpha, L, n_x, n_y = struct.unpack("<6d", header[8:56])
        payload = np.frombuffer(fh.read(), dtype="<f8")
    params = ModelParams(int(d), int(m), alpha)
    domain = DomainSpec(L, int(n_x), int(n_y))
    shape = domain.shape(params)
    vals = (payload[0::2] + 1j * payload[1::2]).reshape(shape)
    return Field(params, domain, vals)
