"""Periodic square grid, Fourier convention, norms and convolution.

Layout
------
Position samples live at ``x_j = (j - N/2) h`` for ``j = 0..N-1`` on both
axes, so the origin is the grid point with index ``(N/2, N/2)``. Arrays are
indexed ``[row, col] = [y, x]``.

Frequency arrays use numpy's FFT order: index ``m`` holds
``k = m`` for ``m < N/2`` and ``k = m - N`` otherwise, so the Nyquist row and
column (``k = -N/2``) sit at index ``N/2``. The frequency of index ``m`` is
``xi = (2 pi / L) k``.

The transform approximates ``u_hat(xi) = (2 pi)^-1 int e^{-i xi.x} u(x) dx``
by the midpoint rule, which makes ``h^2 sum |u|^2 == dxi^2 sum |u_hat|^2``
and turns convolution into multiplication by ``2 pi w_hat``.
"""

import json
import math
import os
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

POSITION = "position"
FREQUENCY = "frequency"
_SPACE_TAGS = {POSITION: 0, FREQUENCY: 1}
_MAGIC = b"SH2D"
_HEADER = struct.Struct("<4sIdB")


def fft_workers():
    """Worker count for FFTs, capped by the ``SH2D_THREADS`` variable."""
    cap = os.environ.get("SH2D_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = max(1, min(n, int(cap)))
    return n


@dataclass(frozen=True)
class GridSpec:
    """Square periodic box ``[-L/2, L/2)^2`` with ``N`` cells per side.

    Production runs need ``N >= 16`` (enforced by the run configuration);
    the class itself accepts any even ``N >= 4`` so that small dense-matrix
    checks can be built.
    """

    L: float = 40.0
    N: int = 256

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 4 and self.N % 2 == 0):
            raise ValueError(f"N must be an even integer >= 4, got {self.N!r}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L!r}")

    @property
    def h(self):
        return self.L / self.N

    @property
    def dxi(self):
        return 2.0 * math.pi / self.L

    @property
    def origin(self):
        return (self.N // 2, self.N // 2)

    @property
    def cell_area(self):
        return self.h * self.h

    @cached_property
    def x(self):
        return (np.arange(self.N) - self.N // 2) * self.h

    @cached_property
    def coords(self):
        """Meshgrid ``(X, Y)`` of cell positions."""
        X, Y = np.meshgrid(self.x, self.x, indexing="xy")
        return X, Y

    @cached_property
    def r(self):
        """Torus distance of each cell from the origin."""
        X, Y = self.coords
        return np.hypot(X, Y)

    @cached_property
    def xi(self):
        return sfft.fftfreq(self.N, d=1.0 / self.N) * self.dxi

    @cached_property
    def xi2(self):
        """``|xi|^2`` on the frequency lattice (numpy FFT order)."""
        k = self.xi
        return k[None, :] ** 2 + k[:, None] ** 2

    # transforms -----------------------------------------------------------

    def to_frequency(self, u):
        u = self._check(u)
        return sfft.fft2(sfft.ifftshift(u), workers=fft_workers()) * (self.cell_area / (2 * math.pi))

    def to_position(self, u_hat):
        u_hat = self._check(u_hat)
        return sfft.fftshift(sfft.ifft2(u_hat, workers=fft_workers())) * (2 * math.pi / self.cell_area)

    def convolve(self, w_hat, u):
        """Periodic convolution ``h^2 sum_y w(x - y) u(y)`` from the kernel's transform."""
        w_hat = self._check(w_hat)
        return self.to_position(2 * math.pi * w_hat * self.to_frequency(u))

    def convolve_real(self, w_hat, u):
        """Real-input fast path of :meth:`convolve` (``w`` real and even, ``u`` real)."""
        u = self._check(u)
        half = self.N // 2 + 1
        mult = 2 * math.pi * np.real(w_hat[:, :half])
        # a multiplier commutes with the centering shifts, so they cancel
        spec = sfft.rfft2(u, workers=fft_workers())
        spec *= mult
        return sfft.irfft2(spec, s=u.shape, workers=fft_workers())

    # norms and pairings -----------------------------------------------------

    def inner(self, u, v):
        """``<u, v> = h^2 sum u conj(v)`` (linear in the first slot)."""
        return self.cell_area * np.vdot(v, u)

    def l2_norm(self, u):
        return math.sqrt(self.cell_area * float(np.sum(np.abs(u) ** 2)))

    def lp_norm(self, u, p):
        if not (math.isfinite(p) and p >= 1):
            raise ValueError(f"p must lie in [1, inf), got {p!r}")
        return (self.cell_area * float(np.sum(np.abs(u) ** p))) ** (1.0 / p)

    def h1_seminorm(self, u):
        u_hat = self.to_frequency(u)
        return math.sqrt(self.dxi ** 2 * float(np.sum(self.xi2 * np.abs(u_hat) ** 2)))

    def h1_norm(self, u):
        return math.hypot(self.l2_norm(u), self.h1_seminorm(u))

    def at_origin(self, u):
        return u[self.origin]

    def zeros(self, dtype=complex):
        return np.zeros((self.N, self.N), dtype=dtype)

    def gaussian(self, width, center=(0.0, 0.0), amplitude=1.0):
        X, Y = self.coords
        return amplitude * np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / (2 * width ** 2))

    def _check(self, u):
        u = np.asarray(u)
        if u.shape != (self.N, self.N):
            raise ValueError(f"field shape {u.shape} does not match grid N={self.N}")
        return u

    def metadata(self):
        return {
            "L": self.L,
            "N": self.N,
            "h": self.h,
            "dxi": self.dxi,
            "origin_index": list(self.origin),
            "position_layout": "x_j = (j - N/2) h, [row, col] = [y, x]",
            "frequency_layout": "numpy fft order, k = -N/2 at index N/2",
        }


@dataclass(frozen=True)
class Field:
    """A grid function tagged with the space it lives in."""

    grid: GridSpec
    values: np.ndarray
    space: str = POSITION

    def __post_init__(self):
        if self.space not in _SPACE_TAGS:
            raise ValueError(f"unknown space {self.space!r}")
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.N, self.grid.N):
            raise ValueError(f"values shape {vals.shape} does not match grid N={self.grid.N}")
        object.__setattr__(self, "values", vals)

    def to_frequency(self):
        if self.space == FREQUENCY:
            return self
        return Field(self.grid, self.grid.to_frequency(self.values), FREQUENCY)

    def to_position(self):
        if self.space == POSITION:
            return self
        return Field(self.grid, self.grid.to_position(self.values), POSITION)

    def save(self, path, extra=None):
        """Write the binary snapshot and its ``.json`` sidecar."""
        path = Path(path)
        g = self.grid
        header = _HEADER.pack(_MAGIC, g.N, float(g.L), _SPACE_TAGS[self.space])
        body = np.ascontiguousarray(self.values, dtype="<c16").tobytes(order="C")
        path.write_bytes(header + body)
        meta = g.metadata()
        meta["space"] = self.space
        meta["format"] = "SH2D: magic, u32 N, f64 L, u8 space, N*N complex128 LE row-major"
        if extra:
            meta.update(extra)
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path):
        raw = Path(path).read_bytes()
        if len(raw) < _HEADER.size:
            raise ValueError(f"{path}: truncated snapshot")
        magic, N, L, tag = _HEADER.unpack_from(raw)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        spaces = {v: k for k, v in _SPACE_TAGS.items()}
        if tag not in spaces:
            raise ValueError(f"{path}: unknown space tag {tag}")
        expected = _HEADER.size + 16 * N * N
        if len(raw) != expected:
            raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
        vals = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(N, N)
        return cls(GridSpec(L=L, N=int(N)), vals.astype(complex), spaces[tag])


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".json")
