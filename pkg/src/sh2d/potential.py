"""Convolution kernels ``w`` and the Hartree nonlinearity.

Kernels are sampled in real space at the torus distance of each cell, which
keeps them exactly non-negative, radial and non-increasing on the grid. The
integrability exponents ``(p1, p2)`` cannot be read off a bounded grid kernel,
so the caller declares them; they only fix the Gagliardo-Nirenberg exponent
and the regime label.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

from .errors import AssumptionError, GridMismatchError
from .grid import GridSpec
from .rearrange import cell_ranking

MASS_SUBCRITICAL = "mass_subcritical"
MASS_CRITICAL = "mass_critical"
KINDS = ("riesz", "gaussian", "bump", "table")


@dataclass(frozen=True, eq=False)
class Potential:
    kind: str
    grid: GridSpec
    w: np.ndarray
    w_hat: np.ndarray
    p1: float
    p2: float
    shape: dict

    @property
    def p(self):
        return min(self.p1, self.p2)

    @property
    def regime(self):
        return MASS_CRITICAL if self.p == 1 else MASS_SUBCRITICAL

    def density_potential(self, psi):
        """``w * |psi|^2`` (real)."""
        psi = self._check(psi)
        return self.grid.convolve_real(self.w_hat, np.abs(psi) ** 2)

    def hartree_term(self, psi):
        """``(w * |psi|^2) psi``."""
        return self.density_potential(psi) * psi

    def hartree_energy(self, psi):
        """``int (w * |psi|^2) |psi|^2``."""
        rho = np.abs(self._check(psi)) ** 2
        conv = self.grid.convolve_real(self.w_hat, rho)
        return self.grid.cell_area * float(np.sum(conv * rho))

    def quartic_pairing(self, psi1, psi2, psi3, psi4):
        """``|| (w * (psi1 psi2)) psi3 psi4 ||_{L^1}``."""
        conv = self.grid.convolve(self.w_hat, np.asarray(psi1) * np.asarray(psi2))
        return self.grid.cell_area * float(np.sum(np.abs(conv * psi3 * psi4)))

    def config(self):
        out = {"kind": self.kind, "p1": self.p1, "p2": self.p2}
        out.update(self.shape)
        return out

    def _check(self, psi):
        psi = np.asarray(psi)
        if psi.shape != (self.grid.N, self.grid.N):
            raise GridMismatchError(f"field shape {psi.shape} does not match grid N={self.grid.N}")
        return psi


def _declare(p1, p2, default):
    p1 = default if p1 is None else float(p1)
    p2 = p1 if p2 is None else float(p2)
    for p in (p1, p2):
        if not (math.isfinite(p) and p >= 1):
            raise ValueError(f"integrability exponents must lie in [1, inf), got {p!r}")
    return p1, p2


def _build(kind, grid, w, p1, p2, shape):
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise AssumptionError(f"{kind} kernel has negative samples")
    if not np.any(w > 0):
        raise AssumptionError(f"{kind} kernel vanishes identically")
    rank = cell_ranking(grid)
    if not rank.is_monotone(w, rtol=1e-14):
        raise AssumptionError(f"{kind} kernel is not non-increasing in the torus radius")
    w_hat = np.real(grid.to_frequency(w))
    return Potential(kind, grid, w, w_hat, p1, p2, shape)


def make_riesz(eta, grid: GridSpec, p1=None, p2=None):
    """``w = r^-eta`` with the origin cell set to ``(h/2)^-eta``.

    By default ``p1 = (1 + 2/eta)/2`` (local part, below ``2/eta``) and
    ``p2 = 4/eta`` (tail).
    """
    if not 0 < eta < 2:
        raise ValueError(f"eta must lie in (0, 2), got {eta!r}")
    r = grid.r.copy()
    r[grid.origin] = grid.h / 2
    w = r ** (-eta)
    if p1 is None:
        p1 = 0.5 * (1.0 + 2.0 / eta)
        p2 = 4.0 / eta if p2 is None else p2
    p1, p2 = _declare(p1, p2, None)
    return _build("riesz", grid, w, p1, p2, {"eta": eta})


def riesz_transform_constant(eta):
    """``C`` in ``FT[|x|^-eta](xi) = C |xi|^(eta-2)`` (2D, unitary convention)."""
    return 2.0 ** (1 - eta) * _gamma(1 - eta / 2) / _gamma(eta / 2)


def make_gaussian(sigma, grid: GridSpec, p1=None, p2=None):
    """``w = exp(-r^2 / (2 sigma^2))``; mass sub-critical (p = 2) unless declared."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    w = np.exp(-grid.r ** 2 / (2 * sigma ** 2))
    p1, p2 = _declare(p1, p2, 2.0)
    return _build("gaussian", grid, w, p1, p2, {"sigma": sigma})


def make_bump(radius, grid: GridSpec, p1=None, p2=None):
    """Indicator of the disc ``r <= radius``."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    w = (grid.r <= radius).astype(float)
    p1, p2 = _declare(p1, p2, 2.0)
    return _build("bump", grid, w, p1, p2, {"radius": radius})


def make_table(samples, grid: GridSpec, p1=None, p2=None):
    """Radial table ``[(r0, w0), (r1, w1), ...]``, linearly interpolated in ``r``.

    Radii must increase and values must be non-negative and non-increasing;
    the kernel is zero beyond the last radius.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 1:
        raise ValueError("table samples must be a list of [r, w] pairs")
    radii, vals = arr[:, 0], arr[:, 1]
    if np.any(np.diff(radii) <= 0) or radii[0] < 0:
        raise ValueError("table radii must be non-negative and strictly increasing")
    if np.any(vals < 0) or np.any(np.diff(vals) > 0):
        raise AssumptionError("table values must be non-negative and non-increasing")
    w = np.interp(grid.r, radii, vals, right=0.0)
    p1, p2 = _declare(p1, p2, 2.0)
    return _build("table", grid, w, p1, p2, {"samples": arr.tolist()})


def discrete_delta(grid: GridSpec):
    """Kernel whose convolution is the identity (``1/h^2`` on the origin cell)."""
    w = np.zeros((grid.N, grid.N))
    w[grid.origin] = 1.0 / grid.cell_area
    return _build("table", grid, w, 2.0, 2.0, {"samples": "delta"})


_SHAPE_KEY = {"riesz": "eta", "gaussian": "sigma", "bump": "radius", "table": "samples"}
_MAKERS = {"riesz": make_riesz, "gaussian": make_gaussian, "bump": make_bump, "table": make_table}


def from_config(block, grid: GridSpec):
    """Build a potential from ``{"kind": ..., <shape key>: ..., "p1": .., "p2": ..}``."""
    block = dict(block)
    kind = block.pop("kind", None)
    if kind not in _MAKERS:
        raise ValueError(f"potential kind must be one of {KINDS}, got {kind!r}")
    key = _SHAPE_KEY[kind]
    if key not in block:
        raise ValueError(f"potential of kind {kind!r} needs {key!r}")
    shape = block.pop(key)
    p1 = block.pop("p1", None)
    p2 = block.pop("p2", None)
    if block:
        raise ValueError(f"unknown potential keys: {sorted(block)}")
    return _MAKERS[kind](shape, grid, p1=p1, p2=p2)
