"""Discrete Schwartz symmetrization on the periodic grid.

Cells are ranked by torus distance from the origin cell (exact integer
squared distance in cell units), ties broken by (row, col). Symmetrizing a
non-negative field writes its values, sorted in decreasing order, into the
cells in ranking order. The multiset of values is preserved exactly, so every
L^p norm is unchanged; Polya-Szego and Riesz-type inequalities hold only
approximately on the grid and are monitored, not assumed.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import GridSpec


@dataclass(frozen=True, eq=False)
class CellRanking:
    grid: GridSpec
    order: np.ndarray  # flat cell indices, nearest first
    dist2: np.ndarray  # squared torus distance (cells) along ``order``

    def is_monotone(self, u, rtol=0.0):
        """True if ``u`` is non-increasing along the ranking up to ``rtol * max|u|``."""
        vals = np.real(np.asarray(u)).reshape(-1)[self.order]
        slack = rtol * float(np.max(np.abs(vals))) if vals.size else 0.0
        return bool(np.all(np.diff(vals) <= slack))

    def radial_violation(self, u, gap=1.0):
        """Largest ``u(y) - u(x)`` over cells with ``|y| >= |x| + gap`` (in cells).

        Ignores near-ties in distance, where the lattice is not isotropic.
        """
        vals = np.real(np.asarray(u)).reshape(-1)[self.order]
        d = np.sqrt(self.dist2.astype(float))
        tail_max = np.maximum.accumulate(vals[::-1])[::-1]
        idx = np.searchsorted(d, d + gap, side="left")
        ok = idx < vals.size
        if not np.any(ok):
            return 0.0
        return float(max(np.max(tail_max[idx[ok]] - vals[ok]), 0.0))

    def max_violation(self, u):
        vals = np.real(np.asarray(u)).reshape(-1)[self.order]
        return float(max(np.max(np.diff(vals)), 0.0))


@lru_cache(maxsize=8)
def cell_ranking(grid: GridSpec) -> CellRanking:
    n = grid.N
    idx = np.arange(n)
    d = np.abs(idx - n // 2)
    d = np.minimum(d, n - d)
    rows, cols = np.meshgrid(idx, idx, indexing="ij")
    d2 = (d[:, None] ** 2 + d[None, :] ** 2).reshape(-1)
    order = np.lexsort((cols.reshape(-1), rows.reshape(-1), d2))
    order.setflags(write=False)
    ds = d2[order]
    ds.setflags(write=False)
    return CellRanking(grid, order, ds)


def symmetrize(u, ranking: CellRanking):
    """Symmetric decreasing rearrangement of a non-negative real field."""
    u = np.asarray(u)
    if np.iscomplexobj(u):
        if np.any(np.imag(u) != 0):
            raise ValueError("symmetrize needs a real-valued field")
        u = u.real
    n = ranking.grid.N
    if u.shape != (n, n):
        raise ValueError(f"field shape {u.shape} does not match grid N={n}")
    top = float(np.max(u)) if u.size else 0.0
    if np.min(u) < -1e-14 * max(top, 0.0):
        raise ValueError(f"symmetrize needs a non-negative field (min={np.min(u):.3e})")
    out = np.empty(n * n, dtype=float)
    out[ranking.order] = np.sort(u, axis=None)[::-1]
    return out.reshape(n, n)


def check_polya_szego(u, ranking: CellRanking):
    """Return ``(||grad u*||, ||grad u||)``."""
    grid = ranking.grid
    return grid.h1_seminorm(symmetrize(u, ranking)), grid.h1_seminorm(u)


def check_riesz_bfll(pot, f, g, ranking: CellRanking):
    """Return the two sides of the rearranged quartic inequality.

    ``lhs = int (w * (f+g)^2) (f+g)^2`` and the same with ``f*, g*``. The
    kernel is used as is: it is already radial and non-increasing.
    """
    lhs = pot.hartree_energy(np.asarray(f) + np.asarray(g))
    rhs = pot.hartree_energy(symmetrize(f, ranking) + symmetrize(g, ranking))
    return lhs, rhs
