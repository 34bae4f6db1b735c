"""Randomized checks of the inequalities the solvers rely on.

Each suite draws seeded random fields and counts trials within tolerance.
Rearrangement suites are statistical on a lattice (the continuum
inequalities hold only up to discretization), so they pass when at least
``STATISTICAL_PASS`` of the trials are within tolerance; the pairing and
interpolation suites must pass every trial.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .groundstate import gn_constant_estimate, gn_ratio, weinstein
from .pointop import EnergyElement, PointOperator
from .rearrange import cell_ranking, check_polya_szego, check_riesz_bfll, symmetrize

REARRANGE_FACTOR = 1.001
WEINSTEIN_TOL = 1e-3
GN_TOL = 1e-6
PAIRING_TOL = 1e-12
STATISTICAL_PASS = 0.99


@dataclass
class SuiteResult:
    name: str
    trials: int
    passed: int
    worst: float
    tolerance: float
    required: int

    @property
    def ok(self):
        return self.passed >= self.required

    def summary(self):
        state = "ok" if self.ok else "FAIL"
        return f"{self.name}: {self.passed}/{self.trials} within tolerance ({state}, worst {self.worst:.6g})"

    def to_dict(self):
        d = asdict(self)
        d["ok"] = self.ok
        return d


# random fields -------------------------------------------------------------------


def random_bandlimited(grid, rng, kmax=None, complex_valued=False):
    """Random field whose transform is supported in ``|xi| <= kmax``.

    The spectrum is also damped by ``exp(-|xi|^2 / kmax^2)`` so the fields
    are smooth on the grid; ``kmax`` is drawn from ``[0.5, 3]`` by default.
    """
    kmax = rng.uniform(0.5, 3.0) if kmax is None else kmax
    shape = grid.xi2.shape
    coef = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    mask = (grid.xi2 <= kmax * kmax) * np.exp(-grid.xi2 / kmax ** 2)
    u = grid.to_position(coef * mask)
    if not complex_valued:
        u = u.real
    return u / grid.l2_norm(u)


def random_nonnegative(grid, rng):
    """Square of a real band-limited field, normalized in L^2."""
    u = random_bandlimited(grid, rng) ** 2
    return u / grid.l2_norm(u)


def random_localized(grid, rng, complex_valued=True):
    """A few Gaussian bumps at random positions plus band-limited noise."""
    u = np.zeros(grid.xi2.shape, dtype=complex if complex_valued else float)
    half = grid.L / 4
    for _ in range(rng.integers(1, 4)):
        center = tuple(rng.uniform(-half, half, 2))
        amp = rng.uniform(0.2, 1.0)
        if complex_valued:
            amp = amp * np.exp(2j * math.pi * rng.uniform())
        u = u + grid.gaussian(rng.uniform(0.3, 3.0), center, amp)
    u = u + rng.uniform(0.0, 0.3) * random_bandlimited(grid, rng, complex_valued=complex_valued)
    return u / grid.l2_norm(u)


# suites -------------------------------------------------------------------------


def _required(trials, statistical):
    return math.ceil(STATISTICAL_PASS * trials) if statistical else trials


def suite_riesz_bfll(pot, rng, trials):
    ranking = cell_ranking(pot.grid)
    passed, worst = 0, 0.0
    for _ in range(trials):
        f = random_nonnegative(pot.grid, rng)
        g = rng.uniform(0.1, 2.0) * random_nonnegative(pot.grid, rng)
        lhs, rhs = check_riesz_bfll(pot, f, g, ranking)
        r = lhs / rhs
        worst = max(worst, r)
        passed += r <= REARRANGE_FACTOR
    return SuiteResult("riesz_bfll", trials, passed, worst, REARRANGE_FACTOR, _required(trials, True))


def suite_polya_szego(grid, rng, trials):
    ranking = cell_ranking(grid)
    passed, worst = 0, 0.0
    for _ in range(trials):
        lhs, rhs = check_polya_szego(random_nonnegative(grid, rng), ranking)
        r = lhs / rhs
        worst = max(worst, r)
        passed += r <= REARRANGE_FACTOR
    return SuiteResult("polya_szego", trials, passed, worst, REARRANGE_FACTOR, _required(trials, True))


def suite_weinstein(op: PointOperator, pot, lam, rng, trials):
    """``W(|f|*, |c|) <= W(f, c) (1 + tol)`` on random complex pairs."""
    ranking = cell_ranking(op.grid)
    passed, worst = 0, 0.0
    for _ in range(trials):
        f = random_localized(op.grid, rng)
        c = rng.uniform(0.0, 1.0)
        before = weinstein(op, EnergyElement(f, c, lam), pot)
        after = weinstein(op, EnergyElement(symmetrize(np.abs(f), ranking), abs(c), lam), pot)
        r = after / before
        worst = max(worst, r)
        passed += r <= 1 + WEINSTEIN_TOL
    return SuiteResult("weinstein_symmetrization", trials, passed, worst, 1 + WEINSTEIN_TOL,
                       _required(trials, True))


def suite_gn(op: PointOperator, pot, rng, trials, gn=None):
    """Random probes of the interpolation bound against the estimated constant."""
    gn = gn_constant_estimate(op, pot) if gn is None else gn
    passed, worst = 0, 0.0
    for k in range(trials):
        if k % 2:
            psi = random_localized(op.grid, rng)
        else:
            psi = random_bandlimited(op.grid, rng, complex_valued=True)
        r = gn_ratio(op, pot, psi) / gn.C_gn
        worst = max(worst, r)
        passed += r <= 1 + GN_TOL
    return SuiteResult("gn", trials, passed, worst, 1 + GN_TOL, _required(trials, False)), gn


def suite_self_adjoint(op: PointOperator, omega, rng, trials):
    """``<R g, h> = <g, R h>`` for random complex pairs at real ``omega``."""
    grid = op.grid
    passed, worst = 0, 0.0
    for _ in range(trials):
        g = random_localized(grid, rng)
        h = random_localized(grid, rng)
        Rg, Rh = op.resolvent(g, omega), op.resolvent(h, omega)
        err = abs(grid.inner(Rg, h) - grid.inner(g, Rh)) / (grid.l2_norm(Rg) * grid.l2_norm(h))
        worst = max(worst, err)
        passed += err <= PAIRING_TOL
    return SuiteResult("self_adjoint", trials, passed, worst, PAIRING_TOL, _required(trials, False))


def run_all(op: PointOperator, pot, lam, seed, trials):
    """Run every suite from one seeded generator; returns ``(results, gn_report)``."""
    rng = np.random.default_rng(seed)
    results = [
        suite_riesz_bfll(pot, rng, trials),
        suite_polya_szego(op.grid, rng, trials),
        suite_weinstein(op, pot, lam, rng, trials),
    ]
    gn_result, gn = suite_gn(op, pot, rng, trials)
    results.append(gn_result)
    results.append(suite_self_adjoint(op, op.params.omega_ref, rng, trials))
    return results, gn
