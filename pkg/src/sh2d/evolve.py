"""Strang-split integration of ``i psi_t = A psi + theta (w * |psi|^2) psi``.

The linear sub-step is the Cayley transform of ``A`` (one complex-frequency
resolvent per step) and the nonlinear sub-step is the exact phase rotation
at frozen modulus. Both are L^2 isometries, so mass is conserved to
roundoff; the Cayley step conserves the quadratic form and the phase step
conserves the Hartree energy, so the energy error of the composition is
second order in ``dt`` and the scheme is time reversible.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .grid import fft_workers
from .pointop import PointOperator
from .potential import MASS_CRITICAL

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e6
TRACE_HEADER = ("t", "mass", "energy", "h1alpha")

STATUS_OK = "ok"
STATUS_BLOWUP = "blowup"
STATUS_NAN = "nan"


@dataclass
class EvolutionConfig:
    theta: int
    dt: float
    T: float
    record_every: int = 100
    scheme: str = "strang"

    def __post_init__(self):
        if self.theta not in (1, -1):
            raise ValueError(f"theta must be +1 or -1, got {self.theta!r}")
        if self.scheme != "strang":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not (self.dt != 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be finite and nonzero, got {self.dt!r}")
        if not (self.T > 0 and abs(self.dt) <= self.T):
            raise ValueError(f"need 0 < |dt| <= T, got dt={self.dt!r}, T={self.T!r}")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def n_steps(self):
        return int(round(self.T / abs(self.dt)))


@dataclass
class EvolutionTrace:
    times: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    h1alpha: np.ndarray
    final: np.ndarray = None
    status: str = STATUS_OK
    steps: int = 0
    snapshots: list = field(default_factory=list)

    @property
    def blowup(self):
        return self.status == STATUS_BLOWUP

    def mass_drift(self):
        return float(np.max(np.abs(self.mass - self.mass[0])) / self.mass[0])

    def energy_drift(self):
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in zip(self.times, self.mass, self.energy, self.h1alpha):
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


# sub-steps ------------------------------------------------------------------------


def linear_step(op: PointOperator, psi, tau):
    """Cayley step ``(1 + i tau A/2)^-1 (1 - i tau A/2) psi``."""
    return op.cayley(psi, tau)


def nonlinear_step(pot, psi, tau, theta):
    """Exact flow of ``i psi_t = theta (w * |psi|^2) psi`` over time ``tau``."""
    psi = np.asarray(psi, dtype=complex)
    angle = (-theta * tau) * pot.density_potential(psi)
    # cos/sin into a preallocated complex array is cheaper than complex exp
    phase = np.empty(angle.shape, dtype=complex)
    np.cos(angle, out=phase.real)
    np.sin(angle, out=phase.imag)
    phase *= psi
    return phase


def strang_step(op: PointOperator, pot, psi, dt, theta):
    psi = nonlinear_step(pot, psi, dt / 2, theta)
    psi = linear_step(op, psi, dt)
    return nonlinear_step(pot, psi, dt / 2, theta)


def energy(op: PointOperator, pot, psi, theta):
    """``(1/2) <A psi, psi> + (theta/4) int (w * |psi|^2) |psi|^2``."""
    return 0.5 * op.quadratic_form(psi) + 0.25 * theta * pot.hartree_energy(psi)


class CayleyStepper:
    """Fixed-``tau`` Cayley step with the multiplier and Green field precomputed.

    Equivalent to :func:`linear_step`. The centering shifts around a Fourier
    multiplier cancel on an even grid, so each step is one forward and one
    inverse FFT.
    """

    def __init__(self, op: PointOperator, tau):
        omega = complex(0.0, -2.0 / tau)
        grid = op.grid
        self.op = op
        self.tau = tau
        self.mult = 1.0 / (omega + grid.xi2)
        self.origin = grid.origin
        self.green = op.green_field(omega) / op.beta_h(omega)
        self.scale = 4.0 / (1j * tau)

    def __call__(self, psi):
        u0 = sfft.ifft2(sfft.fft2(psi, workers=fft_workers()) * self.mult, workers=fft_workers())
        u0 += u0[self.origin] * self.green
        u0 *= self.scale
        u0 -= psi
        return u0


# driver -----------------------------------------------------------------------------


def run(op: PointOperator, pot, psi0, cfg: EvolutionConfig, snapshot_every=0, callback=None):
    """Integrate from ``psi0`` and record mass, energy and the energy norm.

    Records at ``t = 0``, every ``record_every`` steps and at the final step.
    Stops early with ``status = "blowup"`` once the energy norm exceeds
    ``BLOWUP_FACTOR`` times its initial value, or ``status = "nan"`` on a
    non-finite field. A negative ``dt`` integrates backwards.
    ``callback(t, psi)`` is called at every record point.
    """
    theta = cfg.theta
    dt = cfg.dt
    n = cfg.n_steps
    every = int(cfg.record_every)
    step = CayleyStepper(op, dt)
    psi = np.array(psi0, dtype=complex)

    times, mass, en, norms, snaps = [], [], [], [], []

    def record(k, psi):
        times.append(k * dt)
        mass.append(op.grid.l2_norm(psi) ** 2)
        en.append(energy(op, pot, psi, theta))
        norms.append(op.h1alpha_norm(psi))
        if snapshot_every and k % snapshot_every == 0:
            snaps.append((k * dt, psi.copy()))
        if callback is not None:
            callback(k * dt, psi)

    record(0, psi)
    limit = BLOWUP_FACTOR * norms[0]
    status = STATUS_OK
    k = 0
    # adjacent half phases merge exactly because the modulus is unchanged
    while k < n:
        chunk = min(every, n - k)
        psi = nonlinear_step(pot, psi, dt / 2, theta)
        for j in range(chunk):
            psi = step(psi)
            psi = nonlinear_step(pot, psi, dt if j < chunk - 1 else dt / 2, theta)
        k += chunk
        if not np.all(np.isfinite(psi)):
            status = STATUS_NAN
            log.error("non-finite field at step %d", k)
            break
        record(k, psi)
        if norms[-1] > limit:
            status = STATUS_BLOWUP
            log.warning("energy norm grew past %.1e x its initial value at t=%g", BLOWUP_FACTOR, k * dt)
            break
    return EvolutionTrace(
        times=np.array(times), mass=np.array(mass), energy=np.array(en), h1alpha=np.array(norms),
        final=psi, status=status, steps=k, snapshots=snaps,
    )


# a priori bounds ---------------------------------------------------------------------


def norm_sq_from_conserved(op: PointOperator, E, M, theta, H):
    """``||psi||^2 = 2E - (theta/2) H + (1 - e_h) M`` in the energy norm."""
    return 2 * E - 0.5 * theta * H + (1 - op.e_h) * M


def defocusing_bound(op: PointOperator, E0, M0):
    """Bound on the squared energy norm for ``theta = +1``."""
    return 2 * E0 + (1 - op.e_h) * M0


def critical_bound(op: PointOperator, E0, M0, C_gn):
    """Squared-norm bound for the focusing mass-critical flow below threshold."""
    q = 1 - 0.5 * C_gn * M0
    if q <= 0:
        raise ValueError("mass is not below the threshold 2 / C_gn")
    return (2 * E0 + (1 - op.e_h) * M0) / q


def subcritical_bound(op: PointOperator, E0, M0, C_gn, p):
    """Largest root ``x`` of ``x^2 = B0 + B1 x^(2/p)``, returned as ``x^2``.

    ``B0`` may be negative for focusing data with negative energy.

    ``B0 = 2 E0 + (1 - e_h) M0`` and ``B1 = C_gn M0^(2 - 1/p) / 2``.
    """
    from scipy.optimize import brentq

    if not p > 1:
        raise ValueError("subcritical bound needs p > 1")
    B0 = 2 * E0 + (1 - op.e_h) * M0
    B1 = 0.5 * C_gn * M0 ** (2 - 1 / p)
    fn = lambda x: x * x - B0 - B1 * x ** (2 / p)
    # fn decreases up to its minimum and increases after it
    lo = (B1 / p) ** (p / (2 * (p - 1)))
    if fn(lo) > 0:
        raise ValueError("x^2 = B0 + B1 x^(2/p) has no root")
    hi = max(2 * lo, math.sqrt(abs(B0)), 1.0)
    while fn(hi) <= 0:
        hi *= 2
    return brentq(fn, lo, hi, xtol=1e-14, rtol=1e-14) ** 2


# probes --------------------------------------------------------------------------------


@dataclass
class ThresholdResult:
    amplitude: float
    mass: float
    l2_norm: float
    below_threshold: bool
    sup_norm_sq: float
    bound: float
    status: str

    def within(self, slack=0.05):
        return self.bound is not None and self.sup_norm_sq <= self.bound * (1 + slack)


def threshold_probe(op: PointOperator, pot_critical, profile, amplitudes, gn, cfg: EvolutionConfig):
    """Focusing runs of ``a * profile`` for each amplitude, split at ``kappa``.

    ``gn`` is a :class:`GNReport` for the same potential. Below threshold the
    a priori squared-norm bound is attached to each result.
    """
    if pot_critical.regime != MASS_CRITICAL:
        raise ValueError("threshold_probe needs a mass-critical potential (p = 1)")
    if cfg.theta != -1:
        raise ValueError("threshold_probe runs the focusing flow")
    grid = op.grid
    out = []
    for a in amplitudes:
        psi0 = a * np.asarray(profile, dtype=complex)
        M0 = grid.l2_norm(psi0) ** 2
        below = math.sqrt(M0) < gn.kappa
        trace = run(op, pot_critical, psi0, cfg)
        bound = critical_bound(op, trace.energy[0], M0, gn.C_gn) if below else None
        out.append(ThresholdResult(float(a), float(M0), math.sqrt(M0), below,
                                   float(np.max(trace.h1alpha) ** 2), bound, trace.status))
    return out


def continuous_dependence_probe(op: PointOperator, pot, psi0, perturbation, eps, T_small, dt,
                                record_every=1, theta=-1):
    """``sup_t ||psi(t) - phi(t)|| / ||psi0 - phi0||`` in the energy norm.

    ``phi0 = psi0 + eps * perturbation / ||perturbation||``; returns 1 for ``eps = 0``.
    Also returns the ratio trajectory as ``(times, ratios)``.
    """
    if eps == 0:
        return 1.0, (np.zeros(1), np.ones(1))
    psi0 = np.asarray(psi0, dtype=complex)
    pert = np.asarray(perturbation, dtype=complex)
    phi0 = psi0 + eps * pert / op.h1alpha_norm(pert)
    d0 = op.h1alpha_norm(psi0 - phi0)
    cfg = EvolutionConfig(theta=theta, dt=dt, T=T_small, record_every=1)
    step = CayleyStepper(op, dt)
    times, ratios = [0.0], [1.0]
    psi, phi = psi0, phi0
    for k in range(1, cfg.n_steps + 1):
        psi = _strang_with(step, pot, psi, dt, theta)
        phi = _strang_with(step, pot, phi, dt, theta)
        if k % record_every == 0 or k == cfg.n_steps:
            times.append(k * dt)
            ratios.append(op.h1alpha_norm(psi - phi) / d0)
    ratios = np.array(ratios)
    return float(np.max(ratios)), (np.array(times), ratios)


def _strang_with(step, pot, psi, dt, theta):
    psi = nonlinear_step(pot, psi, dt / 2, theta)
    psi = step(psi)
    return nonlinear_step(pot, psi, dt / 2, theta)
