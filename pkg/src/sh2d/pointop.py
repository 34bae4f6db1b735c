"""The point-interaction operator on the periodic grid.

The discrete operator ``A`` is *defined* through its resolvent at the
reference frequency,

    R(w_ref) g = (-Lap + w_ref)^-1 g + <g, G(w_ref)> / beta(w_ref) * G(w_ref),

as ``A = R(w_ref)^-1 - w_ref``. Sherman-Morrison in frequency space gives the
closed form ``A g = -Lap g - g(0) delta / S`` with ``delta`` the grid delta
(``1/h^2`` on the origin cell) and ``S = beta(w_ref) + G(w_ref)(0)``.

Every other resolvent is then the exact inverse ``(A + w)^-1``, which is
again rank one with coefficient ``1 / beta_h(w)`` where
``beta_h(w) = S - G(w)(0)``. ``beta_h`` equals the continuum ``beta`` at the
reference frequency and differs from it elsewhere by the lattice truncation
of ``G(w)(0) - G(w_ref)(0)``, which is tiny on production grids.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .errors import ConvergenceError, GridMismatchError, PoleError, SingularCorrectionError
from .grid import GridSpec

_POLE_TOL = 1e-13


@dataclass(frozen=True)
class PointOpParams:
    alpha: float
    omega_ref: float = None

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha!r}")
        if self.omega_ref is None:
            object.__setattr__(self, "omega_ref", abs(self.e_alpha) + 1.0)
        if not self.omega_ref > abs(self.e_alpha):
            raise ValueError(
                f"omega_ref={self.omega_ref} must exceed |e_alpha|={abs(self.e_alpha)}"
            )

    @property
    def e_alpha(self):
        return specfun.e_alpha(self.alpha)

    def beta(self, omega):
        return specfun.beta(self.alpha, omega)


@dataclass
class EnergyElement:
    """``v = f + c G_lam``: a regular grid field plus a multiple of the Green field."""

    f: np.ndarray
    c: complex
    lam: float

    def scaled(self, mu):
        return EnergyElement(self.f * mu, self.c * mu, self.lam)

    def copy(self):
        return EnergyElement(np.array(self.f, copy=True), self.c, self.lam)


@dataclass(frozen=True)
class BirmanTerms:
    dirichlet: float  # ||grad f||^2 + lam ||f||^2
    singular: float  # beta_h(lam) |c|^2
    remainder: float  # -|f(0) - beta_h(lam) c|^2 / S, zero on canonical elements

    @property
    def total(self):
        return self.dirichlet + self.singular + self.remainder

    @property
    def numerator(self):
        return self.dirichlet + self.singular


class PointOperator:
    """``-Lap_alpha`` realized on one grid. Caches Green fields per frequency."""

    def __init__(self, params: PointOpParams, grid: GridSpec):
        self.params = params
        self.grid = grid
        self._green = {}
        self._bound = None
        s = params.beta(params.omega_ref) + self.green_origin(params.omega_ref)
        if not abs(s) > _POLE_TOL:
            raise SingularCorrectionError(f"Sherman-Morrison denominator vanished (S={s})")
        self.sm_denominator = float(s)

    # Green functions ------------------------------------------------------

    def _check_omega(self, omega):
        if isinstance(omega, complex) or np.iscomplexobj(omega):
            omega = complex(omega)
            if omega.imag == 0.0:
                omega = omega.real
            elif omega == 0:
                raise ValueError("omega must be nonzero")
            else:
                return omega
        omega = float(omega)
        if not omega > 0:
            raise ValueError(f"real omega must be positive, got {omega}")
        return omega

    def green_hat(self, omega):
        omega = self._check_omega(omega)
        return 1.0 / (2 * math.pi * (omega + self.grid.xi2))

    def green_origin(self, omega):
        """``G(omega)(0) = L^-2 sum_k 1 / (omega + |xi_k|^2)``."""
        omega = self._check_omega(omega)
        return np.sum(1.0 / (omega + self.grid.xi2)) / self.grid.L ** 2

    def green_field(self, omega):
        """Periodized grid Green function: inverse transform of ``1/(2 pi (omega + |xi|^2))``."""
        omega = self._check_omega(omega)
        g = self._green.get(omega)
        if g is None:
            g = self.grid.to_position(self.green_hat(omega))
            if isinstance(omega, float):
                g = g.real
            g.setflags(write=False)
            if len(self._green) > 16:
                self._green.clear()
            self._green[omega] = g
        return g

    def beta_h(self, omega):
        omega = self._check_omega(omega)
        b = self.sm_denominator - self.green_origin(omega)
        return float(b.real) if isinstance(omega, float) else complex(b)

    # resolvent and operator -----------------------------------------------

    def resolvent(self, g, omega):
        """``(A + omega)^-1 g`` for real ``omega > 0`` off the pole, or complex ``omega``.

        The rank-one pairing is ``h^2 sum g G(omega)``; for real ``omega`` the
        Green field is real so this is the ordinary inner product, and for
        complex ``omega`` it is the bilinear continuation.
        """
        omega = self._check_omega(omega)
        g = self._same_grid(g)
        b = self.beta_h(omega)
        if abs(b) <= _POLE_TOL * max(1.0, abs(self.sm_denominator)):
            raise PoleError(f"resolvent pole at omega={omega} (beta_h={b})")
        grid = self.grid
        u0 = grid.to_position(grid.to_frequency(g) / (omega + grid.xi2))
        pairing = u0[grid.origin]
        out = u0 + (pairing / b) * self.green_field(omega)
        if isinstance(omega, float) and np.isrealobj(g):
            out = out.real
        return out

    def apply(self, g):
        """``A g`` via the Sherman-Morrison inverse of the reference resolvent."""
        g = self._same_grid(g)
        grid = self.grid
        g_hat = grid.to_frequency(g)
        # <g_hat, D^-1 G_hat> with D^-1 G_hat = 1/(2 pi): this is g(0)
        g0 = grid.dxi ** 2 * np.sum(g_hat) / (2 * math.pi)
        a_hat = grid.xi2 * g_hat - g0 / (2 * math.pi * self.sm_denominator)
        out = grid.to_position(a_hat)
        return out.real if np.isrealobj(g) else out

    def quadratic_form(self, g):
        """``Re <A g, g>``."""
        return float(np.real(self.grid.inner(self.apply(g), g)))

    def cayley(self, psi, tau):
        """``(1 + i tau A / 2)^-1 (1 - i tau A / 2) psi`` via one complex resolvent."""
        if tau == 0:
            return np.array(psi, dtype=complex)
        omega = complex(0.0, -2.0 / tau)
        return (4.0 / (1j * tau)) * self.resolvent(np.asarray(psi, dtype=complex), omega) - psi

    # decomposed energy space ------------------------------------------------

    def check_element(self, elem: EnergyElement):
        if not elem.lam > abs(self.params.e_alpha):
            raise ValueError(f"lambda={elem.lam} must exceed |e_alpha|={abs(self.params.e_alpha)}")
        if not self.beta_h(elem.lam) > 0:
            raise ValueError(f"lambda={elem.lam} is below the grid bound-state level")
        self._same_grid(elem.f)

    def assemble(self, elem: EnergyElement):
        self._same_grid(elem.f)
        c = elem.c
        if np.isrealobj(elem.f) and np.imag(c) == 0:
            c = float(np.real(c))
        return elem.f + c * self.green_field(elem.lam)

    def birman_terms(self, elem: EnergyElement) -> BirmanTerms:
        """Split ``(-Lap_alpha)[v] + lam ||v||^2`` into Birman pieces.

        ``dirichlet + singular`` is the continuum Birman expression. On the grid
        the delta functional is bounded, so the identity picks up ``remainder``;
        it vanishes for the canonical split ``f(0) = beta_h(lam) c`` and decays
        like ``1/log(1/h)`` otherwise.
        """
        self.check_element(elem)
        grid = self.grid
        b = self.beta_h(elem.lam)
        dirichlet = grid.h1_seminorm(elem.f) ** 2 + elem.lam * grid.l2_norm(elem.f) ** 2
        singular = b * abs(elem.c) ** 2
        remainder = -abs(elem.f[grid.origin] - b * elem.c) ** 2 / self.sm_denominator
        return BirmanTerms(dirichlet, singular, remainder)

    def birman_form(self, elem: EnergyElement):
        return self.birman_terms(elem).total

    def canonical_split(self, v, lam):
        """The split ``v = f + c G_lam`` with ``f(0) = beta_h(lam) c``."""
        c = v[self.grid.origin] / self.sm_denominator
        if np.isrealobj(v):
            c = float(c)
        return EnergyElement(v - c * self.green_field(lam), c, lam)

    # spectrum ---------------------------------------------------------------

    @property
    def e_h(self):
        return self.bound_state()[0]

    def bound_state(self, tol=1e-12, max_iter=10_000):
        """Power iteration on the reference resolvent.

        Returns ``(e_h, phi)`` with ``phi`` real and unit in L^2.
        """
        if self._bound is not None:
            return self._bound
        grid = self.grid
        omega = self.params.omega_ref
        x = grid.gaussian(grid.L / 8)
        x /= grid.l2_norm(x)
        e_prev = None
        for _ in range(max_iter):
            y = self.resolvent(x, omega)
            mu = float(np.real(grid.inner(y, x)))
            e = 1.0 / mu - omega
            x = y / grid.l2_norm(y)
            if e_prev is not None and abs(e - e_prev) < tol:
                break
            e_prev = e
        else:
            raise ConvergenceError(f"bound state power iteration did not converge in {max_iter} steps")
        if x[grid.origin] < 0:
            x = -x
        self._bound = (e, x)
        return self._bound

    def h1alpha_norm(self, g):
        """``sqrt((-Lap_alpha)[g] + (1 - e_h) ||g||^2)`` with the grid eigenvalue."""
        q = self.quadratic_form(g) + (1.0 - self.e_h) * self.grid.l2_norm(g) ** 2
        return math.sqrt(max(q, 0.0))

    def _same_grid(self, g):
        g = np.asarray(g)
        if g.shape != (self.grid.N, self.grid.N):
            raise GridMismatchError(f"field shape {g.shape} does not match grid N={self.grid.N}")
        return g
