import math

import numpy as np
import pytest
from scipy.optimize import brentq

from sh2d.errors import GridMismatchError, PoleError
from sh2d.grid import GridSpec
from sh2d.pointop import EnergyElement, PointOperator, PointOpParams
from sh2d.specfun import e_alpha, green_value

from conftest import random_complex


def dense_matrix(op):
    """Dense matrix of ``A`` from its action on the grid basis."""
    n = op.grid.N
    M = np.zeros((n * n, n * n))
    for j in range(n * n):
        e = np.zeros(n * n)
        e[j] = 1.0
        M[:, j] = op.apply(e.reshape(n, n)).reshape(-1)
    return M


@pytest.fixture(scope="module")
def small():
    g = GridSpec(L=8.0, N=8)
    op = PointOperator(PointOpParams(0.1), g)
    return op, dense_matrix(op)


# parameters ----------------------------------------------------------------------


def test_params_defaults_and_validation():
    p = PointOpParams(0.0)
    assert p.omega_ref == pytest.approx(abs(e_alpha(0.0)) + 1.0)
    assert p.e_alpha == e_alpha(0.0)
    assert p.beta(p.omega_ref) > 0
    with pytest.raises(ValueError):
        PointOpParams(0.0, omega_ref=1.0)
    with pytest.raises(ValueError):
        PointOpParams(float("nan"))


# Green fields ---------------------------------------------------------------------


def test_green_field_real_positive_decreasing(op128):
    g = op128.grid
    G = op128.green_field(2.0)
    assert np.isrealobj(G)
    i0, j0 = g.origin
    diag = G[i0 + np.arange(g.N // 2), j0 + np.arange(g.N // 2)]
    assert np.all(diag > 0) and np.all(np.diff(diag) < 0)


def _axis_ringing(N):
    g = GridSpec(40.0, N)
    G = PointOperator(PointOpParams(0.0), g).green_field(2.0)
    return -np.min(G) / np.max(G)


def test_green_field_cutoff_ringing_shrinks():
    # the sharp spectral cutoff leaves a sign-alternating tail that decays like 1/N^2
    r1, r2, r3 = _axis_ringing(128), _axis_ringing(256), _axis_ringing(512)
    assert r1 > r2 > r3
    assert r1 / r2 > 3.5 and r2 / r3 > 3.5
    assert r3 < 1e-5


@pytest.fixture(scope="module")
def green512():
    g = GridSpec(40.0, 512)
    return g, PointOperator(PointOpParams(0.0), g).green_field(2.0)


def test_green_field_matches_k0_off_axis(green512):
    # [DERIVED] continuum K0 from specfun, mid-range radii outside the axis ringing band
    g, G = green512
    i0, j0 = g.origin
    rows, cols = np.indices(G.shape)
    band = (np.abs(rows - i0) <= 1) | (np.abs(cols - j0) <= 1)
    mask = (g.r >= 3 * g.h) & (g.r <= g.L / 8) & ~band
    ref = green_value(2.0, g.r[mask])
    assert np.max(np.abs(G[mask] - ref) / ref) < 0.01


@pytest.mark.xfail(strict=True, reason="sharp spectral cutoff rings on the coordinate axes (about 5% at N=512)")
def test_green_field_matches_k0_everywhere_mid_range(green512):
    g, G = green512
    mask = (g.r >= 3 * g.h) & (g.r <= g.L / 8)
    ref = green_value(2.0, g.r[mask])
    assert np.max(np.abs(G[mask] - ref) / ref) < 0.01


@pytest.mark.xfail(strict=True, reason="cutoff ringing makes the axis profile alternate and dip below zero")
def test_green_field_positive_nonincreasing_on_axes(green512):
    g, G = green512
    i0, j0 = g.origin
    axis = G[i0, j0:]
    assert np.all(G > 0)
    assert np.all(np.diff(axis) <= 0)


def test_green_field_matches_k0_on_axis_after_averaging(green512):
    # [DERIVED] on the axes the ringing alternates cell to cell; neighbour averages match K0
    g, G = green512
    i0, j0 = g.origin
    j = np.arange(3, int(g.L / 8 / g.h))
    avg = 0.5 * (G[i0, j0 + j] + G[i0, j0 + j + 1])
    ref = 0.5 * (green_value(2.0, j * g.h) + green_value(2.0, (j + 1) * g.h))
    assert np.max(np.abs(avg - ref) / ref) < 0.01


def test_green_field_parseval(op128):
    g = op128.grid
    omega = 1.7
    lhs = g.l2_norm(op128.green_field(omega)) ** 2
    rhs = g.dxi ** 2 * np.sum((2 * math.pi) ** -2 * (omega + g.xi2) ** -2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_green_field_domain(op128):
    for bad in (0.0, -1.0, 0j):
        with pytest.raises(ValueError):
            op128.green_field(bad)
    G = op128.green_field(-2j)
    assert np.iscomplexobj(G)


# resolvent and operator -----------------------------------------------------------


def test_resolvent_recovers_regular_field(op128):
    g = op128.grid
    omega = 3.0
    f = g.gaussian(1.5, (2.0, 1.0)) - g.gaussian(1.5, (-2.0, -1.0))
    f = f - f[g.origin] * g.gaussian(0.5)  # f(0) = 0
    rhs = g.to_position((omega + g.xi2) * g.to_frequency(f)).real
    assert np.max(np.abs(op128.resolvent(rhs, omega) - f)) < 1e-10


def test_resolvent_self_adjoint(op128, rng):
    g = op128.grid
    for _ in range(20):
        u, v = random_complex(g, rng), random_complex(g, rng)
        Ru, Rv = op128.resolvent(u, 2.0), op128.resolvent(v, 2.0)
        assert abs(g.inner(Ru, v) - g.inner(u, Rv)) <= 1e-12 * g.l2_norm(Ru) * g.l2_norm(v)


def test_first_resolvent_identity(op128, rng):
    g = op128.grid
    w1, w2 = 2.0, 5.5
    u = random_complex(g, rng)
    lhs = op128.resolvent(u, w1) - op128.resolvent(u, w2)
    rhs = (w2 - w1) * op128.resolvent(op128.resolvent(u, w2), w1)
    assert g.l2_norm(lhs - rhs) <= 1e-10 * g.l2_norm(lhs)


def test_operator_resolvent_inverse_pair(op128, rng):
    g = op128.grid
    u = random_complex(g, rng)
    for omega in (op128.params.omega_ref, 2.0, 7.0, 1 - 3j):
        Ru = op128.resolvent(u, omega)
        assert g.l2_norm(op128.apply(Ru) + omega * Ru - u) <= 1e-10 * g.l2_norm(u)
    w = op128.params.omega_ref
    back = op128.resolvent(op128.apply(u) + w * u, w)
    assert g.l2_norm(back - u) <= 1e-11 * g.l2_norm(u)


def test_resolvent_pole_at_grid_eigenvalue(op128):
    g = op128.grid
    with pytest.raises(PoleError):
        op128.resolvent(g.gaussian(1.0), abs(op128.e_h))
    # the continuum level is off the grid spectrum, so the resolvent exists there
    out = op128.resolvent(g.gaussian(1.0), abs(op128.params.e_alpha))
    assert np.all(np.isfinite(out))


def test_real_input_real_output(op128):
    u = op128.grid.gaussian(2.0)
    assert np.isrealobj(op128.resolvent(u, 2.0))
    assert np.isrealobj(op128.apply(u))


def test_grid_mismatch(op128):
    with pytest.raises(GridMismatchError):
        op128.apply(np.ones((64, 64)))


def test_dense_matrix_symmetric_single_negative_eigenvalue():
    # [DERIVED] dense 8x8 oracle
    g = GridSpec(L=8.0, N=8)
    for alpha in (-0.2, 0.0, 0.25, 0.5):
        M = dense_matrix(PointOperator(PointOpParams(alpha), g))
        assert np.max(np.abs(M - M.T)) <= 1e-12 * np.max(np.abs(M))
        ev = np.linalg.eigvalsh(M)
        assert np.sum(ev < 0) == 1


def test_dense_resolvent_and_identity(small, rng):
    op, M = small
    n = 64
    for omega in (2.0, 0.5 + 1.5j):
        u = rng.normal(size=n) + 1j * rng.normal(size=n)
        ref = np.linalg.solve(M + omega * np.eye(n), u)
        out = op.resolvent(u.reshape(8, 8), omega).reshape(-1)
        assert np.linalg.norm(out - ref) <= 1e-10 * np.linalg.norm(ref)
    w1, w2 = 1.5, 4.0
    R1 = np.linalg.inv(M + w1 * np.eye(n))
    R2 = np.linalg.inv(M + w2 * np.eye(n))
    assert np.max(np.abs(R1 - R2 - (w2 - w1) * R1 @ R2)) < 1e-10


def test_dense_bound_state(small):
    op, M = small
    assert op.e_h == pytest.approx(np.linalg.eigvalsh(M)[0], rel=1e-9)


def test_pure_mode_action(op128):
    # [DERIVED] A e = |xi|^2 e - e(0) delta / S for a single Fourier mode
    g = op128.grid
    X, Y = g.coords
    k = (4 * g.dxi, g.dxi)
    e = np.exp(1j * (k[0] * X + k[1] * Y))
    delta = np.zeros_like(e)
    delta[g.origin] = 1 / g.cell_area
    expected = (k[0] ** 2 + k[1] ** 2) * e - e[g.origin] * delta / op128.sm_denominator
    assert np.max(np.abs(op128.apply(e) - expected)) < 1e-9 * np.max(np.abs(expected))


def test_quadratic_form_properties(op128, rng):
    g = op128.grid
    u = random_complex(g, rng)
    Au = op128.apply(u)
    assert abs(np.imag(g.inner(Au, u))) <= 1e-12 * g.l2_norm(Au) * g.l2_norm(u)
    assert op128.quadratic_form(2 * u) == pytest.approx(4 * op128.quadratic_form(u), rel=1e-13)
    assert op128.quadratic_form(u) >= op128.e_h * g.l2_norm(u) ** 2
    e_h, phi = op128.bound_state()
    assert op128.quadratic_form(phi) == pytest.approx(e_h, rel=1e-9)


# bound state --------------------------------------------------------------------------


def test_bound_state_secular_equation(op128):
    # [DERIVED] beta_h(w) = S - G_w(0) vanishes at w = |e_h|
    root = brentq(op128.beta_h, 0.1, op128.params.omega_ref, xtol=1e-15, rtol=1e-15)
    assert op128.e_h == pytest.approx(-root, rel=1e-10)


def test_bound_state_eigenpair(op128):
    g = op128.grid
    e_h, phi = op128.bound_state()
    assert g.l2_norm(phi) == pytest.approx(1.0, rel=1e-13)
    assert phi[g.origin] > 0
    assert g.l2_norm(op128.apply(phi) - e_h * phi) < 1e-5
    G = op128.green_field(abs(e_h))
    assert g.l2_norm(phi - G / g.l2_norm(G)) < 1e-3
    assert op128.h1alpha_norm(phi) == pytest.approx(1.0, rel=1e-9)


def test_bound_state_against_continuum():
    # [DERIVED] relative agreement with -4 exp(-2 gamma) on a production grid
    g = GridSpec(40.0, 256)
    op = PointOperator(PointOpParams(0.0), g)
    assert abs(op.e_h - e_alpha(0.0)) / abs(e_alpha(0.0)) < 0.02


def test_bound_state_monotone_in_alpha(grid128):
    levels = [PointOperator(PointOpParams(a), grid128).e_h for a in (-0.1, 0.0, 0.5, 1.0, 2.0)]
    assert all(x < 0 for x in levels)
    assert all(a < b for a, b in zip(levels, levels[1:]))


@pytest.mark.xfail(strict=True, reason="the periodic box floors the grid level near -4e-4, far above e_alpha(1)")
def test_bound_state_alpha2_below_continuum_alpha1(grid128):
    assert abs(PointOperator(PointOpParams(2.0), grid128).e_h) < abs(e_alpha(1.0))


# Birman decomposition ----------------------------------------------------------------


def _element(g, rng, lam=2.0):
    f = g.gaussian(rng.uniform(0.5, 3.0), tuple(rng.uniform(-3, 3, 2)), rng.normal())
    return EnergyElement(f, float(rng.normal()), lam)


def test_assemble_linear(op128, rng):
    g = op128.grid
    e1, e2 = _element(g, rng), _element(g, rng)
    a, b = 1.3, -0.4
    combo = EnergyElement(a * e1.f + b * e2.f, a * e1.c + b * e2.c, 2.0)
    assert np.allclose(op128.assemble(combo), a * op128.assemble(e1) + b * op128.assemble(e2), atol=1e-13)
    assert np.array_equal(op128.assemble(EnergyElement(e1.f, 0.0, 2.0)), e1.f)
    assert np.array_equal(op128.assemble(EnergyElement(g.zeros(float), 1.0, 2.0)), op128.green_field(2.0))


def test_birman_special_cases(op128, rng):
    g = op128.grid
    lam = 2.0
    f = _element(g, rng).f
    t = op128.birman_terms(EnergyElement(f, 0.0, lam))
    assert t.dirichlet == pytest.approx(g.h1_seminorm(f) ** 2 + lam * g.l2_norm(f) ** 2, rel=1e-14)
    assert t.singular == 0.0
    G_only = EnergyElement(g.zeros(float), 1.0, lam)
    t = op128.birman_terms(G_only)
    assert t.singular == pytest.approx(op128.beta_h(lam), rel=1e-14)
    assert t.numerator == pytest.approx(op128.beta_h(lam), rel=1e-14)


def test_birman_form_equals_operator_route(op128, rng):
    g = op128.grid
    for _ in range(20):
        e = _element(g, rng)
        v = op128.assemble(e)
        op_route = op128.quadratic_form(v) + e.lam * g.l2_norm(v) ** 2
        assert op128.birman_form(e) == pytest.approx(op_route, rel=1e-9)


def test_canonical_split_has_no_remainder(op128, rng):
    g = op128.grid
    v = op128.assemble(_element(g, rng))
    e = op128.canonical_split(v, 2.0)
    assert np.allclose(op128.assemble(e), v, atol=1e-14)
    t = op128.birman_terms(e)
    assert abs(t.remainder) < 1e-14 * t.numerator
    assert t.numerator == pytest.approx(op128.quadratic_form(v) + 2.0 * g.l2_norm(v) ** 2, rel=1e-10)


def test_element_validation(op128):
    g = op128.grid
    with pytest.raises(ValueError):
        op128.birman_terms(EnergyElement(g.gaussian(1.0), 1.0, 0.5))


# energy norm ---------------------------------------------------------------------------


def test_h1alpha_triangle_inequality(op128, rng):
    g = op128.grid
    for _ in range(100):
        u, v = random_complex(g, rng, 2.0), random_complex(g, rng, 4.0)
        assert op128.h1alpha_norm(u + v) <= op128.h1alpha_norm(u) + op128.h1alpha_norm(v) + 1e-12


def test_h1alpha_norm_equivalence(op128, rng):
    # [DERIVED] measured equivalence constant between the energy norm and ||f||_H1^2 + |c|^2
    g = op128.grid
    ratios = []
    for _ in range(100):
        e = _element(g, rng)
        ratios.append(op128.h1alpha_norm(op128.assemble(e)) ** 2 / (g.h1_norm(e.f) ** 2 + e.c ** 2))
    C = max(max(ratios), 1 / min(ratios))
    print(f"norm equivalence constant C = {C:.3f}")
    assert 0 < min(ratios) and math.isfinite(C)


# Cayley step -------------------------------------------------------------------------------


def test_cayley_isometry(op128, rng):
    g = op128.grid
    u = random_complex(g, rng)
    for tau in (1e-3, 0.1, 2.0):
        assert g.l2_norm(op128.cayley(u, tau)) == pytest.approx(g.l2_norm(u), rel=1e-12)


def test_cayley_on_bound_state(op128):
    # [DERIVED] scalar Cayley factor against the exponential
    g = op128.grid
    e_h, phi = op128.bound_state()
    errs = []
    for tau in (0.1, 0.05):
        out = op128.cayley(phi, tau)
        factor = (1 - 0.5j * tau * e_h) / (1 + 0.5j * tau * e_h)
        assert g.l2_norm(out - factor * phi) < 1e-6
        errs.append(abs(factor - np.exp(-1j * tau * e_h)))
    assert errs[0] / errs[1] == pytest.approx(8.0, rel=0.05)


def test_cayley_half_steps(op128, rng):
    # [DERIVED] two half steps versus one full step, O(tau^3)
    g = op128.grid
    # smooth in the operator sense: in the domain of A^3
    u = g.gaussian(2.0).astype(complex)
    for _ in range(3):
        u = op128.resolvent(u, 2.0)
    diffs = []
    for tau in (0.02, 0.01):
        full = op128.cayley(u, tau)
        half = op128.cayley(op128.cayley(u, tau / 2), tau / 2)
        diffs.append(g.l2_norm(full - half))
    assert diffs[0] / diffs[1] == pytest.approx(8.0, rel=0.1)
