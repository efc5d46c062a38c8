"""Conservation laws with space-discontinuous flux: solver + entropy tools."""

import numpy as np
import pytest

from bvcalc import (
    BVFunction,
    CFLError,
    ClawField,
    DomainError,
    FluxModel,
    RangeError,
    ScalarFlux,
    SmoothFunction,
    SpaceTimeTest,
    adapted_entropy_pair,
    affine_entropy_approx,
    affine_pair,
    c_alpha,
    c_alpha_values,
    entropy_residual,
    is_rankine_hugoniot,
    solve_claw,
)


def step_flux(lo=0.0, hi=1.0, w_lo=0.1, w_hi=2.5):
    """B(x, w) = (1 + H(x - 1/2)) w: linear state, one flux jump."""
    K = BVFunction.constant(lo, hi, 1.0) + BVFunction.heaviside(lo, hi, 0.5, 0.0, 1.0)
    model = FluxModel(((K, SmoothFunction.poly1d((0.0, 1.0), "w")),))
    return ScalarFlux(model, w_lo, w_hi)


def burgers_flux(lo=-1.0, hi=2.0, w_lo=0.1, w_hi=2.0):
    K = BVFunction.constant(lo, hi, 1.0)
    model = FluxModel(((K, SmoothFunction.poly1d((0.0, 0.0, 0.5), "w^2/2")),))
    return ScalarFlux(model, w_lo, w_hi)


# -- flux certification and level inversion ----------------------------------


def test_monotone_certificate_accepts_and_orients():
    assert step_flux().direction == 1
    K = BVFunction.from_poly(0.0, 1.0, (1.0, 1.0))
    cubic = FluxModel(((K, SmoothFunction.poly1d((0.0, 0.0, 0.0, 1.0), "w^3")),))
    assert ScalarFlux(cubic, 0.5, 2.5).direction == 1
    falling = FluxModel(
        ((BVFunction.constant(0.0, 1.0, -1.0), SmoothFunction.poly1d((0.0, 1.0))),)
    )
    assert ScalarFlux(falling, 0.1, 2.0).direction == -1


def test_monotone_certificate_rejects_parabola():
    """w^2 changes monotonicity inside (-2, 2): value-based check trips."""
    model = FluxModel(
        ((BVFunction.constant(0.0, 1.0, 1.0),
          SmoothFunction.poly1d((0.0, 0.0, 1.0), "w^2")),)
    )
    with pytest.raises(DomainError):
        ScalarFlux(model, -2.0, 2.0)


def test_level_inversion_closed_forms():
    flux = step_flux()
    assert c_alpha(flux, 0.25, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert c_alpha(flux, 0.5, 1.0, "left") == pytest.approx(1.0, abs=1e-12)
    assert c_alpha(flux, 0.5, 1.0, "right") == pytest.approx(0.5, abs=1e-12)
    K = BVFunction.from_poly(0.0, 1.0, (1.0, 1.0))
    cubic = ScalarFlux(
        FluxModel(((K, SmoothFunction.poly1d((0.0, 0.0, 0.0, 1.0), "w^3")),)),
        0.5, 2.5,
    )
    assert c_alpha(cubic, 0.6, 12.8) == pytest.approx(2.0, abs=1e-11)
    with pytest.raises(RangeError):
        c_alpha(flux, 0.25, 100.0)


def test_level_inversion_vectorized_matches_pointwise():
    flux = step_flux()
    xs = np.array([0.1, 0.25, 0.4, 0.6, 0.75, 0.9])
    got = c_alpha_values(flux, xs, 1.2)
    want = np.array([c_alpha(flux, float(x), 1.2) for x in xs])
    assert np.abs(got - want).max() < 1e-11


def test_jump_condition_predicate():
    flux = step_flux()
    assert is_rankine_hugoniot(flux, 0.5, 1.0, 0.5)
    assert not is_rankine_hugoniot(flux, 0.5, 1.0, 1.0)


# -- adapted entropies -------------------------------------------------------


def test_adapted_pair_pointwise_values():
    flux = step_flux()
    pair = adapted_entropy_pair(flux, 1.0)
    assert pair.eta(np.array([0.25]), np.array([1.3]))[0] == pytest.approx(0.3)
    assert pair.eta_sided(0.5, np.array([1.3]), "right")[0] == pytest.approx(0.8)
    assert pair.q(0.25, 1.3, "precise") == pytest.approx(0.3)
    assert pair.q(0.5, 0.65, "right") == pytest.approx(0.3)


@pytest.mark.parametrize("u_left", [0.3, 0.8, 1.3, 1.9, 2.4])
def test_adapted_flux_bracket_tracks_jump_defect(u_left):
    """Across the flux jump the sided entropy-flux bracket is bounded by
    the pair's own jump-condition defect, for every adapted level."""
    flux = step_flux()
    level = flux.value(0.5, u_left, "left")
    u_right = c_alpha(flux, 0.5, level, "right")
    mismatch = abs(flux.value(0.5, u_right, "right") - level)
    assert mismatch <= 1e-12  # bisection round-off only
    for alpha in (0.4, 0.9, 1.7, 2.3):
        pair = adapted_entropy_pair(flux, alpha)
        diff = pair.q(0.5, u_right, "right") - pair.q(0.5, u_left, "left")
        assert abs(diff) <= mismatch + 1e-15


def test_adapted_flux_bracket_exact_on_exact_pairs():
    """The upwind coupling carries the sided flux value across, so solver
    pairs match exactly; then the bracket is exactly zero."""
    flux = step_flux()
    for alpha in (0.4, 0.9, 1.7, 2.3):
        pair = adapted_entropy_pair(flux, alpha)
        assert pair.q(0.5, 0.4, "right") - pair.q(0.5, 0.8, "left") == 0.0
        assert pair.q(0.5, 1.1, "right") - pair.q(0.5, 2.2, "left") == 0.0


def test_adapted_pair_structural_checks():
    pair = adapted_entropy_pair(step_flux(), 0.9)
    ok, worst = pair.check_convexity()
    assert ok, worst
    ok, worst = pair.check_compatibility(samples=120)
    assert ok, worst
    ok, worst, count = pair.check_jump_dissipation()
    assert ok and count > 0
    assert worst <= 1e-10


def test_adapted_pair_unattained_level_rejected():
    with pytest.raises(RangeError):
        adapted_entropy_pair(step_flux(), 50.0)


# -- piecewise-affine entropies ----------------------------------------------


@pytest.mark.parametrize("N", [4, 16, 64])
@pytest.mark.parametrize("x,side", [(0.25, "precise"), (0.5, "left"), (0.5, "right")])
def test_affine_coefficients(N, x, side):
    """Kink weights nonnegative, knots carry levels spaced C/N, and the
    approximation interpolates the entropy at every inverted level."""
    flux = step_flux(w_lo=-2.5, w_hi=2.5)
    pair = adapted_entropy_pair(flux, 0.9)
    ae = affine_entropy_approx(pair, flux, N, x, side)
    assert min(ae.kink_coeffs, default=0.0) >= 0.0
    C = flux.state_bound()
    for lev, c in zip(ae.levels, ae.knots):
        assert flux.value(x, c, side) == pytest.approx(lev, abs=1e-9)
        assert (lev / (C / N)) == pytest.approx(round(lev / (C / N)), abs=1e-9)
    knots = np.asarray(ae.grid_knots)
    got = ae.eta(knots)
    want = pair.eta_sided(x, knots, side)
    assert np.abs(got - want).max() <= 1e-10


def test_affine_approx_needs_two_levels():
    flux = step_flux()
    pair = adapted_entropy_pair(flux, 0.9)
    with pytest.raises(RangeError):
        affine_entropy_approx(pair, flux, 1, 0.25)


def test_affine_pair_handles():
    flux = step_flux()
    base = adapted_entropy_pair(flux, 0.9)
    pair = affine_pair(flux, base, 64)
    xs = np.array([0.2, 0.4, 0.7])
    us = np.array([0.3, 1.1, 2.2])
    assert np.abs(pair.eta(xs, us) - base.eta(xs, us)).max() <= 0.05
    with pytest.raises(DomainError):
        pair.q(0.5, 1.0, "precise")
    assert np.isfinite(pair.q(0.5, 1.0, "left"))


# -- finite-volume solver ----------------------------------------------------


def test_solver_guards():
    flux = step_flux()
    u0 = BVFunction.constant(0.0, 1.0, 1.0)
    with pytest.raises(CFLError):
        solve_claw(flux, u0, 0.1, 50, cfl=0.6)
    with pytest.raises(DomainError):
        solve_claw(flux, u0, 0.1, 3)
    with pytest.raises(RangeError):
        solve_claw(flux, BVFunction.constant(0.0, 1.0, 5.0), 0.1, 50)


def test_snapped_grid_contains_flux_jump():
    flux = step_flux()
    field = solve_claw(flux, BVFunction.constant(0.0, 1.0, 1.0), 0.05, 7)
    assert 0.5 in set(float(e) for e in field.edges)
    assert np.all(np.diff(field.edges) > 0)


def test_mass_defects_at_round_off():
    flux = burgers_flux()
    u0 = BVFunction.from_poly(-1.0, 2.0, (1.5,))
    u0 = u0 + BVFunction.heaviside(-1.0, 2.0, 0.3, 0.0, -1.0)
    field = solve_claw(flux, u0, 0.25, 120)
    assert np.abs(field.mass_defects()).max() <= 1e-12
    assert field.dt == pytest.approx(field.times[1] - field.times[0])


def test_burgers_shock_within_first_order_band():
    """Single shock, speed 1: cell-average error stays below two widths."""
    flux = burgers_flux()
    u0 = BVFunction.from_poly(-1.0, 2.0, (1.5,))
    u0 = u0 + BVFunction.heaviside(-1.0, 2.0, 0.3, 0.0, -1.0)
    field = solve_claw(flux, u0, 0.5, 200)
    dx = float(field.widths.max())
    exact = np.where(field.centers < 0.3 + 0.5, 1.5, 0.5)
    err = float(np.dot(np.abs(field.slice_values(-1) - exact), field.widths))
    assert err <= 2.0 * dx


def test_stationary_two_level_profile_is_exact():
    """B(x, u0(x)) constant: the upwind coupling preserves it to the bit."""
    flux = step_flux(w_lo=0.1, w_hi=2.0)
    u0 = BVFunction.from_poly(0.0, 1.0, (1.0,))
    u0 = u0 + BVFunction.heaviside(0.0, 1.0, 0.5, 0.0, -0.5)
    field = solve_claw(flux, u0, 0.3, 50)
    assert np.array_equal(field.states[0], field.states[-1])
    pair = adapted_entropy_pair(flux, 0.7)
    phi = SpaceTimeTest.bump((0.1, 0.9), (0.02, 0.28), 1.0)
    assert entropy_residual(field, pair, phi) == 0.0


def test_field_slices():
    flux = step_flux()
    field = solve_claw(flux, BVFunction.constant(0.0, 1.0, 1.0), 0.05, 12)
    ap = field.slice_pwc(0)
    assert np.allclose(ap.eval_array(field.centers), field.slice_values(0))
    assert field.mass(0) == pytest.approx(1.0)


def test_space_time_bump_support_and_peak():
    phi = SpaceTimeTest.bump((0.0, 1.0), (0.0, 1.0), amplitude=2.0)
    xs = np.array([-0.5, 0.25, 0.5, 1.5])
    assert phi(xs, 2.0).tolist() == [0.0, 0.0, 0.0, 0.0]
    mid = phi(xs, 0.5)
    assert mid[0] == 0.0 and mid[3] == 0.0
    assert mid[2] == pytest.approx(2.0)
    assert np.all(mid >= 0.0)


# -- entropy production diagnostics ------------------------------------------


@pytest.fixture(scope="module")
def burgers_fields():
    flux = burgers_flux()
    u0 = BVFunction.from_poly(-1.0, 2.0, (1.5,))
    u0 = u0 + BVFunction.heaviside(-1.0, 2.0, 0.3, 0.0, -1.0)
    entropic = solve_claw(flux, u0, 0.5, 150)

    def expand(xs, t):
        return np.where(xs < 0.3 + t, 0.5, 1.5)

    injected = ClawField.from_function(flux, expand, 0.5, 150, 120)
    return flux, entropic, injected


@pytest.mark.parametrize("alpha", [0.3, 0.45, 0.7, 1.0])
def test_compression_shock_dissipates(burgers_fields, alpha):
    flux, entropic, _ = burgers_fields
    phi = SpaceTimeTest.bump((0.0, 1.2), (0.05, 0.45), 1.0)
    res = entropy_residual(entropic, adapted_entropy_pair(flux, alpha), phi)
    assert res < 0.0
    assert res <= 1e-3


@pytest.mark.parametrize("alpha", [0.3, 0.45, 0.7, 1.0])
def test_expansion_shock_produces_entropy(burgers_fields, alpha):
    """The level is crossed by both states, so the defect is order one."""
    flux, _, injected = burgers_fields
    phi = SpaceTimeTest.bump((0.0, 1.2), (0.05, 0.45), 1.0)
    res = entropy_residual(injected, adapted_entropy_pair(flux, alpha), phi)
    assert res > 1e-2


def test_slice_pairing_matches_weak_form():
    """Dual route: the per-slice assembly (interface brackets + sign-resolved
    diffuse density) against the plain weak form -int phi' q(., u) dx."""
    from scipy.integrate import quad

    from bvcalc import TestFunction
    from bvcalc.claw import _slice_q_pairing

    K1 = BVFunction.from_poly(0.0, 1.0, (0.5, 1.0))
    K2 = BVFunction.heaviside(0.0, 1.0, 0.6, 0.0, 0.8)
    model = FluxModel(
        ((K1, SmoothFunction.poly1d((0.0, 1.0), "w")),
         (K2, SmoothFunction.poly1d((0.0, 0.0, 0.6), "w^2")))
    )
    flux = ScalarFlux(model, 0.1, 2.0)
    pair = adapted_entropy_pair(flux, 0.9)
    edges = np.array([0.0, 0.3, 0.6, 0.85, 1.0])
    vals = np.array([0.4, 1.1, 0.7, 1.6])
    phi = TestFunction.poly_bump((0.05, 0.95), (1.0,))
    assembled = _slice_q_pairing(pair, edges, vals, phi, tol=1e-10)
    weak = 0.0
    for (a, b), v in zip(zip(edges[:-1], edges[1:]), vals):
        val, _ = quad(
            lambda x, v=v: float(phi.prime(np.array([x]))[0]) * pair.q(x, v, "precise"),
            a, b, limit=200, epsabs=1e-12, epsrel=1e-12,
        )
        weak -= val
    assert assembled == pytest.approx(weak, abs=1e-10)


def test_affine_pair_needs_pwc_coefficients_for_residuals():
    """Smoothly varying coefficients leave the affine pair without a
    closed-form diffuse part; the residual assembly refuses it."""
    from bvcalc import RepresentationError

    K = BVFunction.from_poly(0.0, 1.0, (1.0, 0.5))
    flux = ScalarFlux(
        FluxModel(((K, SmoothFunction.poly1d((0.0, 1.0), "w")),)), 0.1, 2.0
    )
    base = adapted_entropy_pair(flux, 0.9)
    pair = affine_pair(flux, base, 16)
    field = solve_claw(flux, BVFunction.constant(0.0, 1.0, 1.0), 0.05, 12)
    phi = SpaceTimeTest.bump((0.1, 0.9), (0.01, 0.04), 1.0)
    with pytest.raises(RepresentationError):
        entropy_residual(field, pair, phi)


def test_crossing_profile_through_flux_jump_dissipates():
    """Step data driven through the flux jump: every crossed level sees
    order-dx upwind dissipation, so the residual is strictly negative."""
    flux = step_flux(w_lo=0.1, w_hi=2.5)
    u0 = BVFunction.from_poly(0.0, 1.0, (1.3,))
    u0 = u0 + BVFunction.heaviside(0.0, 1.0, 0.35, 0.0, -0.9)
    field = solve_claw(flux, u0, 0.4, 60)
    phi = SpaceTimeTest.bump((0.1, 0.9), (0.05, 0.35), 1.0)
    for alpha in (0.6, 1.0):
        res = entropy_residual(field, adapted_entropy_pair(flux, alpha), phi)
        assert res < 0.0
        assert res <= 1e-3
