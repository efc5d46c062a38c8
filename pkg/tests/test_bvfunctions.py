"""BV functions: representatives, derivative measures, weak identities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from bvcalc import (
    BVFunction,
    BVVector,
    DomainError,
    TestFunction,
    coarea_lhs,
    coarea_rhs,
    integration_by_parts_residual,
    leibniz_product,
    leibniz_weak_residual,
    measure_total_variation,
)
from bvcalc.cantor import cantor_function_eval


def staircase(lo=0.0, hi=1.0):
    """x^2 + 0.6 H(x-0.3) - 0.4 H(x-0.7) + 0.5 C(x): all three parts."""
    return (
        BVFunction.from_poly(lo, hi, (0.0, 0.0, 1.0))
        + BVFunction.heaviside(lo, hi, 0.3, 0.0, 0.6)
        + BVFunction.heaviside(lo, hi, 0.7, 0.0, -0.4)
        + BVFunction.cantor_fn(lo, hi, support=(lo, hi), coefficient=0.5)
    )


# -- evaluation and representatives ------------------------------------------


def test_sided_values_at_a_jump():
    u = BVFunction.heaviside(0.0, 1.0, 0.5, 1.0, 3.0)
    assert u.eval(0.5, "left") == 1.0
    assert u.eval(0.5, "right") == 3.0
    assert u.eval(0.5, "precise") == 2.0
    # off the jump all representatives agree
    for side in ("left", "right", "precise", "stored"):
        assert u.eval(0.25, side) == 1.0


def test_stored_policy_picks_a_convex_combination():
    left = BVFunction.heaviside(0.0, 1.0, 0.5, 0.0, 1.0, policy="left")
    right = BVFunction.heaviside(0.0, 1.0, 0.5, 0.0, 1.0, policy="right")
    assert left.eval(0.5, "stored") == 0.0
    assert right.eval(0.5, "stored") == 1.0


def test_values_are_right_continuous_between_jumps():
    u = staircase()
    xs = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    vals = u.values(xs)
    c = lambda x: 0.5 * cantor_function_eval(x)
    assert vals[1] == pytest.approx(0.09 + 0.6 + c(0.3), abs=1e-9)
    assert vals[3] == pytest.approx(0.49 + 0.6 - 0.4 + c(0.7), abs=1e-9)


def test_jump_listing_includes_cantor_offset():
    u = staircase()
    (x1, l1, r1), (x2, l2, r2) = u.jumps()
    assert (x1, x2) == (0.3, 0.7)
    assert r1 - l1 == pytest.approx(0.6, abs=1e-14)
    assert r2 - l2 == pytest.approx(-0.4, abs=1e-14)
    assert l1 == pytest.approx(0.09 + 0.5 * cantor_function_eval(0.3), abs=1e-12)


# -- variation and the derivative measure ------------------------------------


def test_total_variation_closed_form():
    u = staircase()
    # 2x dx integrates to 1; jumps 0.6 + 0.4; cantor 0.5
    assert u.total_variation() == pytest.approx(1.0 + 0.6 + 0.4 + 0.5, abs=1e-8)
    assert measure_total_variation(u.derivative()) == pytest.approx(
        u.total_variation(), abs=1e-8
    )


def test_monotone_variation_is_endpoint_difference():
    u = BVFunction.from_poly(0.0, 1.0, (0.0, 0.0, 2.0)) + BVFunction.cantor_fn(0.0, 1.0)
    assert u.total_variation() == pytest.approx(3.0, abs=1e-9)


def test_derivative_parts_of_the_staircase():
    du = staircase().derivative()
    assert du.absolutely_continuous_part().total_mass() == pytest.approx(1.0, abs=1e-10)
    assert du.cantor_part().total_mass() == pytest.approx(0.5, abs=1e-10)
    assert dict(du.atoms) == {0.3: pytest.approx(0.6), 0.7: pytest.approx(-0.4)}


def test_derivative_total_mass_telescopes():
    # u(1-) - u(0+) in closed form: 1 + 0.6 - 0.4 + 0.5
    du = staircase().derivative()
    assert du.total_mass() == pytest.approx(1.7, abs=1e-9)


@given(
    st.lists(st.floats(min_value=-1.5, max_value=1.5), min_size=1, max_size=4),
    st.floats(min_value=0.1, max_value=0.9),
    st.floats(min_value=-1.0, max_value=1.0).filter(lambda s: abs(s) > 1e-3),
)
@settings(max_examples=30, deadline=None)
def test_variation_is_subadditive_under_addition(coeffs, x0, size):
    a = BVFunction.from_poly(0.0, 1.0, tuple(coeffs))
    b = BVFunction.heaviside(0.0, 1.0, x0, 0.0, size)
    lhs = (a + b).total_variation()
    assert lhs <= a.total_variation() + b.total_variation() + 1e-9


# -- test functions ----------------------------------------------------------


def test_bump_vanishes_with_derivative_at_support_edges():
    phi = TestFunction.poly_bump((0.2, 0.8), (1.0, -0.5))
    for x in (0.2, 0.8, 0.1, 0.95):
        assert abs(phi(np.array([x]))[0]) < 1e-12
        assert abs(phi.prime(np.array([x]))[0]) < 1e-12


def test_bump_derivative_matches_finite_differences():
    phi = TestFunction.poly_bump((0.1, 0.9), (0.7, 0.3, -1.0))
    xs = np.linspace(0.15, 0.85, 29)
    h = 1e-6
    fd = (phi(xs + h) - phi(xs - h)) / (2 * h)
    np.testing.assert_allclose(phi.prime(xs), fd, atol=1e-7)


# -- weak identities ---------------------------------------------------------


@pytest.mark.parametrize("support", [(0.1, 0.9), (0.25, 0.6), (0.35, 0.95)])
def test_integration_by_parts_closes(support):
    u = staircase()
    phi = TestFunction.poly_bump(support, (1.0, 0.4))
    assert abs(integration_by_parts_residual(u, phi)) < 1e-8


def test_integration_by_parts_on_pure_cantor():
    u = BVFunction.cantor_fn(0.0, 1.0)
    phi = TestFunction.bump((0.05, 0.95), 1.0)
    assert abs(integration_by_parts_residual(u, phi)) < 1e-9


def test_leibniz_measure_for_two_step_functions():
    v = BVFunction.heaviside(0.0, 1.0, 0.4, 1.0, 2.0)
    w = BVFunction.heaviside(0.0, 1.0, 0.6, 3.0, 5.0)
    m = leibniz_product(v, w)
    # D(vw) has the atom v*(x)[w] + w*(x)[v] at each jump: at 0.4 the factor
    # w is constant 3, at 0.6 the factor v is constant 2
    assert dict(m.atoms) == {0.4: pytest.approx(3.0), 0.6: pytest.approx(4.0)}
    assert m.ac.is_zero()


def test_leibniz_atom_at_shared_jump_uses_midpoints():
    v = BVFunction.heaviside(0.0, 1.0, 0.5, 1.0, 3.0)
    w = BVFunction.heaviside(0.0, 1.0, 0.5, 2.0, 6.0)
    m = leibniz_product(v, w)
    # product jumps from 2 to 18; v*[w] + w*[v] = 2*4 + 4*2
    ((x, wt),) = m.atoms
    assert (x, wt) == (0.5, pytest.approx(16.0))
    # and that equals the actual jump of the product function
    assert wt == pytest.approx(3.0 * 6.0 - 1.0 * 2.0)


@pytest.mark.parametrize(
    "mk_v,mk_w",
    [
        (
            lambda: BVFunction.from_poly(0.0, 1.0, (0.5, 1.0)),
            lambda: BVFunction.heaviside(0.0, 1.0, 0.5, 1.0, 2.0),
        ),
        (
            lambda: BVFunction.from_poly(0.0, 1.0, (1.0, -0.5, 0.25)),
            lambda: BVFunction.from_poly(0.0, 1.0, (0.0, 2.0)),
        ),
        (
            lambda: BVFunction.cantor_fn(0.0, 1.0, coefficient=0.8),
            lambda: BVFunction.from_poly(0.0, 1.0, (1.0, 1.0)),
        ),
    ],
)
def test_leibniz_weak_residual_vanishes(mk_v, mk_w):
    v, w = mk_v(), mk_w()
    phi = TestFunction.bump((0.1, 0.9), 1.0)
    assert abs(leibniz_weak_residual(v, w, phi)) < 1e-8


def test_product_of_cantor_parts_on_same_base_is_rejected():
    v = BVFunction.cantor_fn(0.0, 1.0)
    w = BVFunction.cantor_fn(0.0, 1.0, coefficient=2.0)
    with pytest.raises(ValueError):
        leibniz_product(v, w)


# -- coarea ------------------------------------------------------------------


def test_coarea_linear_function_unit_weight():
    u = BVFunction.from_poly(0.0, 1.0, (0.0, 1.0))
    g = lambda xs: np.ones_like(np.asarray(xs, dtype=float))
    assert coarea_lhs(g, u) == pytest.approx(1.0, abs=1e-10)
    assert coarea_rhs(g, u) == pytest.approx(1.0, abs=1e-10)


def test_coarea_step_function_weight_at_the_jump():
    u = BVFunction.heaviside(0.0, 1.0, 0.4, 1.0, 3.0)

    def g(xs):
        return 2.0 + np.asarray(xs, dtype=float)

    # |Du| is the single atom of weight 2 at x = 0.4
    want = 2.0 * g(np.array([0.4]))[0]
    assert coarea_lhs(g, u) == pytest.approx(want, abs=1e-10)
    assert coarea_rhs(g, u) == pytest.approx(want, abs=1e-10)


def test_coarea_cantor_function_counts_levels():
    u = BVFunction.cantor_fn(0.0, 1.0)
    g = lambda xs: np.ones_like(np.asarray(xs, dtype=float))
    assert coarea_lhs(g, u) == pytest.approx(1.0, abs=1e-9)
    assert coarea_rhs(g, u) == pytest.approx(1.0, abs=1e-9)


def test_coarea_with_discontinuous_weight_crossing_a_slope():
    u = BVFunction.from_poly(0.0, 1.0, (0.0, 2.0))  # levels swept twice as fast
    cut = 0.5

    def g(xs):
        xs = np.asarray(xs, dtype=float)
        return np.where(xs < cut, 1.0, 3.0)

    lhs = coarea_lhs(g, u, g_breakpoints=(cut,))
    rhs = coarea_rhs(g, u, g_breakpoints=(cut,))
    want = 1.0 * 1.0 + 3.0 * 1.0  # g-weighted variation over the two halves
    assert lhs == pytest.approx(want, abs=1e-9)
    assert rhs == pytest.approx(want, abs=1e-9)


# -- mollification of the function itself ------------------------------------


def test_mollify_converges_to_the_precise_representative_at_a_jump():
    u = BVFunction.heaviside(0.0, 1.0, 0.5, 1.0, 2.0)
    errs = [abs(u.mollify(2.0**-k, 0.5) - 1.5) for k in range(3, 9)]
    assert errs[-1] < 1e-10
    assert all(e1 <= e0 + 1e-12 for e0, e1 in zip(errs[:-1], errs[1:]))


def test_mollify_smooth_region_second_order():
    u = BVFunction.from_poly(0.0, 1.0, (0.0, 0.0, 1.0))
    e1 = abs(u.mollify(0.1, 0.5) - 0.25)
    e2 = abs(u.mollify(0.05, 0.5) - 0.25)
    assert e2 < e1 / 3.0  # quadratic in eps for an even kernel


def test_mollify_needs_room_inside_the_domain():
    u = BVFunction.from_poly(0.0, 1.0, (1.0,))
    with pytest.raises(DomainError):
        u.mollify(0.2, 0.1)


# -- vectors -----------------------------------------------------------------


def test_vector_components_share_the_domain():
    u = BVVector(
        (
            BVFunction.from_poly(0.0, 1.0, (1.0,)),
            BVFunction.heaviside(0.0, 1.0, 0.5, 0.0, 1.0),
        )
    )
    assert len(u.components) == 2
    with pytest.raises(DomainError):
        BVVector(
            (
                BVFunction.from_poly(0.0, 1.0, (1.0,)),
                BVFunction.from_poly(0.0, 2.0, (1.0,)),
            )
        )
