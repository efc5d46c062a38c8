"""Closed-form functions of bounded variation on an open interval.

A function here is ``smooth_part + sum of rescaled Cantor summands``: the
piecewise-polynomial part carries every jump (adjacent pieces disagreeing at
a node), the Cantor summands are continuous and contribute the singular
diffuse behavior.  This closure gives exact one-sided limits, an exact
derivative measure with its three-part decomposition, and quadrature-friendly
structure for every weak identity in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from numpy.polynomial import polynomial as npoly

from .errors import DomainError, RepresentationError
from .measures import (
    CantorBase,
    CantorTerm,
    Interval,
    ModulatedDensity,
    PiecewisePolynomial,
    RadonMeasure,
    _poly_real_roots,
    _scalar_call,
    integrate_measure,
    kernel,
    measure_total_variation,
)
from .quadrature import _apply, integrate_interval

_SIDES = ("left", "right", "precise", "stored")


def _policy_theta(policy):
    if policy == "left":
        return 0.0
    if policy == "right":
        return 1.0
    if policy == "precise":
        return 0.5
    th = float(policy)
    if not 0.0 <= th <= 1.0:
        raise DomainError("representative policy theta must lie in [0,1]")
    return th


@dataclass(frozen=True)
class BVFunction:
    """BV function u = smooth_part + sum coef * CantorFunction(base)."""

    domain: Interval
    smooth_part: PiecewisePolynomial = None
    cantor_part: tuple = ()  # of (CantorBase, coefficient)
    policy: object = "precise"

    def __post_init__(self):
        if self.smooth_part is None:
            object.__setattr__(
                self,
                "smooth_part",
                PiecewisePolynomial.zero(self.domain.a, self.domain.b),
            )
        if (self.smooth_part.lo, self.smooth_part.hi) != (self.domain.a, self.domain.b):
            raise DomainError("smooth part must cover the whole domain")
        parts = []
        for base, coef in self.cantor_part:
            if not self.domain.contains_interval(base.support):
                raise DomainError("Cantor summand support must lie inside the domain")
            if coef != 0.0:
                parts.append((base, float(coef)))
        object.__setattr__(self, "cantor_part", tuple(parts))
        _policy_theta(self.policy)  # validate
        # identical-or-disjoint support discipline, via the measure constructor
        self.derivative()

    # -- constructors -------------------------------------------------------
    @staticmethod
    def from_poly(lo, hi, coeffs, policy="precise"):
        """u(x) = sum coeffs[k] x^k on ]lo, hi[."""
        return BVFunction(
            Interval(lo, hi), PiecewisePolynomial.from_global(lo, hi, coeffs), (), policy
        )

    @staticmethod
    def constant(lo, hi, c):
        return BVFunction.from_poly(lo, hi, (c,))

    @staticmethod
    def heaviside(lo, hi, x0, left=0.0, right=1.0, policy="precise"):
        """Jump at x0 from ``left`` to ``right``, constant elsewhere."""
        if not lo < x0 < hi:
            raise DomainError("jump location must be interior")
        return BVFunction(
            Interval(lo, hi),
            PiecewisePolynomial((lo, x0, hi), ((float(left),), (float(right),))),
            (),
            policy,
        )

    @staticmethod
    def cantor_fn(lo, hi, support=None, coefficient=1.0, policy="precise"):
        """coefficient * (Cantor function rescaled to ``support``)."""
        if support is None:
            support = Interval(lo, hi)
        elif not isinstance(support, (Interval, CantorBase)):
            support = Interval(*support)
        base = support if isinstance(support, CantorBase) else CantorBase(support)
        return BVFunction(Interval(lo, hi), None, ((base, coefficient),), policy)

    # -- structure ----------------------------------------------------------
    def breakpoints(self):
        return self.smooth_part.breakpoints[1:-1]

    def cantor_supports(self):
        return tuple((b.support.a, b.support.b) for b, _ in self.cantor_part)

    def _cantor_values(self, xs):
        out = 0.0
        for base, coef in self.cantor_part:
            out = out + coef * base.profile(xs)
        return out

    def _cantor_scalar(self, x):
        return sum(c * b.profile_scalar(x) for b, c in self.cantor_part)

    def jumps(self):
        """Tuple of (x, left value, right value) at actual jump points."""
        out = []
        for x in self.breakpoints():
            l = self.smooth_part.left_limit(x)
            r = self.smooth_part.right_limit(x)
            if l != r:
                c = self._cantor_scalar(x)
                out.append((x, l + c, r + c))
        return tuple(out)

    def jump_set(self):
        return tuple(x for x, _, _ in self.jumps())

    # -- evaluation ---------------------------------------------------------
    def eval(self, x, side="stored"):
        """One-sided / representative evaluation at a single point."""
        x = float(x)
        a, b = self.domain.a, self.domain.b
        if side not in _SIDES:
            raise DomainError(f"side must be one of {_SIDES}")
        if side == "left":
            if not a < x <= b:
                raise DomainError(f"left limit defined on ]{a}, {b}]")
            return self.smooth_part.left_limit(x) + self._cantor_scalar(x)
        if side == "right":
            if not a <= x < b:
                raise DomainError(f"right limit defined on [{a}, {b}[")
            return self.smooth_part.right_limit(x) + self._cantor_scalar(x)
        if not a < x < b:
            raise DomainError(f"interior evaluation defined on ]{a}, {b}[")
        l = self.smooth_part.left_limit(x)
        r = self.smooth_part.right_limit(x)
        c = self._cantor_scalar(x)
        if side == "precise":
            th = 0.5
        else:
            th = _policy_theta(self.policy)
        return (1.0 - th) * l + th * r + c

    def __call__(self, x):
        return self.eval(x, side="stored")

    def values(self, xs):
        """Vectorized a.e. evaluation (right-continuous at jump points);
        the distinction from star_values matters only on the null jump set."""
        xs = np.asarray(xs, dtype=float)
        return self.smooth_part(xs) + self._cantor_values(xs)

    def star_values(self, xs):
        """Vectorized precise-representative evaluation."""
        xs = np.asarray(xs, dtype=float)
        out = self.smooth_part(xs) + self._cantor_values(xs)
        for x, l, r in self.jumps():
            hit = xs == x
            if np.any(hit):
                out = np.where(hit, 0.5 * (l + r), out)
        return out

    def oscillation(self, samples=2048):
        """max - min over a dense sample plus one-sided jump values."""
        xs = np.linspace(self.domain.a, self.domain.b, samples)[1:-1]
        vals = [self.values(xs)]
        for x, l, r in self.jumps():
            vals.append(np.array([l, r]))
        allv = np.concatenate(vals)
        return float(allv.max() - allv.min())

    # -- calculus -----------------------------------------------------------
    def derivative(self):
        """The distributional derivative as a RadonMeasure."""
        atoms = tuple((x, r - l) for x, l, r in self.jumps())
        terms = tuple(CantorTerm(base, coef) for base, coef in self.cantor_part)
        return RadonMeasure(self.domain, self.smooth_part.derivative(), atoms, terms)

    def ac_derivative_part(self):
        return self.derivative().absolutely_continuous_part()

    def jump_derivative_part(self):
        return self.derivative().atomic_part()

    def cantor_derivative_part(self):
        return self.derivative().cantor_part()

    def total_variation(self):
        return measure_total_variation(self.derivative())

    def pointwise_variation(self, partition):
        """Sum of |u(t_{i+1}) - u(t_i)| over the given partition, using the
        stored representative."""
        pts = [float(t) for t in partition]
        if any(y <= x for x, y in zip(pts, pts[1:])):
            raise DomainError("partition must be strictly increasing")
        if not pts:
            return 0.0
        if not (self.domain.a < pts[0] and pts[-1] < self.domain.b):
            raise DomainError("partition must lie inside the open domain")
        vals = [self.eval(t, side="stored") for t in pts]
        return float(sum(abs(v1 - v0) for v0, v1 in zip(vals, vals[1:])))

    # -- algebra ------------------------------------------------------------
    def _merge_cantor(self, other_part, sign=1.0):
        merged = dict()
        order = []
        for base, coef in self.cantor_part:
            if base not in merged:
                order.append(base)
            merged[base] = merged.get(base, 0.0) + coef
        for base, coef in other_part:
            if base not in merged:
                order.append(base)
            merged[base] = merged.get(base, 0.0) + sign * coef
        return tuple((b, merged[b]) for b in order if merged[b] != 0.0)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = BVFunction.constant(self.domain.a, self.domain.b, other)
        if (other.domain.a, other.domain.b) != (self.domain.a, self.domain.b):
            raise DomainError("BV functions on different domains")
        return BVFunction(
            self.domain,
            self.smooth_part + other.smooth_part,
            self._merge_cantor(other.cantor_part),
            self.policy,
        )

    __radd__ = __add__

    def scale(self, k):
        k = float(k)
        return BVFunction(
            self.domain,
            self.smooth_part.scale(k),
            tuple((b, k * c) for b, c in self.cantor_part),
            self.policy,
        )

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return self + (-other)
        return self + other.scale(-1.0)

    def __neg__(self):
        return self.scale(-1.0)

    def with_policy(self, policy):
        return BVFunction(self.domain, self.smooth_part, self.cantor_part, policy)

    # -- mollification ------------------------------------------------------
    def mollify(self, eps, x, tol=1e-10):
        """(u * kernel_eps)(x) by quadrature."""
        eps = float(eps)
        x = float(x)
        a, b = self.domain.a, self.domain.b
        if eps <= 0.0:
            raise DomainError("mollification width must be positive")
        if not (a + eps < x < b - eps):
            raise DomainError(f"mollified evaluation needs x in ]{a + eps}, {b - eps}[")

        def integrand(ys):
            ys = np.asarray(ys, dtype=float)
            return self.values(ys) * kernel((x - ys) / eps) / eps

        return integrate_interval(
            integrand,
            x - eps,
            x + eps,
            tol=tol,
            breakpoints=self.breakpoints(),
            cantor_supports=self.cantor_supports(),
        )


@dataclass(frozen=True)
class BVVector:
    """A vector of BV functions sharing one domain."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DomainError("need at least one component")
        d0 = comps[0].domain
        for u in comps[1:]:
            if (u.domain.a, u.domain.b) != (d0.a, d0.b):
                raise DomainError("components must share the domain")
        object.__setattr__(self, "components", comps)

    @property
    def domain(self):
        return self.components[0].domain

    @property
    def dim(self):
        return len(self.components)

    def jump_set(self):
        pts = set()
        for u in self.components:
            pts.update(u.jump_set())
        return tuple(sorted(pts))

    def breakpoints(self):
        pts = set()
        for u in self.components:
            pts.update(u.breakpoints())
        return tuple(sorted(pts))

    def cantor_supports(self):
        sups = []
        for u in self.components:
            sups.extend(u.cantor_supports())
        return tuple(sups)

    def values(self, xs):
        """Array of shape (dim, len(xs))."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        return np.stack([u.values(xs) for u in self.components])

    def star_values(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        return np.stack([u.star_values(xs) for u in self.components])

    def left(self, x):
        return np.array([u.eval(x, "left") for u in self.components])

    def right(self, x):
        return np.array([u.eval(x, "right") for u in self.components])

    def star(self, x):
        return np.array([u.eval(x, "precise") for u in self.components])

    def total_variation(self):
        """Vector TV: integral of the euclidean norm is bounded by the sum;
        this returns the (exactly computable) sum of component TVs."""
        return float(sum(u.total_variation() for u in self.components))


@dataclass(frozen=True)
class TestFunction:
    """C^1 test function supported strictly inside the ambient interval."""

    support: Interval
    value: object
    deriv: object
    label: str = field(default="", compare=False)

    def __call__(self, xs):
        return _apply(self.value, np.asarray(xs, dtype=float))

    def prime(self, xs):
        return _apply(self.deriv, np.asarray(xs, dtype=float))

    @staticmethod
    def poly_bump(support, coeffs=(1.0,), label=""):
        """phi(x) = (1-t^2)^2 * q(t) with t the [-1,1] coordinate of
        ``support`` and q the polynomial with the given coefficients.

        The quartic factor makes phi C^1 with phi and phi' vanishing at the
        support edges, for any q."""
        sup = support if isinstance(support, Interval) else Interval(*support)
        c = 0.5 * (sup.a + sup.b)
        h = 0.5 * (sup.b - sup.a)
        # p(t) = (1 - t^2)^2 q(t), ascending coefficients
        quart = np.array([1.0, 0.0, -2.0, 0.0, 1.0])
        p = np.convolve(quart, np.asarray(coeffs, dtype=float))
        dp = npoly.polyder(p)

        def value(xs):
            xs = np.asarray(xs, dtype=float)
            t = (xs - c) / h
            out = npoly.polyval(t, p)
            return np.where(np.abs(t) < 1.0, out, 0.0)

        def deriv(xs):
            xs = np.asarray(xs, dtype=float)
            t = (xs - c) / h
            out = npoly.polyval(t, dp) / h
            return np.where(np.abs(t) < 1.0, out, 0.0)

        return TestFunction(sup, value, deriv, label=label or f"bump{list(coeffs)}")

    @staticmethod
    def bump(support, amplitude=1.0, label=""):
        return TestFunction.poly_bump(support, (float(amplitude),), label=label)


# -- weak identities ---------------------------------------------------------


def integration_by_parts_residual(u, phi, tol=1e-9):
    """integral of u phi' dx plus integral of phi dDu; zero in exact arithmetic."""
    sup = phi.support

    def integrand(xs):
        return u.values(xs) * phi.prime(xs)

    part1 = integrate_interval(
        integrand,
        max(sup.a, u.domain.a),
        min(sup.b, u.domain.b),
        tol=tol,
        breakpoints=u.breakpoints(),
        cantor_supports=u.cantor_supports(),
    )
    part2 = integrate_measure(
        phi, u.derivative(), tol=tol, breakpoints=(sup.a, sup.b)
    )
    return float(part1 + part2)


def leibniz_product(v, w, tol=1e-9):
    """The derivative measure of the product, D(vw) = v* Dw + w* Dv.

    Pieces: a.c. densities combine by the product rule (with modulated
    pp-times-Cantor-function densities when one factor has Cantor summands);
    each jump atom at x weighs v*(x)[w] + w*(x)[v]; Cantor coefficients pick
    up the other factor's continuous value as a weight density."""
    if (v.domain.a, v.domain.b) != (w.domain.a, w.domain.b):
        raise DomainError("factors must share the domain")
    v_bases = {b for b, _ in v.cantor_part}
    w_bases = {b for b, _ in w.cantor_part}
    if v_bases & w_bases:
        raise RepresentationError(
            "product of two Cantor summands on the same base is outside the class"
        )
    dom = v.domain

    def star_side(f, other):
        """Assemble f* times D(other) part by part."""
        d_other = other.derivative()
        # a.c.: f_pp * other_pp'  +  sum f-cantor-coef * C_base * other_pp'
        dens = d_other.ac
        ac = f.smooth_part.multiply(dens)
        modulated = tuple(
            ModulatedDensity(dens.scale(coef), base)
            for base, coef in f.cantor_part
            if not dens.is_zero()
        )
        # atoms: weight f*(x) [other]
        atoms = tuple((x, f.eval(x, "precise") * (r - l)) for x, l, r in other.jumps())
        # Cantor: coefficient scaled by the weight density f* on the support
        terms = tuple(
            CantorTerm(
                t.base,
                t.coefficient,
                weight=f.star_values,
                weight_breakpoints=f.breakpoints(),
            )
            for t in d_other.cantor_terms
        )
        return RadonMeasure(dom, ac, atoms, terms, modulated)

    return star_side(v, w) + star_side(w, v)


def leibniz_weak_residual(v, w, phi, tol=1e-9, product_measure=None):
    """integral of phi dD(vw) plus integral of phi' v w dx; zero exactly."""
    m = leibniz_product(v, w, tol=tol) if product_measure is None else product_measure
    sup = phi.support
    bps = tuple(sorted(set(v.breakpoints()) | set(w.breakpoints())))
    sups = tuple(set(v.cantor_supports()) | set(w.cantor_supports()))
    part1 = integrate_measure(
        phi, m, tol=tol, breakpoints=(sup.a, sup.b) + bps, cantor_supports=sups
    )

    def integrand(xs):
        return phi.prime(xs) * v.values(xs) * w.values(xs)

    part2 = integrate_interval(
        integrand,
        max(sup.a, v.domain.a),
        min(sup.b, v.domain.b),
        tol=tol,
        breakpoints=bps,
        cantor_supports=sups,
    )
    return float(part1 + part2)


# -- coarea ------------------------------------------------------------------


def _monotone_pieces(u):
    """Split the domain into maximal pieces on which u is monotone.

    Returns a list of (x0, x1, v0, v1, base_or_None, coef) with v0 = u(x0+),
    v1 = u(x1-).  Raises RepresentationError when monotonicity cannot be
    certified (a.c. slope fighting a Cantor summand on its support)."""
    cuts = {u.domain.a, u.domain.b}
    cuts.update(u.breakpoints())
    for a, b in u.cantor_supports():
        cuts.update((a, b))
    pp = u.smooth_part
    dpp = pp.derivative()
    for i, coeffs in enumerate(dpp.pieces):
        a, b = dpp.breakpoints[i], dpp.breakpoints[i + 1]
        for r in _poly_real_roots(coeffs, 0.0, b - a):
            cuts.add(a + r)
    cuts = sorted(cuts)
    pieces = []
    for x0, x1 in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (x0 + x1)
        slope = dpp(np.array([mid]))[0]
        s = 0.0 if slope == 0.0 else (1.0 if slope > 0 else -1.0)
        base = None
        coef = 0.0
        for bb, cc in u.cantor_part:
            if bb.support.a <= x0 and x1 <= bb.support.b:
                base, coef = bb, cc
        if base is not None and coef != 0.0:
            cs = 1.0 if coef > 0 else -1.0
            if s == 0.0:
                s = cs
            elif s != cs:
                raise RepresentationError(
                    "cannot certify monotonicity: slope sign conflicts with a "
                    "Cantor summand on its support (level sets may be infinite)"
                )
        v0 = u.eval(x0, "right")
        v1 = u.eval(x1, "left")
        pieces.append((x0, x1, v0, v1, base, coef))
    return pieces


def coarea_default_tgrid(u, x_cuts=()):
    """Level-grid whose cells separate all critical and one-sided values.

    ``x_cuts`` marks x-points where the weight is discontinuous: the levels
    at which a located point sweeps past such a point are critical too."""
    vals = set()
    for x0, x1, v0, v1, _, _ in _monotone_pieces(u):
        vals.update((v0, v1))
    for _, l, r in u.jumps():
        vals.update((l, r))
    for x in x_cuts:
        if u.domain.a < x < u.domain.b:
            vals.update((u.eval(x, "left"), u.eval(x, "right")))
    return tuple(sorted(vals))


def coarea_lhs(g, u, tol=1e-9, g_breakpoints=()):
    """integral of g against the total-variation measure |Du|."""
    return integrate_measure(
        g, u.derivative().tv_measure(), tol=tol, breakpoints=g_breakpoints
    )


def coarea_rhs(g, u, t_grid=None, tol=1e-9, g_breakpoints=()):
    """Level-counting side: integral over levels t of the sum of g over
    { x : the segment [u(x-), u(x+)] contains t }.

    Monotone pieces contribute one located point per level (found by
    bisection); jump points contribute wherever t lies between the one-sided
    values; flat pieces are skipped (a null set of levels)."""
    pieces = [p for p in _monotone_pieces(u) if p[2] != p[3]]
    jumps = u.jumps()
    if t_grid is None:
        t_grid = coarea_default_tgrid(u, g_breakpoints)
    t_grid = sorted(float(t) for t in t_grid)
    if len(t_grid) < 2:
        return 0.0

    def located_sum(ts):
        ts = np.asarray(ts, dtype=float)
        out = np.zeros_like(ts)
        for x0, x1, v0, v1, _, _ in pieces:
            lo, hi = (v0, v1) if v0 < v1 else (v1, v0)
            mask = (ts > lo) & (ts < hi)
            if not mask.any():
                continue
            tm = ts[mask]
            # vectorized bisection for the monotone inverse
            a = np.full_like(tm, x0)
            b = np.full_like(tm, x1)
            up = v1 > v0
            for _ in range(80):
                m = 0.5 * (a + b)
                vm = u.values(m)
                take_left = (vm >= tm) if up else (vm <= tm)
                b = np.where(take_left, m, b)
                a = np.where(take_left, a, m)
            xs = 0.5 * (a + b)
            out[mask] += _apply(g, xs)
        for xj, l, r in jumps:
            lo, hi = (l, r) if l < r else (r, l)
            mask = (ts >= lo) & (ts <= hi)
            if mask.any():
                out[mask] += _scalar_call(g, xj)
        return out

    span = t_grid[-1] - t_grid[0]
    total = 0.0
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        if t1 - t0 < 1e-15:
            continue
        total += integrate_interval(located_sum, t0, t1, tol=tol * (t1 - t0) / span)
    return float(total)
