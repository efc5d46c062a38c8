"""Chain rule for compositions v(x) = B(x, u(x)) with BV flux and BV state.

The flux class is the finite sum B(x,w) = sum_k K_k(x) f_k(w) with each K_k
a closed-form BV function of x and each f_k a C^1 function of w.  This class
satisfies constructively all the structural hypotheses the identity needs:
a finite exceptional set (the union of the K jump sets), a modulus measure
built from Lipschitz bounds, a reference Cantor measure assembled from the
K dictionary, and per-base density ratios for the singular x-part.  Every
term of the identity, its starred rewriting, the weighted variant, the two
special-form variants, and the piecewise-constant comparison identity are
evaluated by quadrature aware of all breakpoints and Cantor supports.

Sign convention: the five terms are stored in positive form (the plain
integrals/sums, without the leading minus signs of the identity), so the
verified statement reads lhs + sum(terms) = 0, with
lhs = integral of phi'(x) B(x, u(x)) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cantor
from .bvfunction import BVFunction, BVVector
from .errors import DomainError
from .measures import CantorTerm, RadonMeasure
from .quadrature import integrate_interval

_GRID_LIP_MARGIN = 1.05


def _cantor_depth(tol):
    """Subdivision depth for the singular integrals.  The cell-midpoint rule
    gains a square factor from the reflection symmetry of each level cell,
    so the depth scales with log tol to base 9 rather than base 3."""
    return int(min(max(math.ceil(math.log(4.0 / tol) / math.log(9.0)), 10), 17))


def _phi_at(phi, x):
    return float(np.asarray(phi(np.array([float(x)])))[0])


def _box_grid(lo, hi, grid):
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    axes = [np.linspace(lo[i], hi[i], grid) for i in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh])


@dataclass(frozen=True)
class SmoothFunction:
    """C^1 function of the state vector with closed-form gradient.

    ``value`` maps an array of shape (d,) or (d, N) to a scalar / (N,);
    ``grad`` maps the same inputs to (d,) / (d, N).  ``lip`` optionally
    supplies an explicit Lipschitz bound over a box (callable of the two
    corner vectors); without it a dense-grid gradient bound with a safety
    margin is used."""

    value: object
    grad: object
    lip: object = None
    label: str = field(default="", compare=False)

    def __call__(self, w):
        return self.value(np.asarray(w, dtype=float))

    def gradient(self, w):
        return np.asarray(self.grad(np.asarray(w, dtype=float)), dtype=float)

    def lipschitz_bound(self, lo, hi, grid=33):
        """Upper bound for |grad f| over the box [lo_i, hi_i]."""
        if self.lip is not None:
            return float(self.lip(np.atleast_1d(lo), np.atleast_1d(hi)))
        pts = _box_grid(lo, hi, grid)
        g = self.gradient(pts)
        norms = np.sqrt(np.sum(np.asarray(g) ** 2, axis=0))
        return float(norms.max() * _GRID_LIP_MARGIN)

    def sup_bound(self, lo, hi, grid=33):
        """Upper bound for |f| over the box."""
        pts = _box_grid(lo, hi, grid)
        return float(np.abs(np.asarray(self.value(pts))).max() * _GRID_LIP_MARGIN)

    def check_gradient(self, probes, step=1e-6, rtol=1e-5):
        """Finite-difference consistency of the gradient handle at the probe
        points; returns (ok, worst relative error)."""
        worst = 0.0
        for w in probes:
            w = np.asarray(w, dtype=float)
            g = self.gradient(w)
            for i in range(len(w)):
                e = np.zeros_like(w)
                e[i] = step
                fd = (float(self.value(w + e)) - float(self.value(w - e))) / (2 * step)
                scale = max(1.0, abs(fd), abs(float(g[i])))
                worst = max(worst, abs(fd - float(g[i])) / scale)
        return worst <= rtol, worst

    # -- common factories ---------------------------------------------------
    @staticmethod
    def poly1d(coeffs, label=""):
        """Univariate polynomial of w[0], with a dense-sampled derivative
        bound as the Lipschitz constant (d = 1)."""
        c = np.asarray(coeffs, dtype=float)
        dc = np.polynomial.polynomial.polyder(c) if len(c) > 1 else np.zeros(1)

        def value(w):
            return np.polynomial.polynomial.polyval(np.asarray(w)[0], c)

        def grad(w):
            w0 = np.asarray(w, dtype=float)[0]
            return np.polynomial.polynomial.polyval(w0, dc)[None, ...]

        def lip(lo, hi):
            ts = np.linspace(lo[0], hi[0], 257)
            vals = np.abs(np.polynomial.polynomial.polyval(ts, dc))
            return float(vals.max()) * _GRID_LIP_MARGIN

        return SmoothFunction(value, grad, lip, label or "poly")

    @staticmethod
    def coordinate(i, label=""):
        """f(w) = w_i."""

        def value(w):
            return np.asarray(w, dtype=float)[i]

        def grad(w):
            w = np.asarray(w, dtype=float)
            g = np.zeros_like(w)
            g[i] = 1.0
            return g

        return SmoothFunction(value, grad, lambda lo, hi: 1.0, label or f"w[{i}]")

    @staticmethod
    def constant_one(label="one"):
        """f(w) = 1 (turns a flux term into pure x-dependence)."""

        def value(w):
            w = np.asarray(w, dtype=float)
            return np.ones(w.shape[1:]) if w.ndim > 1 else 1.0

        def grad(w):
            return np.zeros_like(np.asarray(w, dtype=float))

        return SmoothFunction(value, grad, lambda lo, hi: 0.0, label)


@dataclass(frozen=True)
class FluxModel:
    """B(x, w) = sum_k K_k(x) f_k(w) on a shared domain; d = ``dim``."""

    terms: tuple  # of (BVFunction, SmoothFunction)
    dim: int = 1

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise DomainError("flux model needs at least one term")
        d0 = terms[0][0].domain
        for K, _ in terms[1:]:
            if (K.domain.a, K.domain.b) != (d0.a, d0.b):
                raise DomainError("flux terms must share the domain")
        object.__setattr__(self, "terms", terms)
        self.reference_cantor()  # validates identical-or-disjoint supports

    @property
    def domain(self):
        return self.terms[0][0].domain

    # -- structure ----------------------------------------------------------
    def exceptional_set(self):
        """The finite exceptional x-set: union of the K jump sets."""
        pts = set()
        for K, _ in self.terms:
            pts.update(K.jump_set())
        return tuple(sorted(pts))

    def breakpoints(self):
        pts = set()
        for K, _ in self.terms:
            pts.update(K.breakpoints())
        return tuple(sorted(pts))

    def cantor_supports(self):
        sups = set()
        for K, _ in self.terms:
            sups.update(K.cantor_supports())
        return tuple(sorted(sups))

    def cantor_dictionary(self):
        """{base: [(term index, coefficient)]} over all K Cantor summands."""
        out = {}
        for k, (K, _) in enumerate(self.terms):
            for base, coef in K.cantor_part:
                out.setdefault(base, []).append((k, coef))
        return out

    def reference_cantor(self):
        """Reference singular measure: per base, coefficient sum_k |c_k|;
        None when no K carries a Cantor part (the singular term is vacuous)."""
        dic = self.cantor_dictionary()
        if not dic:
            return None
        terms = tuple(
            CantorTerm(base, sum(abs(c) for _, c in pairs))
            for base, pairs in sorted(dic.items(), key=lambda kv: kv[0].support.a)
        )
        return RadonMeasure(self.domain, None, (), terms)

    def singular_ratio(self, base, w):
        """Density of the singular x-derivative of B(., w) against the
        reference measure on one base (a number: constant in x)."""
        pairs = self.cantor_dictionary().get(base)
        if not pairs:
            return 0.0
        lam = sum(abs(c) for _, c in pairs)
        num = sum(
            c * float(np.asarray(self.terms[k][1](np.asarray(w, dtype=float))))
            for k, c in pairs
        )
        return num / lam

    # -- evaluation ---------------------------------------------------------
    def value_on_grid(self, xs, W):
        """B(xs_i, W[:, i]) vectorized; W has shape (dim, len(xs))."""
        xs = np.asarray(xs, dtype=float)
        out = np.zeros(xs.shape)
        for K, f in self.terms:
            out += K.values(xs) * np.asarray(f(W))
        return out

    def eval(self, x, w, side="precise"):
        """Pointwise flux value, one-sided in x, at a fixed state w."""
        w = np.asarray(w, dtype=float)
        return float(
            sum(K.eval(x, side) * float(np.asarray(f(w))) for K, f in self.terms)
        )

    def x_measure(self, w):
        """The x-derivative measure of B(., w) at a frozen state."""
        w = np.asarray(w, dtype=float)
        out = None
        for K, f in self.terms:
            m = K.derivative().scale(float(np.asarray(f(w))))
            out = m if out is None else out + m
        return out

    def grad_x_on_grid(self, xs, W):
        """a.e. x-gradient at (xs_i, W[:, i])."""
        xs = np.asarray(xs, dtype=float)
        out = np.zeros(xs.shape)
        for K, f in self.terms:
            out += K.smooth_part.derivative()(xs) * np.asarray(f(W))
        return out

    def grad_w_on_grid(self, xs, W):
        """State gradient at (xs_i, W[:, i]); shape (dim, len(xs))."""
        xs = np.asarray(xs, dtype=float)
        out = np.zeros((self.dim,) + xs.shape)
        for K, f in self.terms:
            out += K.values(xs)[None, :] * np.asarray(f.grad(W))
        return out

    def modulus_measure(self, lo, hi):
        """Constructed state-modulus measure sum_k Lip_k |DK_k|, with the
        Lipschitz bounds taken over the state box [lo, hi]."""
        out = None
        for K, f in self.terms:
            m = K.derivative().tv_measure().scale(f.lipschitz_bound(lo, hi))
            out = m if out is None else out + m
        return out

    def variation_bound(self, lo, hi):
        """Uniform bound for the total variation of B(., w) over states w
        in the box [lo, hi]."""
        return float(
            sum(f.sup_bound(lo, hi) * K.total_variation() for K, f in self.terms)
        )


def flux_eval(B, x, w, side="precise"):
    return B.eval(x, w, side)


def flux_derivatives(B, x, w):
    """Pointwise (x-gradient, state gradient, singular ratio per base) at
    (x, w); x must avoid the exceptional set."""
    x = float(x)
    if x in set(B.exceptional_set()):
        raise DomainError("pointwise x-derivative undefined on the exceptional set")
    w = np.asarray(w, dtype=float)
    xs = np.array([x])
    W = w[:, None]
    gx = float(B.grad_x_on_grid(xs, W)[0])
    gw = B.grad_w_on_grid(xs, W)[:, 0]
    psi = {base: B.singular_ratio(base, w) for base in B.cantor_dictionary()}
    return gx, gw, psi


@dataclass(frozen=True)
class ChainRuleReport:
    """Term-by-term evaluation, positive-form storage:
    residual = lhs + sum(terms).  ``singular_vacuous`` records that the
    flux carries no Cantor part, so the reference measure was omitted and
    the second slot is identically zero rather than a computed integral."""

    lhs: float
    terms: tuple  # (grad_x, singular_x, grad_u, cantor_u, jump_sum)
    singular_vacuous: bool = False

    @property
    def residual(self):
        return self.lhs + float(sum(self.terms))

    @property
    def total(self):
        return float(sum(self.terms))

    def __iter__(self):
        return iter(self.terms)


def _as_vector(u):
    return BVVector((u,)) if isinstance(u, BVFunction) else u


def _all_breakpoints(B, u, extra=()):
    return tuple(sorted(set(B.breakpoints()) | set(u.breakpoints()) | set(extra)))


def _all_supports(B, u, extra=()):
    return tuple(
        sorted(set(B.cantor_supports()) | set(u.cantor_supports()) | set(extra))
    )


def _window(B, phi):
    return max(phi.support.a, B.domain.a), min(phi.support.b, B.domain.b)


def chainrule_lhs(B, u, phi, tol=1e-8):
    """integral of phi'(x) B(x, u(x)) dx, subdivided at every discontinuity
    and Cantor support (representatives never matter off null sets here)."""
    u = _as_vector(u)
    lo, hi = _window(B, phi)

    def integrand(xs):
        xs = np.asarray(xs, dtype=float)
        return phi.prime(xs) * B.value_on_grid(xs, u.values(xs))

    return integrate_interval(
        integrand, lo, hi, tol=tol,
        breakpoints=_all_breakpoints(B, u),
        cantor_supports=_all_supports(B, u),
    )


def _jump_bracket(B, u, x):
    """B(x+, u(x+)) - B(x-, u(x-))."""
    return B.eval(x, u.right(x), "right") - B.eval(x, u.left(x), "left")


def _singular_x_term(B, u, weight, bps, depth):
    """Per base: integral of weight(x) sum_k c_k f_k(u(x)) against the
    base's Cantor measure (the reference-measure pairing with the density
    ratio folded back in)."""
    total = 0.0
    for base, pairs in B.cantor_dictionary().items():
        sup = base.support

        def integrand(ts, base=base, pairs=pairs):
            xs = base.from_std(np.asarray(ts))
            W = u.values(xs)
            return weight(xs) * sum(
                c * np.asarray(B.terms[k][1](W)) for k, c in pairs
            )

        std_bps = [float(base.to_std(p)) for p in bps if sup.a < p < sup.b]
        total += cantor.integrate_cantor_std(integrand, depth, std_bps)
    return total


def _cantor_u_term(B, u, weight, bps, depth):
    """Weighted pairing of the state gradient against the Cantor parts of
    the state components."""
    total = 0.0
    for i, comp in enumerate(u.components):
        for base, coef in comp.cantor_part:
            sup = base.support

            def integrand(ts, base=base, i=i):
                xs = base.from_std(np.asarray(ts))
                return weight(xs) * B.grad_w_on_grid(xs, u.values(xs))[i]

            std_bps = [float(base.to_std(p)) for p in bps if sup.a < p < sup.b]
            total += coef * cantor.integrate_cantor_std(integrand, depth, std_bps)
    return total


def chainrule_terms(B, u, phi, tol=1e-8):
    """The five terms of the identity (positive form) plus the lhs."""
    u = _as_vector(u)
    if (u.domain.a, u.domain.b) != (B.domain.a, B.domain.b):
        raise DomainError("state and flux must share the domain")
    bps = _all_breakpoints(B, u, (phi.support.a, phi.support.b))
    sups = _all_supports(B, u)
    lo, hi = _window(B, phi)
    depth = _cantor_depth(tol)
    lhs = chainrule_lhs(B, u, phi, tol=tol)

    def t1_integrand(xs):
        xs = np.asarray(xs, dtype=float)
        return phi(xs) * B.grad_x_on_grid(xs, u.values(xs))

    t1 = integrate_interval(
        t1_integrand, lo, hi, tol=tol, breakpoints=bps, cantor_supports=sups
    )

    t2 = _singular_x_term(B, u, phi, bps, depth)

    dpps = [c.smooth_part.derivative() for c in u.components]

    def t3_integrand(xs):
        xs = np.asarray(xs, dtype=float)
        gw = B.grad_w_on_grid(xs, u.values(xs))
        out = np.zeros_like(xs)
        for i, dpp in enumerate(dpps):
            out += gw[i] * dpp(xs)
        return phi(xs) * out

    t3 = integrate_interval(
        t3_integrand, lo, hi, tol=tol, breakpoints=bps, cantor_supports=sups
    )

    t4 = _cantor_u_term(B, u, phi, bps, depth)

    t5 = 0.0
    for x in sorted(set(B.exceptional_set()) | set(u.jump_set())):
        if lo < x < hi:
            t5 += _phi_at(phi, x) * _jump_bracket(B, u, x)

    return ChainRuleReport(
        lhs,
        (float(t1), float(t2), float(t3), float(t4), float(t5)),
        singular_vacuous=not B.cantor_dictionary(),
    )


def verify_chainrule(B, u, phi, tol=1e-8):
    """|lhs + sum of terms| for the given case."""
    return abs(chainrule_terms(B, u, phi, tol=tol).residual)


def chainrule_star_form(B, u, phi, tol=1e-8):
    """Total of the starred rewriting: diffuse terms unchanged, the jump sum
    split into an exceptional-set sum of state-averaged sided differences
    and a state-jump sum of precise-representative flux differences.  A
    point in both sets contributes to both sums."""
    u = _as_vector(u)
    rep = chainrule_terms(B, u, phi, tol=tol)
    t1, t2, t3, t4, _ = rep.terms
    lo, hi = _window(B, phi)

    s_exc = 0.0
    for x in B.exceptional_set():
        if not lo < x < hi:
            continue
        up, um = u.right(x), u.left(x)
        plus = 0.5 * (B.eval(x, up, "right") + B.eval(x, um, "right"))
        minus = 0.5 * (B.eval(x, up, "left") + B.eval(x, um, "left"))
        s_exc += _phi_at(phi, x) * (plus - minus)

    s_jump = 0.0
    for x in u.jump_set():
        if not lo < x < hi:
            continue
        up, um = u.right(x), u.left(x)
        star_p = 0.5 * (B.eval(x, up, "right") + B.eval(x, up, "left"))
        star_m = 0.5 * (B.eval(x, um, "right") + B.eval(x, um, "left"))
        s_jump += _phi_at(phi, x) * (star_p - star_m)

    return float(t1 + t2 + t3 + t4 + s_exc + s_jump)


def _five_terms_weighted(B, u, phi, w_diffuse, w_atom, tol, bps, sups, depth):
    """Sum of the five identity terms with an extra scalar weight: the
    diffuse terms see ``w_diffuse`` (vectorized; only its a.e. class
    matters), the jump sum sees ``w_atom`` (pointwise)."""
    lo, hi = _window(B, phi)

    def wphi(xs):
        xs = np.asarray(xs, dtype=float)
        return phi(xs) * w_diffuse(xs)

    dpps = [c.smooth_part.derivative() for c in u.components]

    def diffuse_density(xs):
        xs = np.asarray(xs, dtype=float)
        W = u.values(xs)
        out = B.grad_x_on_grid(xs, W)
        gw = B.grad_w_on_grid(xs, W)
        for i, dpp in enumerate(dpps):
            out += gw[i] * dpp(xs)
        return wphi(xs) * out

    ac = integrate_interval(
        diffuse_density, lo, hi, tol=tol, breakpoints=bps, cantor_supports=sups
    )
    sing = _singular_x_term(B, u, wphi, bps, depth)
    sing += _cantor_u_term(B, u, wphi, bps, depth)
    jump = 0.0
    for x in sorted(set(B.exceptional_set()) | set(u.jump_set())):
        if lo < x < hi:
            jump += _phi_at(phi, x) * w_atom(x) * _jump_bracket(B, u, x)
    return float(ac + sing + jump)


def weighted_chainrule(B, u, g, phi, tol=1e-8):
    """Weighted variant: the derivative measure of x -> B(x, u(x)) is
    paired against phi g*, with the weight's jumps confined to the
    exceptional set.  Returns (pairing assembled with the weight's precise
    representative throughout, sum of the five g-weighted terms)."""
    u = _as_vector(u)
    if not set(g.jump_set()) <= set(B.exceptional_set()):
        raise DomainError("weight jumps must lie inside the flux exceptional set")
    bps = _all_breakpoints(
        B, u, tuple(g.breakpoints()) + (phi.support.a, phi.support.b)
    )
    sups = _all_supports(B, u, g.cantor_supports())
    depth = _cantor_depth(tol)

    def g_star(x):
        return g.eval(x, "precise")

    lhs_pairing = _five_terms_weighted(
        B, u, phi, g.star_values, g_star, tol, bps, sups, depth
    )
    rhs_total = _five_terms_weighted(
        B, u, phi, g.values, g_star, tol, bps, sups, depth
    )
    return lhs_pairing, rhs_total


def product_flux_terms(K, f, u, phi, tol=1e-8):
    """Product-form flux K(x) f(u): the state-composition's precise
    representative paired against DK, plus the two gradient terms with the
    K factor, plus the K-starred state-jump sum.  Reported in the standard
    five slots: (ac of the DK pairing, Cantor of the DK pairing, state
    gradient dx, state Cantor, atoms of the DK pairing + state jumps)."""
    u = _as_vector(u)
    B = FluxModel(((K, f),), dim=u.dim)
    bps = _all_breakpoints(B, u, (phi.support.a, phi.support.b))
    sups = _all_supports(B, u)
    lo, hi = _window(B, phi)
    depth = _cantor_depth(tol)
    lhs = chainrule_lhs(B, u, phi, tol=tol)
    dpp = K.smooth_part.derivative()

    def ac_int(xs):
        xs = np.asarray(xs, dtype=float)
        return phi(xs) * np.asarray(f(u.values(xs))) * dpp(xs)

    t1 = integrate_interval(
        ac_int, lo, hi, tol=tol, breakpoints=bps, cantor_supports=sups
    )

    t2 = 0.0
    for base, coef in K.cantor_part:
        sup = base.support

        def c_int(ts, base=base):
            xs = base.from_std(np.asarray(ts))
            return phi(xs) * np.asarray(f(u.values(xs)))

        std_bps = [float(base.to_std(p)) for p in bps if sup.a < p < sup.b]
        t2 += coef * cantor.integrate_cantor_std(c_int, depth, std_bps)

    def t3_int(xs):
        xs = np.asarray(xs, dtype=float)
        gf = np.asarray(f.grad(u.values(xs)))
        out = np.zeros_like(xs)
        for i, comp in enumerate(u.components):
            out += gf[i] * comp.smooth_part.derivative()(xs)
        return phi(xs) * K.values(xs) * out

    t3 = integrate_interval(
        t3_int, lo, hi, tol=tol, breakpoints=bps, cantor_supports=sups
    )

    t4 = 0.0
    for i, comp in enumerate(u.components):
        for base, coef in comp.cantor_part:
            sup = base.support

            def c4_int(ts, base=base, i=i):
                xs = base.from_std(np.asarray(ts))
                return phi(xs) * K.values(xs) * np.asarray(f.grad(u.values(xs)))[i]

            std_bps = [float(base.to_std(p)) for p in bps if sup.a < p < sup.b]
            t4 += coef * cantor.integrate_cantor_std(c4_int, depth, std_bps)

    t5 = 0.0
    for x, l, r in K.jumps():
        if lo < x < hi:
            fstar = 0.5 * (
                float(np.asarray(f(u.right(x)))) + float(np.asarray(f(u.left(x))))
            )
            t5 += _phi_at(phi, x) * fstar * (r - l)
    for x in u.jump_set():
        if lo < x < hi:
            kstar = 0.5 * (K.eval(x, "right") + K.eval(x, "left"))
            bracket = float(np.asarray(f(u.right(x)))) - float(np.asarray(f(u.left(x))))
            t5 += _phi_at(phi, x) * kstar * bracket

    return ChainRuleReport(
        lhs,
        (float(t1), float(t2), float(t3), float(t4), float(t5)),
        singular_vacuous=not K.cantor_part,
    )


def composite_flux_terms(f2, K, u, phi, tol=1e-8):
    """Composite flux B(x, w) = f2(K(x), w): total of the identity in
    positive form.  The first-slot derivative of f2 pairs against the
    diffuse part of DK, the state derivatives against the diffuse part of
    Du, and both jump sets contribute plain one-sided composition brackets.

    ``f2`` is a SmoothFunction whose state vector stacks (y, w)."""
    u = _as_vector(u)
    if (u.domain.a, u.domain.b) != (K.domain.a, K.domain.b):
        raise DomainError("state and flux must share the domain")
    bps = tuple(sorted(
        set(K.breakpoints()) | set(u.breakpoints())
        | {phi.support.a, phi.support.b}
    ))
    sups = tuple(sorted(set(K.cantor_supports()) | set(u.cantor_supports())))
    lo = max(phi.support.a, K.domain.a)
    hi = min(phi.support.b, K.domain.b)
    depth = _cantor_depth(tol)

    def stacked(xs):
        xs = np.asarray(xs, dtype=float)
        return np.vstack([K.values(xs)[None, :], u.values(xs)])

    dppK = K.smooth_part.derivative()

    def fy_int(xs):
        xs = np.asarray(xs, dtype=float)
        return phi(xs) * np.asarray(f2.grad(stacked(xs)))[0] * dppK(xs)

    total = integrate_interval(
        fy_int, lo, hi, tol=tol, breakpoints=bps, cantor_supports=sups
    )
    for base, coef in K.cantor_part:
        sup = base.support

        def cy_int(ts, base=base):
            xs = base.from_std(np.asarray(ts))
            return phi(xs) * np.asarray(f2.grad(stacked(xs)))[0]

        std_bps = [float(base.to_std(p)) for p in bps if sup.a < p < sup.b]
        total += coef * cantor.integrate_cantor_std(cy_int, depth, std_bps)

    def fw_int(xs):
        xs = np.asarray(xs, dtype=float)
        gw = np.asarray(f2.grad(stacked(xs)))[1:]
        out = np.zeros_like(xs)
        for i, comp in enumerate(u.components):
            out += gw[i] * comp.smooth_part.derivative()(xs)
        return phi(xs) * out

    total += integrate_interval(
        fw_int, lo, hi, tol=tol, breakpoints=bps, cantor_supports=sups
    )
    for i, comp in enumerate(u.components):
        for base, coef in comp.cantor_part:
            sup = base.support

            def cw_int(ts, base=base, i=i):
                xs = base.from_std(np.asarray(ts))
                return phi(xs) * np.asarray(f2.grad(stacked(xs)))[1 + i]

            std_bps = [float(base.to_std(p)) for p in bps if sup.a < p < sup.b]
            total += coef * cantor.integrate_cantor_std(cw_int, depth, std_bps)

    for x in sorted(set(K.jump_set()) | set(u.jump_set())):
        if lo < x < hi:
            vp = float(np.asarray(f2(np.concatenate(([K.eval(x, "right")], u.right(x))))))
            vm = float(np.asarray(f2(np.concatenate(([K.eval(x, "left")], u.left(x))))))
            total += _phi_at(phi, x) * (vp - vm)
    return float(total)


def composite_flux_lhs(f2, K, u, phi, tol=1e-8):
    """integral of phi'(x) f2(K(x), u(x)) dx by handle-based quadrature (the
    composition leaves the closed-form class; the integral does not care)."""
    u = _as_vector(u)
    bps = tuple(sorted(set(K.breakpoints()) | set(u.breakpoints())))
    sups = tuple(sorted(set(K.cantor_supports()) | set(u.cantor_supports())))

    def integrand(xs):
        xs = np.asarray(xs, dtype=float)
        stacked = np.vstack([K.values(xs)[None, :], u.values(xs)])
        return phi.prime(xs) * np.asarray(f2(stacked))

    return integrate_interval(
        integrand,
        max(phi.support.a, K.domain.a),
        min(phi.support.b, K.domain.b),
        tol=tol, breakpoints=bps, cantor_supports=sups,
    )


def _pwc_data(u):
    """(partition points, per-cell values) from a PiecewiseConstant or a
    raw (partition, values) pair."""
    if hasattr(u, "partition") and hasattr(u, "values"):
        return list(u.partition), list(u.values)
    partition, values = u
    return list(partition), list(values)


def pwc_direct_assembly(B, u, phi, tol=1e-8):
    """Independent re-assembly of the composition's x-derivative pairing for
    a piecewise-constant state: per-cell restricted diffuse pairings at the
    frozen cell state, plus interface brackets with state-averaged sided
    flux values, plus exceptional points that fall strictly inside cells.

    Relation to the standard report: terms 1 + 2 + 5 equal this value plus
    the state-jump sum of precise-representative flux differences
    sum over J_u of phi(x) [B*(x, u(x+)) - B*(x, u(x-))]; the extra sum
    vanishes when every state jump sits where B* is state-independent (for
    instance at zero-average flux jumps), and for constant states."""
    partition, values = _pwc_data(u)
    pts = [float(p) for p in partition]
    vals = [np.atleast_1d(np.asarray(v, dtype=float)) for v in values]
    if len(vals) != len(pts) - 1:
        raise DomainError("need one state value per cell")
    lo, hi = _window(B, phi)
    bps = tuple(sorted(set(B.breakpoints()) | {phi.support.a, phi.support.b}))
    sups = B.cantor_supports()
    depth = _cantor_depth(tol)
    dic = B.cantor_dictionary()
    total = 0.0
    for (x0, x1), v in zip(zip(pts[:-1], pts[1:]), vals):
        c0, c1 = max(x0, lo), min(x1, hi)
        if c1 > c0:

            def dens(xs, v=v):
                xs = np.asarray(xs, dtype=float)
                W = np.repeat(v[:, None], len(xs), axis=1)
                return phi(xs) * B.grad_x_on_grid(xs, W)

            total += integrate_interval(
                dens, c0, c1, tol=tol, breakpoints=bps, cantor_supports=sups
            )
        for base, pairs in dic.items():
            sup = base.support
            blo, bhi = max(x0, sup.a, lo), min(x1, sup.b, hi)
            if bhi <= blo:
                continue
            ratio = sum(c * float(np.asarray(B.terms[k][1](v))) for k, c in pairs)

            def r_int(ts, base=base):
                return phi(base.from_std(np.asarray(ts)))

            total += ratio * cantor.integrate_cantor_std_restricted(
                r_int, float(base.to_std(blo)), float(base.to_std(bhi)), depth
            )
    for i in range(1, len(pts) - 1):
        x = pts[i]
        if not lo < x < hi:
            continue
        vl, vr = vals[i - 1], vals[i]
        plus = 0.5 * (B.eval(x, vr, "right") + B.eval(x, vl, "right"))
        minus = 0.5 * (B.eval(x, vr, "left") + B.eval(x, vl, "left"))
        total += _phi_at(phi, x) * (plus - minus)
    interfaces = set(pts[1:-1])
    for x in B.exceptional_set():
        if x in interfaces or not lo < x < hi:
            continue
        i = min(max(int(np.searchsorted(pts, x, side="right")) - 1, 0), len(vals) - 1)
        total += _phi_at(phi, x) * (
            B.eval(x, vals[i], "right") - B.eval(x, vals[i], "left")
        )
    return float(total)


def levelset_comparison_pwc(B, u, phi, tol=1e-9):
    """The two sides of the piecewise-constant comparison identity.

    Left: over the level variable t, the signed pairing of the precise
    representative of the level-region indicator against the x-derivative
    of the t-derivative flux; the region is constant between consecutive
    critical levels, so the t-factor integrates exactly.  Right: per cell,
    the pairing of the closed cell indicator's precise representative
    against the x-derivative measure at the cell state.  Scalar state only;
    the flux must vanish at state zero."""
    partition, values = _pwc_data(u)
    pts = [float(p) for p in partition]
    vals = [float(v) for v in values]
    if len(vals) != len(pts) - 1:
        raise DomainError("need one state value per cell")
    if B.dim != 1:
        raise DomainError("comparison identity is scalar-state only")
    probe = np.linspace(B.domain.a, B.domain.b, 37)[1:-1]
    if np.abs(B.value_on_grid(probe, np.zeros((1, len(probe))))).max() > 1e-11:
        raise DomainError("comparison identity needs the flux to vanish at state zero")
    lo = max(phi.support.a, B.domain.a)
    hi = min(phi.support.b, B.domain.b)
    depth = _cantor_depth(tol)

    def indicator_pairing(region_cells, K):
        """integral of chi* phi dDK over the closed union of the listed
        cells; atoms at the union's boundary weigh 1/2."""
        if not region_cells:
            return 0.0
        segs = []
        start = prev = region_cells[0]
        for i in region_cells[1:]:
            if i == prev + 1:
                prev = i
            else:
                segs.append((pts[start], pts[prev + 1]))
                start = prev = i
        segs.append((pts[start], pts[prev + 1]))
        dK = K.derivative()
        total = 0.0
        for s0, s1 in segs:
            q0, q1 = max(s0, lo), min(s1, hi)
            if not dK.ac.is_zero() and q1 > q0:

                def ac_int(xs):
                    xs = np.asarray(xs, dtype=float)
                    return phi(xs) * dK.ac(xs)

                total += integrate_interval(
                    ac_int, q0, q1, tol=tol,
                    breakpoints=K.breakpoints(),
                    cantor_supports=K.cantor_supports(),
                )
            for x, w in dK.atoms:
                if s0 < x < s1:
                    wt = 1.0
                elif x == s0 or x == s1:
                    wt = 0.5
                else:
                    continue
                if lo < x < hi:
                    total += wt * _phi_at(phi, x) * w
            for t in dK.cantor_terms:
                sup = t.base.support
                blo, bhi = max(s0, sup.a, lo), min(s1, sup.b, hi)
                if bhi <= blo:
                    continue

                def c_int(ts, base=t.base):
                    return phi(base.from_std(np.asarray(ts)))

                total += t.coefficient * cantor.integrate_cantor_std_restricted(
                    c_int, float(t.base.to_std(blo)), float(t.base.to_std(bhi)), depth
                )
        return total

    crit = sorted(set([0.0] + vals))
    left = 0.0
    for t0, t1 in zip(crit[:-1], crit[1:]):
        tm = 0.5 * (t0 + t1)
        sgn = 1.0 if tm > 0 else -1.0
        region = [
            i for i, v in enumerate(vals) if min(0.0, v) <= tm <= max(0.0, v)
        ]
        if not region:
            continue
        for K, f in B.terms:
            fv = np.asarray(f(np.array([[t0, t1]], dtype=float)))
            df = float(fv[1] - fv[0])
            left += sgn * df * indicator_pairing(region, K)

    right = 0.0
    for i, v in enumerate(vals):
        for K, f in B.terms:
            fv = float(np.asarray(f(np.array([[v]], dtype=float))).reshape(()))
            if fv != 0.0:
                right += fv * indicator_pairing([i], K)
    return float(left), float(right)
