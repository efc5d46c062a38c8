"""Radon measures on an open interval with exact structure.

A measure here is a finite signed combination of three mutually singular
parts: an absolutely continuous part with piecewise-polynomial density, a
finite atomic part, and Cantor parts (affine copies of the standard Cantor
measure, scaled by coefficients).  Two extension slots keep products inside
the class: Cantor terms may carry a bounded ``weight`` density with respect
to their base measure, and the a.c. part may carry "modulated" density terms
``pp(x) * CantorFunction(x)`` (both show up in Leibniz products).

All Cantor supports appearing in one computation must be identical or
disjoint; this is what keeps total variation additive across parts and the
ternary-aware quadrature exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numpy.polynomial import polynomial as npoly

import numpy as np

from . import cantor
from .errors import (
    AbsoluteContinuityError,
    DomainError,
    RepresentationError,
)
from .quadrature import _apply, integrate_interval, _merge_supports

_ATOL = 1e-14


@dataclass(frozen=True)
class Interval:
    """Open interval ]a, b[."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.b <= self.a:
            raise DomainError(f"invalid interval ]{self.a}, {self.b}[")

    @property
    def length(self):
        return self.b - self.a

    def contains(self, x, strict=True):
        return (self.a < x < self.b) if strict else (self.a <= x <= self.b)

    def contains_interval(self, other, strict=False):
        if strict:
            return self.a < other.a and other.b < self.b
        return self.a <= other.a and other.b <= self.b


def _horner(coeffs, s):
    return npoly.polyval(s, np.asarray(coeffs, dtype=float))


def _poly_shift(coeffs, d):
    """Coefficients of p(s + d) given those of p(s)."""
    if d == 0.0:
        return tuple(float(c) for c in coeffs)
    c = np.asarray(coeffs, dtype=float)
    n = len(c)
    out = np.zeros(n)
    # Taylor recentering via repeated synthetic division is overkill for the
    # tiny degrees here; binomial expansion is clear and exact enough.
    for k, ck in enumerate(c):
        if ck == 0.0:
            continue
        row = np.zeros(k + 1)
        row[0] = 1.0
        for _ in range(k):
            row = np.convolve(row, [d, 1.0])[: k + 1]
        out[: k + 1] += ck * row
    return tuple(out)


def _poly_int(coeffs):
    return (0.0, *(c / (i + 1) for i, c in enumerate(coeffs)))


def _poly_real_roots(coeffs, lo, hi):
    """Real roots of the local polynomial inside (lo, hi), deduplicated."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if len(c) <= 1:
        return []
    roots = npoly.polyroots(c)
    scale = max(1.0, hi - lo)
    out = []
    for r in roots:
        if abs(r.imag) < 1e-9 * scale and lo + 1e-13 * scale < r.real < hi - 1e-13 * scale:
            out.append(float(r.real))
    return sorted(set(np.round(out, 13)))


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Piecewise polynomial on [breakpoints[0], breakpoints[-1]].

    ``pieces[i]`` holds ascending coefficients in the local variable
    ``x - breakpoints[i]``.  Adjacent pieces may disagree at the shared node
    (that is how jump discontinuities are encoded by users of this class);
    plain array evaluation is right-continuous at interior nodes.
    """

    breakpoints: tuple
    pieces: tuple

    def __post_init__(self):
        bk = tuple(float(b) for b in self.breakpoints)
        if len(bk) < 2 or any(y <= x for x, y in zip(bk, bk[1:])):
            raise DomainError("breakpoints must be strictly increasing, length >= 2")
        if len(self.pieces) != len(bk) - 1:
            raise DomainError("piece count must be breakpoint count - 1")
        object.__setattr__(self, "breakpoints", bk)
        object.__setattr__(
            self, "pieces", tuple(tuple(float(c) for c in p) or (0.0,) for p in self.pieces)
        )

    # -- constructors -------------------------------------------------------
    @staticmethod
    def zero(lo, hi):
        return PiecewisePolynomial((lo, hi), ((0.0,),))

    @staticmethod
    def constant(lo, hi, c):
        return PiecewisePolynomial((lo, hi), ((float(c),),))

    @staticmethod
    def from_global(lo, hi, coeffs):
        """Single global polynomial sum(c_k x^k) restricted to [lo, hi]."""
        return PiecewisePolynomial((lo, hi), (_poly_shift(coeffs, lo),))

    # -- evaluation ---------------------------------------------------------
    @property
    def lo(self):
        return self.breakpoints[0]

    @property
    def hi(self):
        return self.breakpoints[-1]

    def _piece_index(self, xs, side="right"):
        bk = np.asarray(self.breakpoints)
        idx = np.searchsorted(bk, xs, side=side) - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        scalar = xs.ndim == 0
        xs1 = np.atleast_1d(xs).astype(float)
        idx = self._piece_index(xs1)
        out = np.empty_like(xs1)
        for i, coeffs in enumerate(self.pieces):
            m = idx == i
            if m.any():
                out[m] = _horner(coeffs, xs1[m] - self.breakpoints[i])
        return float(out[0]) if scalar else out

    def right_limit(self, x):
        i = int(self._piece_index(np.atleast_1d(float(x)))[0])
        return float(_horner(self.pieces[i], float(x) - self.breakpoints[i]))

    def left_limit(self, x):
        i = int(self._piece_index(np.atleast_1d(float(x)), side="left")[0])
        return float(_horner(self.pieces[i], float(x) - self.breakpoints[i]))

    # -- calculus -----------------------------------------------------------
    def derivative(self):
        return PiecewisePolynomial(
            self.breakpoints,
            tuple(
                tuple((i + 1) * c for i, c in enumerate(p[1:])) or (0.0,)
                for p in self.pieces
            ),
        )

    def integrate(self, lo=None, hi=None):
        lo = self.lo if lo is None else max(float(lo), self.lo)
        hi = self.hi if hi is None else min(float(hi), self.hi)
        if hi <= lo:
            return 0.0
        total = 0.0
        for i, coeffs in enumerate(self.pieces):
            a, b = self.breakpoints[i], self.breakpoints[i + 1]
            x0, x1 = max(a, lo), min(b, hi)
            if x1 <= x0:
                continue
            anti = _poly_int(coeffs)
            total += _horner(anti, x1 - a) - _horner(anti, x0 - a)
        return float(total)

    def abs_integral(self):
        """Exact integral of |p| using per-piece root splitting."""
        total = 0.0
        for i, coeffs in enumerate(self.pieces):
            a, b = self.breakpoints[i], self.breakpoints[i + 1]
            cuts = [a, *(a + r for r in _poly_real_roots(coeffs, 0.0, b - a)), b]
            anti = _poly_int(coeffs)
            for x0, x1 in zip(cuts[:-1], cuts[1:]):
                total += abs(_horner(anti, x1 - a) - _horner(anti, x0 - a))
        return float(total)

    def absolute(self):
        """Piecewise polynomial equal to |self| a.e. (roots become breakpoints)."""
        bks = [self.lo]
        pieces = []
        for i, coeffs in enumerate(self.pieces):
            a, b = self.breakpoints[i], self.breakpoints[i + 1]
            cuts = [a, *(a + r for r in _poly_real_roots(coeffs, 0.0, b - a)), b]
            for x0, x1 in zip(cuts[:-1], cuts[1:]):
                local = _poly_shift(coeffs, x0 - a)
                mid_val = _horner(local, 0.5 * (x1 - x0))
                sign = -1.0 if mid_val < 0 else 1.0
                pieces.append(tuple(sign * c for c in local))
                bks.append(x1)
        return PiecewisePolynomial(tuple(bks), tuple(pieces))

    def refine(self, extra_points):
        """Same function on a partition refined by ``extra_points``."""
        pts = sorted(set(self.breakpoints) | {
            float(p) for p in extra_points if self.lo < float(p) < self.hi
        })
        pieces = []
        for x0 in pts[:-1]:
            i = int(np.clip(np.searchsorted(self.breakpoints, x0, side="right") - 1,
                            0, len(self.pieces) - 1))
            pieces.append(_poly_shift(self.pieces[i], x0 - self.breakpoints[i]))
        return PiecewisePolynomial(tuple(pts), tuple(pieces))

    # -- algebra ------------------------------------------------------------
    def _binary(self, other, op):
        if not isinstance(other, PiecewisePolynomial):
            raise TypeError
        if (other.lo, other.hi) != (self.lo, self.hi):
            raise DomainError("piecewise polynomials on different intervals")
        pts = sorted(set(self.breakpoints) | set(other.breakpoints))
        p1 = self.refine(pts)
        p2 = other.refine(pts)
        pieces = []
        for c1, c2 in zip(p1.pieces, p2.pieces):
            pieces.append(op(c1, c2))
        return PiecewisePolynomial(tuple(pts), tuple(pieces))

    def __add__(self, other):
        def add(c1, c2):
            n = max(len(c1), len(c2))
            return tuple(
                (c1[i] if i < len(c1) else 0.0) + (c2[i] if i < len(c2) else 0.0)
                for i in range(n)
            )
        return self._binary(other, add)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def multiply(self, other):
        return self._binary(other, lambda c1, c2: tuple(np.convolve(c1, c2)))

    def scale(self, k):
        return PiecewisePolynomial(
            self.breakpoints, tuple(tuple(k * c for c in p) for p in self.pieces)
        )

    def is_zero(self):
        return all(all(c == 0.0 for c in p) for p in self.pieces)

    def max_degree(self):
        return max(len(p) - 1 for p in self.pieces)

    def sup_norm_bound(self):
        """Cheap upper bound for sup|p| (coefficient bound per piece)."""
        best = 0.0
        for i, coeffs in enumerate(self.pieces):
            w = self.breakpoints[i + 1] - self.breakpoints[i]
            best = max(best, sum(abs(c) * max(w, 1.0) ** k for k, c in enumerate(coeffs)))
        return best


@dataclass(frozen=True)
class CantorBase:
    """An affine copy of the standard Cantor measure, unit total mass,
    supported on ``support``.

    Identity is the support: two bases with the same support are the same
    base (the ``id`` string is a stable label, not part of equality)."""

    support: Interval
    id: str = field(default=None, compare=False)

    def __post_init__(self):
        if self.id is None:
            object.__setattr__(
                self, "id", f"cantor[{self.support.a:.12g},{self.support.b:.12g}]"
            )

    @property
    def width(self):
        return self.support.length

    def to_std(self, xs):
        return (np.asarray(xs, dtype=float) - self.support.a) / self.width

    def from_std(self, ts):
        return self.support.a + self.width * np.asarray(ts, dtype=float)

    def profile(self, xs):
        """The rescaled Cantor function: 0 left of the support, 1 right of it."""
        return cantor.cantor_function_values(self.to_std(xs))

    def profile_scalar(self, x):
        t = (float(x) - self.support.a) / self.width
        if t <= 0.0:
            return 0.0
        if t >= 1.0:
            return 1.0
        return cantor.cantor_function_eval(t)

    def mass(self, lo, hi):
        """Measure of [lo, hi] (the base measure is non-atomic)."""
        return self.profile_scalar(hi) - self.profile_scalar(lo)


@dataclass(frozen=True)
class CantorTerm:
    base: CantorBase
    coefficient: float
    weight: object = None  # optional callable density w.r.t. the base measure
    weight_breakpoints: tuple = ()  # declared discontinuities of that density


@dataclass(frozen=True)
class ModulatedDensity:
    """dx-density term factor(x) * CantorFunction_base(x)."""

    factor: PiecewisePolynomial
    base: CantorBase


def _merge_atoms(atoms):
    merged = {}
    for x, w in atoms:
        x = float(x)
        key = None
        for k in merged:
            if abs(k - x) <= _ATOL:
                key = k
                break
        if key is None:
            merged[x] = float(w)
        else:
            merged[key] += float(w)
    return tuple(sorted((x, w) for x, w in merged.items() if w != 0.0))


@dataclass(frozen=True)
class RadonMeasure:
    interval: Interval
    ac: PiecewisePolynomial = None
    atoms: tuple = ()
    cantor_terms: tuple = ()
    ac_modulated: tuple = ()

    def __post_init__(self):
        if self.ac is None:
            object.__setattr__(
                self, "ac", PiecewisePolynomial.zero(self.interval.a, self.interval.b)
            )
        object.__setattr__(self, "atoms", _merge_atoms(self.atoms))
        for x, _ in self.atoms:
            if not self.interval.contains(x):
                raise DomainError(f"atom at {x} outside ]{self.interval.a}, {self.interval.b}[")
        terms = []
        for t in self.cantor_terms:
            if not self.interval.contains_interval(t.base.support):
                raise DomainError("Cantor support outside the interval")
            if t.coefficient != 0.0 or t.weight is not None:
                terms.append(t)
        object.__setattr__(self, "cantor_terms", tuple(terms))
        _merge_supports(self.cantor_supports())  # raises on partial overlap

    # -- structure ----------------------------------------------------------
    def cantor_supports(self):
        sup = [(t.base.support.a, t.base.support.b) for t in self.cantor_terms]
        sup += [(m.base.support.a, m.base.support.b) for m in self.ac_modulated]
        return tuple(sup)

    def breakpoints(self):
        pts = set(self.ac.breakpoints[1:-1])
        for m in self.ac_modulated:
            pts.update(m.factor.breakpoints[1:-1])
        return tuple(sorted(pts))

    def has_modulated(self):
        return bool(self.ac_modulated)

    def is_purely_cantor(self):
        return (
            self.ac.is_zero()
            and not self.atoms
            and not self.ac_modulated
            and all(t.weight is None for t in self.cantor_terms)
        )

    def density(self, xs):
        """dx-density of the a.c. part (plain + modulated terms)."""
        xs = np.asarray(xs, dtype=float)
        out = self.ac(xs)
        for m in self.ac_modulated:
            out = out + m.factor(xs) * m.base.profile(xs)
        return out

    # -- parts --------------------------------------------------------------
    def absolutely_continuous_part(self):
        return RadonMeasure(self.interval, self.ac, (), (), self.ac_modulated)

    def atomic_part(self):
        return RadonMeasure(self.interval, None, self.atoms, ())

    def cantor_part(self):
        return RadonMeasure(self.interval, None, (), self.cantor_terms)

    def diffuse_part(self):
        return RadonMeasure(self.interval, self.ac, (), self.cantor_terms, self.ac_modulated)

    # -- algebra ------------------------------------------------------------
    def _require_same_interval(self, other):
        if (other.interval.a, other.interval.b) != (self.interval.a, self.interval.b):
            raise DomainError("measures on different intervals")

    def __add__(self, other):
        self._require_same_interval(other)
        terms = list(other.cantor_terms)
        merged = []
        for t in self.cantor_terms:
            hit = None
            if t.weight is None:
                for j, o in enumerate(terms):
                    if o.weight is None and o.base == t.base:
                        hit = j
                        break
            if hit is None:
                merged.append(t)
            else:
                o = terms.pop(hit)
                merged.append(CantorTerm(t.base, t.coefficient + o.coefficient))
        merged.extend(terms)
        return RadonMeasure(
            self.interval,
            self.ac + other.ac,
            self.atoms + other.atoms,
            tuple(merged),
            self.ac_modulated + other.ac_modulated,
        )

    def scale(self, k):
        k = float(k)
        return RadonMeasure(
            self.interval,
            self.ac.scale(k),
            tuple((x, k * w) for x, w in self.atoms),
            tuple(
                CantorTerm(t.base, k * t.coefficient, t.weight) for t in self.cantor_terms
            ),
            tuple(
                ModulatedDensity(m.factor.scale(k), m.base) for m in self.ac_modulated
            ),
        )

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def total_mass(self):
        return integrate_measure(lambda xs: np.ones_like(np.asarray(xs, float)), self)

    def mass(self, lo, hi):
        """Measure of [lo, hi]; atoms exactly at lo/hi count fully (callers
        building partition oracles should avoid boundary atoms)."""
        total = self.ac.integrate(lo, hi)
        for m in self.ac_modulated:
            total += integrate_interval(
                lambda xs, m=m: m.factor(xs) * m.base.profile(xs),
                max(lo, self.interval.a),
                min(hi, self.interval.b),
                tol=1e-11,
                breakpoints=m.factor.breakpoints[1:-1],
                cantor_supports=[(m.base.support.a, m.base.support.b)],
            )
        for x, w in self.atoms:
            if lo <= x <= hi:
                total += w
        for t in self.cantor_terms:
            if t.weight is not None:
                raise RepresentationError("mass of weighted Cantor term not supported")
            total += t.coefficient * t.base.mass(lo, hi)
        return float(total)

    def tv_measure(self):
        """The measure |mu| (plain parts only)."""
        if self.ac_modulated or any(t.weight is not None for t in self.cantor_terms):
            raise RepresentationError("tv_measure needs plain (unweighted) parts")
        return RadonMeasure(
            self.interval,
            self.ac.absolute(),
            tuple((x, abs(w)) for x, w in self.atoms),
            tuple(CantorTerm(t.base, abs(t.coefficient)) for t in self.cantor_terms),
        )


def _scalar_call(f, x):
    try:
        return float(f(x))
    except (TypeError, ValueError):
        return float(np.asarray(f(np.array([float(x)])), dtype=float)[0])


def integrate_cantor(f, base, depth):
    """integral of f against the unit Cantor measure on ``base.support``,
    as the average of f over the depth-level cell representatives."""

    def g(ts):
        return _apply(f, base.from_std(np.asarray(ts)))

    return cantor.integrate_cantor_std(g, int(depth))


def integrate_measure(f, mu, tol=1e-9, breakpoints=(), cantor_supports=(), lip_hint=1.0):
    """integral of f d(mu) for bounded f, continuous except at declared points.

    ``breakpoints``/``cantor_supports`` declare the discontinuities and Cantor
    summands of ``f`` itself; the measure contributes its own automatically.
    At atoms f is evaluated pointwise (caller's representative convention).
    """
    bps = tuple(breakpoints) + mu.breakpoints()
    sups = tuple(cantor_supports) + mu.cantor_supports()
    total = 0.0
    if not mu.ac.is_zero() or mu.ac_modulated:
        def integrand(xs):
            return _apply(f, xs) * mu.density(xs)
        total += integrate_interval(
            integrand, mu.interval.a, mu.interval.b, tol=tol,
            breakpoints=bps, cantor_supports=sups,
        )
    for x, w in mu.atoms:
        total += w * _scalar_call(f, x)
    for t in mu.cantor_terms:
        base = t.base
        depth = cantor.depth_for(tol, lip=lip_hint, width=base.width)
        cuts = tuple(bps) + tuple(t.weight_breakpoints)
        std_bps = [float(base.to_std(b)) for b in cuts if base.support.a < b < base.support.b]
        if t.weight is None:
            def g(ts, base=base):
                return _apply(f, base.from_std(np.asarray(ts)))
        else:
            def g(ts, base=base, wfun=t.weight):
                xs = base.from_std(np.asarray(ts))
                return _apply(f, xs) * _apply(wfun, xs)
        total += t.coefficient * cantor.integrate_cantor_std(g, depth, std_bps)
    return float(total)


def measure_total_variation(mu, tol=1e-10):
    """Total variation |mu|(]a,b[); exact for plain parts, quadrature-based
    for modulated/weighted extensions."""
    total = 0.0
    if mu.ac_modulated:
        def absdens(xs):
            return np.abs(mu.density(xs))
        total += integrate_interval(
            absdens, mu.interval.a, mu.interval.b, tol=tol,
            breakpoints=mu.breakpoints(), cantor_supports=mu.cantor_supports(),
        )
    else:
        total += mu.ac.abs_integral()
    total += sum(abs(w) for _, w in mu.atoms)
    for t in mu.cantor_terms:
        if t.weight is None:
            total += abs(t.coefficient)
        else:
            depth = cantor.depth_for(tol, width=t.base.width)
            def g(ts, base=t.base, wfun=t.weight):
                return np.abs(_apply(wfun, base.from_std(np.asarray(ts))))
            total += abs(t.coefficient) * cantor.integrate_cantor_std(g, depth)
    return float(total)


def radon_nikodym_cantor(nu, lam):
    """Radon-Nikodym ratios of two purely-Cantor measures, per base.

    Returns ``{base: ratio}`` over the bases of ``lam`` (strictly positive
    coefficients required there).  Raises AbsoluteContinuityError if ``nu``
    charges a base that ``lam`` does not."""
    for name, m in (("nu", nu), ("lam", lam)):
        if not m.is_purely_cantor():
            raise RepresentationError(f"{name} must be purely Cantor (plain terms)")
    lam_coefs = {}
    for t in lam.cantor_terms:
        if t.coefficient <= 0.0:
            raise AbsoluteContinuityError("reference measure needs strictly positive coefficients")
        lam_coefs[t.base] = lam_coefs.get(t.base, 0.0) + t.coefficient
    out = {base: 0.0 for base in lam_coefs}
    for t in nu.cantor_terms:
        if t.base not in lam_coefs:
            raise AbsoluteContinuityError(
                f"nu charges Cantor base on {t.base.support} where lam vanishes"
            )
        out[t.base] += t.coefficient / lam_coefs[t.base]
    return out


# -- mollifier ---------------------------------------------------------------

KERNEL_HEIGHT = 15.0 / 16.0


def kernel(t):
    """Even C^1 bump (15/16)(1-t^2)^2 on [-1,1], unit mass."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    w = t[inside]
    out[inside] = KERNEL_HEIGHT * (1.0 - w * w) ** 2
    return out


def kernel_deriv(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    w = t[inside]
    out[inside] = KERNEL_HEIGHT * 2.0 * (1.0 - w * w) * (-2.0 * w)
    return out


def kernel_cdf(t):
    """integral_{-1}^t of the kernel; equals 0.896484375 at t = 1/2."""
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    return KERNEL_HEIGHT * (t - 2.0 * t**3 / 3.0 + t**5 / 5.0) + 0.5


def mollified_measure_eval(mu, eps, x, tol=1e-9):
    """(mu * kernel_eps)(x) for x in ]a+eps, b-eps[."""
    eps = float(eps)
    x = float(x)
    if eps <= 0.0:
        raise DomainError("mollification width must be positive")
    if not (mu.interval.a + eps < x < mu.interval.b - eps):
        raise DomainError(
            f"mollified evaluation needs x in ]{mu.interval.a + eps}, {mu.interval.b - eps}["
        )

    def f(ys):
        return kernel((x - np.asarray(ys, dtype=float)) / eps) / eps

    return integrate_measure(
        f, mu, tol=tol, breakpoints=(x - eps, x + eps),
        lip_hint=max(1.0, 1.5 / (eps * eps)),
    )
