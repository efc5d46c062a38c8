"""Scalar conservation laws with space-discontinuous flux.

The law is u_t + B(x,u)_x = 0 with B a flux model that is strictly monotone
in the state on a declared working range, so every flux level is inverted by
bisection and the interface pairs satisfying the jump (Rankine-Hugoniot)
condition can be constructed exactly.  The module provides the level
inversion, adapted entropy/flux pairs built on it, their piecewise-affine
approximations with certified nonnegative kink coefficients, a conservative
first-order finite-volume solver whose interface flux enforces the jump
pairing at flux discontinuities, and a measure-form entropy-residual
checker evaluated slice by slice with the chain-rule machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cantor
from .bvfunction import BVFunction
from .errors import CFLError, DomainError, RangeError, RepresentationError
from .quadrature import integrate_interval

_KINK_BAND = 1e-12  # relative half-width of the starred-sign zero band

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _star_sign(d, scale=1.0):
    """Precise-representative sign: 0 inside a narrow band around the kink."""
    d = np.asarray(d, dtype=float)
    band = _KINK_BAND * (1.0 + abs(scale))
    return np.where(np.abs(d) <= band, 0.0, np.sign(d))


def _off_points(xs, bad, eps=1e-9):
    """Shift samples that collide with the listed points."""
    xs = np.array(xs, dtype=float)
    for p in bad:
        hit = np.abs(xs - p) < eps
        xs[hit] += 3 * eps
    return xs


@dataclass(frozen=True)
class ScalarFlux:
    """Flux model with scalar state, certified strictly monotone in the
    state on the working range [w_lo, w_hi].

    The certificate samples B(x, .) on a grid of the space-state box and
    requires strictly increasing (or strictly decreasing) values — the
    state derivative may vanish at isolated points.  ``direction`` is +1
    for increasing, -1 for decreasing."""

    model: object  # FluxModel with dim == 1
    w_lo: float
    w_hi: float
    direction: int = field(init=False)

    def __post_init__(self):
        if self.model.dim != 1:
            raise DomainError("conservation-law flux must have scalar state")
        if not self.w_hi > self.w_lo:
            raise DomainError("working range must be nondegenerate")
        dom = self.model.domain
        xs = _off_points(
            np.linspace(dom.a, dom.b, 41)[1:-1], self.model.exceptional_set()
        )
        ws = np.linspace(self.w_lo, self.w_hi, 33)
        vals = np.stack(
            [self.model.value_on_grid(xs, np.full((1, len(xs)), w)) for w in ws]
        )
        diffs = np.diff(vals, axis=0)
        if np.all(diffs > 0):
            direction = 1
        elif np.all(diffs < 0):
            direction = -1
        else:
            raise DomainError(
                "flux is not strictly monotone in the state on the working range"
            )
        object.__setattr__(self, "direction", direction)

    @property
    def domain(self):
        return self.model.domain

    def jump_points(self):
        return self.model.exceptional_set()

    def value(self, x, w, side="precise"):
        return self.model.eval(x, [float(w)], side)

    def values_on_grid(self, xs, ws):
        """B(xs_i, ws_i), right-continuous at jump points."""
        xs = np.asarray(xs, dtype=float)
        ws = np.asarray(ws, dtype=float)
        return self.model.value_on_grid(xs, ws[None, :])

    def state_bound(self):
        """C with |B(x,u)| <= C on domain x working range (sampled, with
        the sided values at jump points included)."""
        dom = self.model.domain
        xs = np.linspace(dom.a, dom.b, 129)
        best = 0.0
        for w in np.linspace(self.w_lo, self.w_hi, 33):
            best = max(
                best,
                float(np.abs(self.values_on_grid(xs, np.full(len(xs), w))).max()),
            )
        for x in self.jump_points():
            for side in ("left", "right"):
                for w in (self.w_lo, self.w_hi):
                    best = max(best, abs(self.value(x, w, side)))
        return best * (1.0 + 1e-9)

    def speed_bound(self):
        """max |state derivative of B| over the space-state box."""
        dom = self.model.domain
        xs = _off_points(
            np.linspace(dom.a, dom.b, 65)[1:-1], self.model.exceptional_set()
        )
        best = 0.0
        for w in np.linspace(self.w_lo, self.w_hi, 17):
            W = np.full((1, len(xs)), w)
            best = max(best, float(np.abs(self.model.grad_w_on_grid(xs, W)[0]).max()))
        return best


def c_alpha(flux, x, alpha, side="precise", tol=1e-14):
    """The unique state c with B(x_side, c) = alpha, by bisection on the
    working range.  RangeError when the level is not attained there."""
    lo, hi = flux.w_lo, flux.w_hi
    flo = flux.value(x, lo, side) - alpha
    fhi = flux.value(x, hi, side) - alpha
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise RangeError(f"level {alpha} not attained by the flux at x={x} ({side})")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = flux.value(x, mid, side) - alpha
        if fm == 0.0 or hi - lo <= tol:
            return mid
        if (fm > 0) == (fhi > 0):
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def c_alpha_values(flux, xs, alpha):
    """Vectorized level inversion at many points (a.e. value: the sided
    inversions agree off the flux jump set, and the right one is used on
    it)."""
    xs = np.asarray(xs, dtype=float)
    lo = np.full(xs.shape, float(flux.w_lo))
    hi = np.full(xs.shape, float(flux.w_hi))
    fhi = flux.values_on_grid(xs, hi) - alpha
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = flux.values_on_grid(xs, mid) - alpha
        take_hi = (fm > 0) == (fhi > 0)
        hi = np.where(take_hi, mid, hi)
        fhi = np.where(take_hi, fm, fhi)
        lo = np.where(take_hi, lo, mid)
    return 0.5 * (lo + hi)


def is_rankine_hugoniot(flux, x, u_minus, u_plus, tol=1e-10):
    """Whether the sided flux values match across x (the jump condition)."""
    return abs(flux.value(x, u_minus, "left") - flux.value(x, u_plus, "right")) <= tol


@dataclass(frozen=True)
class EntropyFluxPair:
    """Entropy/flux pair tied to one ScalarFlux.

    ``eta_fn(xs, us)`` and ``eta_u_fn(xs, us)`` are vectorized a.e.
    handles; ``q_fn(x, u, side)`` is pointwise and one-sided in x.
    ``q_diffuse`` describes the diffuse part of the x-derivative of
    x -> q(x, u) at frozen state: None means it vanishes inside
    flux-smooth cells (piecewise-constant coefficients), the string
    "unsupported" means it is not available in closed form, and otherwise
    it is a triple (density(xs, v), cantor_sign(xs, v), cuts(v, lo, hi))."""

    flux: ScalarFlux
    eta_fn: object
    eta_u_fn: object
    q_fn: object
    q_diffuse: object = None
    eta_sided_fn: object = None  # (x, us, side) -> values; exact at jump points
    label: str = field(default="", compare=False)

    def eta(self, xs, us):
        return np.asarray(
            self.eta_fn(np.asarray(xs, dtype=float), np.asarray(us, dtype=float)),
            dtype=float,
        )

    def eta_sided(self, x, us, side):
        """Entropy profile at one point with an explicit side (needed on
        the flux jump set, where the a.e. handle picks the right side)."""
        us = np.asarray(us, dtype=float)
        if self.eta_sided_fn is not None:
            return np.asarray(self.eta_sided_fn(float(x), us, side), dtype=float)
        return self.eta(np.full(us.shape, float(x)), us)

    def eta_u(self, xs, us):
        return np.asarray(
            self.eta_u_fn(np.asarray(xs, dtype=float), np.asarray(us, dtype=float)),
            dtype=float,
        )

    def q(self, x, u, side="precise"):
        return float(self.q_fn(float(x), float(u), side))

    # -- structural checks --------------------------------------------------
    def check_convexity(self, samples=33, tol=1e-10):
        """Second differences of eta(x, .) nonnegative at sampled x."""
        dom = self.flux.domain
        xs = _off_points(np.linspace(dom.a, dom.b, 9)[1:-1], self.flux.jump_points())
        us = np.linspace(self.flux.w_lo, self.flux.w_hi, samples)
        worst = 0.0
        for x in xs:
            vals = self.eta(np.full(us.shape, x), us)
            second = vals[2:] - 2 * vals[1:-1] + vals[:-2]
            worst = min(worst, float(second.min()))
        return worst >= -tol, worst

    def check_compatibility(self, samples=200, tol=1e-6, rng=None):
        """(state derivative of q) = eta_u * (state derivative of B) off
        the flux jump set, by centered differences at random probes.
        Probes whose difference stencil straddles an entropy kink (detected
        by a jump of eta_u across the stencil) are skipped."""
        rng = rng or np.random.default_rng(0)
        dom = self.flux.domain
        h = 1e-6 * (self.flux.w_hi - self.flux.w_lo)
        worst = 0.0
        used = 0
        for _ in range(samples):
            x = float(
                _off_points(
                    np.array([rng.uniform(dom.a, dom.b)]), self.flux.jump_points()
                )[0]
            )
            u = rng.uniform(self.flux.w_lo + 4 * h, self.flux.w_hi - 4 * h)
            s_lo = float(self.eta_u(np.array([x]), np.array([u - 2 * h]))[0])
            s_hi = float(self.eta_u(np.array([x]), np.array([u + 2 * h]))[0])
            if abs(s_hi - s_lo) > 0.5:
                continue
            qd = (self.q(x, u + h) - self.q(x, u - h)) / (2 * h)
            bu = float(
                self.flux.model.grad_w_on_grid(np.array([x]), np.array([[u]]))[0, 0]
            )
            target = float(self.eta_u(np.array([x]), np.array([u]))[0]) * bu
            worst = max(worst, abs(qd - target) / max(1.0, abs(target)))
            used += 1
        return worst <= tol and used > 0, worst

    def check_jump_dissipation(self, n_states=17, tol=1e-10):
        """q(x+, u+) - q(x-, u-) <= tol on constructed jump-condition
        pairs; returns (ok, worst difference, pairs checked)."""
        worst = -math.inf
        count = 0
        for x in self.flux.jump_points():
            for ul in np.linspace(self.flux.w_lo, self.flux.w_hi, n_states)[1:-1]:
                level = self.flux.value(x, float(ul), "left")
                try:
                    ur = c_alpha(self.flux, x, level, "right")
                except RangeError:
                    continue
                diff = self.q(x, ur, "right") - self.q(x, float(ul), "left")
                worst = max(worst, diff)
                count += 1
        if count == 0:
            return True, 0.0, 0
        return worst <= tol, worst, count


def adapted_entropy_pair(flux, alpha):
    """The adapted entropy |u - c_alpha(x)| with entropy flux
    (B(x,u) - alpha) times the starred sign of u - c_alpha(x).

    The starred sign takes the value 0 on the kink.  On pairs satisfying
    the jump condition whose starred signs agree on both sides, the sided
    difference of the entropy flux vanishes identically; for a strictly
    monotone flux both signs equal the sign of (carried level - alpha), so
    this holds on every jump-condition pair."""
    dom = flux.domain
    for x in _off_points(np.linspace(dom.a, dom.b, 17)[1:-1], flux.jump_points()):
        c_alpha(flux, float(x), alpha)  # fail early when not attained

    c_grid_cache = {}
    c_point_cache = {}

    def c_on(xs):
        key = xs.tobytes()
        if key not in c_grid_cache:
            c_grid_cache[key] = c_alpha_values(flux, xs, alpha)
        return c_grid_cache[key]

    def c_at(x, side):
        key = (x, side)
        if key not in c_point_cache:
            c_point_cache[key] = c_alpha(flux, x, alpha, side)
        return c_point_cache[key]

    def eta_fn(xs, us):
        return np.abs(us - c_on(xs))

    def eta_u_fn(xs, us):
        return _star_sign(us - c_on(xs))

    def q_fn(x, u, side):
        c = c_at(x, side)
        s = float(_star_sign(u - c, scale=max(abs(u), abs(c))))
        return (flux.value(x, u, side) - alpha) * s

    def q_density(xs, v):
        """a.e. density of the diffuse x-derivative of q(., v): the sign
        factor is locally constant off the level crossing (where the
        leading factor vanishes), so the density is sign * x-gradient."""
        xs = np.asarray(xs, dtype=float)
        W = np.full((1, len(xs)), float(v))
        s = np.sign(flux.values_on_grid(xs, W[0]) - alpha) * flux.direction
        return s * flux.model.grad_x_on_grid(xs, W)

    def q_cantor_sign(xs, v):
        xs = np.asarray(xs, dtype=float)
        return (
            np.sign(flux.values_on_grid(xs, np.full(xs.shape, float(v))) - alpha)
            * flux.direction
        )

    def eta_sided_fn(x, us, side):
        return np.abs(us - c_at(float(x), side))

    def cuts(v, lo, hi, samples=65):
        """Level crossings of B(., v) in [lo, hi]: sign changes of
        B(., v) - alpha located between samples by bisection (quadrature
        cut points for the sign factor)."""
        xs = np.linspace(lo, hi, samples)
        g = flux.values_on_grid(xs, np.full(len(xs), float(v))) - alpha
        out = []
        for a, b, fa, fb in zip(xs[:-1], xs[1:], g[:-1], g[1:]):
            if fa == 0.0:
                out.append(float(a))
                continue
            if fa * fb >= 0:
                continue
            for _ in range(60):
                m = 0.5 * (a + b)
                fm = flux.value(m, float(v)) - alpha
                if fm == 0.0:
                    break
                if (fm > 0) == (fb > 0):
                    b, fb = m, fm
                else:
                    a, fa = m, fm
            out.append(0.5 * (a + b))
        return tuple(out)

    return EntropyFluxPair(
        flux, eta_fn, eta_u_fn, q_fn,
        q_diffuse=(q_density, q_cantor_sign, cuts),
        eta_sided_fn=eta_sided_fn,
        label=f"adapted[{alpha:.6g}]",
    )


@dataclass(frozen=True)
class AffineEntropy:
    """Piecewise-affine convex entropy at one point and side:
    eta_N(u) = a + b*u + sum_i kink_coeffs[i] |u - knots[i]|, with the
    matching flux q_N(x,u) = b*B(x,u) + sum_i kink_coeffs[i] times the
    adapted flux at level levels[i]."""

    x: float
    side: str
    a: float
    b: float
    levels: tuple       # flux levels carried by the interior knots
    knots: tuple        # inverted levels at (x, side), ascending
    kink_coeffs: tuple  # nonnegative weights of |u - knots[i]|
    grid_knots: tuple   # all inverted levels, end knots included
    flux: ScalarFlux

    def eta(self, u):
        u = np.asarray(u, dtype=float)
        out = self.a + self.b * u
        for c, w in zip(self.knots, self.kink_coeffs):
            out = out + w * np.abs(u - c)
        return out

    def eta_u(self, u):
        u = np.asarray(u, dtype=float)
        out = np.full(np.shape(u), self.b)
        for c, w in zip(self.knots, self.kink_coeffs):
            out = out + w * _star_sign(u - c, scale=max(1.0, abs(c)))
        return out

    def q(self, u):
        """Matching flux at the build point and side (the kink signs and
        the flux value are taken on that side)."""
        bval = self.flux.value(self.x, float(u), self.side)
        out = self.b * bval
        for lev, c, w in zip(self.levels, self.knots, self.kink_coeffs):
            s = float(_star_sign(float(u) - c, scale=max(abs(float(u)), abs(c))))
            out += w * (bval - lev) * s
        return float(out)


def affine_entropy_approx(pair, flux, N, x, side="precise"):
    """Convex piecewise-affine interpolation of ``pair``'s entropy at the
    flux levels i*C/N attained at (x, side), C the flux bound.

    Coefficients: chord slopes of the entropy between consecutive inverted
    levels; the linear weight is the mean of the extreme slopes, each kink
    weight is half the increase of the chord slope (nonnegative by
    convexity), and the constant is fixed by interpolation at the lowest
    knot — so the approximation interpolates the entropy at every inverted
    level.  RangeError when fewer than two levels are attained."""
    C = flux.state_bound()
    levels, knots = [], []
    for i in range(-N, N + 1):
        a_i = i * C / N
        try:
            c = c_alpha(flux, x, a_i, side)
        except RangeError:
            continue
        levels.append(a_i)
        knots.append(c)
    if len(knots) < 2:
        raise RangeError("fewer than two flux levels attained: index set too small")
    order = np.argsort(knots)
    cs = np.asarray(knots, dtype=float)[order]
    lv = np.asarray(levels, dtype=float)[order]
    eta_vals = np.asarray(pair.eta_sided(float(x), cs, side), dtype=float)
    delta = (eta_vals[1:] - eta_vals[:-1]) / (cs[1:] - cs[:-1])
    b = 0.5 * (delta[0] + delta[-1])
    # nonnegative for convex eta; clip the round-off of exactly-flat chords
    kink = np.maximum(0.5 * (delta[1:] - delta[:-1]), 0.0)
    a = float(eta_vals[0] - b * cs[0] - np.sum(kink * (cs[1:-1] - cs[0])))
    return AffineEntropy(
        float(x), side, a, float(b),
        tuple(float(v) for v in lv[1:-1]),
        tuple(float(c) for c in cs[1:-1]),
        tuple(float(w) for w in kink),
        tuple(float(c) for c in cs),
        flux,
    )


def affine_pair(flux, base_pair, N):
    """EntropyFluxPair whose handles rebuild the affine approximation of
    ``base_pair`` at each requested point and side.

    When every flux coefficient is piecewise constant, the coefficients
    are cached per constancy cell (keyed by the coefficient values) and
    the diffuse x-derivative of the matching flux vanishes inside cells;
    otherwise the diffuse part is reported as unavailable."""
    is_pwc = all(
        K.smooth_part.derivative().is_zero() and not K.cantor_part
        for K, _ in flux.model.terms
    )
    cache = {}

    def key_for(x, side):
        if is_pwc:
            vals = tuple(round(K.eval(x, side), 12) for K, _ in flux.model.terms)
            return (side,) + vals
        return (side, round(float(x), 14))

    def at(x, side):
        if side == "precise" and any(abs(x - p) < 1e-13 for p in flux.jump_points()):
            raise DomainError(
                "affine coefficients at a flux jump need an explicit side"
            )
        key = key_for(float(x), side)
        if key not in cache:
            cache[key] = affine_entropy_approx(base_pair, flux, N, float(x), side)
        return cache[key]

    def eta_fn(xs, us):
        xs = np.asarray(xs, dtype=float)
        us = np.asarray(us, dtype=float)
        return np.array([float(at(x, "precise").eta(u)) for x, u in zip(xs, us)])

    def eta_u_fn(xs, us):
        xs = np.asarray(xs, dtype=float)
        us = np.asarray(us, dtype=float)
        return np.array([float(at(x, "precise").eta_u(u)) for x, u in zip(xs, us)])

    def q_fn(x, u, side):
        return at(x, side).q(u)

    def eta_sided_fn(x, us, side):
        ae = at(x, side)
        return np.asarray([float(ae.eta(u)) for u in np.atleast_1d(us)])

    return EntropyFluxPair(
        flux, eta_fn, eta_u_fn, q_fn,
        q_diffuse=None if is_pwc else "unsupported",
        eta_sided_fn=eta_sided_fn,
        label=f"affine[N={N}] of {base_pair.label}",
    )


# ---------------------------------------------------------------------------
# finite-volume solver


@dataclass
class ClawField:
    """Cell-average field of a conservation-law run: interfaces ``edges``
    (flux jumps snapped onto them), time levels ``times``, one row of
    ``states`` per time level, and the interface flux record ``traces``
    per step."""

    flux: ScalarFlux
    edges: np.ndarray
    times: np.ndarray
    states: np.ndarray
    traces: np.ndarray

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def mass(self, n):
        return float(np.dot(self.states[n], self.widths))

    def mass_defects(self):
        """Per-step conservation defect: mass change corrected by the
        boundary flux difference (interior fluxes telescope away)."""
        out = []
        for n in range(len(self.times) - 1):
            dt = self.times[n + 1] - self.times[n]
            boundary = dt * (self.traces[n][-1] - self.traces[n][0])
            out.append(self.mass(n + 1) - self.mass(n) + boundary)
        return np.asarray(out)

    def slice_values(self, n):
        return np.asarray(self.states[n], dtype=float)

    def slice_pwc(self, n):
        from .pwconst import PiecewiseConstant

        vals = self.slice_values(n)
        nodes = 0.5 * (vals[:-1] + vals[1:])
        return PiecewiseConstant(tuple(self.edges), tuple(vals), tuple(nodes))

    @staticmethod
    def from_function(flux, fn, T, cells, steps):
        """Field filled by sampling an explicit (x, t) solution at cell
        centers — for injecting manufactured or non-entropic weak
        solutions.  The flux-trace record is zero and the mass-defect
        accounting does not apply."""
        edges = _snapped_edges(flux, cells)
        centers = 0.5 * (edges[:-1] + edges[1:])
        times = np.linspace(0.0, float(T), steps + 1)
        states = np.array([np.asarray(fn(centers, t), dtype=float) for t in times])
        traces = np.zeros((steps, len(edges)))
        return ClawField(flux, edges, times, states, traces)


def _snapped_edges(flux, cells):
    dom = flux.domain
    edges = np.linspace(dom.a, dom.b, cells + 1)
    for p in flux.jump_points():
        j = int(np.argmin(np.abs(edges - p)))
        j = min(max(j, 1), cells - 1)
        edges[j] = p
    if np.any(np.diff(edges) <= 0):
        raise DomainError("grid snapping collapsed a cell; use more cells")
    return edges


def _interface_flux(flux, edges, u):
    """Upwind interface fluxes with the jump coupling: at a flux-jump
    interface the upwind sided value is carried across, so the implied
    cross-interface states form a jump-condition pair by construction.
    Zero-gradient ghost states close the boundary."""
    n = len(u)
    F = np.empty(n + 1)
    jumps = set(float(p) for p in flux.jump_points())
    if flux.direction > 0:
        F[0] = flux.value(float(edges[0]), float(u[0]), "right")
        for j in range(1, n + 1):
            x = float(edges[j])
            side = "left" if (x in jumps or j == n) else "precise"
            F[j] = flux.value(x, float(u[j - 1]), side)
    else:
        F[n] = flux.value(float(edges[n]), float(u[n - 1]), "left")
        for j in range(n):
            x = float(edges[j])
            side = "right" if (x in jumps or j == 0) else "precise"
            F[j] = flux.value(x, float(u[j]), side)
    return F


def solve_claw(flux, u0, T, cells, cfl=0.45):
    """First-order conservative upwind solve of u_t + B(x,u)_x = 0.

    The monotone direction fixes the upwind side; flux-jump interfaces
    carry the upwind sided value across (the cross-interface states then
    satisfy the jump condition exactly, and profiles at a constant flux
    level are preserved to round-off).  The CFL number is capped at 1/2."""
    if not 0 < cfl <= 0.5:
        raise CFLError("CFL number must lie in ]0, 1/2]")
    if cells < 4:
        raise DomainError("need at least 4 cells")
    edges = _snapped_edges(flux, cells)
    centers = 0.5 * (edges[:-1] + edges[1:])
    if isinstance(u0, BVFunction):
        u = u0.values(centers)
    else:
        u = np.asarray([float(u0(float(x))) for x in centers])
    if u.min() < flux.w_lo - 1e-12 or u.max() > flux.w_hi + 1e-12:
        raise RangeError("initial data leaves the working range")
    speed = flux.speed_bound()
    if speed <= 0:
        raise DomainError("flux speed bound is zero; nothing propagates")
    widths = np.diff(edges)
    steps = max(1, math.ceil(T * speed / (cfl * float(widths.min()))))
    dt = T / steps
    times = [0.0]
    states = [u.copy()]
    traces = []
    for n in range(steps):
        F = _interface_flux(flux, edges, u)
        u = u - dt * (F[1:] - F[:-1]) / widths
        traces.append(F)
        times.append(dt * (n + 1))
        states.append(u.copy())
    return ClawField(
        flux, edges, np.asarray(times), np.asarray(states), np.asarray(traces)
    )


# ---------------------------------------------------------------------------
# entropy residual


@dataclass(frozen=True)
class SpaceTimeTest:
    """Nonnegative test function on a space-time box, vectorized in x."""

    x_support: tuple
    t_support: tuple
    fn: object  # (xs, t) -> values
    label: str = field(default="", compare=False)

    def __call__(self, xs, t):
        xs = np.asarray(xs, dtype=float)
        x0, x1 = self.x_support
        t0, t1 = self.t_support
        if not t0 < t < t1:
            return np.zeros_like(xs)
        out = np.asarray(self.fn(xs, t), dtype=float)
        return np.where((xs > x0) & (xs < x1), out, 0.0)

    @staticmethod
    def bump(x_support, t_support, amplitude=1.0, label=""):
        """Product of squared parabolic bumps in x and t (nonnegative)."""
        x0, x1 = x_support
        t0, t1 = t_support

        def fn(xs, t):
            sx = (2.0 * (np.asarray(xs, dtype=float) - x0) / (x1 - x0)) - 1.0
            st = (2.0 * (t - t0) / (t1 - t0)) - 1.0
            gx = np.clip(1.0 - sx * sx, 0.0, None) ** 2
            gt = max(0.0, 1.0 - st * st) ** 2
            return amplitude * gx * gt

        return SpaceTimeTest((x0, x1), (t0, t1), fn, label or "bump")


def _slice_q_pairing(pair, edges, vals, phi_x, tol=1e-7):
    """Pairing of a spatial test slice against d(q(., u))_x for one
    piecewise-constant state slice: per-cell diffuse pairings plus
    interface brackets of the sided entropy-flux values."""
    flux = pair.flux
    total = 0.0
    for j in range(1, len(edges) - 1):
        x = float(edges[j])
        pv = float(phi_x(np.array([x]))[0])
        if pv == 0.0:
            continue
        total += pv * (
            pair.q(x, float(vals[j]), "right") - pair.q(x, float(vals[j - 1]), "left")
        )
    if pair.q_diffuse is None:
        return total
    if pair.q_diffuse == "unsupported":
        raise RepresentationError(
            "this entropy pair has no closed-form diffuse x-derivative; "
            "use piecewise-constant flux coefficients"
        )
    density, cantor_sign, cuts = pair.q_diffuse
    has_ac = any(not K.smooth_part.derivative().is_zero() for K, _ in flux.model.terms)
    if has_ac:
        bps = flux.model.breakpoints()
        for i in range(len(vals)):
            lo, hi = float(edges[i]), float(edges[i + 1])

            def integrand(xs, v=float(vals[i])):
                return phi_x(xs) * density(xs, v)

            inner = cuts(float(vals[i]), lo, hi)
            total += integrate_interval(
                integrand, lo, hi, tol=tol,
                breakpoints=tuple(sorted(set(bps) | set(inner))),
                cantor_supports=flux.model.cantor_supports(),
            )
    for base, pairs_ in flux.model.cantor_dictionary().items():
        sup = base.support
        for i in range(len(vals)):
            lo = max(float(edges[i]), sup.a)
            hi = min(float(edges[i + 1]), sup.b)
            if hi <= lo:
                continue
            v = float(vals[i])
            coef = sum(
                c * float(np.asarray(flux.model.terms[k][1](np.array([v]))))
                for k, c in pairs_
            )
            if coef == 0.0:
                continue

            def c_int(ts, v=v):
                xs = base.from_std(np.asarray(ts))
                return phi_x(xs) * cantor_sign(xs, v)

            total += coef * cantor.integrate_cantor_std_restricted(
                c_int, float(base.to_std(lo)), float(base.to_std(hi)), 12
            )
    return total


def entropy_residual(field, pair, phi, tol=1e-7):
    """Discrete space-time pairing of a nonnegative test function against
    the entropy-production distribution of the field: time differences of
    the entropy against mid-step test values, plus the per-slice pairing
    against the x-derivative of the composed entropy flux, weighted by the
    step length.  Nonpositive up to discretization for entropic fields;
    strictly positive on entropy-violating shocks."""
    edges = field.edges
    centers = field.centers
    # per-cell Gauss panels, frozen once (the level inversions behind the
    # entropy handles are cached on these arrays)
    panels = []
    for i in range(len(centers)):
        lo, hi = float(edges[i]), float(edges[i + 1])
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        panels.append((mid + half * _GL_NODES, half * _GL_WEIGHTS))
    total = 0.0
    for n in range(len(field.times) - 1):
        t_mid = 0.5 * (field.times[n] + field.times[n + 1])

        def phi_x(xs, t_mid=t_mid):
            return phi(xs, t_mid)

        if not phi_x(centers).any() and not phi_x(edges).any():
            continue
        v0 = field.slice_values(n)
        v1 = field.slice_values(n + 1)
        for i, (xs, wts) in enumerate(panels):
            pv = phi_x(xs)
            if not pv.any():
                continue
            e1 = pair.eta(xs, np.full(xs.shape, v1[i]))
            e0 = pair.eta(xs, np.full(xs.shape, v0[i]))
            total += float(np.dot(wts, pv * (e1 - e0)))
        dt = float(field.times[n + 1] - field.times[n])
        total += dt * _slice_q_pairing(pair, edges, v0, phi_x, tol=tol)
    return float(total)
