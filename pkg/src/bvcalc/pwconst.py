"""Constructive piecewise-constant approximation of BV functions.

The scalar construction splits the target into big jumps, a small-jump tail
of total size at most eps/3, and a continuous remainder; a partition finer
than the remainder's eps/3-oscillation scale then carries cell values chosen
by a three-case rule (marked-point value, left limit at a big-jump right
endpoint, right limit at the cell's left endpoint).  The vector version runs
the scalar construction per component with eps = 3/n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .bvfunction import BVFunction, BVVector
from .measures import Interval, PiecewisePolynomial

_NUDGE = 1e-7  # relative leftward shift used to move a node off a forbidden point


@dataclass(frozen=True)
class PiecewiseConstant:
    """Piecewise-constant function with explicit values at interior nodes.

    ``partition`` runs from a to b; ``values[i]`` is the constant on the open
    cell ]partition[i], partition[i+1][; ``node_values[i]`` is the stored
    value at the interior node partition[i+1]."""

    partition: tuple
    values: tuple
    node_values: tuple

    def __post_init__(self):
        pts = tuple(float(p) for p in self.partition)
        if any(y <= x for x, y in zip(pts, pts[1:])):
            raise DomainError("partition must be strictly increasing")
        if len(self.values) != len(pts) - 1:
            raise DomainError("need one value per cell")
        if len(self.node_values) != len(pts) - 2:
            raise DomainError("need one value per interior node")
        object.__setattr__(self, "partition", pts)
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "node_values", tuple(float(v) for v in self.node_values))

    @property
    def interior_nodes(self):
        return self.partition[1:-1]

    def __call__(self, x):
        return float(self.eval_array(np.atleast_1d(float(x)))[0])

    def eval_array(self, xs):
        xs = np.asarray(xs, dtype=float)
        pts = np.asarray(self.partition)
        idx = np.clip(np.searchsorted(pts, xs, side="right") - 1, 0, len(self.values) - 1)
        out = np.asarray(self.values)[idx].copy()
        # exact hits on interior nodes carry their stored values
        nodes = pts[1:-1]
        if nodes.size:
            pos = np.searchsorted(nodes, xs)
            sel = np.minimum(pos, nodes.size - 1)
            exact = (pos < nodes.size) & (xs == nodes[sel])
            out[exact] = np.asarray(self.node_values)[pos[exact]]
        return out

    def left_limit(self, x):
        i = int(np.searchsorted(self.partition, float(x), side="left")) - 1
        i = min(max(i, 0), len(self.values) - 1)
        return self.values[i]

    def right_limit(self, x):
        i = int(np.searchsorted(self.partition, float(x), side="right")) - 1
        i = min(max(i, 0), len(self.values) - 1)
        return self.values[i]

    def jump_set(self):
        """Interior nodes where the adjacent cell values differ."""
        return tuple(
            x
            for x, c0, c1 in zip(self.partition[1:-1], self.values[:-1], self.values[1:])
            if c0 != c1
        )

    def total_variation(self):
        """Pointwise variation, node values included."""
        tv = 0.0
        for c0, nv, c1 in zip(self.values[:-1], self.node_values, self.values[1:]):
            tv += abs(nv - c0) + abs(c1 - nv)
        return tv

    def to_bv(self, policy="precise"):
        """The same steps as a BVFunction (the policy replaces the stored
        node values; one-sided limits and jumps are preserved exactly)."""
        pp = PiecewisePolynomial(self.partition, tuple((v,) for v in self.values))
        return BVFunction(
            Interval(self.partition[0], self.partition[-1]), pp, (), policy
        )


@dataclass(frozen=True)
class ExceptionalSet:
    """Finite stand-in for the countable marked set (disjoint from jumps),
    with the finite prefix actually pinned at this resolution."""

    points: tuple
    prefix_len: int = None

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(set(pts)) != len(pts):
            raise DomainError("marked points must be distinct")
        object.__setattr__(self, "points", pts)
        k = len(pts) if self.prefix_len is None else int(self.prefix_len)
        if not 0 <= k <= len(pts):
            raise DomainError("prefix length out of range")
        object.__setattr__(self, "prefix_len", k)

    @property
    def prefix(self):
        return self.points[: self.prefix_len]

    def with_prefix(self, k):
        return ExceptionalSet(self.points, min(int(k), len(self.points)))


def _osc_delta(vc_vals, grid_h, eps_third, max_halvings=40):
    """Window width on which the sampled continuous part oscillates < eps/3,
    found by halving, then halved once more for safety.

    The oscillation check uses stride-k blocks of width 2k samples, which
    over-covers every width-k window, so the accepted delta is conservative."""
    n = len(vc_vals)
    delta = (n - 1) * grid_h

    def osc_upper(width):
        k = max(1, min(n - 1, int(np.ceil(width / grid_h))))
        worst = 0.0
        for start in range(0, n - 1, k):
            block = vc_vals[start : start + 2 * k + 1]
            worst = max(worst, float(block.max() - block.min()))
        return worst

    for _ in range(max_halvings):
        if osc_upper(delta) < 0.9 * eps_third:
            break
        delta *= 0.5
    else:
        raise DomainError("could not localize the continuous part's oscillation")
    return 0.5 * delta


def _shift_off(x, forbidden, room, tol):
    """Deterministically nudge x leftward until clear of forbidden points."""
    step = max(room * _NUDGE, tol * 10)
    y = x
    for _ in range(64):
        if all(abs(y - f) > tol for f in forbidden):
            return y
        y -= step
    raise DomainError("could not place a partition node off the forbidden set")


def approximate_scalar(v, eps, exc=None, grid_points=4097):
    """Piecewise-constant approximation with the five certified properties:
    big jumps retained with exact one-sided limits, total variation not
    increased, nodes avoiding the marked set, exact values on the marked
    prefix, and uniform error below eps."""
    eps = float(eps)
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    if exc is None:
        exc = ExceptionalSet(())
    a, b = v.domain.a, v.domain.b
    jumps = v.jumps()
    jset = {x for x, _, _ in jumps}
    for p in exc.points:
        if not a < p < b:
            raise DomainError("marked points must be interior")
        if p in jset or any(abs(p - x) < 1e-13 * (b - a) for x in jset):
            raise DomainError("marked set must avoid the jump set")

    # split off the big jumps: smallest N whose excluded tail is <= eps/3
    order = sorted(jumps, key=lambda j: (-abs(j[2] - j[1]), j[0]))
    sizes = [abs(r - l) for _, l, r in order]
    tail = float(np.sum(sizes))
    N = 0
    while tail > eps / 3.0 and N < len(order):
        tail -= sizes[N]
        N += 1
    bigs = sorted(x for x, _, _ in order[:N])
    smalls = sorted(x for x, _, _ in order[N:])

    # oscillation scale of the continuous part on a dense grid
    xs = np.linspace(a, b, grid_points)[1:-1]
    vals = v.values(xs)
    if jumps:
        jx = np.array([x for x, _, _ in jumps])
        jw = np.array([r - l for _, l, r in jumps])
        steps = (xs[:, None] >= jx[None, :]) @ jw
        vc = vals - steps
    else:
        vc = vals
    h = xs[1] - xs[0]
    delta = _osc_delta(vc, h, eps / 3.0)

    tol = 1e-12 * (b - a)
    forbidden = sorted(set(exc.points) | set(smalls))

    # mandatory nodes, separating adjacent big jumps
    fixed = [a, *bigs, b]
    bigset = set(bigs)
    augmented = [fixed[0]]
    for x0, x1 in zip(fixed[:-1], fixed[1:]):
        if x0 in bigset and x1 in bigset:
            augmented.append(_shift_off(0.5 * (x0 + x1), forbidden, x1 - x0, tol))
        augmented.append(x1)

    # mesh refinement to spacing delta/2, nudged off the forbidden set
    nodes = [augmented[0]]
    for x0, x1 in zip(augmented[:-1], augmented[1:]):
        k = int(np.ceil((x1 - x0) / (0.5 * delta)))
        for j in range(1, k):
            y = x0 + (x1 - x0) * j / k
            nodes.append(_shift_off(y, forbidden, (x1 - x0) / k, tol))
        nodes.append(x1)

    # isolate each marked-prefix point: alone in its cell, away from big nodes
    marked = sorted(exc.prefix)
    for p in marked:
        i = int(np.searchsorted(nodes, p, side="right")) - 1
        y0, y1 = nodes[i], nodes[i + 1]
        inside = [q for q in marked if y0 < q < y1]
        extra = []
        for q0, q1 in zip(inside[:-1], inside[1:]):
            extra.append(_shift_off(0.5 * (q0 + q1), forbidden, q1 - q0, tol))
        if y0 in bigset:
            q = min(inside)
            extra.append(_shift_off(0.5 * (y0 + q), forbidden, q - y0, tol))
        if y1 in bigset:
            q = max(inside)
            extra.append(_shift_off(0.5 * (q + y1), forbidden, y1 - q, tol))
        nodes = sorted(set(nodes) | set(extra))

    # cell values by the three-case rule, node values by the representative
    marked_arr = np.asarray(marked)
    cells = []
    for y0, y1 in zip(nodes[:-1], nodes[1:]):
        inside = marked_arr[(marked_arr > y0) & (marked_arr < y1)]
        if inside.size:
            cells.append(v.eval(float(inside[0]), "stored"))
        elif y1 in bigset:
            cells.append(v.eval(y1, "left"))
        else:
            cells.append(v.eval(y0, "right"))
    node_vals = [v.eval(y, "stored") for y in nodes[1:-1]]
    return PiecewiseConstant(tuple(nodes), tuple(cells), tuple(node_vals))


def approximate_vector(u, n, exc=None):
    """Per-component scalar construction with eps = 3/n and the first n
    marked points pinned; sup-norm error below 3 sqrt(d) / n."""
    n = int(n)
    if n < 1:
        raise DomainError("resolution index must be >= 1")
    if isinstance(u, BVFunction):
        u = BVVector((u,))
    if exc is None:
        exc = ExceptionalSet(())
    exc_n = exc.with_prefix(n)
    return [approximate_scalar(c, 3.0 / n, exc_n) for c in u.components]
