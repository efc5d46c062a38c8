"""Standard Cantor-Lebesgue function and self-similar quadrature on [0, 1].

Everything here works in the coordinates of the unit interval; affine
rescaling onto a concrete support happens in the caller.  The singular
measure mu_C is the distributional derivative of the Cantor function C:
it splits equally over the two level-1 cells [0,1/3] and [2/3,1], which
gives the fixed-point quadrature rule used by :func:`integrate_cantor_std`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError

# Depth of the exact ternary digit scan.  53 binary digits of output are all a
# float can hold; a few extra guard digits cost nothing.
_SCAN_DEPTH = 64
# Depth of the vectorised float scan.  Beyond ~45 the 3^k error amplification
# of float digit extraction makes further digits meaningless anyway.
_ARRAY_SCAN_DEPTH = 48

_MAX_DEPTH = 24          # hard cap for quadrature depth (2^24 cells)
_CHUNK = 1 << 20         # evaluation chunk so 2^24 points never materialise at once
_CACHE_DEPTH = 20        # midpoint arrays cached up to this depth


def cantor_function_eval(x):
    """Value of the Cantor-Lebesgue function at ``x`` in [0, 1].

    The ternary digits of ``x`` are scanned exactly (the float is converted to
    the rational it represents): digits 0/2 are emitted as binary 0/1 until
    the first digit 1, which appends a final binary 1.  Output is exact
    whenever it is a representable dyadic rational.
    """
    fx = x if isinstance(x, Fraction) else Fraction(x)
    if fx < 0 or fx > 1:
        raise DomainError(f"cantor function argument {x!r} outside [0, 1]")
    if fx == 1:
        return 1.0
    val = 0.0
    scale = 0.5
    y = fx
    for _ in range(_SCAN_DEPTH):
        y *= 3
        d = int(y)  # floor; y < 3 so d in {0,1,2}
        y -= d
        if d == 1:
            val += scale
            break
        if d == 2:
            val += scale
        scale *= 0.5
        if y == 0:
            break
    return val


def cantor_function_values(xs):
    """Vectorised Cantor function on a float array, clipped to [0, 1].

    Float digit extraction is exact until rounding noise is amplified past a
    ternary digit boundary; errors are below ~1e-9 and only near cell
    boundaries, which is ample for quadrature sampling (exact values at
    ternary-rational points such as cell midpoints, whose digit scans
    terminate early).
    """
    y = np.clip(np.asarray(xs, dtype=float), 0.0, 1.0)
    out = np.zeros_like(y)
    done_hi = y >= 1.0
    out[done_hi] = 1.0
    active = ~done_hi
    y = y.copy()
    scale = 0.5
    for _ in range(_ARRAY_SCAN_DEPTH):
        if not active.any():
            break
        y3 = y * 3.0
        d = np.floor(y3)
        np.clip(d, 0.0, 2.0, out=d)
        y = y3 - d
        hit_one = active & (d == 1.0)
        out[hit_one] += scale
        active = active & ~hit_one
        out[active & (d == 2.0)] += scale
        scale *= 0.5
    return out


def cantor_antiderivative(t):
    """Primitive A(t) = integral_0^t C(s) ds on [0, 1], exact to float rounding.

    Descends the ternary cell tree.  Over a full cell of width w, left value v
    and rise h the integral is w*(v + h/2), since the standard Cantor function
    integrates to 1/2 (symmetry C(s) + C(1-s) = 1).
    """
    tau = min(max(float(t), 0.0), 1.0)
    total = 0.0
    v = 0.0   # C at the left end of the current cell
    w = 1.0   # cell width
    h = 1.0   # C-rise across the cell
    for _ in range(80):
        if tau <= 0.0:
            break
        if tau >= w:
            total += w * (v + 0.5 * h)
            break
        third = w / 3.0
        hh = 0.5 * h
        if tau <= third:
            w, h = third, hh
            continue
        total += third * (v + 0.5 * hh)   # first sub-cell consumed entirely
        tau -= third
        vm = v + hh                        # plateau value on the middle third
        if tau <= third:
            total += tau * vm
            break
        total += third * vm
        tau -= third
        v, w, h = vm, third, hh
    return total


def depth_for(tol, lip=1.0, width=1.0):
    """Quadrature depth so the cell-oscillation bound lip*width*3^-d <= tol."""
    target = max(lip * width / max(tol, 1e-300), 3.0)
    return max(1, min(_MAX_DEPTH, math.ceil(math.log(target) / math.log(3.0))))


@lru_cache(maxsize=None)
def _std_lefts(depth):
    """Left endpoints of the 2^depth level-``depth`` Cantor cells (sorted)."""
    lefts = np.array([0.0])
    for k in range(depth):
        w = 3.0 ** -(k + 1)
        lefts = np.sort(np.concatenate((lefts, lefts + 2.0 * w)))
    lefts.setflags(write=False)
    return lefts


@lru_cache(maxsize=None)
def _std_mids(depth):
    if depth > _CACHE_DEPTH:
        raise ValueError("midpoint cache depth exceeded")
    mids = _std_lefts(depth) + 0.5 * 3.0 ** -depth
    mids.setflags(write=False)
    return mids


@lru_cache(maxsize=None)
def std_cells(depth):
    """Ternary tiling of [0,1]: gap intervals (C locally constant) up to
    ``depth`` plus the 2^depth leftover cells.  Returns four read-only arrays
    ``(gap_lo, gap_hi, cell_lo, cell_hi)`` that tile [0,1]."""
    gap_lo, gap_hi = [], []
    lefts = np.array([0.0])
    for k in range(depth):
        w = 3.0 ** -(k + 1)
        gap_lo.append(lefts + w)
        gap_hi.append(lefts + 2.0 * w)
        lefts = np.sort(np.concatenate((lefts, lefts + 2.0 * w)))
    cell_lo = lefts
    cell_hi = lefts + 3.0 ** -depth
    arrays = (
        np.sort(np.concatenate(gap_lo)) if gap_lo else np.empty(0),
        np.sort(np.concatenate(gap_hi)) if gap_hi else np.empty(0),
        cell_lo,
        cell_hi,
    )
    for a in arrays:
        a.setflags(write=False)
    return arrays


def _chunked_mean(f, pts):
    if pts.size == 0:
        return 0.0
    acc = 0.0
    for start in range(0, pts.size, _CHUNK):
        block = pts[start:start + _CHUNK]
        vals = _apply(f, block)
        acc += float(np.sum(vals))
    return acc / pts.size


def _apply(f, xs):
    """Evaluate a (hopefully vectorised) callable on an array, with a scalar
    fallback, and reject non-finite values."""
    try:
        vals = np.asarray(f(xs), dtype=float)
        if vals.shape != xs.shape:
            raise TypeError
    except (TypeError, ValueError, IndexError):
        vals = np.fromiter((float(f(x)) for x in xs), dtype=float, count=xs.size)
    if not np.all(np.isfinite(vals)):
        from .errors import QuadratureError
        raise QuadratureError("integrand produced non-finite values")
    return vals


def _mids_for(depth):
    """Midpoints of the 2^depth cells, as one array (depth <= cache) or a
    generator of chunks."""
    if depth <= _CACHE_DEPTH:
        yield _std_mids(depth)
        return
    extra = depth - _CACHE_DEPTH
    prefix = _std_lefts(extra)
    base = _std_mids(_CACHE_DEPTH) * 3.0 ** -extra
    for p in prefix:
        yield p + base


def integrate_cantor_std(f, depth, breakpoints=()):
    """Average of ``f`` over the level-``depth`` cell midpoints = quadrature of
    f against the standard Cantor measure.

    ``breakpoints``: points of [0,1] where f may jump; the cell tree is
    descended around them so a discontinuity sitting inside the Cantor set
    cannot poison the O(3^-depth) (O(9^-depth) for C^2 f) convergence.
    """
    depth = max(1, min(int(depth), _MAX_DEPTH))
    bps = sorted(b for b in breakpoints if 0.0 < b < 1.0)
    if not bps:
        total = 0.0
        count = 0
        for mids in _mids_for(depth):
            vals = _apply(f, mids)
            total += float(np.sum(vals))
            count += mids.size
        return total / count
    edges = [0.0, *bps, 1.0]
    return sum(
        integrate_cantor_std_restricted(f, lo, hi, depth)
        for lo, hi in zip(edges[:-1], edges[1:])
    )


def integrate_cantor_std_restricted(f, lo, hi, depth, guard=24):
    """Quadrature of f against the standard Cantor measure restricted to
    [lo, hi] in [0,1].  Cells fully inside are handled by midpoint averaging
    at residual depth; cells straddling an endpoint are descended ``guard``
    levels past ``depth`` (mass of the unresolved chain <= 2^-(depth+guard))."""
    depth = max(1, min(int(depth), _MAX_DEPTH))
    if hi <= lo:
        return 0.0
    lo = max(0.0, float(lo))
    hi = min(1.0, float(hi))
    total = 0.0
    stack = [(Fraction(0), 0)]
    while stack:
        left, lev = stack.pop()
        w = Fraction(1, 3 ** lev)
        l = float(left)
        r = float(left + w)
        if r <= lo or l >= hi:
            continue
        if lo <= l and r <= hi:
            res = max(depth - lev, 0)
            weight = 2.0 ** -lev
            if res == 0:
                total += weight * float(_apply(f, np.array([l + (r - l) * 0.5]))[0])
            else:
                sub = 0.0
                n = 0
                for mids in _mids_for(res):
                    pts = l + (r - l) * mids
                    sub += float(np.sum(_apply(f, pts)))
                    n += pts.size
                total += weight * sub / n
            continue
        if lev >= depth + guard:
            # unresolved straddling cell: assign half its mass at the midpoint
            total += 2.0 ** -(lev + 1) * float(_apply(f, np.array([l + (r - l) * 0.5]))[0])
            continue
        child_w = Fraction(1, 3 ** (lev + 1))
        stack.append((left, lev + 1))
        stack.append((left + 2 * child_w, lev + 1))
    return total
