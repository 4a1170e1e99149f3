"""Robust orientation and in-circle tests.

Each predicate evaluates in floating point first and accepts the sign
when it clears a forward error bound (Shewchuk's stage-A bounds).
Otherwise the determinant is recomputed exactly with rationals, so the
returned sign is always correct for finite double inputs.
"""
from fractions import Fraction

_EPS = 2.0 ** -53
CCW_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS
ICC_ERRBOUND = (10.0 + 96.0 * _EPS) * _EPS


def _orient_exact(ax, ay, bx, by, cx, cy):
    ax, ay, bx, by, cx, cy = map(Fraction, (ax, ay, bx, by, cx, cy))
    return (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)


def orient2d(ax, ay, bx, by, cx, cy):
    """Positive if a, b, c turn counter-clockwise, negative if clockwise, 0 if collinear.

    Only the sign is meaningful when the fast path is not taken.
    """
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    if detleft > 0.0:
        if detright <= 0.0:
            return det
        detsum = detleft + detright
    elif detleft < 0.0:
        if detright >= 0.0:
            return det
        detsum = -detleft - detright
    else:
        return det
    if abs(det) >= CCW_ERRBOUND * detsum:
        return det
    e = _orient_exact(ax, ay, bx, by, cx, cy)
    return 1.0 if e > 0 else (-1.0 if e < 0 else 0.0)


def _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy):
    ax, ay, bx, by, cx, cy, dx, dy = map(Fraction, (ax, ay, bx, by, cx, cy, dx, dy))
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    return (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )


def incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """Positive if d lies inside the circle through counter-clockwise a, b, c."""
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    cdxady = cdx * ady
    adxcdy = adx * cdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady)
    permanent = (
        (abs(bdxcdy) + abs(cdxbdy)) * alift
        + (abs(cdxady) + abs(adxcdy)) * blift
        + (abs(adxbdy) + abs(bdxady)) * clift
    )
    if abs(det) > ICC_ERRBOUND * permanent:
        return det
    e = _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)
    return 1.0 if e > 0 else (-1.0 if e < 0 else 0.0)
