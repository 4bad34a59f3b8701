"""Matrix update formulas: Broyden family, generalized PSB family, BGM, L-BFGS.

All updates are pure: they take the current approximation and a secant
pair and return a fresh matrix, so callers can retain the full iterate
history.  ``SecantPair`` tags where its (s, y) came from (``raw``,
``image`` or ``projected``) for trace bookkeeping; the formulas only read
``.s`` and ``.y``.
"""

from typing import NamedTuple

import numpy as np

__all__ = [
    "SecantPair",
    "CurvatureError",
    "DegenerateUpdateError",
    "broyden_update",
    "bfgs_inverse_update",
    "dfp_direct_update",
    "gpsb_update",
    "gpsb_inverse_update",
    "bgm_update",
    "lbfgs_direction",
]

#: relative curvature threshold: updates needing s'y > 0 reject pairs with
#: s'y <= CURVATURE_TOL * ||s|| * ||y|| (scale-invariant).
CURVATURE_TOL = 1e-12


class SecantPair(NamedTuple):
    s: np.ndarray
    y: np.ndarray
    transformed: str = "raw"


class CurvatureError(ArithmeticError):
    """Raised when s'y is not safely positive; the caller decides the fallback."""


class DegenerateUpdateError(ArithmeticError):
    """Raised when an update denominator is numerically zero."""


def _check_curvature(s, y, sy):
    if sy <= CURVATURE_TOL * np.linalg.norm(s) * np.linalg.norm(y):
        raise CurvatureError(f"s'y = {sy:.3e} fails the curvature condition")


def broyden_update(B, pair, theta):
    """One-parameter rank-two family: theta=0 is BFGS, theta=1 is DFP.

    B+ = B - B s s'B / s'Bs + y y' / s'y + theta * w w',
    w = sqrt(s'Bs) * (y / s'y - B s / s'Bs).
    """
    s, y = pair.s, pair.y
    Bs = B @ s
    sBs = s @ Bs
    sy = s @ y
    _check_curvature(s, y, sy)
    if abs(sBs) <= 1e-14 * (s @ s) * np.linalg.norm(B, "fro"):
        raise DegenerateUpdateError("s'Bs is numerically zero")
    Bn = B - np.outer(Bs, Bs) / sBs + np.outer(y, y) / sy
    if theta != 0.0:
        w = np.sqrt(sBs) * (y / sy - Bs / sBs)
        Bn = Bn + theta * np.outer(w, w)
    return Bn


def bfgs_inverse_update(H, pair):
    """Inverse-form BFGS: returns H+ with H+ y = s."""
    s, y = pair.s, pair.y
    sy = s @ y
    _check_curvature(s, y, sy)
    Hy = H @ y
    yHy = y @ Hy
    return (
        H
        + ((sy + yHy) / sy**2) * np.outer(s, s)
        - (np.outer(Hy, s) + np.outer(s, Hy)) / sy
    )


def dfp_direct_update(B, pair):
    """Direct DFP via its rank-two residual expression.

    B+ = B + [(y - Bs) y' + y (y - Bs)'] / s'y - [(y - Bs)'s / (s'y)^2] y y'.
    Independent of broyden_update(theta=1); the two agree to roundoff.
    """
    s, y = pair.s, pair.y
    sy = s @ y
    _check_curvature(s, y, sy)
    r = y - B @ s
    return B + (np.outer(r, y) + np.outer(y, r)) / sy - ((r @ s) / sy**2) * np.outer(y, y)


def gpsb_update(B, pair, minv2=None):
    """Least-change symmetric update in the ||M X M||_F norm, parameterized by M^-2.

    B+ = B + [r (M^-2 s)' + (M^-2 s) r'] / (s'M^-2 s)
           - [r's / (s'M^-2 s)^2] (M^-2 s)(M^-2 s)',   r = y - B s.

    ``minv2=None`` means M = I, the standard PSB update.
    """
    s, y = pair.s, pair.y
    r = y - B @ s
    if minv2 is None:
        ms = s
    else:
        ms = minv2 @ s
    sms = s @ ms
    if sms <= 0:
        raise DegenerateUpdateError("s'M^-2 s must be positive")
    return B + (np.outer(r, ms) + np.outer(ms, r)) / sms - ((r @ s) / sms**2) * np.outer(ms, ms)


def gpsb_inverse_update(H, pair, minv2=None):
    """Dual of gpsb_update acting on the inverse: returns H+ with H+ y = s."""
    s, y = pair.s, pair.y
    r = s - H @ y
    if minv2 is None:
        my = y
    else:
        my = minv2 @ y
    ymy = y @ my
    if ymy <= 0:
        raise DegenerateUpdateError("y'M^-2 y must be positive")
    return H + (np.outer(r, my) + np.outer(my, r)) / ymy - ((r @ y) / ymy**2) * np.outer(my, my)


def bgm_update(B, pair):
    """Rank-one secant update minimizing the Frobenius change (nonsymmetric).

    B+ = B + (y - B s) s' / s's.
    """
    s, y = pair.s, pair.y
    ss = s @ s
    if ss == 0.0:
        raise DegenerateUpdateError("zero step")
    return B + np.outer(y - B @ s, s) / ss


def lbfgs_direction(history, g, h0_scale):
    """Two-loop recursion: returns H g for the implicit limited-memory inverse.

    ``history`` is an ordered (oldest first) sequence of SecantPair with
    s'y > 0 (enforced at storage time by the drivers); the initial matrix
    is h0_scale * I.
    """
    q = g.copy()
    alphas = []
    for p in reversed(history):
        rho = 1.0 / (p.s @ p.y)
        a = rho * (p.s @ q)
        alphas.append(a)
        q = q - a * p.y
    r = h0_scale * q
    for p, a in zip(history, reversed(alphas)):
        rho = 1.0 / (p.s @ p.y)
        b = rho * (p.y @ r)
        r = r + (a - b) * p.s
    return r
