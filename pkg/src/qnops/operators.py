"""Secant-information transforms: image directions and step projections.

Two mechanisms are provided for replacing a raw correction pair (s, y)
before a matrix update:

* image directions -- build u from the current approximation (e.g.
  u = s - B^-1 y) and pair it with a secondary difference v, so the
  update enforces B+ u = v instead of the standard secant equation;
* projections -- strip from s its components along recent steps, either
  by windowed (modified) Gram-Schmidt in a family-specific inner
  product, or by solving small regularized normal equations against the
  raw step window.

Both carry explicit fallback signals (curvature failure, near-dependent
projected step) so drivers can revert to the raw pair and log the event.
"""

from dataclasses import dataclass, field

import numpy as np

from .updates import SecantPair

__all__ = [
    "OrthogonalHistory",
    "RawHistory",
    "image_direction_broyden",
    "image_direction_gpsb",
    "secondary_secant",
    "gram_schmidt_transform",
    "normal_eq_projection",
]

#: relative ||s_tilde|| / ||s|| threshold below which a projected step is discarded
DISCARD_TOL = 1e-8


@dataclass
class OrthogonalHistory:
    """Window of transformed pairs for stepwise Gram-Schmidt (capacity d)."""

    d: int
    window: list = field(default_factory=list)
    restarts: int = 0

    def __len__(self):
        return len(self.window)


@dataclass
class RawHistory:
    """Window of the most recent raw (s, y) pairs, oldest first (capacity d)."""

    d: int
    s_list: list = field(default_factory=list)
    y_list: list = field(default_factory=list)

    def __len__(self):
        return len(self.s_list)

    def append(self, s, y):
        self.s_list.append(s)
        self.y_list.append(y)
        if len(self.s_list) > self.d:
            self.s_list.pop(0)
            self.y_list.pop(0)


def image_direction_broyden(b_solve, s, y):
    """u = s - B^-1 y, the image of s under B^-1(B - A) on a quadratic.

    ``b_solve`` is a linear-solve handle for the current B.  A zero u
    signals that B already acts exactly along s (caller should skip).
    """
    return s - b_solve(y)


def image_direction_gpsb(m2_apply, alpha, g_k, g_next):
    """u = M^2 [(1 - alpha) g_k - g_next]; ``m2_apply=None`` means M = I."""
    u = (1.0 - alpha) * g_k - g_next
    if m2_apply is None:
        return u
    return m2_apply(u)


def secondary_secant(grad, x_next, u, t):
    """Difference quotient v = [g(x_next + t u) - g(x_next)] / t.

    Exact (v = A u) for any t > 0 when the gradient is linear.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    return (grad(x_next + t * u) - grad(x_next)) / t


def _gs_coefficient(family, minv2, s_cur, sj, yj):
    # projection coefficient of s_cur onto the stored direction, in the
    # family's inner product; on quadratics the broyden form realizes
    # <.,.>_A through the stored y.
    if family == "broyden":
        return (s_cur @ yj) / (sj @ yj)
    if family == "gpsb":
        mj = sj if minv2 is None else minv2 @ sj
        return (s_cur @ mj) / (sj @ mj)
    if family == "bgm":
        return (s_cur @ sj) / (sj @ sj)
    raise ValueError(f"unknown family {family!r}")


def gram_schmidt_transform(pair, hist, family, minv2=None, classical=False):
    """Orthogonalize (s, y) against the windowed history by sequential projection.

    Modified (sequential) Gram-Schmidt by default: each stored direction
    is removed using the partially reduced vector, which is the
    numerically stable variant.  ``classical=True`` computes every
    coefficient from the original s instead (kept for A/B comparison).

    For the broyden family a transformed pair failing s'y > 0 triggers a
    fallback: the raw pair is returned, the window is cleared and then
    reseeded with the raw pair, mirroring a restart of the procedure.

    Returns (SecantPair, fell_back: bool); the history is updated in place.
    """
    s, y = pair.s, pair.y
    st = s.copy()
    yt = y.copy()
    for sj, yj in hist.window:
        ref = s if classical else st
        c = _gs_coefficient(family, minv2, ref, sj, yj)
        st = st - c * sj
        yt = yt - c * yj
    if family == "broyden" and hist.window and st @ yt <= 0:
        hist.window.clear()
        hist.window.append((s, y))
        hist.restarts += 1
        return SecantPair(s, y, "raw"), True
    hist.window.append((st, yt))
    if len(hist.window) > hist.d:
        hist.window.pop(0)
    return SecantPair(st, yt, "projected"), False


def _beta_solve(G, rhs):
    # Solve the d x d projection system.  The system is halved first; this
    # is bit-neutral for the closed forms and the LU solve (exact binary
    # scaling) and documented behavior for the m=3 determinant path.
    m = G.shape[0]
    G = G / 2.0
    rhs = rhs / 2.0
    # The closed forms divide by the determinant; a singular system is
    # reported through non-finite entries, which the caller maps to the
    # same fallback as a LinAlgError from the LU path.
    with np.errstate(divide="ignore", invalid="ignore"):
        if m == 1:
            return rhs / G[0, 0]
        if m == 2:
            det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
            return np.array(
                [
                    (rhs[0] * G[1, 1] - G[0, 1] * rhs[1]) / det,
                    (G[0, 0] * rhs[1] - rhs[0] * G[1, 0]) / det,
                ]
            )
        if m == 3:
            d0 = np.linalg.det(G)
            cols = [
                np.column_stack([rhs if jj == j else G[:, jj] for jj in range(3)])
                for j in range(3)
            ]
            return np.array([np.linalg.det(c) for c in cols]) / d0
    return np.linalg.solve(G, rhs)


def normal_eq_projection(pair, raw, family, lam=0.0, discard_tol=DISCARD_TOL, minv2=None):
    """Project (s, y) against the raw step window via small normal equations.

    Solves the family-specific d x d system (with +lam*I when lam > 0)

        broyden: (S'Y + Y'S) beta = S'y + Y's   (symmetrized)
        gpsb:    (S'M^-2 S) beta = S'M^-2 s
        bgm:     (S'S) beta = S's

    and returns ``(SecantPair(s - S beta, y - Y beta), beta, reason)``
    where ``reason`` is None on success, ``"discard"`` when the projected
    step is near-dependent (||s~|| < discard_tol * ||s||), or
    ``"curvature"`` when s~'y~ <= 0 for the broyden family.  On a
    non-None reason the returned pair is the raw one.  The window itself
    is left untouched; drivers append the raw pair after transforming.
    """
    s, y = pair.s, pair.y
    m = len(raw)
    if m == 0:
        return SecantPair(s, y, pair.transformed), np.empty(0), None
    s_cols = raw.s_list
    y_cols = raw.y_list
    if m == 3:
        s_cols = s_cols[::-1]
        y_cols = y_cols[::-1]
    S = np.column_stack(s_cols)
    Y = np.column_stack(y_cols)
    if family == "broyden":
        G = S.T @ Y + Y.T @ S
        rhs = S.T @ y + Y.T @ s
    elif family == "gpsb":
        MS = S if minv2 is None else minv2 @ S
        G = S.T @ MS
        rhs = MS.T @ s
    elif family == "bgm":
        G = S.T @ S
        rhs = S.T @ s
    else:
        raise ValueError(f"unknown family {family!r}")
    if lam:
        G = G + lam * np.eye(m)
    try:
        beta = _beta_solve(G, rhs)
    except np.linalg.LinAlgError:
        return SecantPair(s, y, "raw"), np.empty(0), "singular"
    if not np.all(np.isfinite(beta)):
        return SecantPair(s, y, "raw"), np.empty(0), "singular"
    st = s - S @ beta
    yt = y - Y @ beta
    if np.linalg.norm(st) < discard_tol * np.linalg.norm(s):
        return SecantPair(s, y, "raw"), beta, "discard"
    if family == "broyden" and st @ yt <= 0:
        return SecantPair(s, y, "raw"), beta, "curvature"
    return SecantPair(st, yt, "projected"), beta, None
