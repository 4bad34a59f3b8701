"""Fixed-target approximation laboratory.

Runs the abstract process B_{k+1} = update(B_k, s_k, y_k) with exact data
y_k = A s_k against a known target A, and turns the matrix-approximation
theory into seeded numerical oracles: per-update error-reduction bounds,
image-operator gain, projection gain with angle identities, the
supporting lemmas, and finite termination of the approximation sequence.

Oracle verdicts use a 1e-9 relative slack (with a unit floor), chosen
above accumulation error for the dense n <= 10 algebra used here.  Trial
generators are seeded; ``verify_all`` reports one row per suite.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .linalg import angle_to_subspace, kernel_basis, weighted_frobenius_error
from .problems import random_spd_matrix
from .updates import (
    SecantPair,
    bfgs_inverse_update,
    bgm_update,
    broyden_update,
    dfp_direct_update,
    gpsb_inverse_update,
    gpsb_update,
)

__all__ = [
    "SLACK",
    "ANGLE_SLACK",
    "ProcessConfig",
    "ProcessTrace",
    "KernelGrowthReport",
    "SuiteRow",
    "run_process",
    "check_kernel_growth",
    "oracle_error_reduction",
    "oracle_image_operator_gain",
    "oracle_projection_gain",
    "oracle_lemmas",
    "verify_all",
]

#: relative slack for inequality oracles (unit floor keeps near-zero cases sane)
SLACK = 1e-9
#: slack for the sin^2-angle identities
ANGLE_SLACK = 1e-8
#: relative residual allowed for the BGM error identity (an equality, not a bound)
BGM_IDENTITY_TOL = 1e-10


def _slacked(scale):
    return SLACK * max(1.0, abs(scale))


# ---------------------------------------------------------------------------
# the approximation process


@dataclass
class ProcessConfig:
    a: np.ndarray
    b0: np.ndarray
    family: str  # broyden | dfp | psb | gpsb | bgm
    theta: float = 0.0  # broyden only
    m_weight: Optional[np.ndarray] = None  # SPD M for the gpsb family
    direction_source: str = "random"  # random | image | orthogonalized | user
    directions: Optional[Sequence[np.ndarray]] = None
    max_steps: Optional[int] = None  # default: n
    seed: int = 0
    kernel_tol: float = 1e-8
    halt_rtol: float = 1e-10


@dataclass
class ProcessTrace:
    matrices: List[np.ndarray] = field(default_factory=list)
    steps: List[np.ndarray] = field(default_factory=list)
    errors: List[float] = field(default_factory=list)
    weighted_errors: Optional[List[float]] = None
    kernel_dims: List[int] = field(default_factory=list)
    reductions: List[float] = field(default_factory=list)
    events: List[str] = field(default_factory=list)
    weight: Optional[np.ndarray] = None  # inner-product matrix (None = identity)
    target: Optional[np.ndarray] = None  # the fixed A, kept for post-hoc analysis
    kernel_tol: float = 1e-8
    status: str = "running"

    @property
    def terminated(self):
        return self.status == "terminated"


@dataclass
class KernelGrowthReport:
    dims: List[int]
    violations: List[str]

    @property
    def ok(self):
        return not self.violations


class _Family:
    """Per-family plumbing: update formula, inner-product weight, image map,
    and the reduction functional whose growth the theorems assert."""

    def __init__(self, config):
        self.name = config.family
        if self.name not in ("broyden", "dfp", "psb", "gpsb", "bgm"):
            raise ValueError(f"unknown family {self.name!r}")
        self.a = config.a
        self.m = None
        self.minv2 = None
        if self.name == "gpsb":
            if config.m_weight is None:
                raise ValueError("the gpsb family needs m_weight (the SPD M)")
            self.m = config.m_weight
            self.minv2 = np.linalg.inv(self.m @ self.m)
        self.theta = config.theta

    def update(self, B, s, y):
        pair = SecantPair(s, y)
        if self.name == "broyden":
            return broyden_update(B, pair, self.theta)
        if self.name == "dfp":
            return dfp_direct_update(B, pair)
        if self.name in ("psb", "gpsb"):
            return gpsb_update(B, pair, self.minv2)
        if self.name == "bgm":
            return bgm_update(B, pair)
        raise ValueError(f"unknown family {self.name!r}")

    def weight_matrix(self):
        # the W defining the family's inner product: <u, v>_W = u' W v
        if self.name in ("broyden", "dfp"):
            return self.a
        if self.name == "gpsb":
            return self.minv2
        return None  # psb, bgm: Euclidean

    def image_direction(self, B, s):
        # W^-1 (B - A)' s: lands in ker(B - A) orthogonal-complement w.r.t. W
        es = (B - self.a).T @ s
        if self.name in ("broyden", "dfp"):
            return np.linalg.solve(self.a, es)
        if self.name == "gpsb":
            return np.linalg.solve(self.minv2, es)
        return es

    def reduction(self, B, s):
        # the per-update error-reduction functional evaluated at s
        es = (B - self.a) @ s
        if self.name in ("broyden", "dfp"):
            return (es @ np.linalg.solve(self.a, es)) / (s @ (self.a @ s))
        if self.name == "gpsb":
            return (es @ np.linalg.solve(self.minv2, es)) / (s @ (self.minv2 @ s))
        return (es @ es) / (s @ s)


def _w_inner(u, v, w):
    return u @ v if w is None else u @ (w @ v)


def run_process(config):
    """Drive the update family toward A with exact pairs (s, As).

    Halts once ||B_k - A||_F <= halt_rtol * ||A||_F (status ``terminated``),
    on an exhausted step budget (``exhausted``), or on a recorded update
    breakdown (``breakdown``).
    """
    a = np.asarray(config.a, dtype=float)
    n = a.shape[0]
    B = np.asarray(config.b0, dtype=float).copy()
    if B.shape != a.shape:
        raise ValueError("A and B0 must be conformable")
    fam = _Family(config)
    rng = np.random.default_rng(config.seed)
    max_steps = config.max_steps if config.max_steps is not None else n
    halt = config.halt_rtol * np.linalg.norm(a, "fro")
    weight = fam.weight_matrix()

    trace = ProcessTrace(weight=weight, target=a, kernel_tol=config.kernel_tol)
    if fam.name == "gpsb":
        trace.weighted_errors = []

    a_norm = np.linalg.norm(a, "fro")

    def record_state():
        E = B - a
        trace.matrices.append(B.copy())
        trace.errors.append(np.linalg.norm(E, "fro"))
        trace.kernel_dims.append(_kernel_basis_scaled(E, config.kernel_tol, a_norm).shape[1])
        if trace.weighted_errors is not None:
            trace.weighted_errors.append(weighted_frobenius_error(E, fam.m))

    def base_direction(k):
        if config.directions is not None:
            if k >= len(config.directions):
                return None
            d = np.asarray(config.directions[k], dtype=float)
            if np.linalg.norm(d) == 0.0:
                raise ValueError("direction vectors must be nonzero")
            return d
        if config.direction_source == "orthogonalized":
            return np.eye(n)[:, k % n]
        return rng.standard_normal(n)

    record_state()
    ortho_hist: List[np.ndarray] = []
    k = 0
    while k < max_steps:
        if trace.errors[-1] <= halt:
            trace.status = "terminated"
            return trace
        s0 = base_direction(k)
        if s0 is None:
            break
        event = ""
        if config.direction_source == "image":
            s = fam.image_direction(B, s0)
            if np.linalg.norm(s) <= 1e-14 * np.linalg.norm(s0):
                event = "degenerate-image"
                s = s0
        elif config.direction_source == "orthogonalized":
            s = s0.copy()
            for h in ortho_hist:
                s = s - (_w_inner(s, h, weight) / _w_inner(h, h, weight)) * h
            if np.linalg.norm(s) <= 1e-12 * np.linalg.norm(s0):
                trace.events.append(f"step {k}: dependent direction skipped")
                k += 1
                continue
            ortho_hist.append(s)
        else:
            s = s0
        y = a @ s
        trace.reductions.append(fam.reduction(B, s))
        try:
            B = fam.update(B, s, y)
        except ArithmeticError as exc:
            trace.events.append(f"step {k}: breakdown: {exc}")
            trace.status = "breakdown"
            return trace
        trace.steps.append(s)
        if event:
            trace.events.append(f"step {k}: {event}")
        record_state()
        k += 1
    trace.status = "terminated" if trace.errors[-1] <= halt else "exhausted"
    return trace


def _kernel_basis_scaled(E, tol, scale):
    """kernel_basis with a matrix-zero floor: an E that vanishes relative
    to the process scale has the whole space as its kernel (the plain
    relative-sigma rule would see only noise there)."""
    if np.linalg.norm(E, "fro") <= tol * scale:
        return np.eye(E.shape[0])
    return kernel_basis(E, tol)


def check_kernel_growth(trace, tol=None, ortho_tol=1e-8):
    """Kernel dimensions of B_k - A must never shrink, and must grow
    strictly whenever the step was W-orthogonal to the whole current
    kernel (within ortho_tol, relative).

    A step that merely leans away from the kernel does not force growth:
    the update evicts the kernel slice the step is W-correlated with while
    admitting the step itself, so the dimension can stand still.  Strict
    growth is guaranteed exactly when nothing is evicted, i.e. when the
    step is W-orthogonal to every current kernel direction - which is how
    the image-operator and orthogonalized sources construct their steps.
    """
    tol = trace.kernel_tol if tol is None else tol
    scale = np.linalg.norm(trace.target, "fro")
    dims = []
    bases = []
    for Bk in trace.matrices:
        basis = _kernel_basis_scaled(Bk - trace.target, tol, scale)
        bases.append(basis)
        dims.append(basis.shape[1])
    violations = []
    w = trace.weight
    for j, s in enumerate(trace.steps):
        if dims[j + 1] < dims[j]:
            violations.append(f"step {j}: kernel dimension fell {dims[j]} -> {dims[j + 1]}")
            continue
        basis = bases[j]
        ws = s if w is None else w @ s
        s_norm = np.sqrt(s @ ws)
        if basis.shape[1]:
            cols_w = np.sqrt(np.einsum("ij,ij->j", basis, basis if w is None else w @ basis))
            ortho = np.all(np.abs(basis.T @ ws) <= ortho_tol * s_norm * cols_w)
        else:
            ortho = True
        if ortho and dims[j] < basis.shape[0] and dims[j + 1] <= dims[j]:
            violations.append(
                f"step {j}: W-orthogonal direction did not grow the kernel "
                f"({dims[j]} -> {dims[j + 1]})"
            )
    return KernelGrowthReport(dims=dims, violations=violations)


# ---------------------------------------------------------------------------
# inequality oracles


def oracle_error_reduction(family, a, b, m, s):
    """Both sides of the per-update error-reduction statement.

    family ``gpsb``: ||PSB_M(B,A,s) - A||_{M,F}^2 <= ||B - A||_{M,F}^2
    - ||M(B-A)s||^2 / ||M^-1 s||^2 (m=None means M=I).  family ``bgm``:
    the same form with Euclidean norms holds as an exact identity.
    Returns (lhs, rhs, holds).
    """
    s = np.asarray(s, dtype=float)
    y = a @ s
    E = b - a
    if family == "gpsb":
        minv2 = None if m is None else np.linalg.inv(m @ m)
        bplus = gpsb_update(b, SecantPair(s, y), minv2)
        lhs = weighted_frobenius_error(bplus - a, m) ** 2
        num = np.linalg.norm(E @ s if m is None else m @ (E @ s)) ** 2
        den = np.linalg.norm(s if m is None else np.linalg.solve(m, s)) ** 2
        rhs = weighted_frobenius_error(E, m) ** 2 - num / den
        return lhs, rhs, lhs <= rhs + _slacked(rhs)
    if family == "bgm":
        bplus = bgm_update(b, SecantPair(s, y))
        lhs = np.linalg.norm(bplus - a, "fro") ** 2
        rhs = np.linalg.norm(E, "fro") ** 2 - np.linalg.norm(E @ s) ** 2 / (s @ s)
        return lhs, rhs, abs(lhs - rhs) <= BGM_IDENTITY_TOL * max(1.0, abs(rhs))
    raise ValueError(f"unknown family {family!r}")


def _image_setup(family, a, b, m):
    """(E, apply_w, (base_ratio, improved_ratio)) for each image-gain
    theorem; ``b`` is the inverse approximation H for the bfgs variants.
    The two functionals coincide except for bgm, whose nonsymmetric E
    needs the transpose on the base side."""
    if family == "gpsb":
        E = b - a
        m2 = None if m is None else m @ m

        def apply_w(v):
            return E @ v if m2 is None else m2 @ (E @ v)

        def ratio(v):
            ev = E @ v
            num = np.linalg.norm(ev if m is None else m @ ev) ** 2
            den = np.linalg.norm(v if m is None else np.linalg.solve(m, v)) ** 2
            return num / den

    elif family in ("dfp", "dfp-ordered"):
        E = b - a
        inner = b if family == "dfp-ordered" else a

        def apply_w(v):
            return np.linalg.solve(inner, E @ v)

        def ratio(v):
            ev = E @ v
            return (ev @ np.linalg.solve(a, ev)) / (v @ (a @ v))

    elif family in ("bfgs", "bfgs-ordered"):
        E = b - np.linalg.inv(a)  # b is H here
        if family == "bfgs":

            def apply_w(v):
                return a @ (E @ v)

        else:

            def apply_w(v):
                return np.linalg.solve(b, E @ v)

        def ratio(v):
            ev = E @ v
            return (ev @ (a @ ev)) / (v @ np.linalg.solve(a, v))

    elif family == "bgm":
        E = b - a

        def apply_w(v):
            return E.T @ v

        # The Cauchy-Schwarz argument bounds ||E(E^T s)||^2/||E^T s||^2 from
        # below by ||E^T s||^2/||s||^2 (both are Rayleigh quotients of EE^T);
        # a base of ||Es||^2/||s||^2 would be false for nonsymmetric E, so
        # the base functional carries the transpose.
        def base_ratio(v):
            return np.linalg.norm(E.T @ v) ** 2 / (v @ v)

        def ratio(v):
            return np.linalg.norm(E @ v) ** 2 / (v @ v)

        return E, apply_w, (base_ratio, ratio)

    else:
        raise ValueError(f"unknown family {family!r}")
    return E, apply_w, (ratio, ratio)


def _one_signed(sym, tol):
    w = np.linalg.eigvalsh(sym)
    return np.all(w >= -tol) or np.all(w <= tol)


def oracle_image_operator_gain(family, a, b, m, s):
    """Gain of the family's image operator: the reduction functional does
    not decrease when s is replaced by Ws.

    Returns (base, improved, holds); ``holds`` is True/False or one of the
    strings ``"hypothesis not met"`` / ``"degenerate"`` (neither counts as
    a violation).  For the bfgs variants ``b`` is the inverse
    approximation H and ``s`` plays the role of y.
    """
    s = np.asarray(s, dtype=float)
    E, apply_w, (base_ratio, ratio) = _image_setup(family, a, b, m)
    scale = np.linalg.norm(E, "fro") * np.linalg.norm(s)
    if family == "dfp-ordered":
        tol = 1e-12 * max(1.0, np.linalg.norm(E, "fro"))
        if (
            np.any(np.linalg.eigvalsh(a) <= 0)
            or np.any(np.linalg.eigvalsh(b) <= 0)
            or not _one_signed(E, tol)
        ):
            return 0.0, 0.0, "hypothesis not met"
    if family == "bfgs-ordered":
        tol = 1e-12 * max(1.0, np.linalg.norm(E, "fro"))
        if (
            np.any(np.linalg.eigvalsh(a) <= 0)
            or np.any(np.linalg.eigvalsh(b) <= 0)
            or not _one_signed(E, tol)
        ):
            return 0.0, 0.0, "hypothesis not met"
    ws = apply_w(s)
    if np.linalg.norm(ws) <= 1e-13 * max(scale, 1e-300):
        return 0.0, 0.0, "degenerate"
    base = base_ratio(s)
    improved = ratio(ws)
    return base, improved, bool(improved >= base - _slacked(base))


def oracle_projection_gain(family, a, b, m, subspace_basis, s):
    """Gain from W-orthogonal projection of s against a subspace of
    ker(B - A): family ``gpsb`` (W = M^-2, m=None meaning M=I) or ``bgm``
    (Euclidean).  Returns (base, improved, holds, angle_identity_residual)
    where the identity is base = sin^2(angle(s, subspace)) * improved.
    """
    s = np.asarray(s, dtype=float)
    E = b - a
    if family == "gpsb":
        wmat = None if m is None else np.linalg.inv(m @ m)

        def ratio(v):
            ev = E @ v
            num = np.linalg.norm(ev if m is None else m @ ev) ** 2
            den = np.linalg.norm(v if m is None else np.linalg.solve(m, v)) ** 2
            return num / den

    elif family == "bgm":
        wmat = None

        def ratio(v):
            return np.linalg.norm(E @ v) ** 2 / (v @ v)

    else:
        raise ValueError(f"unknown family {family!r}")

    C = np.asarray(subspace_basis, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    if C.shape[1] == 0:
        stilde = s
    else:
        wc = C if wmat is None else wmat @ C
        coef = np.linalg.solve(C.T @ wc, wc.T @ s)
        stilde = s - C @ coef
    if np.linalg.norm(stilde) <= 1e-12 * np.linalg.norm(s):
        return ratio(s), 0.0, "degenerate", 0.0
    base = ratio(s)
    improved = ratio(stilde)
    sin2 = _w_inner(stilde, stilde, wmat) / _w_inner(s, s, wmat)
    angle_residual = abs(base - sin2 * improved) / max(1.0, abs(base))
    holds = bool(improved >= base - _slacked(base))
    return base, improved, holds, angle_residual


# ---------------------------------------------------------------------------
# lemma oracles


@dataclass
class SuiteRow:
    name: str
    trials: int
    violations: int
    max_residual: float
    skipped: int = 0
    note: str = ""

    def __str__(self):
        line = (
            f"{self.name}: trials={self.trials} violations={self.violations} "
            f"max_residual={self.max_residual:.3e}"
        )
        if self.skipped:
            line += f" skipped={self.skipped}"
        if self.note:
            line += f" [{self.note}]"
        return line

    @property
    def ok(self):
        return self.violations == 0


def _rand_sym(rng, n):
    z = rng.standard_normal((n, n))
    return (z + z.T) / 2.0


def _sym_with_kernel(rng, n, kd):
    """Symmetric E with exactly a kd-dimensional kernel; returns (E, U)
    with U an orthonormal kernel basis."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    U, V = q[:, :kd], q[:, kd:]
    d = rng.uniform(0.5, 2.0, n - kd) * rng.choice([-1.0, 1.0], n - kd)
    return V @ np.diag(d) @ V.T, U


def _nonsym_with_kernel(rng, n, kd):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    U = q[:, :kd]
    R = rng.standard_normal((n, n)) + n * np.eye(n)
    return R @ (np.eye(n) - U @ U.T), U


def _lemma_projected_contraction(rng):
    n = int(rng.integers(2, 9))
    C = _rand_sym(rng, n)
    s = rng.standard_normal(n)
    P = np.eye(n) - np.outer(s, s) / (s @ s)
    D = P @ C @ P
    lhs = np.linalg.norm(D, "fro") ** 2
    rhs = np.linalg.norm(C, "fro") ** 2 - np.linalg.norm(C @ s) ** 2 / (s @ s)
    return max(0.0, lhs - rhs) / max(1.0, abs(rhs))


def _lemma_image_ratio(rng):
    n = int(rng.integers(2, 9))
    B = _rand_sym(rng, n)
    u = rng.standard_normal(n)
    bu = B @ u
    if np.linalg.norm(bu) <= 1e-12 * np.linalg.norm(u):
        return None
    l_u = np.linalg.norm(bu) ** 2 / (u @ u)
    l_bu = np.linalg.norm(B @ bu) ** 2 / (bu @ bu)
    return max(0.0, l_u - l_bu) / max(1.0, abs(l_u))


def _lemma_one_sided_ratio(rng):
    n = int(rng.integers(2, 9))
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    if rng.integers(2):
        lam = np.exp(rng.uniform(0.0, np.log(10.0), n))  # L >= I
    else:
        lam = np.exp(rng.uniform(np.log(0.1), 0.0, n))  # L <= I
    L = q @ np.diag(lam) @ q.T
    u = rng.standard_normal(n)
    ilu = (np.eye(n) - L) @ u
    if np.linalg.norm(ilu) <= 1e-10 * np.linalg.norm(u):
        return None
    K = np.linalg.inv(L) - np.eye(n)
    lhs = np.linalg.norm(K @ ilu) ** 2 / (ilu @ ilu)
    rhs = np.linalg.norm(K @ u) ** 2 / (u @ u)
    return max(0.0, rhs - lhs) / max(1.0, abs(rhs))


def _least_change(rng, dual):
    n = int(rng.integers(2, 9))
    B = _rand_sym(rng, n)
    M = random_spd_matrix(n, rng, spectrum=(0.5, 2.0))
    minv2 = np.linalg.inv(M @ M)
    s = rng.standard_normal(n)
    y = rng.standard_normal(n)
    pair = SecantPair(s, y)
    if dual:
        bplus = gpsb_inverse_update(B, pair, minv2)
        con, target = y, s
    else:
        bplus = gpsb_update(B, pair, minv2)
        con, target = s, y
    res = np.linalg.norm(bplus @ con - target) / max(1.0, np.linalg.norm(target))
    res = max(res, np.linalg.norm(bplus - bplus.T, "fro"))
    dist = weighted_frobenius_error(bplus - B, M)
    P = np.eye(n) - np.outer(con, con) / (con @ con)
    worst = 0.0
    for _ in range(100):
        Z = _rand_sym(rng, n)
        competitor = bplus + P @ Z @ P  # symmetric, same secant action
        cdist = weighted_frobenius_error(competitor - B, M)
        worst = max(worst, (dist - cdist) / max(1.0, cdist))
    return max(res, worst)


_LEMMAS = {
    "projected-contraction": _lemma_projected_contraction,
    "image-ratio": _lemma_image_ratio,
    "one-sided-ratio": _lemma_one_sided_ratio,
    "least-change-direct": lambda rng: _least_change(rng, dual=False),
    "least-change-dual": lambda rng: _least_change(rng, dual=True),
}


def oracle_lemmas(which, trials=500, seed=0):
    """Seeded verification of one supporting lemma; see _LEMMAS for ids."""
    gen = _LEMMAS[which]
    rng = np.random.default_rng(seed)
    violations = 0
    max_res = 0.0
    skipped = 0
    done = 0
    while done < trials:
        res = gen(rng)
        if res is None:
            skipped += 1
            continue
        done += 1
        max_res = max(max_res, res)
        if res > SLACK:
            violations += 1
    return SuiteRow(f"lemma/{which}", trials, violations, max_res, skipped)


# ---------------------------------------------------------------------------
# suite runners


def _suite_error_reduction(seed, trials):
    rows = []
    rng = np.random.default_rng(seed)
    violations = 0
    max_res = 0.0
    for t in range(trials):
        n = int(rng.integers(2, 9))
        a = _rand_sym(rng, n)
        b = _rand_sym(rng, n)
        m = None if t % 3 == 0 else random_spd_matrix(n, rng, spectrum=(0.5, 2.0))
        s = rng.standard_normal(n)
        lhs, rhs, holds = oracle_error_reduction("gpsb", a, b, m, s)
        res = max(0.0, lhs - rhs) / max(1.0, abs(rhs))
        max_res = max(max_res, res)
        violations += not holds
    rows.append(SuiteRow("error-reduction/gpsb", trials, violations, max_res))

    rng = np.random.default_rng(seed + 1)
    violations = 0
    max_res = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        a = rng.standard_normal((n, n))
        b = rng.standard_normal((n, n))
        s = rng.standard_normal(n)
        lhs, rhs, holds = oracle_error_reduction("bgm", a, b, None, s)
        res = abs(lhs - rhs) / max(1.0, abs(rhs))
        max_res = max(max_res, res)
        violations += not holds
    rows.append(SuiteRow("error-reduction/bgm-identity", trials, violations, max_res))
    return rows


def _image_trial(family, rng):
    n = int(rng.integers(2, 9))
    m = None
    if family == "gpsb":
        a, b = _rand_sym(rng, n), _rand_sym(rng, n)
        m = random_spd_matrix(n, rng, spectrum=(0.5, 2.0))
    elif family == "dfp":
        a = random_spd_matrix(n, rng)
        b = _rand_sym(rng, n)
    elif family == "dfp-ordered":
        a = random_spd_matrix(n, rng)
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        pert = q @ np.diag(rng.uniform(0.1, 1.0, n)) @ q.T
        if rng.integers(2):
            b = a + pert
        else:
            scale = 0.4 * np.linalg.eigvalsh(a)[0] / np.linalg.eigvalsh(pert)[-1]
            b = a - scale * pert
    elif family == "bfgs":
        a = random_spd_matrix(n, rng)
        b = _rand_sym(rng, n)  # plays H
    elif family == "bfgs-ordered":
        a = random_spd_matrix(n, rng)
        ainv = np.linalg.inv(a)
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        pert = q @ np.diag(rng.uniform(0.1, 1.0, n)) @ q.T
        if rng.integers(2):
            b = ainv + pert
        else:
            scale = 0.4 * np.linalg.eigvalsh(ainv)[0] / np.linalg.eigvalsh(pert)[-1]
            b = ainv - scale * pert
    else:  # bgm
        a = rng.standard_normal((n, n))
        b = rng.standard_normal((n, n))
    s = rng.standard_normal(n)
    return oracle_image_operator_gain(family, a, b, m, s)


def _suite_image_gain(seed, trials):
    rows = []
    for i, family in enumerate(["gpsb", "dfp", "dfp-ordered", "bfgs", "bfgs-ordered", "bgm"]):
        rng = np.random.default_rng(seed + 10 + i)
        violations = 0
        skipped = 0
        max_res = 0.0
        done = 0
        while done < trials:
            base, improved, holds = _image_trial(family, rng)
            if holds in ("hypothesis not met", "degenerate"):
                skipped += 1
                continue
            done += 1
            res = max(0.0, base - improved) / max(1.0, abs(base))
            max_res = max(max_res, res)
            violations += not holds
        rows.append(SuiteRow(f"image-gain/{family}", trials, violations, max_res, skipped))
    # counterexample hunt: the ordered functionals evaluated WITHOUT their
    # ordering hypothesis.  Reported informationally, never as failures.
    for j, family in enumerate(["dfp-ordered", "bfgs-ordered"]):
        rng = np.random.default_rng(seed + 17 + j)
        breaches = 0
        worst = 0.0
        done = 0
        while done < trials:
            n = int(rng.integers(2, 9))
            a = random_spd_matrix(n, rng)
            b = random_spd_matrix(n, rng)
            s = rng.standard_normal(n)
            E, apply_w, (base_ratio, ratio) = _image_setup(family, a, b, None)
            ws = apply_w(s)
            scale = np.linalg.norm(E, "fro") * np.linalg.norm(s)
            if np.linalg.norm(ws) <= 1e-13 * max(scale, 1e-300):
                continue
            done += 1
            base, improved = base_ratio(s), ratio(ws)
            if improved < base - _slacked(base):
                breaches += 1
                worst = max(worst, (base - improved) / max(1.0, abs(base)))
        rows.append(SuiteRow(
            f"image-gain/{family}-unconstrained", trials, 0, worst,
            note=f"informational hunt: {breaches} breaches without the ordering hypothesis",
        ))
    return rows


def _suite_projection_gain(seed, trials):
    rows = []
    specs = [
        ("gpsb", False), ("gpsb", True), ("bgm", False), ("bgm", True),
    ]
    for i, (family, proper) in enumerate(specs):
        rng = np.random.default_rng(seed + 20 + i)
        violations = 0
        skipped = 0
        max_res = 0.0
        done = 0
        while done < trials:
            n = int(rng.integers(3 if proper else 2, 9))
            kd = int(rng.integers(2, n)) if proper else int(rng.integers(1, n))
            if family == "gpsb":
                a = _rand_sym(rng, n)
                E, U = _sym_with_kernel(rng, n, kd)
                m = None if rng.integers(3) == 0 else random_spd_matrix(n, rng, spectrum=(0.5, 2.0))
            else:
                a = rng.standard_normal((n, n))
                E, U = _nonsym_with_kernel(rng, n, kd)
                m = None
            b = a + E
            s = rng.standard_normal(n)
            basis = U[:, : kd - 1] if proper else U
            out = oracle_projection_gain(family, a, b, m, basis, s)
            base, improved, holds, angle_res = out
            if holds == "degenerate":
                skipped += 1
                continue
            done += 1
            res = max(max(0.0, base - improved) / max(1.0, abs(base)), angle_res)
            if proper:
                # monotonicity: the full-kernel angle is no larger than the
                # subspace angle (sin theta <= sin gamma)
                wmat = None
                if family == "gpsb" and m is not None:
                    wmat = np.linalg.inv(m @ m)
                sin_g = _sin_to_complement(s, basis, wmat)
                sin_t = _sin_to_complement(s, U, wmat)
                res = max(res, max(0.0, sin_t - sin_g))
            max_res = max(max_res, res)
            if (not holds) or angle_res > ANGLE_SLACK:
                violations += 1
        tag = "subspace" if proper else "kernel"
        rows.append(SuiteRow(f"projection-gain/{family}-{tag}", trials, violations, max_res, skipped))
    return rows


def _sin_to_complement(s, basis, wmat):
    """sin of the W-angle between s and span(basis): norm ratio of the
    W-orthogonal residual of s against the basis."""
    wb = basis if wmat is None else wmat @ basis
    coef = np.linalg.solve(basis.T @ wb, wb.T @ s)
    resid = s - basis @ coef
    return np.sqrt(max(0.0, _w_inner(resid, resid, wmat) / _w_inner(s, s, wmat)))


def _termination_config(family, theta, n, seed, source, rng):
    a = random_spd_matrix(n, rng)
    kwargs = dict(a=a, b0=np.eye(n), direction_source=source, seed=seed, max_steps=n)
    if family == "gpsb":
        kwargs["m_weight"] = random_spd_matrix(n, rng, spectrum=(0.5, 2.0))
    return ProcessConfig(family=family, theta=theta, **kwargs)


def _suite_termination(seed, instances=100):
    rows = []
    cases = [
        ("broyden", 0.0), ("broyden", 1.0), ("psb", 0.0), ("gpsb", 0.0), ("bgm", 0.0),
    ]
    for fi, (family, theta) in enumerate(cases):
        for source in ("image", "orthogonalized"):
            rng = np.random.default_rng(seed + 40 + fi)
            violations = 0
            max_res = 0.0
            for t in range(instances):
                n = 2 + t % 9
                config = _termination_config(family, theta, n, seed + t, source, rng)
                trace = run_process(config)
                rel = trace.errors[-1] / np.linalg.norm(config.a, "fro")
                max_res = max(max_res, rel)
                if rel > 1e-8 or len(trace.steps) > n:
                    violations += 1
            name = f"termination/{family}{'-dfp' if theta == 1.0 else ''}-{source}"
            if family == "broyden":
                name = f"termination/broyden-theta{int(theta)}-{source}"
            rows.append(SuiteRow(name, instances, violations, max_res))
    return rows


def _suite_kernel_growth(seed, instances=50):
    violations = 0
    max_res = 0.0
    rng = np.random.default_rng(seed + 60)
    for t in range(instances):
        n = 2 + t % 9
        family = ("dfp", "psb", "bgm", "gpsb")[t % 4]
        source = ("random", "image", "orthogonalized")[t % 3]
        a = random_spd_matrix(n, rng)
        m = random_spd_matrix(n, rng, spectrum=(0.5, 2.0)) if family == "gpsb" else None
        config = ProcessConfig(
            a=a, b0=np.eye(n), family=family, direction_source=source,
            m_weight=m, seed=seed + t, max_steps=n,
        )
        trace = run_process(config)
        for tol in (trace.kernel_tol, 10 * trace.kernel_tol):
            report = check_kernel_growth(trace, tol)
            violations += len(report.violations)
    return [SuiteRow("process/kernel-growth", instances, violations, max_res)]


def _suite_span_inclusion(seed, instances=50):
    violations = 0
    max_res = 0.0
    rng = np.random.default_rng(seed + 70)
    for t in range(instances):
        n = 2 + t % 9
        family, theta = (("broyden", 0.0), ("dfp", 0.0), ("psb", 0.0), ("bgm", 0.0))[t % 4]
        a = random_spd_matrix(n, rng)
        config = ProcessConfig(
            a=a, b0=np.eye(n), family=family, theta=theta,
            direction_source="orthogonalized", seed=seed + t, max_steps=n,
        )
        trace = run_process(config)
        halt = 1e-10 * np.linalg.norm(a, "fro")
        for k in range(1, len(trace.matrices)):
            Ek = trace.matrices[k] - a
            if np.linalg.norm(Ek, "fro") <= halt:
                break
            for j in range(k):
                sj = trace.steps[j]
                res = np.linalg.norm(Ek @ sj) / (
                    np.linalg.norm(Ek, "fro") * np.linalg.norm(sj)
                )
                max_res = max(max_res, res)
                if res > 1e-8:
                    violations += 1
    return [SuiteRow("process/span-inclusion", instances, violations, max_res)]


def _suite_image_space(seed, trials=200):
    violations = 0
    max_res = 0.0
    rng = np.random.default_rng(seed + 80)
    for t in range(trials):
        n = int(rng.integers(2, 9))
        kd = int(rng.integers(0, n))
        if t % 2:
            E, _ = _sym_with_kernel(rng, n, kd) if kd else (_rand_sym(rng, n), None)
        else:
            E, _ = _nonsym_with_kernel(rng, n, kd) if kd else (rng.standard_normal((n, n)), None)
        W = random_spd_matrix(n, rng, spectrum=(0.5, 2.0))
        K = kernel_basis(E, 1e-8)
        X = np.linalg.solve(W, E.T)
        rank = np.linalg.matrix_rank(X, tol=1e-8 * max(1.0, np.linalg.norm(X, 2)))
        if rank + K.shape[1] != n:
            violations += 1
            continue
        if K.shape[1] == 0 or rank == 0:
            continue
        for i in range(n):
            xi = X[:, i]
            nx = np.linalg.norm(xi)
            if nx <= 1e-12:
                continue
            for j in range(K.shape[1]):
                res = abs(xi @ (W @ K[:, j])) / (
                    np.sqrt(xi @ (W @ xi)) * np.sqrt(K[:, j] @ (W @ K[:, j]))
                )
                max_res = max(max_res, res)
                if res > SLACK:
                    violations += 1
    return [SuiteRow("process/image-space-characterization", trials, violations, max_res)]


def verify_all(seed=0, trials=500):
    """Run every oracle suite; returns a list of SuiteRow."""
    rows = []
    rows += _suite_error_reduction(seed, trials)
    rows += _suite_image_gain(seed, trials)
    rows += _suite_projection_gain(seed, trials)
    for which in _LEMMAS:
        rows.append(oracle_lemmas(which, trials, seed + 30))
    rows += _suite_termination(seed)
    rows += _suite_kernel_growth(seed)
    rows += _suite_span_inclusion(seed)
    rows += _suite_image_space(seed)
    return rows
