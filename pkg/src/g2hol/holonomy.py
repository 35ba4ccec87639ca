"""Holonomy certificates: curvature span against the expected algebra plus small-loop transport.

The span part stacks the frame endomorphisms R(b_a, b_b) and (nabla_{b_c} R)(b_a, b_b)
over sample points and measures their rank.  The transport part integrates the
parallel-transport equation around small coordinate rectangles, which gives an
independent estimate of the same curvature through log(P) ~ -eps^2 R(d_i, d_j).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import combinations
import math

import numpy as np
from scipy.linalg import logm

from .coframe import (
    CoframeCase,
    DEFAULT_HI,
    DEFAULT_LO,
    max_constraint_residual,
    metric_at,
    sample_points,
)
from .curvature import christoffel_from_metric, curvature_at, relative_membership, to_frame

PLANES = tuple(combinations(range(7), 2))
LOG_LIMIT = 0.5


class TransportError(ArithmeticError):
    """The loop holonomy is too far from the identity for a reliable logarithm."""


@dataclass
class Tolerances:
    pde: float = 1e-10
    theta: float = 1e-8
    membership: float = 1e-8
    transport: float = 1e-4
    span: float = 1e-6  # relative singular value cutoff
    gap: float = 10.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"tolerance {k} must be positive, got {v}")


@dataclass
class LoopSpec:
    """Rectangle p -> p + eps e_i -> p + eps (e_i + e_j) -> p + eps e_j -> p (0-based i, j)."""

    base: np.ndarray
    plane: tuple
    eps: float = 1e-2
    steps: int = 8

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        i, j = self.plane
        if not (0 <= i < 7 and 0 <= j < 7 and i != j):
            raise ValueError(f"bad plane {self.plane}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.steps < 1:
            raise ValueError("need at least one integrator step per side")


# ---------------------------------------------------------------------------
# span


def span_rank(vectors: np.ndarray, rel: float = 1e-6) -> tuple:
    """(rank, gap, singular values) with the cutoff ``sigma > rel * sigma_max``.

    ``gap`` is sigma_r / sigma_{r+1}; ``None`` when no singular value was
    discarded or when everything is zero.
    """
    x = np.asarray(vectors, dtype=float).reshape(-1, 49)
    if x.size == 0:
        return 0, None, np.zeros(0)
    s = np.linalg.svd(x, compute_uv=False)
    if s[0] == 0.0:
        return 0, None, s
    r = int(np.sum(s > rel * s[0]))
    # below max(shape) * machine eps the cutoff no longer separates signal from rounding
    if r == len(s) or s[r] == 0.0:
        return r, None, s
    return r, float(s[r - 1] / s[r]), s


def svd_resolution(n_rows: int, n_cols: int = 49) -> float:
    """Smallest relative cutoff that still sits above rounding noise (numpy's rank default)."""
    return max(n_rows, n_cols) * float(np.finfo(float).eps)


@dataclass
class SpanReport:
    span_dim_R: int
    span_dim_total: int
    gap: float | None
    membership_residual: float
    theta_residual: float
    resolution: float = 0.0
    singular_values: list = field(default_factory=list)


def span_certificate(case: CoframeCase, points, algebra: str | None = None,
                     rel: float = 1e-6) -> SpanReport:
    algebra = algebra or case.expected_algebra
    cv = curvature_at(case, points, nabla=True, theta=True)
    R = cv.frame_pairs().reshape(-1, 7, 7)
    N = cv.nabla_frame_pairs().reshape(-1, 7, 7)
    dR, _, _ = span_rank(R, rel)
    allv = np.concatenate([R, N])
    dT, gap, s = span_rank(allv, rel)
    mem = float(np.max(relative_membership(allv, algebra)))
    th = float(np.max(relative_membership(cv.theta.reshape(-1, 7, 7), algebra)))
    return SpanReport(dR, dT, gap, mem, th, svd_resolution(len(allv)), [float(v) for v in s])


# ---------------------------------------------------------------------------
# parallel transport


def _gamma_at(case: CoframeCase, pts: np.ndarray) -> np.ndarray:
    g, _ = metric_at(case, pts, 1)
    return christoffel_from_metric(g).value


def _legs(eps: float, planes) -> list:
    """Four velocity arrays (n_loops, 7); each side is traversed in unit time."""
    out = []
    for sgn, which in ((1, 0), (1, 1), (-1, 0), (-1, 1)):
        v = np.zeros((len(planes), 7))
        for n, pl in enumerate(planes):
            v[n, pl[which]] = sgn * eps
        out.append(v)
    return out


def transport_matrices(case: CoframeCase, base, planes=PLANES, eps: float = 1e-2,
                       steps: int = 8) -> np.ndarray:
    """Coordinate transport maps around each rectangle, integrated in lockstep (RK4).

    Solves dV/dt = -Gamma(gamma(t))(gamma'(t), V) for the 7x7 fundamental matrix.
    """
    base = np.asarray(base, dtype=float)
    n = len(planes)
    V = np.broadcast_to(np.eye(7), (n, 7, 7)).copy()
    pos = np.broadcast_to(base, (n, 7)).copy()
    h = 1.0 / steps

    def rhs(x, vel, V):
        gam = _gamma_at(case, x)  # [n, k, a, b]
        A = np.einsum("nkab,na->nkb", gam, vel)
        return -A @ V

    for vel in _legs(eps, planes):
        for _ in range(steps):
            k1 = rhs(pos, vel, V)
            mid = pos + 0.5 * h * vel
            k2 = rhs(mid, vel, V + 0.5 * h * k1)
            k3 = rhs(mid, vel, V + 0.5 * h * k2)
            end = pos + h * vel
            k4 = rhs(end, vel, V + h * k3)
            V = V + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            pos = end
    return V


def frame_logs(case: CoframeCase, base, planes=PLANES, eps: float = 1e-2, steps: int = 8) -> np.ndarray:
    """log of the loop holonomies, expressed in the b-frame at ``base``: (n_loops, 7, 7)."""
    base = np.asarray(base, dtype=float)
    P = transport_matrices(case, base, planes, eps, steps)
    _, bj = metric_at(case, base[None], 0)
    B = bj.value[0]
    Binv = np.linalg.inv(B)
    out = np.empty_like(P)
    for n, p in enumerate(P):
        dist = float(np.linalg.norm(p - np.eye(7), 2))
        if dist > LOG_LIMIT:
            raise TransportError(
                f"loop in plane x{planes[n][0] + 1}-x{planes[n][1] + 1}: |P - I| = {dist:.3g} > {LOG_LIMIT}; "
                "shrink eps"
            )
        lg = logm(B @ p @ Binv)
        out[n] = np.real(lg)
    return out


def transport_loop(case: CoframeCase, loop: LoopSpec) -> np.ndarray:
    """Frame log of a single loop."""
    return frame_logs(case, loop.base, [tuple(loop.plane)], loop.eps, loop.steps)[0]


def transport_residual(logs: np.ndarray, eps: float, algebra: str) -> float:
    """Membership of log/eps^2 against the algebra, relative to max(1, |log|/eps^2)."""
    return float(np.max(relative_membership(logs / eps**2, algebra)))


def frame_coordinate_curvature(case: CoframeCase, base, planes=PLANES) -> np.ndarray:
    """R(d_i, d_j) at ``base`` conjugated into the frame, one per plane."""
    cv = curvature_at(case, np.asarray(base)[None], nabla=False, theta=False)
    Rc = np.stack([cv.R[0, :, :, i, j] for i, j in planes])
    return to_frame(Rc[None], cv.B, cv.Binv)[0]


ROUNDOFF_FLOOR = 1e-9


def eps_scaling(case: CoframeCase, base, plane, eps: float = 1e-2, steps: int = 8) -> dict:
    """Compare log/eps^2 with -R(d_i, d_j) at eps and eps/2.

    Errors are relative to max(1, |R|).  ``order`` is log2 of the error ratio, or
    ``None`` when the error at ``eps`` is already below ``ROUNDOFF_FLOOR``: then the
    O(eps) term vanishes (e.g. nabla R = 0) and the ratio only measures rounding.
    """
    target = -frame_coordinate_curvature(case, base, [plane])[0]
    scale = max(1.0, float(np.linalg.norm(target)))
    errs = []
    for e in (eps, eps / 2):
        lg = frame_logs(case, base, [plane], e, steps)[0]
        errs.append(float(np.linalg.norm(lg / e**2 - target)) / scale)
    order = math.log2(errs[0] / errs[1]) if errs[0] > ROUNDOFF_FLOOR and errs[1] > 0 else None
    return {"error_eps": errs[0], "error_half": errs[1], "order": order}


# ---------------------------------------------------------------------------
# certificates


@dataclass
class HolonomyCertificate:
    case: str
    expected_algebra: str
    expected_dim: int
    pde_residual: float
    theta_residual: float
    span_dim_R: int
    span_dim_total: int
    membership_residual: float
    transport_residual: float | None
    gap: float | None
    verdict: str
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        return {k: _clean(v) for k, v in d.items()}


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def certify(case: CoframeCase, points=None, seed: int = 0, n_points: int = 20,
            lo: float = DEFAULT_LO, hi: float = DEFAULT_HI, tol: Tolerances | None = None,
            eps: float = 1e-2, steps: int = 8, algebra: str | None = None) -> HolonomyCertificate:
    """Run every check for one case and fill in the verdict."""
    tol = tol or Tolerances()
    algebra = algebra or case.expected_algebra
    from .g2algebra import get_subalgebra

    expected_dim = get_subalgebra(algebra).dim
    if points is None:
        points = sample_points(seed, n_points, lo, hi)
    pde = max_constraint_residual(case, points)
    span = span_certificate(case, points, algebra, tol.span)
    base = np.full(7, 0.5 * (lo + hi))
    try:
        logs = frame_logs(case, base, PLANES, eps, steps)
        trans = transport_residual(logs, eps, algebra)
    except TransportError:
        trans = None
    failures = []
    if not pde < tol.pde:
        failures.append("pde")
    if not span.theta_residual < tol.theta:
        failures.append("theta")
    if not span.membership_residual < tol.membership:
        failures.append("membership")
    if tol.span < span.resolution:
        failures.append("span_tolerance")
    if span.span_dim_total != expected_dim:
        failures.append("span_dim")
    if span.gap is not None and not span.gap >= tol.gap:
        failures.append("gap")
    if trans is None or not trans < tol.transport:
        failures.append("transport")
    return HolonomyCertificate(
        case=case.case_id,
        expected_algebra=algebra,
        expected_dim=expected_dim,
        pde_residual=pde,
        theta_residual=span.theta_residual,
        span_dim_R=span.span_dim_R,
        span_dim_total=span.span_dim_total,
        membership_residual=span.membership_residual,
        transport_residual=trans,
        gap=span.gap,
        verdict="pass" if not failures else "fail",
        failures=failures,
    )
