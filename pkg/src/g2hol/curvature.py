"""Levi-Civita connection, curvature and its covariant derivative from metric jets.

Conventions (coordinate components, 0-based storage):

* ``gamma[..., k, i, j]`` is Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij).
* ``R[..., l, k, i, j]`` is R^l_kij with
  R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik,
  so that ``R[..., :, :, i, j]`` is the endomorphism R(d_i, d_j) = [nabla_i, nabla_j].
* ``nabla_R[..., m, l, k, i, j]`` is (nabla_m R)^l_kij.

Frame versions use b_a = sum_i (B^-1)[i, a] d_i and conjugate endomorphisms by
``B``, so they act on frame components like the matrices in :mod:`g2algebra`.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .coframe import CoframeCase, metric_at
from .g2algebra import G_FLOAT, membership, get_subalgebra
from .jet import Jet, jet_einsum, jet_matinv

PAIRS0 = tuple(combinations(range(7), 2))


def _grad(j: Jet) -> Jet:
    """Stack first partials on a new trailing (non-coefficient) axis; order drops by one."""
    parts = [j.deriv(l) for l in range(1, 8)]
    return Jet(np.stack([p.coeffs for p in parts], axis=-2), j.order - 1, j.center)


def christoffel_from_metric(g: Jet) -> Jet:
    """Gamma^k_ij as a jet one order below ``g`` (shape batch + (7, 7, 7))."""
    K = g.order - 1
    dg = _grad(g)  # [i, j, l] = d_l g_ij
    c = dg.coeffs
    # T[i, j, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    low = 0.5 * (np.einsum("...jlia->...ijla", c) + np.einsum("...ilja->...ijla", c) - c)
    ginv = jet_matinv(g.truncate(K)) if K > 0 else Jet(np.linalg.inv(g.value)[..., None], 0, g.center)
    return jet_einsum("...kl,...ijl->...kij", ginv, Jet(low, K, g.center))


def riemann_from_gamma(gam: Jet) -> Jet:
    """R^l_kij as a jet one order below ``gam``."""
    K = gam.order - 1
    dG = _grad(gam).coeffs  # [l, a, b, m] = d_m Gamma^l_ab
    g1 = gam.truncate(K)
    lin = np.einsum("...ljkia->...lkija", dG) - np.einsum("...likja->...lkija", dG)
    quad = (jet_einsum("...lim,...mjk->...lkij", g1, g1).coeffs
            - jet_einsum("...ljm,...mik->...lkij", g1, g1).coeffs)
    return Jet(lin + quad, K, gam.center)


def nabla_riemann_values(gamma0: np.ndarray, R: Jet) -> np.ndarray:
    """(nabla_m R)^l_kij at the jet centre; needs ``R`` of order >= 1."""
    dR = np.moveaxis(_grad(R).coeffs[..., 0], -1, -5)  # [m, l, k, i, j]
    R0 = R.value
    G = gamma0
    return (dR
            + np.einsum("...lmp,...pkij->...mlkij", G, R0)
            - np.einsum("...pmk,...lpij->...mlkij", G, R0)
            - np.einsum("...pmi,...lkpj->...mlkij", G, R0)
            - np.einsum("...pmj,...lkip->...mlkij", G, R0))


@dataclass
class CurvatureAtPoint:
    points: np.ndarray
    B: np.ndarray  # (n, 7, 7)
    Binv: np.ndarray
    g: np.ndarray
    gamma: np.ndarray  # (n, 7, 7, 7)
    R: np.ndarray  # (n, 7, 7, 7, 7) coordinate R^l_kij
    R_frame: np.ndarray  # (n, a, b, 7, 7)  R(b_a, b_b) in the frame
    nabla_R: np.ndarray | None = None  # (n, m, l, k, i, j)
    nabla_R_frame: np.ndarray | None = None  # (n, c, a, b, 7, 7)
    theta: np.ndarray | None = None  # (n, k, 7, 7) theta(b_k)

    def frame_pairs(self) -> np.ndarray:
        """R(b_a, b_b) for a < b: shape (n, 21, 7, 7)."""
        return np.stack([self.R_frame[:, a, b] for a, b in PAIRS0], axis=1)

    def nabla_frame_pairs(self) -> np.ndarray:
        """(nabla_{b_c} R)(b_a, b_b) for a < b: shape (n, 7, 21, 7, 7)."""
        return np.stack([self.nabla_R_frame[:, :, a, b] for a, b in PAIRS0], axis=2)


def to_frame(E: np.ndarray, B: np.ndarray, Binv: np.ndarray) -> np.ndarray:
    """Coordinate endomorphism(s) ``E[..., 7, 7]`` -> frame matrices ``B E B^-1``."""
    extra = E.ndim - B.ndim
    Bb = B.reshape(B.shape[:1] + (1,) * extra + B.shape[1:])
    Bi = Binv.reshape(Binv.shape[:1] + (1,) * extra + Binv.shape[1:])
    return Bb @ E @ Bi


def curvature_at(case: CoframeCase, points, nabla: bool = True, theta: bool = True) -> CurvatureAtPoint:
    """Everything the certificates need at a batch of points (shape (n, 7))."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    order = 3 if nabla else 2
    g, bj = metric_at(case, points, order)
    gam = christoffel_from_metric(g)
    R = riemann_from_gamma(gam)
    B = bj.value
    Binv = np.linalg.inv(B)
    gamma0 = gam.value
    R0 = R.value
    Rf = np.einsum("nia,njb,nlkij->nablk", Binv, Binv, R0, optimize=True)
    Rf = to_frame(Rf, B, Binv)
    out = CurvatureAtPoint(points, B, Binv, g.value, gamma0, R0, Rf)
    if nabla:
        nR = nabla_riemann_values(gamma0, R)
        out.nabla_R = nR
        nf = np.einsum("nmc,nia,njb,nmlkij->ncablk", Binv, Binv, Binv, nR, optimize=True)
        out.nabla_R_frame = to_frame(nf, B, Binv)
    if theta:
        out.theta = connection_form_values(bj.truncate(1), gamma0)
    return out


def connection_form_values(bj: Jet, gamma0: np.ndarray) -> np.ndarray:
    """theta(b_k)[i, j] = b^i(nabla_{b_k} b_j) from an order >= 1 coframe jet."""
    b1 = bj.truncate(1)
    inv = jet_matinv(b1)
    Binv = inv.value
    B = b1.value
    dinv = _grad(inv).coeffs[..., 0]  # [n, j, q] = d_q Binv[n, j]
    # X(Binv[n, j]) for X = b_k, and the Christoffel term
    deriv = np.einsum("...qk,...njq->...knj", Binv, dinv)
    chris = np.einsum("...qk,...nqm,...mj->...knj", Binv, gamma0, Binv, optimize=True)
    return np.einsum("...in,...knj->...kij", B, deriv + chris)


def connection_form(case: CoframeCase, points) -> np.ndarray:
    """theta(b_k) for k = 1..7 at each point: shape (n, 7, 7, 7)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    g, bj = metric_at(case, points, 2)
    gam = christoffel_from_metric(g)
    return connection_form_values(bj, gam.value)


# ---------------------------------------------------------------------------
# identities and membership


def _scale(x: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(x)))) if x.size else 1.0


def first_bianchi_residual(R: np.ndarray) -> float:
    """max |R^l_kij + R^l_ijk + R^l_jki| relative to max(1, max |R|)."""
    cyc = R + np.einsum("...lijk->...lkij", R) + np.einsum("...ljki->...lkij", R)
    return float(np.max(np.abs(cyc))) / _scale(R)


def second_bianchi_residual(nR: np.ndarray) -> float:
    """max |(nabla_m R)_ij + (nabla_i R)_jm + (nabla_j R)_mi|, relative."""
    # nR[..., m, l, k, i, j]
    cyc = (nR
           + np.einsum("...ilkjm->...mlkij", nR)
           + np.einsum("...jlkmi->...mlkij", nR))
    return float(np.max(np.abs(cyc))) / _scale(nR)


def lowered_antisymmetry_residual(g: np.ndarray, R: np.ndarray) -> float:
    """R_abij = g_al R^l_bij must be antisymmetric in (a, b)."""
    low = np.einsum("...al,...lbij->...abij", g, R)
    return float(np.max(np.abs(low + np.swapaxes(low, -3, -4)))) / _scale(low)


def so_residual(E: np.ndarray) -> float:
    """max |E^T G + G E| over a stack of frame matrices, relative."""
    r = np.swapaxes(E, -1, -2) @ G_FLOAT + G_FLOAT @ E
    return float(np.max(np.abs(r))) / _scale(E) if E.size else 0.0


def relative_membership(mats: np.ndarray, algebra: str) -> np.ndarray:
    """Per-matrix distance to the algebra divided by max(1, |M|) (Frobenius)."""
    spec = get_subalgebra(algebra)
    mats = np.asarray(mats, dtype=float)
    _, res = membership(mats, spec)
    norms = np.linalg.norm(mats.reshape(mats.shape[:-2] + (-1,)), axis=-1)
    return res / np.maximum(1.0, norms)


# ---------------------------------------------------------------------------
# finite-difference oracles


def christoffel_fd(case: CoframeCase, point, h: float = 1e-5) -> np.ndarray:
    """Gamma at ``point`` from central differences of plain metric values."""
    p = np.asarray(point, dtype=float)
    shifts = np.concatenate([p + h * np.eye(7), p - h * np.eye(7)])
    gvals = metric_at(case, shifts, 0)[0].value
    dg = (gvals[:7] - gvals[7:]) / (2 * h)  # [l, i, j] = d_l g_ij
    g0 = metric_at(case, p[None], 0)[0].value[0]
    T = 0.5 * (np.einsum("ijl->ijl", dg) + np.einsum("jil->ijl", dg) - np.einsum("lij->ijl", dg))
    return np.einsum("kl,ijl->kij", np.linalg.inv(g0), T)


def christoffel_values(case: CoframeCase, points) -> np.ndarray:
    g, _ = metric_at(case, np.atleast_2d(points), 1)
    return christoffel_from_metric(g).value


def riemann_fd(case: CoframeCase, point, h: float = 1e-5) -> np.ndarray:
    """R^l_kij at ``point`` from central differences of jet-computed Christoffel symbols."""
    p = np.asarray(point, dtype=float)
    shifts = np.concatenate([p + h * np.eye(7), p - h * np.eye(7)])
    gv = christoffel_values(case, shifts)
    dG = (gv[:7] - gv[7:]) / (2 * h)  # [m, l, a, b] = d_m Gamma^l_ab
    G0 = christoffel_values(case, p[None])[0]
    return (np.einsum("iljk->lkij", dG) - np.einsum("jlik->lkij", dG)
            + np.einsum("lim,mjk->lkij", G0, G0) - np.einsum("ljm,mik->lkij", G0, G0))


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), 1e-300))
