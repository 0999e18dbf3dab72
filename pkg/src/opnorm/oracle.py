"""Reference values of R(eps) on finite truncations.

A truncation keeps the first N coefficients and solves

    sup { a' M a : ||a|| <= 1, a' S a <= eps^2 },   M = diag(sigma_1..sigma_N),
                                                    S = M^1/2 Psi_N M^1/2.

The joint range of two quadratic forms over the sphere is convex, so the
Lagrangian dual ``inf_t max(lambda_max(M - t S), 0) + t eps^2`` is exact.
``grid_oracle`` is an independent primal check by deterministic sphere
sampling for N <= 4, and ``two_by_two_F`` evaluates the two-coordinate
diagonal problem in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from ._search import golden_min
from .csvio import write_csv
from .eigensystems import EigenSystem
from .errors import DomainError, ResourceError
from .psi_spectral import assemble
from .sampling_ops import SamplingOperator

__all__ = [
    "QcqpInstance",
    "dual_oracle",
    "grid_oracle",
    "two_by_two_F",
    "q_set_boundary",
    "write_boundary_csv",
]


@dataclass(frozen=True, eq=False)
class QcqpInstance:
    """Truncated problem data: objective diagonal ``m``, constraint matrix ``S`` and level ``eps2``."""

    m: np.ndarray
    S: np.ndarray
    eps2: float

    def __post_init__(self) -> None:
        m = np.asarray(self.m, dtype=float).ravel()
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "S", S)
        if S.shape != (m.size, m.size):
            raise DomainError(f"S must be {m.size}x{m.size}, got {S.shape}")
        if m.size == 0:
            raise DomainError("empty instance")
        if np.any(m < 0) or np.any(np.diff(m) > 0):
            raise DomainError("objective diagonal must be nonnegative and nonincreasing")
        if not np.allclose(S, S.T, atol=1e-12 * max(1.0, float(np.abs(S).max()))):
            raise DomainError("constraint matrix must be symmetric")
        lam = eigh(S, eigvals_only=True)
        if lam[0] < -1e-8 * max(float(lam[-1]), 1e-300) - 1e-15:
            raise DomainError("constraint matrix must be positive semidefinite")
        if not self.eps2 >= 0:
            raise DomainError("eps2 must be nonnegative")

    @property
    def N(self) -> int:
        return int(self.m.size)

    @property
    def M(self) -> np.ndarray:
        return np.diag(self.m)

    @classmethod
    def from_operator(cls, op: SamplingOperator, sys: EigenSystem, N: int, eps: float) -> QcqpInstance:
        """Truncation to the first ``N`` coefficients of the problem for ``(op, sys)`` at level ``eps``."""
        block = assemble(op, sys, 1, N)
        m = np.asarray(sys.sigma(np.arange(1, N + 1)), dtype=float)
        root = np.sqrt(m)
        return cls(m, root[:, None] * block.matrix * root[None, :], float(eps) ** 2)


def _top_eig(mat: np.ndarray) -> float:
    return float(eigh(0.5 * (mat + mat.T), eigvals_only=True)[-1])


def dual_oracle(inst: QcqpInstance, tol: float = 1e-12) -> float:
    """``inf_{t >= 0} max(lambda_max(M - t S), 0) + t eps^2``.

    Golden-section search on the convex objective; the smallest evaluated
    value is returned, so weak duality makes the result an upper bound on
    the truncated supremum even before convergence.
    """
    M, S, e2 = inst.M, inst.S, inst.eps2

    def objective(t: float) -> float:
        return max(_top_eig(M - t * S), 0.0) + t * e2

    lam = eigh(S, eigvals_only=True)
    positive = lam[lam > 1e-14 * max(float(lam[-1]), 1e-300)]
    if positive.size == 0:
        return float(inst.m[0])
    t_hi = float(inst.m[0]) / float(positive[0])
    for _ in range(60):
        if _top_eig(M - t_hi * S) <= 0.0:
            break
        t_hi *= 2.0
    return golden_min(objective, 0.0, t_hi, rtol=tol)[1]


def _angles_to_sphere(theta: np.ndarray) -> np.ndarray:
    """Hyperspherical coordinates: ``theta`` of shape (k, N-1) -> unit vectors (k, N)."""
    k, dims = theta.shape
    out = np.ones((k, dims + 1))
    sin_prod = np.ones(k)
    for j in range(dims):
        out[:, j] = sin_prod * np.cos(theta[:, j])
        sin_prod = sin_prod * np.sin(theta[:, j])
    out[:, dims] = sin_prod
    return out


def _ray_values(inst: QcqpInstance, U: np.ndarray) -> np.ndarray:
    # best feasible point on each ray s*u, 0 <= s <= 1
    q_m = (U * U) @ inst.m
    q_s = np.einsum("ij,jk,ik->i", U, inst.S, U)
    q_s = np.maximum(q_s, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s2 = np.where(q_s > 0, np.minimum(1.0, inst.eps2 / q_s), 1.0)
    return s2 * q_m


def _ridge_values(inst: QcqpInstance, U: np.ndarray, axis: int) -> float:
    """Best value at the points where grid edges along ``axis`` cross ``u'Su = eps2``.

    On the segment ``p = (1 - lam) u + lam w`` the condition
    ``p'Sp = eps2 p'p`` is a quadratic in ``lam``; its roots in [0, 1] are
    normalised and scored like any other direction.
    """
    lo = np.take(U, range(U.shape[axis] - 1), axis=axis).reshape(-1, U.shape[-1])
    hi = np.take(U, range(1, U.shape[axis]), axis=axis).reshape(-1, U.shape[-1])
    S, e2 = inst.S, inst.eps2
    Su, Sw = lo @ S, hi @ S
    g_uu = np.sum(lo * Su, axis=1) - e2 * np.sum(lo * lo, axis=1)
    g_ww = np.sum(hi * Sw, axis=1) - e2 * np.sum(hi * hi, axis=1)
    g_uw = np.sum(lo * Sw, axis=1) - e2 * np.sum(lo * hi, axis=1)
    cross = np.sign(g_uu) != np.sign(g_ww)
    if not np.any(cross):
        return -math.inf
    lo, hi, g_uu, g_ww, g_uw = lo[cross], hi[cross], g_uu[cross], g_ww[cross], g_uw[cross]
    # g(lam) = a lam^2 + b lam + c
    a = g_uu + g_ww - 2.0 * g_uw
    b = 2.0 * (g_uw - g_uu)
    c = g_uu
    disc = np.sqrt(np.maximum(b * b - 4.0 * a * c, 0.0))
    best = -math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = np.where(b != 0, -c / b, 0.0)
        roots = (
            np.where(np.abs(a) > 1e-15, (-b + disc) / (2.0 * a), lin),
            np.where(np.abs(a) > 1e-15, (-b - disc) / (2.0 * a), lin),
        )
    for lam in roots:
        ok = np.isfinite(lam) & (lam >= 0.0) & (lam <= 1.0)
        if not np.any(ok):
            continue
        P = (1.0 - lam[ok])[:, None] * lo[ok] + lam[ok][:, None] * hi[ok]
        norms = np.linalg.norm(P, axis=1)
        P = P[norms > 0] / norms[norms > 0][:, None]
        if P.size:
            best = max(best, float(_ray_values(inst, P).max()))
    return best


def grid_oracle(inst: QcqpInstance, resolution: int = 1000) -> float:
    """Primal lower bound on the truncated supremum by deterministic sphere sampling (N <= 4).

    Each unit direction ``u`` is scored by the best feasible point on the ray
    ``s u``.  Directions come from a uniform grid of ``resolution`` angles per
    hyperspherical coordinate of the half sphere, plus the exact points where
    grid edges cross the constraint surface ``u'Su = eps2`` (the score has a
    kink there, which is where the maximum usually sits).  Every evaluated
    point is feasible, so the result never exceeds the true supremum.
    """
    N = inst.N
    if N > 4:
        raise ResourceError("grid_oracle is limited to N <= 4")
    if N == 1:
        return float(_ray_values(inst, np.ones((1, 1)))[0])
    dims = N - 1
    per_axis = int(resolution) if N <= 3 else min(int(resolution), 120)
    axis = np.linspace(0.0, math.pi, per_axis)
    theta = np.stack(np.meshgrid(*([axis] * dims), indexing="ij"), axis=-1).reshape(-1, dims)
    U = _angles_to_sphere(theta)
    best = float(_ray_values(inst, U).max())
    U = U.reshape((per_axis,) * dims + (N,))
    for ax in range(dims):
        best = max(best, _ridge_values(inst, U, ax))
    return best


def two_by_two_F(u2: float, v2: float, a2: float, d2: float, eps2: float) -> float:
    """``sup { u2 r^2 + v2 s^2 : r^2 + s^2 <= 1, a2 r^2 + d2 s^2 <= eps2 }``.

    The image of the unit disc under ``(r, s) -> (x, y)`` is the triangle
    with vertices ``0``, ``P = (u2, a2)`` and ``Q = (v2, d2)``; the supremum is
    the largest x on that triangle below the line ``y = eps2``, attained at
    a feasible vertex or where an edge crosses the line.  When ``a2 = u2``
    and ``d2 >= v2`` every point has ``x <= y`` and the value is
    ``min(eps2, u2)`` exactly.
    """
    vals = (u2, v2, a2, d2, eps2)
    if any(not (v >= 0) for v in vals) or any(math.isinf(v) for v in vals):
        raise DomainError("all inputs must be finite and nonnegative")
    if u2 < v2:
        u2, v2, a2, d2 = v2, u2, d2, a2
    if a2 == u2 and d2 >= v2:
        return min(eps2, u2)
    pts = [(0.0, 0.0), (u2, a2), (v2, d2)]
    best = 0.0
    for x, y in pts:
        if y <= eps2:
            best = max(best, x)
    for (x0, y0), (x1, y1) in ((pts[0], pts[1]), (pts[0], pts[2]), (pts[1], pts[2])):
        lo, hi = min(y0, y1), max(y0, y1)
        if lo <= eps2 <= hi and y1 != y0:
            lam = (eps2 - y0) / (y1 - y0)
            best = max(best, x0 + lam * (x1 - x0))
    return best


def q_set_boundary(inst: QcqpInstance, samples: int = 360) -> list[tuple[float, float, float]]:
    """Boundary of ``{(a'Ma, a'Sa) : ||a|| = 1}`` traced by support directions.

    For each ``theta`` on a uniform grid of ``[0, 2 pi)`` the top eigenvector
    of ``cos(theta) M + sin(theta) S`` is a boundary point.  Rows are
    ``(theta, Q2, QPhi)``.
    """
    if inst.N > 64:
        raise ResourceError("q_set_boundary is limited to N <= 64")
    M, S = inst.M, inst.S
    rows = []
    for theta in np.arange(int(samples)) * (2.0 * math.pi / int(samples)):
        mat = math.cos(theta) * M + math.sin(theta) * S
        _, vecs = eigh(0.5 * (mat + mat.T))
        v = vecs[:, -1]
        rows.append((float(theta), float(v @ M @ v), float(v @ S @ v)))
    return rows


def write_boundary_csv(path, rows) -> None:
    write_csv(path, ("theta", "Q2", "QPhi"), rows)
