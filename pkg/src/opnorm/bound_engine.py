"""Upper bounds on R(eps), the largest squared L2 norm over the Hilbert unit ball
under the constraint ``||f||_Phi <= eps``.

With ``M = diag(sigma)`` and ``Psi`` the Gram matrix of the eigenfunctions
under Phi, the bounds split the coefficient space at a truncation index p:

* strong bound: ``inf_p inf_{t >= 0} L(t, Psi_p, M_p) + t (eps + sqrt(T_p))^2 + sigma_{p+1}``,
  with ``L(t, M, D) = max(lambda_max(D - t D^1/2 M D^1/2), 0)``;
* weak bound: ``(1 - sigma_{p+1}/sigma_1) (eps + sqrt(T_p))^2 / lambda_min(Psi_p) + sigma_{p+1}``;

where ``T_p`` bounds the largest eigenvalue of the weighted tail of Psi
beyond p.  The factor ``(eps + sqrt(T))^2`` is the optimum over
``r in (0, 1)`` of ``eps^2 / r + T / (1 - r)``; a fixed ``r`` can be requested
instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh

from ._search import golden_min
from .eigensystems import EigenSystem
from .errors import DomainError, InequalityNotGuaranteedError, PreconditionError, ResourceError
from .psi_spectral import MATRIX_CAP, TAIL_METHODS, assemble, tail_lambda_max_bound
from .sampling_ops import SamplingOperator

__all__ = [
    "BoundConfig",
    "BoundReport",
    "BOUND_CSV_HEADER",
    "L_func",
    "strong_bound",
    "weak_bound",
    "fourier_exact",
    "minimax_width",
    "Translation",
    "translate_to_lower_T",
    "PackingTransfer",
    "packing_transfer",
    "QuadCheck",
    "quad_inequality_check",
]

BOUND_CSV_HEADER = ("epsilon", "value", "p_star", "t_star", "tail", "sigma_next", "kind")


@dataclass(frozen=True)
class BoundConfig:
    """Search settings for the bounds.

    ``p_candidates=None`` scans ``{1, ..., 64}`` together with the operator
    dimension n.  ``rho_mode`` is ``"optimized"`` (use ``(eps + sqrt(T))^2``)
    or ``"fixed"`` (use ``eps^2 / rho2 + T / (1 - rho2)``).
    """

    p_candidates: tuple[int, ...] | None = None
    t_rtol: float = 1e-8
    t_max_doublings: int = 60
    tail_method: str = "auto"
    horizon: int | None = None
    rho_mode: str = "optimized"
    rho2: float | None = None

    def __post_init__(self) -> None:
        if self.p_candidates is not None:
            if len(self.p_candidates) == 0:
                raise DomainError("p_candidates must be nonempty")
            if any(int(p) != p or p < 1 for p in self.p_candidates):
                raise DomainError("p_candidates must be positive integers")
        if not self.t_rtol > 0:
            raise DomainError("t tolerance must be positive")
        if self.tail_method not in TAIL_METHODS:
            raise DomainError(f"unknown tail method {self.tail_method!r}")
        if self.rho_mode not in ("optimized", "fixed"):
            raise DomainError("rho_mode must be 'optimized' or 'fixed'")
        if self.rho_mode == "fixed" and (self.rho2 is None or not 0 < self.rho2 < 1):
            raise DomainError("fixed rho_mode needs rho2 in (0, 1)")

    def candidates(self, op: SamplingOperator) -> list[int]:
        if self.p_candidates is not None:
            return sorted({int(p) for p in self.p_candidates})
        return sorted(set(range(1, 65)) | {op.n})


@dataclass(frozen=True)
class BoundReport:
    value: float
    epsilon: float
    p_star: int
    t_star: float | None
    tail: float
    sigma_next: float
    kind: str
    lambda_min: float | None = None
    tail_method: str | None = None
    details: dict = field(default_factory=dict, compare=False)

    def csv_row(self) -> tuple:
        t = math.nan if self.t_star is None else self.t_star
        return (self.epsilon, self.value, self.p_star, t, self.tail, self.sigma_next, self.kind)


def _sym_eigvalsh(mat: np.ndarray) -> np.ndarray:
    return eigh(0.5 * (mat + mat.T), eigvals_only=True)


def L_func(t: float, M, D) -> float:
    """``max(lambda_max(D - t D^1/2 M D^1/2), 0)`` for PSD M and diagonal PSD D.

    D may be passed as a square diagonal matrix or as the vector of its diagonal.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    d = np.asarray(D, dtype=float)
    if d.ndim == 2:
        d = np.diag(d)
    if M.shape != (d.size, d.size):
        raise DomainError(f"dimension mismatch: M is {M.shape}, D has {d.size} entries")
    root = np.sqrt(d)
    mat = np.diag(d) - t * (root[:, None] * M * root[None, :])
    return max(float(_sym_eigvalsh(mat)[-1]), 0.0)


def _tail_factor(eps: float, T: float, cfg: BoundConfig) -> float:
    if cfg.rho_mode == "fixed":
        r = cfg.rho2
        return eps * eps / r + T / (1.0 - r)
    return (eps + math.sqrt(T)) ** 2


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not eps >= 0:
        raise DomainError("eps must be nonnegative")
    return eps


def _minimise_over_t(Psi: np.ndarray, sig: np.ndarray, slope: float, cfg: BoundConfig) -> tuple[float, float]:
    """``inf_{t >= 0} L(t, Psi, diag(sig)) + slope * t`` via golden-section search."""
    root = np.sqrt(sig)
    S = root[:, None] * Psi * root[None, :]
    D = np.diag(sig)
    lam_s = _sym_eigvalsh(S)
    top_d = float(sig.max())
    positive = lam_s[lam_s > 1e-14 * max(lam_s[-1], 1e-300)]

    def L(t: float) -> float:
        mat = D - t * S
        return max(float(np.linalg.eigvalsh(0.5 * (mat + mat.T))[-1]), 0.0)

    def objective(t: float) -> float:
        return L(t) + slope * t

    # the objective is convex, so once it stops decreasing the minimiser is bracketed
    t_hi = top_d / float(positive[0]) if positive.size else 1.0
    prev = objective(0.0)
    for _ in range(cfg.t_max_doublings):
        cur = objective(t_hi)
        if L(t_hi) == 0.0 or cur >= prev:
            break
        prev = cur
        t_hi *= 2.0
    return golden_min(objective, 0.0, t_hi, rtol=cfg.t_rtol)


def strong_bound(
    eps: float,
    sys: EigenSystem,
    op: SamplingOperator,
    cfg: BoundConfig | None = None,
) -> BoundReport:
    """The strong bound, minimised over ``cfg``'s truncation candidates and over t."""
    eps = _check_eps(eps)
    cfg = cfg or BoundConfig()
    ps = cfg.candidates(op)
    p_max = max(ps)
    if p_max > MATRIX_CAP:
        raise ResourceError(f"truncation index {p_max} exceeds the matrix cap {MATRIX_CAP}")
    full = assemble(op, sys, 1, p_max).matrix
    sig_all = np.asarray(sys.sigma(np.arange(1, p_max + 2)), dtype=float)
    best: BoundReport | None = None
    for p in ps:
        tail = tail_lambda_max_bound(op, sys, p, cfg.tail_method, cfg.horizon)
        slope = _tail_factor(eps, tail.value, cfg)
        sigma_next = float(sig_all[p])
        t_star, val = _minimise_over_t(full[:p, :p], sig_all[:p], slope, cfg)
        total = val + sigma_next
        if best is None or total < best.value:
            best = BoundReport(total, eps, p, t_star, tail.value, sigma_next, "strong", tail_method=tail.method)
    assert best is not None
    return best


def weak_bound(
    eps: float,
    sys: EigenSystem,
    op: SamplingOperator,
    p: int,
    tail_method: str = "auto",
    cfg: BoundConfig | None = None,
) -> BoundReport:
    """The weak bound at a single truncation index ``p``.

    Raises ``PreconditionError`` when ``Psi_p`` is singular.
    """
    eps = _check_eps(eps)
    cfg = cfg or BoundConfig(tail_method=tail_method)
    p = int(p)
    block = assemble(op, sys, 1, p)
    lam = _sym_eigvalsh(block.matrix)
    lam_min = float(lam[0])
    if not lam_min > 1e-12 * max(float(lam[-1]), 1.0):
        raise PreconditionError(f"lambda_min(Psi_p) = {lam_min:.3g} is not positive at p = {p}")
    tail = tail_lambda_max_bound(op, sys, p, tail_method, cfg.horizon)
    s1 = float(sys.sigma(1))
    sigma_next = float(sys.sigma(p + 1))
    value = (1.0 - sigma_next / s1) * _tail_factor(eps, tail.value, cfg) / lam_min + sigma_next
    return BoundReport(value, eps, p, None, tail.value, sigma_next, "weak", lam_min, tail.method)


def fourier_exact(eps: float, sys: EigenSystem, n: int) -> float:
    """Exact R(eps) for Fourier truncation to n coefficients.

    ``(1 - sigma_{n+1}/sigma_1) eps^2 + sigma_{n+1}``, saturating at ``sigma_1``
    once ``eps^2 >= sigma_1``.
    """
    eps = _check_eps(eps)
    n = int(n)
    if n < 0:
        raise DomainError("n must be nonnegative")
    s1 = float(sys.sigma(1))
    e2 = eps * eps
    if e2 >= s1:
        return s1
    s_next = float(sys.sigma(n + 1))
    return (1.0 - s_next / s1) * e2 + s_next


def minimax_width(n: int, sys: EigenSystem) -> float:
    """``sigma_{n+1}``: the smallest ``R(0)`` achievable by any rank-n operator."""
    n = int(n)
    if n < 0:
        raise DomainError("n must be nonnegative")
    return float(sys.sigma(n + 1))


class Translation(NamedTuple):
    value: float
    clamped: bool


def translate_to_lower_T(A: float, B: float, delta: float, form: str = "direct") -> Translation:
    """Lower bound on the smallest ``||f||_Phi^2`` with ``||f||_2^2 >= delta^2``.

    Given ``R(eps) <= A eps^2 + B``, the ``"direct"`` form returns
    ``delta^2 / A - B`` and is valid for ``A >= 1``; the ``"inverse"`` form is
    the exact generalised inverse ``(delta^2 - B) / A`` and is valid for any
    ``A > 0`` (it is never smaller).  Negative results are clamped to 0.
    """
    if not A > 0:
        raise DomainError("slope A must be positive")
    if B < 0:
        raise DomainError("intercept B must be nonnegative")
    d2 = float(delta) ** 2
    if form == "direct":
        if A < 1:
            raise DomainError("the delta^2/A - B form needs A >= 1; use form='inverse'")
        raw = d2 / A - B
    elif form == "inverse":
        raw = (d2 - B) / A
    else:
        raise DomainError(f"unknown form {form!r}")
    if raw < 0:
        return Translation(0.0, True)
    return Translation(raw, False)


@dataclass(frozen=True)
class PackingTransfer:
    """Packing numbers satisfy ``M(l2_radius; D, L2) <= M(phi_radius; D, Phi)``."""

    l2_radius: float
    phi_radius: float
    vacuous: bool


def packing_transfer(T_lower: float, eps: float) -> PackingTransfer:
    if T_lower < 0:
        raise DomainError("T_lower must be nonnegative")
    return PackingTransfer(float(eps), math.sqrt(T_lower), T_lower == 0)


class QuadCheck(NamedTuple):
    residual: float
    scale: float
    guaranteed: bool


def quad_inequality_check(A, C, D, rho2, kappa2, x, y, diagnostic: bool = False) -> QuadCheck:
    """Residual of ``x'Ax + 2x'Cy + y'Dy >= rho2 x'Ax - kappa2/(1 - rho2) ||y||^2``.

    The inequality is guaranteed when ``[[A, C], [C', D]]`` is PSD and either
    ``rho2 lambda_max(D) <= kappa2`` or ``[[A, C], [C', (1 - rho2) D + kappa2 I]]``
    is PSD.  Otherwise ``InequalityNotGuaranteedError`` is raised, unless
    ``diagnostic`` is set, in which case the residual is still returned.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    C = np.asarray(C, dtype=float).reshape(A.shape[0], D.shape[0])
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != A.shape[0] or y.size != D.shape[0]:
        raise DomainError("x and y must match the blocks of the partition")
    if not 0 < rho2 < 1:
        raise DomainError("rho2 must lie in (0, 1)")
    if not kappa2 > 0:
        raise DomainError("kappa2 must be positive")
    full = np.block([[A, C], [C.T, D]])
    lam_full = _sym_eigvalsh(full)
    tol = 1e-10 * max(1.0, abs(float(lam_full[-1])))
    psd = lam_full[0] >= -tol
    cond2 = rho2 * float(_sym_eigvalsh(D)[-1]) <= kappa2 + tol
    if not cond2:
        aug = np.block([[A, C], [C.T, (1 - rho2) * D + kappa2 * np.eye(D.shape[0])]])
        cond2 = _sym_eigvalsh(aug)[0] >= -tol
    guaranteed = bool(psd and cond2)
    if not guaranteed and not diagnostic:
        raise InequalityNotGuaranteedError("the sufficient condition for the quadratic inequality fails")
    xAx = float(x @ A @ x)
    yy = float(y @ y)
    lhs = xAx + 2.0 * float(x @ C @ y) + float(y @ D @ y)
    rhs = rho2 * xAx - kappa2 / (1.0 - rho2) * yy
    scale = (max(abs(float(lam_full[-1])), 1.0) + kappa2 / (1.0 - rho2)) * (float(x @ x) + yy)
    return QuadCheck(lhs - rhs, max(scale, 1e-300), guaranteed)
