"""Finite blocks of the Gram matrix Psi and bounds on its weighted tail.

The tail quantity of interest is ``T_p = lambda_max(M^1/2 Psi M^1/2)``
restricted to indices ``k > p`` (``M = diag(sigma)``).  It is an infinite
matrix, so every certified bound splits the index range at a horizon ``H``:
indices ``p < k <= H`` are handled explicitly and indices ``k > H`` through
the uniform diagonal bound ``[Psi]_kk <= d`` and the eigenvalue tail sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.linalg import eigh

from .csvio import write_csv
from .eigensystems import EigenSystem
from .errors import DomainError, ResourceError
from .sampling_ops import SamplingOperator, psi_block, psi_diag

__all__ = [
    "MATRIX_CAP",
    "TAIL_METHODS",
    "PsiBlock",
    "TailBoundReport",
    "SparsePeriodicParams",
    "assemble",
    "lambda_min",
    "lambda_max",
    "lambda_max_weighted",
    "default_horizon",
    "tail_lambda_max_bound",
    "sparse_periodic_linf_bound",
]

MATRIX_CAP = 4096
CERTIFIED_METHODS = ("trace", "linf", "block")
TAIL_METHODS = CERTIFIED_METHODS + ("truncated_eig", "auto")
_ROW_BUDGET = 2_000_000  # matrix entries materialised at once by the row-sum scan


@dataclass(frozen=True, eq=False)
class PsiBlock:
    """Principal block of Psi on the 1-based index range ``[a, b]``."""

    a: int
    b: int
    matrix: np.ndarray
    operator: dict[str, Any] = field(default_factory=dict)
    eigensystem: dict[str, Any] = field(default_factory=dict)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.a, self.b + 1)

    def csv_rows(self) -> list[tuple[int, int, float]]:
        idx = self.indices
        return [(int(i), int(j), float(self.matrix[r, c])) for r, i in enumerate(idx) for c, j in enumerate(idx)]

    def to_csv(self, path) -> None:
        write_csv(path, ("row", "col", "value"), self.csv_rows())


def _check_cap(size: int, cap: int = MATRIX_CAP) -> None:
    if size > cap:
        raise ResourceError(f"requested {size}x{size} matrix exceeds the cap of {cap}")


def assemble(op: SamplingOperator, sys: EigenSystem, a: int, b: int, cap: int = MATRIX_CAP) -> PsiBlock:
    """Dense principal block ``[Psi]_{jk}``, ``a <= j, k <= b``."""
    a, b = int(a), int(b)
    if not 1 <= a <= b:
        raise DomainError(f"need 1 <= a <= b, got a={a}, b={b}")
    _check_cap(b - a + 1, cap)
    idx = np.arange(a, b + 1)
    mat = psi_block(op, sys, idx, idx)
    mat = 0.5 * (mat + mat.T)
    return PsiBlock(a, b, mat, op.to_dict(), sys.to_dict())


def _sym_eigvalsh(mat: np.ndarray) -> np.ndarray:
    return eigh(mat, eigvals_only=True, check_finite=True)


def lambda_min(block: PsiBlock) -> float:
    return float(_sym_eigvalsh(block.matrix)[0])


def lambda_max(block: PsiBlock) -> float:
    return float(_sym_eigvalsh(block.matrix)[-1])


def _weighted(mat: np.ndarray, sig: np.ndarray) -> np.ndarray:
    root = np.sqrt(sig)
    return root[:, None] * mat * root[None, :]


def lambda_max_weighted(block: PsiBlock, sys: EigenSystem) -> float:
    """``lambda_max(M^1/2 Psi M^1/2)`` on the block's index range."""
    return float(_sym_eigvalsh(_weighted(block.matrix, sys.sigma(block.indices)))[-1])


@dataclass(frozen=True)
class TailBoundReport:
    """Upper bound on the weighted tail ``lambda_max`` beyond index ``p``.

    ``certified`` is False only for ``truncated_eig``, which evaluates a
    finite compression of the tail and is therefore a lower reference.
    """

    value: float
    method: str
    p: int
    horizon: int
    certified: bool = True


def default_horizon(op: SamplingOperator, p: int) -> int:
    return max(8 * op.n, 1000, int(p) + 1)


def _diag_tail_trace(op: SamplingOperator, sys: EigenSystem, horizon: int) -> float:
    """Certified bound on ``sum_{k > horizon} sigma_k [Psi]_kk``."""
    d = op.diag_sup(sys, beyond=horizon)
    if d == 0.0:
        return 0.0
    return d * sys.sequence.tail_sum(horizon).value


def _trace_bound(op, sys, p, horizon) -> float:
    ks = np.arange(p + 1, horizon + 1)
    explicit = float(np.sum(sys.sigma(ks) * psi_diag(op, sys, ks))) if ks.size else 0.0
    return explicit + _diag_tail_trace(op, sys, horizon)


def _linf_bound(op, sys, p, horizon) -> float:
    # Two certified variants, the smaller is returned:
    #   pure:   row sums of the whole infinite tail (needs sum sqrt(sigma) < inf)
    #   hybrid: row sums of the (p, horizon] window plus the trace beyond it,
    #           using lambda_max(A) <= lambda_max(A_11) + lambda_max(A_22) for PSD A
    ks = np.arange(p + 1, horizon + 1)
    root = np.sqrt(sys.sigma(ks))
    if op.diag_sup(sys, beyond=horizon) == 0.0:
        beyond_sum, rows_beyond = 0.0, 0.0
    else:
        d = op.diag_sup(sys, beyond=p)
        beyond_sum = d * sys.sequence.sqrt_tail_sum(horizon)
        # any row k > horizon: sqrt(sigma_k) * d * sum_{r > p} sqrt(sigma_r)
        rows_beyond = math.sqrt(float(sys.sigma(horizon + 1))) * d * sys.sequence.sqrt_tail_sum(p)
    window = 0.0
    pure = rows_beyond
    step = max(1, _ROW_BUDGET // max(ks.size, 1))
    for lo in range(0, ks.size, step):
        rows = ks[lo : lo + step]
        part = root[lo : lo + rows.size] * (np.abs(psi_block(op, sys, rows, ks)) @ root)
        window = max(window, float(part.max()))
        if not math.isinf(beyond_sum):
            pure = max(pure, float((part + root[lo : lo + rows.size] * beyond_sum).max()))
    if math.isinf(beyond_sum):
        pure = math.inf
    hybrid = window + _diag_tail_trace(op, sys, horizon)
    return min(pure, hybrid)


def _block_bound(op, sys, p, horizon, block_size) -> float:
    _check_cap(block_size)
    idx = np.arange(p + 1, horizon + 1)
    full = idx.size // block_size
    total = 0.0
    if full:
        # equal-size blocks are stacked and solved in one batched call
        per = max(1, _ROW_BUDGET // (block_size * block_size))
        for lo in range(0, full, per):
            sub = idx[lo * block_size : min(full, lo + per) * block_size].reshape(-1, block_size)
            mats = np.stack([psi_block(op, sys, r, r) for r in sub])
            root = np.sqrt(sys.sigma(sub))
            w = root[:, :, None] * mats * root[:, None, :]
            w = 0.5 * (w + np.swapaxes(w, 1, 2))
            total += float(np.sum(np.maximum(np.linalg.eigvalsh(w)[:, -1], 0.0)))
    rest = idx[full * block_size :]
    if rest.size:
        mat = _weighted(psi_block(op, sys, rest, rest), sys.sigma(rest))
        total += max(float(_sym_eigvalsh(0.5 * (mat + mat.T))[-1]), 0.0)
    return total + _diag_tail_trace(op, sys, horizon)


def _truncated_eig(op, sys, p, horizon) -> float:
    size = horizon - p
    _check_cap(size)
    idx = np.arange(p + 1, horizon + 1)
    mat = _weighted(psi_block(op, sys, idx, idx), sys.sigma(idx))
    return max(float(_sym_eigvalsh(0.5 * (mat + mat.T))[-1]), 0.0)


def tail_lambda_max_bound(
    op: SamplingOperator,
    sys: EigenSystem,
    p: int,
    method: str = "trace",
    horizon: int | None = None,
    block_size: int | None = None,
) -> TailBoundReport:
    """Bound ``lambda_max`` of the weighted tail block beyond index ``p``.

    Methods
    -------
    trace
        ``sum_{k>p} sigma_k [Psi]_kk``.
    linf
        Largest absolute row sum of the weighted tail, or of the window up to
        the horizon plus the trace beyond it, whichever is smaller.
    block
        Sum of ``lambda_max`` over consecutive diagonal blocks of
        ``block_size`` (default ``p``) up to the horizon plus the trace of the rest.
    truncated_eig
        ``lambda_max`` of the explicit ``(p, horizon]`` block; not certified.
    auto
        Smallest of the certified methods.
    """
    p = int(p)
    if p < 1:
        raise DomainError("truncation index p must be >= 1")
    if method not in TAIL_METHODS:
        raise DomainError(f"unknown tail method {method!r}; expected one of {TAIL_METHODS}")
    H = default_horizon(op, p) if horizon is None else int(horizon)
    if H < p + 1:
        raise DomainError("horizon must be at least p + 1")
    if op.variant == "fourier_truncation":
        if p >= op.n:
            # every tail row of Psi vanishes
            return TailBoundReport(0.0, method, p, H, method != "truncated_eig")
        H = min(H, op.n)
    if method == "auto":
        reports = [tail_lambda_max_bound(op, sys, p, m, H, block_size) for m in CERTIFIED_METHODS]
        best = min(reports, key=lambda r: r.value)
        return TailBoundReport(best.value, best.method, p, H, True)
    if method == "trace":
        value = _trace_bound(op, sys, p, H)
    elif method == "linf":
        value = _linf_bound(op, sys, p, H)
    elif method == "block":
        value = _block_bound(op, sys, p, H, int(block_size or p))
    else:
        return TailBoundReport(_truncated_eig(op, sys, p, H), method, p, H, certified=False)
    return TailBoundReport(max(value, 0.0), method, p, H, True)


@dataclass(frozen=True)
class SparsePeriodicParams:
    """Envelope of a sparse periodic tail block.

    In every run of ``gamma * n`` consecutive columns of a tail row at most
    ``eta`` entries are bounded by ``c1`` and the rest by ``c2 / n``.
    """

    gamma: int
    eta: int
    c1: float
    c2: float

    def __post_init__(self) -> None:
        if int(self.gamma) != self.gamma or self.gamma < 1:
            raise DomainError("gamma must be a positive integer")
        if int(self.eta) != self.eta or self.eta < 0:
            raise DomainError("eta must be a nonnegative integer")
        if self.c1 < 0 or self.c2 < 0:
            raise DomainError("c1 and c2 must be nonnegative")

    def check(self, n: int) -> None:
        if self.eta > self.gamma * n:
            raise DomainError(f"eta={self.eta} exceeds gamma*n={self.gamma * n}")

    @classmethod
    def sobolev(cls) -> SparsePeriodicParams:
        return cls(gamma=2, eta=2, c1=2.0, c2=1.0)

    @classmethod
    def fourier(cls) -> SparsePeriodicParams:
        return cls(gamma=2, eta=2, c1=2.0, c2=0.0)


def _envelope_row_sum(params, C, alpha, n, last) -> float:
    """``sum_r e_r sqrt(sigma_{n+r})`` for ``1 <= r <= last - n``, large entries placed first in each period."""
    period = params.gamma * n
    r = np.arange(1, last - n + 1)
    pos = (r - 1) % period
    env = np.where(pos < params.eta, params.c1, params.c2 / n)
    return float(np.sum(env * np.sqrt(C) * (n + r) ** (-alpha / 2.0)))


def sparse_periodic_linf_bound(
    params: SparsePeriodicParams,
    sys: EigenSystem,
    n: int,
    periods: int | None = None,
) -> float:
    """Certified bound on the weighted tail ``lambda_max`` beyond ``p = n``.

    ``sys`` must have polynomial decay ``sigma_k = C k^-alpha`` with
    ``alpha >= 2``.  Only the envelope enters, so the positions of the large
    entries are taken to be the worst case (smallest column indices in each
    period).

    For ``alpha > 2`` the row sums converge and the largest one, times
    ``sqrt(sigma_{n+1})``, is summed over ``periods`` explicit periods plus an
    integral remainder; the order is ``n^-alpha``.  For ``alpha = 2`` the
    row-sum route is applied to indices ``(n, n^2]`` and the trace to the rest,
    giving order ``n^-2 log n``.
    """
    seq = sys.sequence
    if seq.kind != "polynomial":
        raise DomainError("sparse periodic bound needs a polynomial eigen-sequence")
    C, alpha = seq.C, float(seq.alpha)
    if alpha < 2:
        raise DomainError("sparse periodic bound is only available for alpha >= 2")
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    params.check(n)
    if params.c1 == 0 and params.c2 == 0:
        return 0.0
    lead = math.sqrt(C) * (n + 1) ** (-alpha / 2.0)
    period = params.gamma * n
    if alpha > 2:
        Q = periods if periods is not None else max(4, math.ceil(1000 / period))
        explicit = _envelope_row_sum(params, C, alpha, n, n + Q * period)
        # periods q >= Q: eta large entries from column n + 1 + q*period onward
        s = alpha / 2.0 - 1.0
        start_big = n + 1 + (Q - 1) * period
        big = params.c1 * params.eta * math.sqrt(C) * start_big ** (-s) / (s * period)
        small = (params.c2 / n) * math.sqrt(C) * (n + Q * period) ** (-s) / s
        return lead * (explicit + big + small)
    last = max(n * n, n + 1)
    row_part = lead * _envelope_row_sum(params, C, alpha, n, last)
    trace_part = max(params.c1, params.c2) * C * last ** (1.0 - alpha) / (alpha - 1.0)
    return row_part + trace_part
