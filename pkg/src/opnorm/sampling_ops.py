"""Sampling operators Phi: H -> R^n and the Gram matrix Psi they induce.

``[Psi]_{jk} = <psi_j, psi_k>_Phi = <Phi psi_j, Phi psi_k>``.  For point
evaluation operators this is ``(1/n) sum_i w_i^2 psi_j(x_i) psi_k(x_i)``
(``w_i = 1`` when unweighted); for Fourier truncation it is the identity on
the first n indices and zero elsewhere.  Uniform grids ``x_i = i/n`` with
the Sobolev or Fourier-type eigenfunctions have closed forms that are used
instead of the direct sum.

The Riesz representers of the coordinates (e.g. ``n^-1/2 K(., x_i)`` for
domain sampling) are never needed numerically and are not modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .eigensystems import EigenSystem
from .errors import ConfigError, DomainError, UnsupportedOperationError

__all__ = [
    "SamplingOperator",
    "apply",
    "phi_seminorm",
    "psi_entry",
    "psi_block",
    "psi_diag",
    "RNG_NAME",
]

VARIANTS = (
    "fourier_truncation",
    "domain_sampling",
    "weighted_domain_sampling",
    "uniform_grid",
    "random_iid",
)
RNG_NAME = "numpy.random.PCG64"


@dataclass(frozen=True)
class SamplingOperator:
    """An immutable sampling operator.

    Build instances with the variant constructors; ``random_iid`` draws its
    points once from ``PCG64(seed)`` and then behaves like domain sampling.
    """

    variant: str
    n: int
    points: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown operator variant {self.variant!r}")
        if self.n < 1:
            raise DomainError("operator dimension n must be >= 1")
        if self.variant == "fourier_truncation":
            return
        pts = np.asarray(self.points, dtype=float)
        if pts.size != self.n:
            raise DomainError("number of points must equal n")
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise DomainError("sample points must lie in [0, 1]")
        if self.variant == "weighted_domain_sampling":
            w = np.asarray(self.weights, dtype=float)
            if w.size != self.n:
                raise DomainError("need one weight per point")
            if abs(float(np.sum(w**2)) - 1.0) > 1e-12:
                raise DomainError("weights must satisfy sum w_k^2 = 1")

    # -- constructors -------------------------------------------------------
    @classmethod
    def fourier_truncation(cls, n: int) -> SamplingOperator:
        return cls("fourier_truncation", int(n))

    @classmethod
    def domain_sampling(cls, points) -> SamplingOperator:
        pts = tuple(float(x) for x in np.ravel(points))
        return cls("domain_sampling", len(pts), points=pts)

    @classmethod
    def weighted_domain_sampling(cls, points, weights) -> SamplingOperator:
        pts = tuple(float(x) for x in np.ravel(points))
        return cls("weighted_domain_sampling", len(pts), points=pts, weights=tuple(float(w) for w in np.ravel(weights)))

    @classmethod
    def uniform_grid(cls, n: int) -> SamplingOperator:
        n = int(n)
        if n < 1:
            raise DomainError("operator dimension n must be >= 1")
        return cls("uniform_grid", n, points=tuple(i / n for i in range(1, n + 1)))

    @classmethod
    def random_iid(cls, n: int, seed: int) -> SamplingOperator:
        n = int(n)
        if n < 1:
            raise DomainError("operator dimension n must be >= 1")
        rng = np.random.Generator(np.random.PCG64(int(seed)))
        return cls("random_iid", n, points=tuple(rng.random(n).tolist()), seed=int(seed))

    # -- helpers ------------------------------------------------------------
    @property
    def is_domain(self) -> bool:
        return self.variant != "fourier_truncation"

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    @property
    def sq_weights(self) -> np.ndarray:
        """``w_i^2`` per sample (all ones for unweighted variants)."""
        if self.variant == "weighted_domain_sampling":
            return np.asarray(self.weights, dtype=float) ** 2
        return np.ones(self.n)

    def diag_sup(self, sys: EigenSystem, beyond: int = 0) -> float:
        """Upper bound on ``[Psi]_{kk}`` over all ``k > beyond``.

        Since Psi is a Gram matrix this also bounds every ``|[Psi]_{jk}|``
        with ``j, k > beyond`` by Cauchy-Schwarz.
        """
        if self.variant == "fourier_truncation":
            return 1.0 if beyond < self.n else 0.0
        if sys.c_psi is None:
            raise UnsupportedOperationError(f"eigensystem kind {sys.kind!r} has no eigenfunctions")
        if self.variant == "uniform_grid" and sys.basis == "sobolev":
            return 1.0 + 1.0 / self.n
        return sys.c_psi**2 * float(np.mean(self.sq_weights))

    def to_dict(self) -> dict[str, Any]:
        if self.variant in ("fourier_truncation", "uniform_grid"):
            return {"variant": self.variant, "n": self.n}
        if self.variant == "random_iid":
            return {"variant": "random_iid", "n": self.n, "seed": self.seed}
        doc: dict[str, Any] = {"variant": self.variant, "points": list(self.points)}
        if self.variant == "weighted_domain_sampling":
            doc["weights"] = list(self.weights)
        return doc

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> SamplingOperator:
        if not isinstance(doc, dict) or "variant" not in doc:
            raise ConfigError("operator descriptor must be a mapping with a 'variant' key")
        allowed = {
            "fourier_truncation": {"n"},
            "uniform_grid": {"n"},
            "random_iid": {"n", "seed"},
            "domain_sampling": {"points"},
            "weighted_domain_sampling": {"points", "weights"},
        }
        variant = doc["variant"]
        if variant not in allowed:
            raise ConfigError(f"unknown operator variant {variant!r}")
        unknown = set(doc) - allowed[variant] - {"variant"}
        if unknown:
            raise ConfigError(f"unknown keys for variant {variant!r}: {sorted(unknown)}")
        try:
            if variant == "fourier_truncation":
                return cls.fourier_truncation(doc["n"])
            if variant == "uniform_grid":
                return cls.uniform_grid(doc["n"])
            if variant == "random_iid":
                return cls.random_iid(doc["n"], doc["seed"])
            if variant == "domain_sampling":
                return cls.domain_sampling(doc["points"])
            return cls.weighted_domain_sampling(doc["points"], doc["weights"])
        except KeyError as exc:
            raise ConfigError(f"missing key {exc} for operator variant {variant!r}") from None


def _coeffs(alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1:
        raise DomainError("alpha must be a one-dimensional coefficient vector")
    return a


def apply(op: SamplingOperator, sys: EigenSystem, alpha) -> np.ndarray:
    """``Phi f`` for ``f = sum_k sqrt(sigma_k) alpha_k psi_k`` (alpha has finite support)."""
    a = _coeffs(alpha)
    K = a.size
    if op.variant == "fourier_truncation":
        out = np.zeros(op.n)
        m = min(op.n, K)
        if m:
            out[:m] = np.sqrt(sys.sigma(np.arange(1, m + 1))) * a[:m]
        return out
    if K == 0:
        return np.zeros(op.n)
    ks = np.arange(1, K + 1)
    coef = np.sqrt(sys.sigma(ks)) * a
    f_vals = sys.psi(ks[None, :], op.x[:, None]) @ coef
    return np.sqrt(op.sq_weights) * f_vals / math.sqrt(op.n)


def phi_seminorm(op: SamplingOperator, sys: EigenSystem, alpha) -> float:
    return float(np.linalg.norm(apply(op, sys, alpha)))


def _sobolev_grid(n: int, k: np.ndarray, r: np.ndarray) -> np.ndarray:
    # piecewise closed form on one period 1..2n; Psi is 2n-periodic in each index
    period = 2 * n
    k = (k - 1) % period + 1
    r = (r - 1) % period + 1
    same = k == r
    anti = (k + r) == period + 1
    assert not np.any(same & anti)
    out = np.where((k - r) % 2 == 0, 1.0, -1.0) / n
    out = np.where(same, 1.0 + 1.0 / n, out)
    return np.where(anti, -1.0 - 1.0 / n, out)


def _fourier_grid(n: int, k: np.ndarray, j: np.ndarray) -> np.ndarray:
    # index 1 -> cos_0, 2m -> cos_m, 2m + 1 -> sin_m
    def split(idx):
        return np.where(idx == 1, 0, idx // 2), (idx >= 2) & (idx % 2 == 1)

    kf, ks = split(k)
    jf, js = split(j)
    d_minus = ((kf - jf) % n == 0).astype(float)
    d_plus = ((kf + jf) % n == 0).astype(float)
    zero_count = (kf == 0).astype(float) + (jf == 0).astype(float)
    cc = (d_minus + d_plus) * (1.0 / math.sqrt(2.0)) ** zero_count
    ss = d_minus - d_plus
    return np.where(ks & js, ss, np.where(~ks & ~js, cc, 0.0))


def _check_indices(*arrays: np.ndarray) -> None:
    for a in arrays:
        if a.size and a.min() < 1:
            raise DomainError("Psi indices are 1-based")


def _require_basis(op: SamplingOperator, sys: EigenSystem) -> None:
    if sys.basis is None:
        raise UnsupportedOperationError(
            f"operator {op.variant!r} needs eigenfunctions; kind {sys.kind!r} has none"
        )


def psi_block(op: SamplingOperator, sys: EigenSystem, rows, cols, closed_form: bool = True) -> np.ndarray:
    """Submatrix of Psi on 1-based index arrays ``rows`` x ``cols``.

    With ``closed_form=False`` the uniform-grid cases are evaluated by the
    direct sum over sample points instead of their closed forms.
    """
    rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
    cols = np.atleast_1d(np.asarray(cols, dtype=np.int64))
    _check_indices(rows, cols)
    if op.variant == "fourier_truncation":
        return ((rows[:, None] == cols[None, :]) & (rows[:, None] <= op.n)).astype(float)
    _require_basis(op, sys)
    if closed_form and op.variant == "uniform_grid":
        grid = _sobolev_grid if sys.basis == "sobolev" else _fourier_grid
        return grid(op.n, rows[:, None], cols[None, :])
    x = op.x[:, None]
    left = sys.psi(rows[None, :], x) * op.sq_weights[:, None]
    right = sys.psi(cols[None, :], x)
    return left.T @ right / op.n


def psi_diag(op: SamplingOperator, sys: EigenSystem, ks, chunk: int = 4096) -> np.ndarray:
    """Diagonal entries ``[Psi]_{kk}`` for the 1-based indices ``ks``."""
    ks = np.atleast_1d(np.asarray(ks, dtype=np.int64))
    _check_indices(ks)
    if op.variant == "fourier_truncation":
        return (ks <= op.n).astype(float)
    _require_basis(op, sys)
    if op.variant == "uniform_grid":
        grid = _sobolev_grid if sys.basis == "sobolev" else _fourier_grid
        return grid(op.n, ks, ks)
    w2 = op.sq_weights[:, None] / op.n
    out = np.empty(ks.size)
    for lo in range(0, ks.size, chunk):
        part = ks[lo : lo + chunk]
        out[lo : lo + part.size] = np.sum(w2 * sys.psi(part[None, :], op.x[:, None]) ** 2, axis=0)
    return out


def psi_entry(op: SamplingOperator, sys: EigenSystem, j: int, k: int) -> float:
    """``<psi_j, psi_k>_Phi``."""
    return float(psi_block(op, sys, [j], [k])[0, 0])
