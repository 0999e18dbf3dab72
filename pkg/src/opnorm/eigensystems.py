"""Eigen-decompositions (sigma_k, psi_k) of kernel integral operators on [0, 1].

Two families come with explicit eigenfunctions:

* ``sobolev``: the kernel ``min(x, y)`` with
  ``sigma_k = ((2k - 1) pi / 2)^-2`` and ``psi_k(x) = sqrt(2) sin((2k - 1) pi x / 2)``.
* ``fourier_zeta``: translation-invariant kernels ``kappa(x - y)`` whose
  cosine coefficients ``zeta_0 >= zeta_1 >= ...`` give
  ``sigma_1 = zeta_0`` and ``sigma_{2k} = sigma_{2k+1} = zeta_k``, with
  eigenfunctions ``1, sqrt(2) cos(2 pi k x), sqrt(2) sin(2 pi k x)``.

The remaining kinds (``polynomial``, ``exponential``, ``explicit``) are
abstract decay models that only carry eigenvalues.  They pair with the
Fourier-truncation operator, which never evaluates eigenfunctions.

Indices are 1-based throughout, matching the usual sigma_1 >= sigma_2 >= ...
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Union

import numpy as np
from scipy.special import polygamma, zeta as hurwitz_zeta

from .errors import ConfigError, DomainError, NotSummableError, UnsupportedOperationError

__all__ = [
    "TailSum",
    "EigenSequence",
    "EigenSystem",
    "sigma",
    "tail_sum",
    "sigma_l1",
    "eval_psi",
    "mercer_eval",
]

SQRT2 = math.sqrt(2.0)
_ABSTRACT_KINDS = ("polynomial", "exponential")
_KINDS = ("sobolev", "fourier_zeta", "polynomial", "exponential", "explicit")


class TailSum(NamedTuple):
    """A tail sum together with a flag telling whether it is exact or an upper bound."""

    value: float
    exact: bool


def _as_index(k: Any) -> np.ndarray:
    arr = np.asarray(k)
    if arr.size and np.any(arr < 1):
        raise DomainError(f"eigen-indices are 1-based; got {k!r}")
    return arr


@dataclass(frozen=True)
class EigenSequence:
    """A positive nonincreasing eigenvalue sequence sigma_1, sigma_2, ...

    Use the ``sobolev``, ``polynomial``, ``exponential``, ``fourier_zeta`` and
    ``explicit`` constructors rather than the raw initialiser.
    """

    kind: str
    C: float = 1.0
    alpha: float | None = None
    rho: float | None = None
    values: tuple[float, ...] = ()
    tail: EigenSequence | None = None
    zeta: EigenSequence | None = None
    zeta0: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise DomainError(f"unknown eigen-sequence kind {self.kind!r}")
        if self.kind in ("polynomial", "exponential") and not self.C > 0:
            raise DomainError("C must be positive")
        if self.kind == "polynomial":
            # alpha <= 1 is representable; summing such a sequence raises NotSummableError
            if self.alpha is None or not self.alpha > 0:
                raise DomainError("polynomial decay needs alpha > 0")
        elif self.kind == "exponential":
            if self.rho is None or not 0 < self.rho < 1:
                raise DomainError("exponential decay needs rho in (0, 1)")
        elif self.kind == "explicit":
            vals = np.asarray(self.values, dtype=float)
            if vals.size == 0:
                raise DomainError("explicit sequence needs at least one value")
            if np.any(vals <= 0) or np.any(np.diff(vals) > 0):
                raise DomainError("explicit values must be positive and nonincreasing")
            if self.tail is None or self.tail.kind not in _ABSTRACT_KINDS:
                raise DomainError("explicit sequence needs a polynomial or exponential tail model")
            if float(self.tail.sigma(vals.size + 1)) > vals[-1]:
                raise DomainError("tail model must continue the prefix without increasing")
        elif self.kind == "fourier_zeta":
            if self.zeta is None or self.zeta.kind not in ("polynomial", "exponential", "explicit"):
                raise DomainError("fourier_zeta needs a polynomial, exponential or explicit zeta model")
            if self.zeta0 is None or not self.zeta0 >= float(self.zeta.sigma(1)):
                raise DomainError("zeta0 must be at least zeta_1")

    # -- constructors -------------------------------------------------------
    @classmethod
    def sobolev(cls) -> EigenSequence:
        return cls("sobolev")

    @classmethod
    def polynomial(cls, C: float = 1.0, alpha: float = 2.0) -> EigenSequence:
        return cls("polynomial", C=float(C), alpha=float(alpha))

    @classmethod
    def exponential(cls, C: float = 1.0, rho: float = 0.5) -> EigenSequence:
        return cls("exponential", C=float(C), rho=float(rho))

    @classmethod
    def explicit(cls, values, tail: EigenSequence) -> EigenSequence:
        return cls("explicit", values=tuple(float(v) for v in values), tail=tail)

    @classmethod
    def fourier_zeta(cls, zeta: EigenSequence, zeta0: float | None = None) -> EigenSequence:
        """``zeta`` gives zeta_k for k >= 1; ``zeta0`` defaults to continuing the model at k = 0."""
        if zeta0 is None:
            if zeta.kind == "explicit":
                zeta0 = zeta.values[0]
            else:
                zeta0 = zeta.C
        return cls("fourier_zeta", zeta=zeta, zeta0=float(zeta0))

    # -- evaluation ---------------------------------------------------------
    def sigma(self, k):
        """sigma_k, vectorised over integer (or integer-valued float) indices."""
        k = _as_index(k)
        kf = np.asarray(k, dtype=float)
        if self.kind == "sobolev":
            out = 4.0 / (math.pi**2 * (2.0 * kf - 1.0) ** 2)
        elif self.kind == "polynomial":
            out = self.C * kf ** (-self.alpha)
        elif self.kind == "exponential":
            out = self.C * np.power(self.rho, kf)
        elif self.kind == "explicit":
            vals = np.asarray(self.values)
            L = vals.size
            inside = kf <= L
            idx = np.where(inside, kf, 1).astype(np.int64) - 1
            out = np.where(inside, vals[idx], self.tail.sigma(np.maximum(kf, L + 1)))
        else:  # fourier_zeta
            half = np.floor(kf / 2.0)
            out = np.where(kf < 2, self.zeta0, self.zeta.sigma(np.maximum(half, 1.0)))
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    def tail_sum(self, p: int, explicit_terms: int = 0, exact: bool = False) -> TailSum:
        """Sum of sigma_k over k > p (p >= 0), exact where a closed form exists.

        For polynomial decay the sum of the next ``explicit_terms`` values is
        added to the integral bound ``C q^(1 - alpha) / (alpha - 1)`` taken at
        ``q = p + explicit_terms``.  With ``exact=True`` polynomial tails use
        the Hurwitz zeta function instead of the bound.
        """
        return self._power_tail(int(p), 1.0, int(explicit_terms), exact)

    def sqrt_tail_sum(self, p: int) -> float:
        """Upper bound on the sum of sqrt(sigma_k) over k > p; ``inf`` when divergent."""
        return self._power_tail(int(p), 0.5, 0).value

    def l1(self) -> TailSum:
        return self.tail_sum(0, explicit_terms=10_000)

    def _power_tail(self, p: int, s: float, m: int, exact: bool = False) -> TailSum:
        # sum_{k > p} sigma_k ** s, for s in {1, 1/2}
        if p < 0:
            raise DomainError("tail index must be nonnegative")
        if self.kind == "sobolev":
            if s != 1.0:
                return TailSum(math.inf, False)
            return TailSum(float(polygamma(1, p + 0.5)) / math.pi**2, True)
        if self.kind == "exponential":
            r = self.rho**s
            return TailSum(self.C**s * r ** (p + 1) / (1.0 - r), True)
        if self.kind == "polynomial":
            a = self.alpha * s
            if a <= 1.0:
                if s == 1.0:
                    raise NotSummableError(f"polynomial decay with alpha={self.alpha} is not summable")
                return TailSum(math.inf, False)
            if exact:
                return TailSum(self.C**s * float(hurwitz_zeta(a, p + 1)), True)
            head = 0.0
            q = p
            if q == 0:
                head, q = self.C**s, 1
            if m > 0:
                ks = np.arange(q + 1, q + m + 1, dtype=float)
                head += float(np.sum(self.C**s * ks ** (-a)))
                q += m
            return TailSum(head + self.C**s * q ** (1.0 - a) / (a - 1.0), False)
        if self.kind == "explicit":
            L = len(self.values)
            if p >= L:
                return self.tail._power_tail(p, s, m, exact)
            rest = self.tail._power_tail(L, s, m, exact)
            head = float(np.sum(np.asarray(self.values[p:]) ** s))
            return TailSum(head + rest.value, rest.exact)
        # fourier_zeta: sigma_1 = zeta0, sigma_{2k} = sigma_{2k+1} = zeta_k
        if p == 0:
            rest = self.zeta._power_tail(0, s, m, exact)
            return TailSum(self.zeta0**s + 2.0 * rest.value, rest.exact)
        half, odd = divmod(p, 2)
        rest = self.zeta._power_tail(half, s, m, exact)
        extra = 0.0 if odd else float(self.zeta.sigma(half)) ** s
        return TailSum(extra + 2.0 * rest.value, rest.exact)

    # -- serialisation ------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        if self.kind == "sobolev":
            return {"kind": "sobolev"}
        if self.kind == "polynomial":
            return {"kind": "polynomial", "C": self.C, "alpha": self.alpha}
        if self.kind == "exponential":
            return {"kind": "exponential", "C": self.C, "rho": self.rho}
        if self.kind == "explicit":
            return {"kind": "explicit", "values": list(self.values), "tail": self.tail.to_dict()}
        return {"kind": "fourier_zeta", "zeta0": self.zeta0, "zeta": self.zeta.to_dict()}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> EigenSequence:
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ConfigError("eigensystem descriptor must be a mapping with a 'kind' key")
        allowed = {
            "sobolev": set(),
            "polynomial": {"C", "alpha"},
            "exponential": {"C", "rho"},
            "explicit": {"values", "tail"},
            "fourier_zeta": {"zeta", "zeta0"},
        }
        kind = doc["kind"]
        if kind not in allowed:
            raise ConfigError(f"unknown eigensystem kind {kind!r}")
        unknown = set(doc) - allowed[kind] - {"kind"}
        if unknown:
            raise ConfigError(f"unknown keys for kind {kind!r}: {sorted(unknown)}")
        try:
            if kind == "sobolev":
                return cls.sobolev()
            if kind == "polynomial":
                return cls.polynomial(doc.get("C", 1.0), doc["alpha"])
            if kind == "exponential":
                return cls.exponential(doc.get("C", 1.0), doc["rho"])
            if kind == "explicit":
                return cls.explicit(doc["values"], cls.from_dict(doc["tail"]))
            return cls.fourier_zeta(cls.from_dict(doc["zeta"]), doc.get("zeta0"))
        except KeyError as exc:
            raise ConfigError(f"missing key {exc} for eigensystem kind {kind!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid {kind} eigensystem: {exc}") from None


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues plus (when known in closed form) the L2-orthonormal eigenfunctions."""

    sequence: EigenSequence

    @classmethod
    def sobolev(cls) -> EigenSystem:
        return cls(EigenSequence.sobolev())

    @classmethod
    def polynomial(cls, C: float = 1.0, alpha: float = 2.0) -> EigenSystem:
        return cls(EigenSequence.polynomial(C, alpha))

    @classmethod
    def exponential(cls, C: float = 1.0, rho: float = 0.5) -> EigenSystem:
        return cls(EigenSequence.exponential(C, rho))

    @classmethod
    def explicit(cls, values, tail: EigenSequence) -> EigenSystem:
        return cls(EigenSequence.explicit(values, tail))

    @classmethod
    def fourier_zeta(cls, zeta: EigenSequence, zeta0: float | None = None) -> EigenSystem:
        return cls(EigenSequence.fourier_zeta(zeta, zeta0))

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> EigenSystem:
        return cls(EigenSequence.from_dict(doc))

    def to_dict(self) -> dict[str, Any]:
        return self.sequence.to_dict()

    @property
    def kind(self) -> str:
        return self.sequence.kind

    @property
    def basis(self) -> str | None:
        """``"sobolev"``, ``"fourier"`` or ``None`` for abstract decay models."""
        return {"sobolev": "sobolev", "fourier_zeta": "fourier"}.get(self.kind)

    @property
    def c_psi(self) -> float | None:
        """Uniform bound on |psi_k(x)|, or ``None`` when no eigenfunctions are attached."""
        return SQRT2 if self.basis is not None else None

    def sigma(self, k):
        return self.sequence.sigma(k)

    def psi(self, k, x):
        """psi_k(x), broadcasting ``k`` against ``x``."""
        if self.basis is None:
            raise UnsupportedOperationError(f"eigensystem kind {self.kind!r} has no eigenfunctions")
        k = _as_index(k)
        x = np.asarray(x, dtype=float)
        if x.size and (np.any(x < 0.0) or np.any(x > 1.0)):
            raise DomainError("points must lie in [0, 1]")
        kf = np.asarray(k, dtype=float)
        if self.basis == "sobolev":
            out = SQRT2 * np.sin((2.0 * kf - 1.0) * (math.pi / 2.0) * x)
        else:
            freq = np.floor(kf / 2.0)
            arg = 2.0 * math.pi * freq * x
            out = np.where(kf < 2, 1.0, np.where(kf % 2 == 0, SQRT2 * np.cos(arg), SQRT2 * np.sin(arg)))
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out


SequenceLike = Union[EigenSystem, EigenSequence]


def _seq(sys: SequenceLike) -> EigenSequence:
    return sys.sequence if isinstance(sys, EigenSystem) else sys


def sigma(sys: SequenceLike, k):
    """k-th eigenvalue (1-based); raises DomainError for k < 1."""
    return _seq(sys).sigma(k)


def tail_sum(sys: SequenceLike, p: int, explicit_terms: int = 0) -> TailSum:
    """``sum_{k > p} sigma_k`` with an ``exact`` flag (False means certified upper bound)."""
    if p < 1:
        raise DomainError("tail_sum needs p >= 1")
    return _seq(sys).tail_sum(p, explicit_terms)


def sigma_l1(sys: SequenceLike) -> TailSum:
    """``||sigma||_1``; raises NotSummableError for polynomial decay with alpha <= 1."""
    return _seq(sys).l1()


def eval_psi(sys: EigenSystem, k, x):
    return sys.psi(k, x)


def mercer_eval(sys: EigenSystem, x: float, y: float, K: int) -> float:
    """Partial Mercer sum ``sum_{k <= K} sigma_k psi_k(x) psi_k(y)``."""
    if K < 1:
        raise DomainError("truncation K must be >= 1")
    ks = np.arange(1, K + 1)
    return float(np.sum(sys.sigma(ks) * sys.psi(ks, x) * sys.psi(ks, y)))
