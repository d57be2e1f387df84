"""Response-time laws for a single client.

A client's response time ``U`` takes values in ``{1, 2, ..., inf}``; the
atom at infinity models a client who never answers.  Three families are
supported: pure geometric, the geometric/point-mass mixture used for
marketing ("pent-up demand" at 1, "indifference" at infinity), and an
explicit table whose unlisted mass sits at infinity.

All laws are immutable.  Scalar accessors (``mass_at``, ``survival`` ...)
mirror vectorised accessors (``pmf_array``, ``survival_array`` ...) used
by the engines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConditioningError, InvalidLawError

MASS_TOL = 1e-12

__all__ = [
    "ResponseLaw",
    "Geometric",
    "Mixture",
    "Table",
    "law_from_dict",
    "mass_at",
    "survival",
    "hazard",
    "cdf",
    "truncated_mean",
]


def _check_prob(name: str, x: float) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise InvalidLawError(f"{name} must lie in [0, 1], got {x!r}")
    return x


def _one_minus_q_pow(p: float, k: np.ndarray | int) -> np.ndarray | float:
    """``1 - (1-p)**k`` without cancellation for small p."""
    if p >= 1.0:
        return np.where(np.asarray(k) > 0, 1.0, 0.0) if np.ndim(k) else float(k > 0)
    k = np.asarray(k, dtype=float)
    smooth = -np.expm1(k * math.log1p(-p))
    q = 1.0 - p
    if 1.0 - q != p:  # q not exact; stay on the log1p path
        return smooth
    qk = q**k  # exact base; 1 - qk is exact (Sterbenz) and loses at most ~4 ulp when qk <= 0.75
    return np.where(qk <= 0.75, 1.0 - qk, smooth)


class ResponseLaw:
    """Common interface; see :class:`Geometric`, :class:`Mixture`, :class:`Table`."""

    kind: str = ""

    # -- vectorised accessors (subclasses implement) -----------------------
    def pmf_array(self, n: int) -> np.ndarray:
        """``pi_1 .. pi_n`` as an array of length n."""
        raise NotImplementedError

    def survival_array(self, n: int) -> np.ndarray:
        """``P(U > m)`` for ``m = 0 .. n`` (length n + 1)."""
        raise NotImplementedError

    def cdf_array(self, n: int) -> np.ndarray:
        """``F(1) .. F(n)``."""
        raise NotImplementedError

    def truncated_mean_array(self, n: int) -> np.ndarray:
        """``H(k) = E[min(U, k)]`` for ``k = 1 .. n``."""
        s = self.survival_array(n - 1) if n > 1 else np.ones(1)
        return np.cumsum(s)[:n]

    # -- scalar accessors ---------------------------------------------------
    def mass_at(self, n: int) -> float:
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return float(self.pmf_array(n)[-1])

    def survival(self, m: int) -> float:
        if m < 0:
            raise ValueError(f"m must be >= 0, got {m}")
        return float(self.survival_array(m)[-1])

    def cdf(self, k: int) -> float:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        return float(self.cdf_array(k)[-1])

    def truncated_mean(self, k: int) -> float:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        return float(self.truncated_mean_array(k)[-1])

    def hazard(self, n: int) -> tuple[float, float]:
        """Return ``(p_{n-1}, q_{n-1})``: the chance of answering at epoch n
        given silence through epoch n - 1, and its complement."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        s = self.survival_array(n)
        if s[n - 1] <= 0.0:
            raise ConditioningError(f"P(U > {n - 1}) = 0; hazard at epoch {n} undefined")
        q = float(s[n] / s[n - 1])
        return float(self.pmf_array(n)[-1] / s[n - 1]), q

    def hazard_array(self, n: int) -> np.ndarray:
        """``p_0 .. p_{n-1}`` with the convention ``p = 1`` once survival vanishes.

        Used by the chain recursions and the simulator, where a pool that
        can no longer be silent simply answers in full.
        """
        s = self.survival_array(n)
        pi = self.pmf_array(n)
        out = np.ones(n)
        alive = s[:-1] > 0.0
        out[alive] = np.minimum(pi[alive] / s[:-1][alive], 1.0)
        return out

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Geometric(ResponseLaw):
    """``P(U = n) = p q^(n-1)``; q is stored to keep ``p + q = 1`` exact."""

    p: float
    q: float = field(init=False)
    kind = "geometric"

    def __post_init__(self):
        p = float(self.p)
        if not (0.0 < p <= 1.0):
            raise InvalidLawError(f"geometric p must lie in (0, 1], got {self.p!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", 1.0 - p)

    @property
    def tail(self) -> float:
        return 0.0

    def pmf_array(self, n):
        return self.p * np.power(self.q, np.arange(n, dtype=float))

    def survival_array(self, n):
        return np.power(self.q, np.arange(n + 1, dtype=float))

    def cdf_array(self, n):
        return _one_minus_q_pow(self.p, np.arange(1, n + 1))

    def truncated_mean_array(self, n):
        return self.cdf_array(n) / self.p

    def hazard(self, n):
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return self.p, self.q

    def hazard_array(self, n):
        return np.full(n, self.p)

    def to_dict(self):
        return {"kind": "geometric", "p": self.p}


@dataclass(frozen=True)
class Mixture(ResponseLaw):
    """Point mass ``w1`` at 1, ``winf`` at infinity, ``wg`` on a Geometric(p) body."""

    w1: float
    winf: float
    wg: float
    p: float
    q: float = field(init=False)
    kind = "mixture"

    def __post_init__(self):
        w1 = _check_prob("w1", self.w1)
        winf = _check_prob("winf", self.winf)
        wg = _check_prob("wg", self.wg)
        if abs(w1 + winf + wg - 1.0) > MASS_TOL:
            raise InvalidLawError(f"mixture weights sum to {w1 + winf + wg!r}, expected 1")
        p = float(self.p)
        if not (0.0 < p <= 1.0):
            raise InvalidLawError(f"mixture p must lie in (0, 1], got {self.p!r}")
        wg = max(1.0 - w1 - winf, 0.0)  # exact normalisation
        for name, val in (("w1", w1), ("winf", winf), ("wg", wg), ("p", p), ("q", 1.0 - p)):
            object.__setattr__(self, name, val)

    @property
    def tail(self) -> float:
        """Mass at infinity."""
        return self.winf

    def pmf_array(self, n):
        out = self.wg * self.p * np.power(self.q, np.arange(n, dtype=float))
        if n:
            out[0] += self.w1
        return out

    def survival_array(self, n):
        out = self.winf + self.wg * np.power(self.q, np.arange(n + 1, dtype=float))
        out[0] = 1.0
        return out

    def cdf_array(self, n):
        return self.w1 + self.wg * _one_minus_q_pow(self.p, np.arange(1, n + 1))

    def truncated_mean_array(self, n):
        k = np.arange(1, n + 1)
        body = self.q * _one_minus_q_pow(self.p, k - 1) / self.p
        return 1.0 + (k - 1) * self.winf + self.wg * body

    def to_dict(self):
        return {"kind": "mixture", "w1": self.w1, "winf": self.winf, "wg": self.wg, "p": self.p}


@dataclass(frozen=True)
class Table(ResponseLaw):
    """Explicit ``pi_1 .. pi_N``; everything else is mass at infinity.

    ``tail`` may be omitted, in which case it is inferred as ``1 - sum(masses)``.
    """

    masses: tuple[float, ...]
    tail: float | None = None
    kind = "table"

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).ravel()
        if m.size and (np.any(m < 0.0) or np.any(m > 1.0) or np.any(np.isnan(m))):
            raise InvalidLawError("table masses must lie in [0, 1]")
        total = float(math.fsum(m))
        if self.tail is None:
            tail = 1.0 - total
            if tail < -MASS_TOL:
                raise InvalidLawError(f"table masses sum to {total!r} > 1")
        else:
            tail = _check_prob("tail", self.tail)
            if abs(total + tail - 1.0) > MASS_TOL:
                raise InvalidLawError(f"table mass plus tail is {total + tail!r}, expected 1")
        # absorb the permitted rounding slack so that survival == 1 - cdf exactly
        tail = 1.0 - total
        if tail < 0.0:
            m = m / total
            tail = 0.0
        m.setflags(write=False)
        object.__setattr__(self, "masses", tuple(float(x) for x in m))
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "_m", m)
        suffix = np.concatenate([np.cumsum(m[::-1])[::-1], [0.0]]) + tail
        object.__setattr__(self, "_surv", suffix)  # survival(0 .. N)
        object.__setattr__(self, "_cum", np.cumsum(m))

    @property
    def size(self) -> int:
        return len(self.masses)

    def pmf_array(self, n):
        out = np.zeros(n)
        k = min(n, self.size)
        out[:k] = self._m[:k]
        return out

    def survival_array(self, n):
        out = np.full(n + 1, self.tail)
        k = min(n + 1, self.size + 1)
        out[:k] = self._surv[:k]
        out[0] = 1.0
        return out

    def cdf_array(self, n):
        out = np.full(n, self._cum[-1] if self.size else 0.0)
        k = min(n, self.size)
        out[:k] = self._cum[:k]
        return out

    def to_dict(self):
        return {"kind": "table", "masses": list(self.masses), "tail": self.tail}


def law_from_dict(d: Mapping[str, Any]) -> ResponseLaw:
    """Build a law from its JSON form (``{"kind": "geometric", "p": 0.5}`` etc.)."""
    try:
        kind = d["kind"]
        if kind == "geometric":
            return Geometric(d["p"])
        if kind == "mixture":
            return Mixture(d["w1"], d["winf"], d["wg"], d["p"])
        if kind == "table":
            return Table(tuple(d["masses"]), d.get("tail"))
    except KeyError as exc:
        raise InvalidLawError(f"law is missing field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise InvalidLawError(f"malformed law: {exc}") from None
    raise InvalidLawError(f"unknown law kind {d.get('kind')!r}")


# functional aliases
def mass_at(law: ResponseLaw, n: int) -> float:
    return law.mass_at(n)


def survival(law: ResponseLaw, m: int) -> float:
    return law.survival(m)


def hazard(law: ResponseLaw, n: int) -> tuple[float, float]:
    return law.hazard(n)


def cdf(law: ResponseLaw, k: int) -> float:
    return law.cdf(k)


def truncated_mean(law: ResponseLaw, k: int) -> float:
    return law.truncated_mean(k)
