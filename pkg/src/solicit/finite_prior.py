"""Exact results for a fixed or Binomial pool size.

Given ``S_n = k`` surviving clients, each answers at epoch ``n + 1`` with the
hazard ``p_n``, so the pool is a (non-homogeneous) Markov chain that
thins binomially until the first silent epoch.  Everything here is
computed on that chain:

* :func:`phi_f` runs the backward recursion for ``E[f(T) | S_0 = r]``;
* :func:`chain_stats` runs it forwards and collects the law of T, the
  law of Y and the expected marketing effort;
* :func:`pgf_given_r` / :func:`pgf_binomial` are the geometric-case
  generating-function recursions;
* :func:`brute_force` enumerates every assignment of response times and
  serves as the model-wide oracle for small pools.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping

import numpy as np
from scipy.stats import binom, poisson

from .errors import InvalidLawError, StateBudgetError
from .poisson_engine import _evaluate
from .response_law import ResponseLaw

__all__ = [
    "PriorSpec",
    "Poisson",
    "Binomial",
    "Fixed",
    "prior_from_dict",
    "phi_f",
    "law_T_given_r",
    "chain_stats",
    "prior_stats",
    "brute_force",
    "pgf_given_r",
    "pgf_binomial",
    "expected_yield_binomial",
    "weighted_response_expectation",
    "FixedPoolStats",
]


# -- priors -----------------------------------------------------------------
class PriorSpec:
    """Distribution of the initial pool size ``S_0``."""

    kind = ""

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def weights(self, tail: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
        """Support points and probabilities, cut where the upper tail drops below ``tail``."""
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Poisson(PriorSpec):
    v: float
    kind = "poisson"

    def __post_init__(self):
        if not float(self.v) >= 0.0:
            raise InvalidLawError(f"Poisson mean must be >= 0, got {self.v!r}")
        object.__setattr__(self, "v", float(self.v))

    def sample(self, rng, size):
        return rng.poisson(self.v, size)

    def weights(self, tail=1e-12):
        if self.v == 0.0:
            return np.zeros(1, dtype=int), np.ones(1)
        hi = int(poisson.isf(tail, self.v)) + 1
        r = np.arange(hi + 1)
        return r, poisson.pmf(r, self.v)

    def to_dict(self):
        return {"kind": "poisson", "v": self.v}


@dataclass(frozen=True)
class Binomial(PriorSpec):
    s: int
    theta: float
    kind = "binomial"

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 0:
            raise InvalidLawError(f"Binomial size must be a nonnegative integer, got {self.s!r}")
        if not (0.0 <= float(self.theta) <= 1.0):
            raise InvalidLawError(f"Binomial theta must lie in [0, 1], got {self.theta!r}")
        object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "theta", float(self.theta))

    def sample(self, rng, size):
        return rng.binomial(self.s, self.theta, size)

    def weights(self, tail=1e-12):
        r = np.arange(self.s + 1)
        w = _binomial_weights(self.s, self.theta)
        k = _cut_index(w, tail)
        return r[: k + 1], w[: k + 1]

    def to_dict(self):
        return {"kind": "binomial", "s": self.s, "theta": self.theta}


@dataclass(frozen=True)
class Fixed(PriorSpec):
    r: int
    kind = "fixed"

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 0:
            raise InvalidLawError(f"pool size must be a nonnegative integer, got {self.r!r}")
        object.__setattr__(self, "r", int(self.r))

    def sample(self, rng, size):
        return np.full(size, self.r, dtype=np.int64)

    def weights(self, tail=1e-12):
        return np.array([self.r]), np.ones(1)

    def to_dict(self):
        return {"kind": "fixed", "r": self.r}


def prior_from_dict(d: Mapping[str, Any]) -> PriorSpec:
    try:
        kind = d["kind"]
        if kind == "poisson":
            return Poisson(d["v"])
        if kind == "binomial":
            return Binomial(d["s"], d["theta"])
        if kind == "fixed":
            return Fixed(d["r"])
    except KeyError as exc:
        raise InvalidLawError(f"prior is missing field {exc.args[0]!r}") from None
    raise InvalidLawError(f"unknown prior kind {d.get('kind')!r}")


# -- binomial helpers ---------------------------------------------------------
def _binomial_weights(s: int, theta: float) -> np.ndarray:
    """``C(s,k) theta^k (1-theta)^(s-k)`` for ``k = 0 .. s`` (log-gamma based, safe for large s)."""
    return binom.pmf(np.arange(s + 1), s, theta)


def _cut_index(w: np.ndarray, tail: float) -> int:
    """Smallest k with ``sum(w[k+1:]) <= tail``."""
    upper = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
    return int(np.flatnonzero(upper <= tail)[0])


def _thinning_matrix(k_max: int, q: float) -> np.ndarray:
    """``B[k, j] = P(j of k clients stay silent)``, j < k (strictly lower triangle)."""
    k = np.arange(k_max + 1)[:, None]
    j = np.arange(k_max + 1)[None, :]
    with np.errstate(invalid="ignore"):
        B = binom.pmf(j, k, q)
    B = np.nan_to_num(B)
    return np.tril(B, -1)


# -- backward recursion -------------------------------------------------------
def _phi_values(law: ResponseLaw, r: int, fvals: np.ndarray) -> np.ndarray:
    """``phi_r^(0)`` for ``fvals[m] = f(m + 1)``, ``m = 0 .. r`` (trailing axes allowed)."""
    hz = law.hazard_array(r + 1)  # p_0 .. p_r
    nxt = None
    for n in range(r, -1, -1):
        K = r - n
        q = 1.0 - hz[n]
        cur = np.empty((K + 1,) + fvals.shape[1:])
        stay_k = np.power(q, np.arange(K + 1, dtype=float))
        cur[:] = np.multiply.outer(stay_k, fvals[n]) if fvals.ndim > 1 else stay_k * fvals[n]
        if K:
            B = _thinning_matrix(K, q)
            cur[1:] += B[1:, :K] @ nxt[:K]
        nxt = cur
    return nxt[r]


def phi_f(law: ResponseLaw, r: int, f: Callable) -> float:
    """``E[f(T) | S_0 = r]`` by the backward chain recursion.

    ``phi_k^(n) = f(n+1) q_n^k + sum_{j<k} C(k,j) p_n^(k-j) q_n^j phi_j^(n+1)``
    with ``phi_0^(n) = f(n+1)``; T never exceeds ``r + 1``.
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    fvals = _evaluate(f, np.arange(1, r + 2))
    return float(_phi_values(law, r, fvals))


def law_T_given_r(law: ResponseLaw, r: int) -> np.ndarray:
    """``P(T = n | S_0 = r)`` for ``n = 1 .. r + 1``."""
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    return _phi_values(law, r, np.eye(r + 1))


def weighted_response_expectation(law: ResponseLaw, r: int, g: Callable) -> float:
    """``E[sum_{n<T} g(n) X_n | S_0 = r] = r E[f(T) | S_0 = r-1]`` with
    ``f(k) = sum_{n<=k} g(n) pi_n``."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    gv = _evaluate(g, np.arange(1, r + 1))
    fvals = np.cumsum(gv * law.pmf_array(r))
    return r * float(_phi_values(law, r - 1, fvals))


# -- forward recursion ----------------------------------------------------------
@dataclass(frozen=True)
class FixedPoolStats:
    law_T: np.ndarray  # P(T = n), n = 1 ..
    law_Y: np.ndarray  # P(Y = y), y = 0 ..
    e_T: float
    e_Y: float
    var_Y: float
    e_M: float

    def to_dict(self):
        return {
            "e_T": self.e_T,
            "e_Y": self.e_Y,
            "var_Y": self.var_Y,
            "e_M": self.e_M,
            "law_T": {"probs": self.law_T.tolist(), "residual": 0.0},
            "law_Y": {"probs": self.law_Y.tolist(), "lost_mass": 0.0},
        }


def _moments(probs: np.ndarray, base: int):
    x = np.arange(base, base + len(probs), dtype=float)
    mean = math.fsum(probs * x)
    return mean, math.fsum(probs * (x - mean) ** 2)


def chain_stats(law: ResponseLaw, r: int) -> FixedPoolStats:
    """Law of T, law of Y, and E[M] given ``S_0 = r``, by forward propagation.

    ``alive[k]`` is ``P(S_{n-1} = k, T > n-1)``.  Each epoch sends ``k``
    solicitations from state k; silence (probability ``q^k``) ends the
    campaign with ``Y = r - k``.
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    hz = law.hazard_array(r + 1)
    alive = np.zeros(r + 1)
    alive[r] = 1.0
    law_T = np.zeros(r + 1)
    law_Y = np.zeros(r + 1)
    e_M = 0.0
    ks = np.arange(r + 1, dtype=float)
    for n in range(1, r + 2):
        q = 1.0 - hz[n - 1]
        e_M += math.fsum(alive * ks)
        stop = alive * np.power(q, ks)
        law_T[n - 1] = math.fsum(stop)
        law_Y += stop[::-1]  # Y = r - k
        alive = alive @ _thinning_matrix(r, q)
        if not alive.any():
            break
    e_T, _ = _moments(law_T, 1)
    e_Y, var_Y = _moments(law_Y, 0)
    return FixedPoolStats(law_T, law_Y, e_T, e_Y, var_Y, e_M)


def prior_stats(law: ResponseLaw, prior: PriorSpec, tail: float = 1e-12) -> FixedPoolStats:
    """Mix :func:`chain_stats` over the (tail-cut) prior support."""
    rs, ws = prior.weights(tail)
    ws = ws / math.fsum(ws)
    size = int(rs.max()) + 1
    law_T = np.zeros(size + 1)
    law_Y = np.zeros(size + 1)
    e_M = 0.0
    for r, w in zip(rs, ws):
        st = chain_stats(law, int(r))
        law_T[: len(st.law_T)] += w * st.law_T
        law_Y[: len(st.law_Y)] += w * st.law_Y
        e_M += w * st.e_M
    e_T, _ = _moments(law_T, 1)
    e_Y, var_Y = _moments(law_Y, 0)
    return FixedPoolStats(law_T, law_Y, e_T, e_Y, var_Y, e_M)


# -- brute force ----------------------------------------------------------------
@dataclass(frozen=True)
class BruteForceResult:
    law_T: np.ndarray  # P(T = n), n = 1 .. horizon
    e_T: float
    e_Y: float
    var_Y: float
    e_M: float
    states: int


def brute_force(law: ResponseLaw, r: int, horizon: int | None = None, budget: int = 10**8) -> BruteForceResult:
    """Enumerate all response-time assignments of ``r`` clients.

    Each client's time is bucketed into ``1 .. horizon`` or "later"; since
    ``T <= r + 1 <= horizon`` a later client is never reached before
    despair, so the enumeration is exact.
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    horizon = r + 1 if horizon is None else int(horizon)
    if horizon < r + 1:
        raise ValueError(f"horizon must be >= r + 1 = {r + 1}, got {horizon}")
    n_states = (horizon + 1) ** r
    if n_states > budget:
        raise StateBudgetError(f"{n_states} assignments exceed the budget of {budget}")
    if r == 0:
        law_T = np.zeros(horizon)
        law_T[0] = 1.0
        return BruteForceResult(law_T, 1.0, 0.0, 0.0, 0.0, 1)

    bucket_p = np.append(law.pmf_array(horizon), law.survival(horizon))
    # rows are assignments, columns clients; values 1 .. horizon + 1
    grid = np.indices((horizon + 1,) * r).reshape(r, -1).T + 1
    prob = np.prod(bucket_p[grid - 1], axis=1)
    counts = np.stack([(grid == n).sum(axis=1) for n in range(1, horizon + 1)], axis=1)
    T = np.argmax(counts == 0, axis=1) + 1
    answered = grid < T[:, None]
    Y = answered.sum(axis=1)
    M = np.where(answered, grid, T[:, None]).sum(axis=1)

    law_T = np.array([math.fsum(prob[T == n]) for n in range(1, horizon + 1)])
    e_T = math.fsum(prob * T)
    e_Y = math.fsum(prob * Y)
    var_Y = math.fsum(prob * (Y - e_Y) ** 2)
    e_M = math.fsum(prob * M)
    return BruteForceResult(law_T, e_T, e_Y, var_Y, e_M, n_states)


# -- geometric generating functions ---------------------------------------------
def _pgf_table(p: float, r_max: int, z: float) -> np.ndarray:
    """``g_k(z) = E[z^T | S_0 = k]`` for ``k = 0 .. r_max`` (geometric responses)."""
    q = 1.0 - p
    g = np.empty(r_max + 1)
    g[0] = z
    for r in range(1, r_max + 1):
        k = np.arange(r)
        w = binom.pmf(k, r, q)  # k of r stay silent, at least one answers
        g[r] = z * (q**r + math.fsum(w * g[:r]))
    return g


def pgf_given_r(p: float, r: int, z: float) -> float:
    """``g_r(z) = z {q^r + sum_{k<r} C(r,k) q^k p^(r-k) g_k(z)}``, ``g_0(z) = z``."""
    if not (0.0 < p <= 1.0):
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    return float(_pgf_table(p, r, z)[r])


def pgf_binomial(p: float, s: int, theta: float, z: float, tail: float = 1e-18) -> float:
    """``G_{s,theta}(z) = sum_k C(s,k) theta^k (1-theta)^(s-k) g_k(z)``.

    For ``z <= 1`` (where ``0 <= g_k <= 1``) prior mass beyond the point
    where the upper tail falls below ``tail`` is dropped.
    """
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    w = _binomial_weights(s, theta)
    k_max = _cut_index(w, tail) if z <= 1.0 else s
    g = _pgf_table(p, k_max, z)
    return math.fsum(w[: k_max + 1] * g)


def expected_yield_binomial(p: float, s: int, theta: float) -> float:
    """``E[Y] = s theta {1 - G_{s-1,theta}(q)}`` for ``S_0 ~ Binomial(s, theta)``."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if theta == 0.0:
        return 0.0
    return s * theta * (1.0 - pgf_binomial(p, s - 1, theta, 1.0 - p))
