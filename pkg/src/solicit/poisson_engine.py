"""Exact despair-time law and yield/effort moments under a Poisson pool size.

With ``S_0 ~ Poisson(v)`` the per-epoch response counts ``X_n`` are
independent Poisson(``pi_n v``) variables, so ``T`` (the first silent
epoch) has the product-form law

    P(T = n) = lambda_1 ... lambda_{n-1} (1 - lambda_n),  lambda_n = 1 - exp(-pi_n v),

and every expectation ``E[f(T)]`` is a single series.  The series is cut
at the first ``n`` with ``lambda_1 ... lambda_n <= alpha`` (or at
``hard_cap``), and the discarded probability is reported as ``residual``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import TruncationError
from .response_law import ResponseLaw

__all__ = [
    "TruncationPolicy",
    "DespairLaw",
    "YieldLaw",
    "CampaignStats",
    "lambda_seq",
    "despair_law",
    "expect_f_T",
    "expected_despair",
    "expected_yield",
    "expected_effort",
    "yield_variance",
    "yield_law",
    "expect_via_mixture_recursion",
    "expected_weighted_responses",
    "campaign_stats",
]

IntFunc = Callable[..., object]


@dataclass(frozen=True)
class TruncationPolicy:
    alpha: float = 1e-12
    hard_cap: int = 100_000

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if int(self.hard_cap) < 1:
            raise ValueError(f"hard_cap must be >= 1, got {self.hard_cap!r}")

    @classmethod
    def from_dict(cls, d) -> "TruncationPolicy":
        d = d or {}
        return cls(float(d.get("alpha", 1e-12)), int(d.get("hard_cap", 100_000)))

    def to_dict(self):
        return {"alpha": self.alpha, "hard_cap": self.hard_cap}


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class DespairLaw:
    """``probs[n-1] = P(T = n)`` for ``n = 1 .. n_max``; ``residual = P(T > n_max)``.

    ``lambdas`` and ``pi`` hold the per-epoch positivity probabilities and
    response masses over the same range.
    """

    probs: np.ndarray
    residual: float
    lambdas: np.ndarray = field(repr=False)
    pi: np.ndarray = field(repr=False)
    v: float = 0.0

    @property
    def n_max(self) -> int:
        return len(self.probs)

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, self.n_max + 1)

    def to_dict(self):
        return {"probs": self.probs.tolist(), "residual": self.residual}


def lambda_seq(law: ResponseLaw, v: float, n: int) -> np.ndarray:
    """``lambda_j = P(X_j > 0) = 1 - exp(-pi_j v)`` for ``j = 1 .. n``."""
    if v < 0:
        raise ValueError(f"v must be >= 0, got {v}")
    return -np.expm1(-law.pmf_array(n) * v)


def despair_law(law: ResponseLaw, v: float, policy: TruncationPolicy = DEFAULT_POLICY) -> DespairLaw:
    if v < 0:
        raise ValueError(f"v must be >= 0, got {v}")
    v = float(v)
    if v == 0.0:
        return DespairLaw(np.ones(1), 0.0, np.zeros(1), law.pmf_array(1), 0.0)

    log_alpha = math.log(policy.alpha)
    length = min(64, policy.hard_cap)
    while True:
        pi = law.pmf_array(length)
        lam = -np.expm1(-pi * v)
        with np.errstate(divide="ignore"):
            # tested in log space so that the alpha rule fires even once the
            # plain product has underflowed
            log_prod = np.cumsum(np.log(lam))
        hit = np.flatnonzero(log_prod <= log_alpha)
        if hit.size:
            n_max = int(hit[0]) + 1
            break
        if length >= policy.hard_cap:
            residual = float(np.exp(log_prod[-1]))
            raise TruncationError(
                f"P(T > {length}) = {residual:.3e} still exceeds alpha = {policy.alpha:g}; "
                "engagement decays too slowly for the hard cap",
                residual=residual,
                n_terms=length,
            )
        length = min(2 * length, policy.hard_cap)

    lam = lam[:n_max]
    pi = pi[:n_max]
    prods = np.cumprod(lam)  # P(T > n)
    before = np.concatenate([[1.0], prods[:-1]])  # P(T >= n)
    probs = before * np.exp(-pi * v)
    return DespairLaw(probs, float(prods[-1]), lam, pi, v)


def _evaluate(f: IntFunc, ks: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on positive integers, vectorised when ``f`` allows it."""
    try:
        out = np.asarray(f(ks), dtype=float)
        if out.shape == ks.shape:
            return out
        if out.ndim == 0:
            return np.full(ks.shape, float(out))
    except (TypeError, ValueError):
        pass
    return np.array([float(f(int(k))) for k in ks], dtype=float)


def _expect(dl: DespairLaw, values: np.ndarray) -> float:
    return math.fsum(dl.probs * values)


def expect_f_T(law, v, f: IntFunc, policy=DEFAULT_POLICY, return_bound=False):
    """``E[f(T)]`` summed over the truncated support of T.

    With ``return_bound=True`` also returns ``residual * max f`` over the
    support, the error estimate for the omitted tail.
    """
    dl = despair_law(law, v, policy)
    vals = _evaluate(f, dl.support)
    if np.any(vals < 0):
        raise ValueError("f must be nonnegative")
    val = _expect(dl, vals)
    if return_bound:
        return val, dl.residual * float(vals.max())
    return val


def expected_despair(law, v, policy=DEFAULT_POLICY) -> float:
    """``E[T] = 1 + sum_n lambda_1 ... lambda_n``, truncated like the law of T."""
    dl = despair_law(law, v, policy)
    # sum_n n P(T = n) + residual: the unresolved mass counted once, its least
    # possible contribution.  Stays >= 1 and within alpha of expect_f_T(k -> k).
    tail = np.cumprod(dl.lambdas)[:-1] - dl.residual
    return 1.0 + math.fsum(np.maximum(tail, 0.0))


def expected_yield(law, v, policy=DEFAULT_POLICY) -> float:
    """``E[Y] = v E[F(T)]`` with F the cdf of the response time."""
    if v == 0:
        return 0.0
    dl = despair_law(law, v, policy)
    return v * _expect(dl, law.cdf_array(dl.n_max))


def expected_effort(law, v, policy=DEFAULT_POLICY) -> float:
    """``E[M] = v E[H(T)]`` with ``H(k) = E[min(U, k)]``."""
    if v == 0:
        return 0.0
    dl = despair_law(law, v, policy)
    return v * _expect(dl, law.truncated_mean_array(dl.n_max))


def _one_minus_mu_over_expm1(mu: np.ndarray) -> np.ndarray:
    """``1 - mu/(e^mu - 1)``, with a series for small mu to avoid cancellation."""
    mu = np.asarray(mu, dtype=float)
    out = np.empty_like(mu)
    small = mu < 1e-3
    ms = mu[small]
    out[small] = ms / 2 - ms**2 / 12 + ms**4 / 720
    mb = mu[~small]
    out[~small] = 1.0 - mb / np.expm1(mb)
    return out


def _j_and_vr(dl: DespairLaw):
    """``J(k)`` and ``v R(k)`` on ``k = 1 .. n_max``."""
    mu = dl.pi * dl.v
    # pi_n {1 - pi_n v (1 - lambda_n)/lambda_n}; zero when pi_n = 0
    j_terms = dl.pi * _one_minus_mu_over_expm1(mu)
    j_terms[dl.pi == 0.0] = 0.0
    # v pi_n / lambda_n = mu / (1 - e^-mu), which tends to 1 as mu -> 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mu > 0, mu / -np.expm1(-mu), 1.0)
    J = np.cumsum(j_terms)
    vR = np.concatenate([[0.0], np.cumsum(ratio)[:-1]])
    return J, vR


def yield_variance(law, v, policy=DEFAULT_POLICY) -> float:
    """``Var(Y) = v E[J(T)] + v^2 Var(R(T))``."""
    if v == 0:
        return 0.0
    dl = despair_law(law, v, policy)
    J, vR = _j_and_vr(dl)
    mean_vr = _expect(dl, vR)
    return v * _expect(dl, J) + _expect(dl, (vR - mean_vr) ** 2)


@dataclass(frozen=True)
class YieldLaw:
    """``probs[y] = P(Y = y)`` for ``y = 0 .. y_max``.

    ``lost_mass`` is everything not represented: ``P(T > n_max)`` plus the
    mass that the truncated convolutions pushed beyond ``y_max``.
    """

    probs: np.ndarray
    lost_mass: float

    @property
    def mean(self) -> float:
        return math.fsum(np.arange(len(self.probs)) * self.probs)

    @property
    def variance(self) -> float:
        y = np.arange(len(self.probs))
        m = self.mean
        return math.fsum(self.probs * (y - m) ** 2)


def _ztp_pmf(mu: float, y_max: int) -> np.ndarray:
    """Zero-truncated Poisson(mu) on ``0 .. y_max`` (index 0 carries mass 0)."""
    out = np.zeros(y_max + 1)
    if y_max == 0 or mu <= 0.0:
        return out
    y = np.arange(1, y_max + 1)
    log_p = y * math.log(mu) - mu - gammaln(y + 1) - math.log(-math.expm1(-mu))
    out[1:] = np.exp(log_p)
    return out


def yield_law(law, v, y_max: int, policy=DEFAULT_POLICY) -> YieldLaw:
    """Law of Y on ``0 .. y_max``.

    Given ``T = k``, Y is a sum of independent zero-truncated
    Poisson(``pi_n v``) counts for ``n < k``; the conditional laws are built
    by successive convolution and mixed over the law of T.
    """
    if y_max < 0:
        raise ValueError(f"y_max must be >= 0, got {y_max}")
    dl = despair_law(law, v, policy)
    out = np.zeros(y_max + 1)
    cond = np.zeros(y_max + 1)
    cond[0] = 1.0  # law of Y given T = 1
    for k in range(1, dl.n_max + 1):
        out += dl.probs[k - 1] * cond
        if k < dl.n_max:
            cond = np.convolve(cond, _ztp_pmf(dl.pi[k - 1] * v, y_max))[: y_max + 1]
    lost = max(0.0, 1.0 - math.fsum(out))
    return YieldLaw(out, lost)


def expect_via_mixture_recursion(law, v, f: IntFunc, policy=DEFAULT_POLICY) -> float:
    """``E[f(T)]`` through the Poisson-mixed chain recursion.

    ``Phi^(n)_v = e^{-p_n v} f(n+1) + (1 - e^{-p_n v}) Phi^(n+1)_{q_n v}``:
    the pool rate is thinned by the hazards ``q_n`` at each level.  Levels
    are unrolled until the weight of continuing drops to ``alpha``; the
    nested expression is then evaluated from the innermost level outwards.
    """
    if v < 0:
        raise ValueError(f"v must be >= 0, got {v}")
    stop_here = []  # e^{-p_n v_n}
    rate = float(v)
    weight = 1.0
    n = 0
    while True:
        if rate == 0.0:
            a = 1.0
        else:
            s_prev, s_next = law.survival(n), law.survival(n + 1)
            if s_prev == 0.0:
                a = 1.0  # nobody left who could answer
            else:
                p_n, q_n = law.hazard(n + 1)
                a = math.exp(-p_n * rate)
        stop_here.append(a)
        weight *= 1.0 - a
        n += 1
        if weight <= policy.alpha:
            break
        if n >= policy.hard_cap:
            raise TruncationError(
                f"mixture recursion still carries weight {weight:.3e} after {n} levels",
                residual=weight,
                n_terms=n,
            )
        rate = rate * q_n
    vals = _evaluate(f, np.arange(1, n + 1))
    phi = 0.0  # innermost truncated level contributes nothing
    for level in range(n - 1, -1, -1):
        a = stop_here[level]
        phi = a * vals[level] + (1.0 - a) * phi
    return phi


def expected_weighted_responses(law, v, g: IntFunc, policy=DEFAULT_POLICY) -> float:
    """``E[sum_{n<T} g(n) X_n] = v E[f(T)]`` with ``f(k) = sum_{n<=k} g(n) pi_n``."""
    if v == 0:
        return 0.0
    dl = despair_law(law, v, policy)
    f = np.cumsum(_evaluate(g, dl.support) * dl.pi)
    return v * _expect(dl, f)


@dataclass(frozen=True)
class CampaignStats:
    law_T: DespairLaw
    e_T: float
    e_Y: float
    var_Y: float
    e_M: float
    law_Y: YieldLaw | None = None

    def to_dict(self):
        d = {
            "e_T": self.e_T,
            "e_Y": self.e_Y,
            "var_Y": self.var_Y,
            "e_M": self.e_M,
            "law_T": self.law_T.to_dict(),
        }
        if self.law_Y is not None:
            d["law_Y"] = {"probs": self.law_Y.probs.tolist(), "lost_mass": self.law_Y.lost_mass}
        return d


def campaign_stats(law, v, policy=DEFAULT_POLICY, y_max: int | None = None) -> CampaignStats:
    return CampaignStats(
        law_T=despair_law(law, v, policy),
        e_T=expected_despair(law, v, policy),
        e_Y=expected_yield(law, v, policy),
        var_Y=yield_variance(law, v, policy),
        e_M=expected_effort(law, v, policy),
        law_Y=None if y_max is None else yield_law(law, v, y_max, policy),
    )
