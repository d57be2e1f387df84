"""Closed-form fast path for geometric response times under a Poisson pool.

With ``U ~ Geometric(p)`` and ``S_0 ~ Poisson(v)`` the despair time has
p.g.f.

    G_v(z) = (1 - lambda_1) z + sum_{n>=2} lambda_1 ... lambda_{n-1} (1 - lambda_n) z^n,
    lambda_j = 1 - exp(-p q^(j-1) v),

and the expected yield and effort follow from one evaluation at ``z = q``:
``E[Y] = v (1 - G_v(q))`` and ``E[M] = E[Y] / p``.

This module deliberately does not go through :mod:`poisson_engine`; the
two are checked against each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationError
from .poisson_engine import DEFAULT_POLICY, TruncationPolicy

__all__ = [
    "GeometricPoissonCampaign",
    "pgf_T",
    "expected_yield_geo",
    "expected_effort_geo",
]


@dataclass(frozen=True)
class GeometricPoissonCampaign:
    p: float
    v: float
    policy: TruncationPolicy = DEFAULT_POLICY
    q: float = field(init=False)

    def __post_init__(self):
        p, v = float(self.p), float(self.v)
        if not (0.0 < p <= 1.0):
            raise ValueError(f"p must lie in (0, 1], got {self.p!r}")
        if not v >= 0.0:
            raise ValueError(f"v must be >= 0, got {self.v!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "q", 1.0 - p)

    def with_v(self, v: float) -> "GeometricPoissonCampaign":
        return GeometricPoissonCampaign(self.p, v, self.policy)

    def despair_probs(self) -> tuple[np.ndarray, float]:
        """``P(T = n)`` on the truncated support and ``P(T > n_max)``."""
        return _despair_probs(self.p, self.q, self.v, self.policy)


def _despair_probs(p, q, v, policy):
    if v == 0.0:
        return np.ones(1), 0.0
    log_alpha = math.log(policy.alpha)
    log_prod = 0.0
    stay = []  # 1 - lambda_j
    prods = []  # lambda_1 ... lambda_j
    prod = 1.0
    rate = p * v  # p q^(j-1) v, updated multiplicatively
    for _ in range(policy.hard_cap):
        lam = -math.expm1(-rate)
        stay.append(math.exp(-rate))
        prod *= lam
        log_prod += math.log(lam) if lam > 0.0 else -math.inf
        prods.append(prod)
        if log_prod <= log_alpha:
            break
        rate *= q
    else:
        raise TruncationError(
            f"G_v series needs more than {policy.hard_cap} terms",
            residual=prod,
            n_terms=policy.hard_cap,
        )
    before = np.concatenate([[1.0], prods[:-1]])
    return before * np.asarray(stay), prods[-1]


def pgf_T(c: GeometricPoissonCampaign, z: float) -> float:
    """``G_v(z) = E[z^T]`` over the truncated support of T."""
    if z < 0:
        raise ValueError(f"z must be >= 0, got {z}")
    probs, _ = c.despair_probs()
    powers = np.power(float(z), np.arange(1, len(probs) + 1, dtype=float))
    return math.fsum(probs * powers)


def expected_yield_geo(c: GeometricPoissonCampaign) -> float:
    """``E[Y] = v {1 - G_v(q)}``.

    Both p.g.f. values are taken on the same truncated support, i.e. the
    leading 1 is ``G_v(1) = 1 - residual``; this keeps the result an
    expectation over exactly the terms the alpha rule retained.
    """
    if c.v == 0.0:
        return 0.0
    probs, _ = c.despair_probs()
    n = np.arange(1, len(probs) + 1, dtype=float)
    if c.q == 0.0:
        one_minus_qn = np.ones_like(n)
    else:
        one_minus_qn = -np.expm1(n * math.log(c.q))
    return c.v * math.fsum(probs * one_minus_qn)


def expected_effort_geo(c: GeometricPoissonCampaign) -> float:
    """``E[M] = v {1 - G_v(q)} / p``."""
    return expected_yield_geo(c) / c.p
