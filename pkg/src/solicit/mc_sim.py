"""Seeded Monte Carlo simulation of the solicitation process.

Replicates are simulated in the chain form: a pool of ``S_{n-1}`` silent
clients produces ``X_n ~ Binomial(S_{n-1}, p_{n-1})`` answers at epoch n,
where ``p_{n-1}`` is the response law's hazard.  Individual response times
are never drawn.  Binomial variates come from numpy's ``Generator.binomial``
(inversion for small ``n * min(p, 1-p)``, otherwise the BTPE algorithm of
Kachitvichyanukul & Schmeiser, "Binomial random variate generation",
CACM 31(2), 1988).

Replicates are grouped in chunks of ``chunk_size``; chunk ``c`` draws from
its own stream ``SeedSequence(seed, spawn_key=(c,))``.  Results therefore
depend only on the :class:`SimConfig`, never on the number of worker
threads or on the order in which chunks finish.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .finite_prior import Poisson, PriorSpec
from .response_law import Geometric, ResponseLaw

__all__ = [
    "SimConfig",
    "SimReport",
    "simulate_once",
    "simulate",
    "simulate_arrays",
    "identity_probe",
    "martingale_probe",
]


@dataclass(frozen=True)
class SimConfig:
    law: ResponseLaw
    prior: PriorSpec
    replicates: int
    seed: int = 0
    chunk_size: int = 65_536

    def __post_init__(self):
        if int(self.replicates) < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates!r}")
        if int(self.chunk_size) < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class SimReport:
    replicates: int
    seed: int
    mean_T: float
    se_T: float
    mean_Y: float
    se_Y: float
    mean_M: float
    se_M: float
    var_Y: float
    se_var_Y: float
    law_T: np.ndarray  # empirical P(T = n), n = 1 .. max observed
    effort_mismatches: int  # replicates where the two effort formulas disagree
    despair_bound_violations: int  # replicates with T > S_0 + 1

    def to_dict(self):
        d = {
            "replicates": self.replicates,
            "seed": self.seed,
            "T": {"mean": self.mean_T, "se": self.se_T},
            "Y": {"mean": self.mean_Y, "se": self.se_Y, "var": self.var_Y, "se_var": self.se_var_Y},
            "M": {"mean": self.mean_M, "se": self.se_M},
            "law_T": self.law_T.tolist(),
            "effort_mismatches": self.effort_mismatches,
            "despair_bound_violations": self.despair_bound_violations,
        }
        if self.replicates == 1:
            d["caveat"] = "single replicate: variances and standard errors reported as 0"
        return d


def simulate_once(law: ResponseLaw, r: int, rng: np.random.Generator) -> tuple[int, int, int]:
    """One campaign from a pool of ``r`` clients; returns ``(T, Y, M)``."""
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    hz = law.hazard_array(r + 1)
    silent, T, Y, M, M_client = r, 0, 0, 0, 0
    for n in range(1, r + 2):
        M += silent  # one solicitation per silent client
        x = int(rng.binomial(silent, hz[n - 1])) if silent else 0
        if x == 0:
            T = n
            M_client += n * silent  # still-silent clients are counted up to T
            break
        Y += x
        M_client += n * x  # answered at epoch n after n solicitations
        silent -= x
    assert M == M_client and T <= r + 1
    return T, Y, M


def _run_chunk(law, prior, n, rng, g=None):
    S0 = np.asarray(prior.sample(rng, n), dtype=np.int64)
    hz = law.hazard_array(int(S0.max()) + 2 if n else 1)
    S = S0.copy()
    T = np.zeros(n, dtype=np.int64)
    Y = np.zeros(n, dtype=np.int64)
    M = np.zeros(n, dtype=np.int64)
    M_client = np.zeros(n, dtype=np.int64)
    G = np.zeros(n) if g is not None else None
    idx = np.arange(n)
    epoch = 1
    while idx.size:
        s = S[idx]
        M[idx] += s
        x = rng.binomial(s, hz[epoch - 1])
        stop = x == 0
        done = idx[stop]
        T[done] = epoch
        M_client[done] += epoch * s[stop]
        go = ~stop
        idx, x = idx[go], x[go]
        Y[idx] += x
        M_client[idx] += epoch * x
        S[idx] -= x
        if g is not None:
            G[idx] += float(g(epoch)) * x
        epoch += 1
    return {"S0": S0, "T": T, "Y": Y, "M": M, "M_client": M_client, "S_T": S, "G": G}


def simulate_arrays(config: SimConfig, workers: int = 1, g: Callable | None = None) -> dict:
    """Per-replicate arrays ``S0, T, Y, M, M_client, S_T`` (and ``G`` when ``g`` is
    given: ``sum_{n<T} g(n) X_n``), in replicate order."""
    n_chunks = -(-config.replicates // config.chunk_size)
    sizes = [min(config.chunk_size, config.replicates - c * config.chunk_size) for c in range(n_chunks)]

    def work(c):
        rng = np.random.default_rng(np.random.SeedSequence(int(config.seed), spawn_key=(c,)))
        return _run_chunk(config.law, config.prior, sizes[c], rng, g)

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    else:
        parts = [work(c) for c in range(n_chunks)]
    keys = ["S0", "T", "Y", "M", "M_client", "S_T"] + (["G"] if g is not None else [])
    return {k: np.concatenate([part[k] for part in parts]) for k in keys}


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = len(x)
    mean = float(np.mean(x))
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(x, ddof=1) / math.sqrt(n))


def _var_se(x: np.ndarray) -> tuple[float, float]:
    """Sample variance and its large-sample standard error ``sqrt((m4 - s^4 (n-3)/(n-1)) / n)``."""
    n = len(x)
    if n < 2:
        return 0.0, 0.0
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    s2 = float(np.sum(d * d) / (n - 1))
    m4 = float(np.mean(d**4))
    return s2, math.sqrt(max(m4 - s2 * s2 * (n - 3) / (n - 1), 0.0) / n)


def simulate(config: SimConfig, workers: int = 1) -> SimReport:
    a = simulate_arrays(config, workers)
    T, Y, M = a["T"], a["Y"], a["M"]
    mean_T, se_T = _mean_se(T)
    mean_Y, se_Y = _mean_se(Y)
    mean_M, se_M = _mean_se(M)
    var_Y, se_var_Y = _var_se(Y)
    law_T = np.bincount(T)[1:] / len(T)
    return SimReport(
        replicates=config.replicates,
        seed=int(config.seed),
        mean_T=mean_T,
        se_T=se_T,
        mean_Y=mean_Y,
        se_Y=se_Y,
        mean_M=mean_M,
        se_M=se_M,
        var_Y=var_Y,
        se_var_Y=se_var_Y,
        law_T=law_T,
        effort_mismatches=int(np.count_nonzero(M != a["M_client"])),
        despair_bound_violations=int(np.count_nonzero(T > a["S0"] + 1)),
    )


def identity_probe(config: SimConfig, g: Callable, workers: int = 1) -> tuple[float, float]:
    """Estimate ``E[sum_{n<T} g(n) X_n]`` with its standard error (Poisson prior only)."""
    if not isinstance(config.prior, Poisson):
        raise ValueError("identity_probe requires a Poisson prior")
    a = simulate_arrays(config, workers, g)
    return _mean_se(a["G"])


def martingale_probe(config: SimConfig, z: float, workers: int = 1) -> tuple[float, float]:
    """Estimate ``E[z^Y / (q + p z)^M]`` for a geometric law; the exact value is 1."""
    if not isinstance(config.law, Geometric):
        raise ValueError("martingale_probe requires a geometric response law")
    if z <= 0:
        raise ValueError(f"z must be > 0, got {z}")
    p, q = config.law.p, config.law.q
    a = simulate_arrays(config, workers)
    vals = np.exp(a["Y"] * math.log(z) - a["M"] * math.log(q + p * z))
    return _mean_se(vals)
