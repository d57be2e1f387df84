"""Deterministic cross-engine identity checks, run by ``solicit verify``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import finite_prior as fp
from . import geometric_engine as ge
from . import poisson_engine as pe
from .response_law import Geometric, Mixture, Table


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "residual": float(self.residual), "tolerance": self.tolerance}


def _laws():
    return [Geometric(0.2), Geometric(0.5), Geometric(0.8), Table((0.3, 0.2, 0.1))]


def oracle_equivalence(r_max=5):
    worst = 0.0
    for law in _laws():
        for r in range(r_max + 1):
            bf = fp.brute_force(law, r)
            cs = fp.chain_stats(law, r)
            lt = fp.law_T_given_r(law, r)
            worst = max(
                worst,
                float(np.max(np.abs(bf.law_T[: r + 1] - lt))),
                abs(bf.e_Y - cs.e_Y),
                abs(bf.e_M - cs.e_M),
                abs(bf.var_Y - cs.var_Y),
            )
    return Check("fixed-pool recursions vs enumeration", worst, 1e-12)


def _test_functions(law):
    def F(k):
        k = np.asarray(k)
        return law.cdf_array(int(k.max()))[k - 1]

    def H(k):
        k = np.asarray(k)
        return law.truncated_mean_array(int(k.max()))[k - 1]

    return [lambda k: np.ones_like(k, dtype=float), lambda k: np.asarray(k, dtype=float), F, H]


def poisson_mixture(vs=(0.5, 1.0, 3.0)):
    worst = 0.0
    for law in (Geometric(0.5), Table((0.3, 0.2, 0.1)), Mixture(0.2, 0.3, 0.5, 0.4)):
        for v in vs:
            rs, ws = fp.Poisson(v).weights(1e-10)
            for f in _test_functions(law):
                mixed = math.fsum(w * fp.phi_f(law, int(r), f) for r, w in zip(rs, ws))
                worst = max(worst, abs(mixed - pe.expect_f_T(law, v, f)))
    return Check("Poisson-mixed fixed-pool recursion vs series", worst, 1e-8)


def mixture_recursion():
    worst = 0.0
    for law in (Geometric(0.5), Geometric(1 / 512), Table((0.3, 0.2, 0.1)), Mixture(0.2, 0.3, 0.5, 0.4)):
        for v in (0.1, 1.0, 10.0, 1000.0):
            for f in _test_functions(law):
                a = pe.expect_f_T(law, v, f)
                b = pe.expect_via_mixture_recursion(law, v, f)
                worst = max(worst, abs(a - b))
    return Check("mixture recursion vs series", worst, 1e-10)


def cross_path():
    worst_y = worst_m = worst_ratio = 0.0
    for p in (0.5, 1 / 512):
        for v in (1.0, 1000.0):
            c = ge.GeometricPoissonCampaign(p, v)
            ey, em = ge.expected_yield_geo(c), ge.expected_effort_geo(c)
            worst_y = max(worst_y, abs(ey - pe.expected_yield(Geometric(p), v)))
            worst_m = max(worst_m, abs(em - pe.expected_effort(Geometric(p), v)))
            worst_ratio = max(worst_ratio, abs(em * p - ey))
    return [
        Check("E[Y]: general series vs geometric p.g.f.", worst_y, 1e-10),
        Check("E[M]: general series vs geometric p.g.f.", worst_m, 1e-10),
        Check("E[M] p = E[Y]", worst_ratio, 1e-12),
    ]


def pgf_functional_equation():
    worst = 0.0
    for p in (0.5, 1 / 512):
        for v in (1.0, 100.0, 1000.0):
            c = ge.GeometricPoissonCampaign(p, v)
            inner = c.with_v(c.q * v)
            a = math.exp(-p * v)
            for z in (0.2, 0.5, 0.9, 1.0):
                lhs = ge.pgf_T(c, z) / z
                worst = max(worst, abs(lhs - a - (1 - a) * ge.pgf_T(inner, z)))
    return Check("G_v(z)/z = e^{-pv} + (1 - e^{-pv}) G_{qv}(z)", worst, 1e-10)


def binomial_functional_equations(s_max=20):
    w39 = w40 = 0.0
    for p in (0.3, 0.5):
        q = 1 - p
        for s in range(s_max + 1):
            for z in (0.4, 0.9):
                for th in (0.3, 0.7, 1.0):
                    lhs = fp.pgf_binomial(p, s, th, z)
                    rhs = z * (
                        fp.pgf_binomial(p, s, th * q, z)
                        + (1 - th * p) ** s * (1 - fp.pgf_binomial(p, s, th * q / (1 - th * p), z))
                    )
                    w39 = max(w39, abs(lhs - rhs))
                lhs = fp.pgf_given_r(p, s, z) * (1 + z * q**s)
                w40 = max(w40, abs(lhs - z * (q**s + fp.pgf_binomial(p, s, q, z))))
    return [
        Check("Binomial-prior p.g.f. functional equation", w39, 1e-10),
        Check("fixed-pool p.g.f. (theta = 1 case)", w40, 1e-10),
    ]


def binomial_limit():
    ref = ge.expected_yield_geo(ge.GeometricPoissonCampaign(0.1, 2.0))
    gaps = [abs(fp.expected_yield_binomial(0.1, s, 2.0 / s) - ref) / ref for s in (100, 1000, 10000)]
    monotone = all(a > b for a, b in zip(gaps, gaps[1:]))
    return Check("Binomial(s, v/s) -> Poisson(v) yield limit", gaps[-1] if monotone else math.inf, 1e-3)


def yield_law_consistency():
    law, v, y_max = Geometric(0.5), 1.0, 30
    yl = pe.yield_law(law, v, y_max)
    tol = yl.lost_mass * (y_max + 1) ** 2 + 1e-12
    resid = max(abs(yl.mean - pe.expected_yield(law, v)), abs(yl.variance - pe.yield_variance(law, v)))
    return Check("law of Y vs mean/variance formulas", resid, tol)


def run_all() -> list[Check]:
    out = [oracle_equivalence(), poisson_mixture(), mixture_recursion()]
    out += cross_path()
    out.append(pgf_functional_equation())
    out += binomial_functional_equations()
    out += [binomial_limit(), yield_law_consistency()]
    return out
