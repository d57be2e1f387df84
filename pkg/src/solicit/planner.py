"""Campaign planning on top of the geometric fast path.

All quantities assume geometric response times with per-round response
probability ``p`` and a Poisson pool with mean ``v``.  Expected sales are
``purchase_rate * E[Y]``; expected profit is

    F(v, w) = purchase_rate (w - c0) E[Y] - c1 v - c2 E[M],   p = p(w).

``E[Y]`` is treated as nondecreasing in both v and p.  That is checked
numerically on every search bracket before bisecting; when the check
fails the search falls back to a grid scan.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import CurveDomainError, InfeasibleError, InvalidLawError
from .geometric_engine import GeometricPoissonCampaign, expected_yield_geo
from .poisson_engine import DEFAULT_POLICY, TruncationPolicy

__all__ = [
    "ExponentialPrice",
    "PowerPrice",
    "TabulatedPrice",
    "price_curve_from_dict",
    "Economics",
    "PlanResult",
    "yield_curve",
    "response_curve",
    "min_pool_size",
    "min_response_prob",
    "expected_profit",
    "optimize_profit",
    "select_optimum",
]

PROBE_POINTS = 17
SCAN_POINTS = 1025


# -- price-response curves ------------------------------------------------------
def _check_p(p: float, w: float) -> float:
    if not (0.0 < p <= 1.0):
        raise CurveDomainError(f"price curve gives p({w}) = {p}, outside (0, 1]")
    return p


@dataclass(frozen=True)
class ExponentialPrice:
    """``p(w) = a exp(-b w)``."""

    a: float
    b: float

    def __call__(self, w: float) -> float:
        return _check_p(self.a * math.exp(-self.b * w), w)

    def to_dict(self):
        return {"kind": "exponential", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class PowerPrice:
    """``p(w) = a w^(-b)`` for ``w > 0``."""

    a: float
    b: float

    def __call__(self, w: float) -> float:
        if w <= 0:
            raise CurveDomainError(f"power price curve needs w > 0, got {w}")
        return _check_p(self.a * w ** (-self.b), w)

    def to_dict(self):
        return {"kind": "power", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class TabulatedPrice:
    """Knots ``(w_i, p_i)``, interpolated linearly in ``log p``; no extrapolation."""

    w: tuple[float, ...]
    p: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if w.ndim != 1 or w.shape != p.shape or w.size < 1:
            raise InvalidLawError("price table needs matching nonempty w and p lists")
        if np.any(np.diff(w) <= 0):
            raise InvalidLawError("price table w must be strictly increasing")
        if np.any(np.diff(p) > 0):
            raise InvalidLawError("price table p must be nonincreasing in w")
        if np.any(p <= 0) or np.any(p > 1):
            raise InvalidLawError("price table p must lie in (0, 1]")
        object.__setattr__(self, "w", tuple(w.tolist()))
        object.__setattr__(self, "p", tuple(p.tolist()))

    def __call__(self, w: float) -> float:
        if not (self.w[0] <= w <= self.w[-1]):
            raise CurveDomainError(f"w = {w} outside the tabulated range [{self.w[0]}, {self.w[-1]}]")
        i = int(np.searchsorted(self.w, w, side="right")) - 1
        if i == len(self.w) - 1 or w == self.w[i] or self.p[i] == self.p[i + 1]:
            return _check_p(self.p[min(i, len(self.p) - 1)], w)  # knots and flat runs stay exact
        t = (w - self.w[i]) / (self.w[i + 1] - self.w[i])
        return _check_p(math.exp((1 - t) * math.log(self.p[i]) + t * math.log(self.p[i + 1])), w)

    def to_dict(self):
        return {"kind": "table", "w": list(self.w), "p": list(self.p)}


def price_curve_from_dict(d: Mapping[str, Any]):
    try:
        kind = d["kind"]
        if kind == "exponential":
            return ExponentialPrice(float(d["a"]), float(d["b"]))
        if kind == "power":
            return PowerPrice(float(d["a"]), float(d["b"]))
        if kind == "table":
            return TabulatedPrice(tuple(d["w"]), tuple(d["p"]))
    except KeyError as exc:
        raise InvalidLawError(f"price curve is missing field {exc.args[0]!r}") from None
    raise InvalidLawError(f"unknown price curve kind {d.get('kind')!r}")


@dataclass(frozen=True)
class Economics:
    purchase_rate: float
    c0: float
    c1: float
    c2: float
    price_curve: Callable[[float], float]

    def __post_init__(self):
        if not (0.0 <= self.purchase_rate <= 1.0):
            raise InvalidLawError(f"purchase_rate must lie in [0, 1], got {self.purchase_rate}")
        for name in ("c0", "c1", "c2"):
            if getattr(self, name) < 0:
                raise InvalidLawError(f"{name} must be >= 0")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Economics":
        try:
            return cls(
                float(d["purchase_rate"]),
                float(d.get("c0", 0.0)),
                float(d.get("c1", 0.0)),
                float(d.get("c2", 0.0)),
                price_curve_from_dict(d["price_curve"]),
            )
        except KeyError as exc:
            raise InvalidLawError(f"economics is missing field {exc.args[0]!r}") from None

    def to_dict(self):
        curve = self.price_curve.to_dict() if hasattr(self.price_curve, "to_dict") else repr(self.price_curve)
        return {"purchase_rate": self.purchase_rate, "c0": self.c0, "c1": self.c1, "c2": self.c2, "price_curve": curve}


@dataclass(frozen=True)
class PlanResult:
    """Outcome of a planning query.

    ``chosen`` maps parameter names to values; ``curve`` holds
    ``(parameter, value)`` pairs for plotting; ``surface`` holds
    ``(v, w, profit)`` rows for the two-parameter problem.
    """

    chosen: dict[str, float]
    sales: float
    profit: float | None = None
    curve: list[tuple[float, float]] = field(default_factory=list)
    surface: list[tuple[float, float, float]] = field(default_factory=list)
    certificate: dict[str, Any] = field(default_factory=dict)
    method: str = ""

    def to_dict(self):
        d = {"chosen": self.chosen, "sales": self.sales, "method": self.method}
        if self.profit is not None:
            d["profit"] = self.profit
        if self.certificate:
            d["certificate"] = self.certificate
        if self.curve:
            d["curve"] = [list(pt) for pt in self.curve]
        if self.surface:
            d["surface"] = [list(row) for row in self.surface]
        return d


# -- curves -----------------------------------------------------------------------
def _ey(p: float, v: float, policy: TruncationPolicy) -> float:
    return expected_yield_geo(GeometricPoissonCampaign(p, v, policy))


def yield_curve(p: float, v_grid: Sequence[float], policy=DEFAULT_POLICY) -> list[tuple[float, float]]:
    """``(v, E[Y])`` along a grid of pool means."""
    if len(v_grid) == 0:
        raise ValueError("v_grid must be nonempty")
    return [(float(v), _ey(p, float(v), policy)) for v in v_grid]


def response_curve(v: float, p_grid: Sequence[float], policy=DEFAULT_POLICY) -> list[tuple[float, float]]:
    """``(p, E[Y])`` along a grid of response probabilities."""
    if len(p_grid) == 0:
        raise ValueError("p_grid must be nonempty")
    return [(float(p), _ey(float(p), v, policy)) for p in p_grid]


# -- constrained searches -----------------------------------------------------------
def _smallest_feasible(sales: Callable[[float], float], K: float, lo: float, hi: float, tol: float, name: str):
    """Smallest x in [lo, hi] (to within tol) with ``sales(x) >= K``.

    Returns ``(x, method, certificate)``.
    """
    if not lo <= hi:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    s_lo = sales(lo)
    if s_lo >= K:
        return lo, "lower-bound", {name: lo, "sales": s_lo, "note": "lower bound already feasible"}
    s_hi = sales(hi)
    if s_hi < K:
        raise InfeasibleError(f"target {K} not reached: sales at {name} = {hi} is {s_hi}", achieved=s_hi)

    probe = np.linspace(lo, hi, PROBE_POINTS)
    vals = np.array([sales(x) for x in probe])
    if np.all(np.diff(vals) >= 0):
        method = "bisection"
        bad, good = lo, hi
    else:
        # premise failed: locate the first feasible grid point, then refine
        method = "grid-scan"
        grid = np.linspace(lo, hi, SCAN_POINTS)
        i = next(i for i, x in enumerate(grid) if sales(x) >= K)
        bad, good = grid[i - 1], grid[i]
    while good - bad > tol:
        mid = 0.5 * (bad + good)
        if sales(mid) >= K:
            good = mid
        else:
            bad = mid
    s_good = sales(good)
    below = good - tol
    s_below = sales(below) if below >= lo else sales(lo)
    cert = {name: good, "sales": s_good, f"{name}_minus_tol": below, "sales_minus_tol": s_below, "tol": tol}
    if not (s_good >= K > s_below):
        raise ArithmeticError(f"bisection certificate failed: {cert}")
    return good, method, cert


def _default_tol(hi: float) -> float:
    return 1e-6 * max(abs(hi), 1e-300)


def min_pool_size(
    p: float,
    K: float,
    purchase_rate: float = 1.0,
    v_bounds: tuple[float, float] = (0.0, 3000.0),
    tol: float | None = None,
    policy=DEFAULT_POLICY,
    curve_points: int = 65,
) -> PlanResult:
    """Smallest pool mean v with ``purchase_rate * E[Y] >= K``."""
    lo, hi = map(float, v_bounds)
    tol = _default_tol(hi) if tol is None else tol
    sales = lambda v: purchase_rate * _ey(p, v, policy)  # noqa: E731
    v, method, cert = _smallest_feasible(sales, K, lo, hi, tol, "v")
    curve = yield_curve(p, np.linspace(lo, hi, curve_points), policy)
    return PlanResult({"v": v, "p": p}, sales(v), curve=curve, certificate=cert, method=method)


def min_response_prob(
    v: float,
    K: float,
    purchase_rate: float = 1.0,
    p_bounds: tuple[float, float] = (2.0**-10, 1.0),
    tol: float | None = None,
    policy=DEFAULT_POLICY,
    curve_points: int = 65,
) -> PlanResult:
    """Smallest response probability p with ``purchase_rate * E[Y] >= K``."""
    lo, hi = map(float, p_bounds)
    if not (0.0 < lo <= hi <= 1.0):
        raise ValueError(f"p bounds must satisfy 0 < lo <= hi <= 1, got {p_bounds}")
    tol = _default_tol(hi) if tol is None else tol
    sales = lambda p: purchase_rate * _ey(p, v, policy)  # noqa: E731
    p, method, cert = _smallest_feasible(sales, K, lo, hi, tol, "p")
    curve = response_curve(v, np.geomspace(lo, hi, curve_points), policy)
    return PlanResult({"p": p, "v": v}, sales(p), curve=curve, certificate=cert, method=method)


# -- profit ---------------------------------------------------------------------------
def expected_profit(v: float, w: float, econ: Economics, policy=DEFAULT_POLICY) -> float:
    """``F(v, w) = purchase_rate (w - c0) E[Y] - c1 v - c2 E[M]`` at ``p = p(w)``."""
    p = econ.price_curve(w)
    ey = _ey(p, v, policy)
    em = ey / p
    return econ.purchase_rate * (w - econ.c0) * ey - econ.c1 * v - econ.c2 * em


def select_optimum(v_grid: Sequence[float], w_grid: Sequence[float], surface: np.ndarray) -> tuple[int, int]:
    """Index of the largest entry; ties go to the smaller v, then the smaller w."""
    cells = ((i, j) for i in range(len(v_grid)) for j in range(len(w_grid)))
    return max(cells, key=lambda ij: (surface[ij], -v_grid[ij[0]], -w_grid[ij[1]]))


def optimize_profit(econ: Economics, v_grid, w_grid, policy=DEFAULT_POLICY, workers: int = 1) -> PlanResult:
    """Exhaustive grid search for the profit-maximising ``(v, w)``."""
    v_grid = [float(x) for x in v_grid]
    w_grid = [float(x) for x in w_grid]
    if not v_grid or not w_grid:
        raise ValueError("grids must be nonempty")
    cells = [(v, w) for v in v_grid for w in w_grid]
    evaluate = lambda vw: expected_profit(vw[0], vw[1], econ, policy)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(evaluate, cells))
    else:
        flat = [evaluate(c) for c in cells]
    surface = np.array(flat).reshape(len(v_grid), len(w_grid))
    i, j = select_optimum(v_grid, w_grid, surface)
    v, w = v_grid[i], w_grid[j]
    sales = econ.purchase_rate * _ey(econ.price_curve(w), v, policy)
    rows = [(v_, w_, f) for (v_, w_), f in zip(cells, flat)]
    return PlanResult({"v": v, "w": w, "p": econ.price_curve(w)}, sales, profit=float(surface[i, j]), surface=rows, method="grid")
