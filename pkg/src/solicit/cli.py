"""Command-line front end.

    solicit <command> --config <path.json> [--output <path>] [--format json|csv] [--seed <u64>|auto]
                      [--curve <path.csv>]

Commands: law, stats, simulate, plan-pool, plan-prob, plan-profit, verify.

The config file holds ``law``, ``prior``, ``policy`` and ``economics``
sections plus one section named after the command for its own
parameters (``"command-specific"`` is accepted as an alias).

Exit status: 0 success, 1 verify found a failing identity, 2 invalid
input, 3 infeasible plan, 4 numerical failure.  Errors are also written
to stderr as a one-line JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import secrets
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import finite_prior as fp
from . import geometric_engine as ge
from . import planner
from . import poisson_engine as pe
from . import verify as verify_mod
from .errors import InfeasibleError, SolicitError, TruncationError
from .mc_sim import SimConfig, simulate
from .response_law import Geometric, ResponseLaw, law_from_dict

COMMANDS = ("law", "stats", "simulate", "plan-pool", "plan-prob", "plan-profit", "verify")

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3, 4


class ConfigError(SolicitError, ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    law: ResponseLaw | None = None
    prior: fp.PriorSpec | None = None
    policy: pe.TruncationPolicy = pe.DEFAULT_POLICY
    economics: planner.Economics | None = None
    params: dict[str, Any] = field(default_factory=dict)
    fmt: str = "json"
    seed: int | None = None
    curve_path: str | None = None

    @classmethod
    def from_dict(cls, command: str, doc: dict[str, Any], fmt="json", seed=None) -> "RunConfig":
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        if fmt not in ("json", "csv"):
            raise ConfigError(f"unknown format {fmt!r}")
        try:
            law = law_from_dict(doc["law"]) if "law" in doc else None
            prior = fp.prior_from_dict(doc["prior"]) if "prior" in doc else None
            policy = pe.TruncationPolicy.from_dict(doc.get("policy"))
            econ = planner.Economics.from_dict(doc["economics"]) if "economics" in doc else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        params = dict(doc.get(command) or doc.get("command-specific") or {})
        cfg = cls(command, law, prior, policy, econ, params, fmt, seed)
        cfg._check()
        return cfg

    def _check(self):
        need = {
            "law": ("law", "prior"),
            "stats": ("law", "prior"),
            "simulate": ("law", "prior"),
            "plan-pool": ("law",),
            "plan-prob": ("prior",),
            "plan-profit": ("economics",),
            "verify": (),
        }[self.command]
        for name in need:
            if getattr(self, name) is None:
                raise ConfigError(f"command {self.command!r} requires a {name!r} section")
        if self.command == "plan-pool" and not isinstance(self.law, Geometric):
            raise ConfigError("plan-pool requires a geometric law")
        if self.command == "plan-prob" and not isinstance(self.prior, fp.Poisson):
            raise ConfigError("plan-prob requires a Poisson prior")
        if self.command in ("plan-pool", "plan-prob") and "K" not in self.params:
            raise ConfigError(f"{self.command} requires a sales target 'K'")


# -- formatting -------------------------------------------------------------------
def _num(x) -> str:
    """Shortest round-tripping decimal (at most 17 significant digits)."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(x) if isinstance(x, (int, float, np.number)) and not isinstance(x, bool) else x for x in row])
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _header(cfg: RunConfig) -> dict[str, Any]:
    d: dict[str, Any] = {"command": cfg.command}
    if cfg.law is not None:
        d["law"] = cfg.law.to_dict()
    if cfg.prior is not None:
        d["prior"] = cfg.prior.to_dict()
    d["policy"] = cfg.policy.to_dict()
    return d


# -- commands ---------------------------------------------------------------------
def _cmd_law(cfg):
    if isinstance(cfg.prior, fp.Poisson):
        dl = pe.despair_law(cfg.law, cfg.prior.v, cfg.policy)
        probs, residual, engine = dl.probs, dl.residual, "poisson_engine"
    else:
        st = fp.prior_stats(cfg.law, cfg.prior)
        probs, residual, engine = st.law_T, 0.0, "finite_prior"
    if cfg.fmt == "csv":
        rows = [(n, float(p)) for n, p in enumerate(probs, start=1)]
        return _csv(["n", "prob"], rows + [("residual", float(residual))])
    doc = _header(cfg)
    doc.update({"engine": engine, "probs": probs, "residual": residual})
    return _json(doc)


def _cmd_stats(cfg):
    y_max = cfg.params.get("y_max")
    law, prior = cfg.law, cfg.prior
    if isinstance(prior, fp.Poisson):
        st = pe.campaign_stats(law, prior.v, cfg.policy, y_max)
        stats = st.to_dict()
        engines = dict.fromkeys(["law_T", "e_T", "e_Y", "var_Y", "e_M"], "poisson_engine")
        if y_max is not None:
            engines["law_Y"] = "poisson_engine"
        if isinstance(law, Geometric):
            c = ge.GeometricPoissonCampaign(law.p, prior.v, cfg.policy)
            stats["e_Y"] = ge.expected_yield_geo(c)
            stats["e_M"] = ge.expected_effort_geo(c)
            engines["e_Y"] = engines["e_M"] = "geometric_engine"
    else:
        stats = fp.prior_stats(law, prior).to_dict()
        engines = dict.fromkeys(["law_T", "law_Y", "e_T", "e_Y", "var_Y", "e_M"], "finite_prior")
    if cfg.fmt == "csv":
        return _csv(["quantity", "value"], [(k, stats[k]) for k in ("e_T", "e_Y", "var_Y", "e_M")])
    doc = _header(cfg)
    doc.update({"stats": stats, "engines": engines})
    return _json(doc)


def _cmd_simulate(cfg):
    p = cfg.params
    seed = cfg.seed if cfg.seed is not None else int(p.get("seed", 0))
    sim = SimConfig(cfg.law, cfg.prior, int(p.get("replicates", 100_000)), seed, int(p.get("chunk_size", 65_536)))
    rep = simulate(sim, workers=int(p.get("workers", 1)))
    if cfg.fmt == "csv":
        return _csv(["n", "prob"], [(n, float(x)) for n, x in enumerate(rep.law_T, start=1)])
    doc = _header(cfg)
    doc["report"] = rep.to_dict()
    return _json(doc)


def _plan_csv(res: planner.PlanResult) -> str:
    if res.surface:
        return _csv(["v", "w", "profit"], res.surface)
    return _csv(["param", "value"], res.curve)


def _plan_output(cfg, res: planner.PlanResult, extra):
    if cfg.curve_path:
        with open(cfg.curve_path, "w") as fh:
            fh.write(_plan_csv(res))
    if cfg.fmt == "csv":
        return _plan_csv(res)
    doc = _header(cfg)
    doc.update(extra)
    doc["result"] = res.to_dict()
    return _json(doc)


def _grid(spec) -> list[float]:
    if isinstance(spec, dict):
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"])).tolist()
    return [float(x) for x in spec]


def _cmd_plan_pool(cfg):
    p = cfg.params
    res = planner.min_pool_size(
        cfg.law.p,
        float(p["K"]),
        float(p.get("purchase_rate", 1.0)),
        tuple(p.get("v_bounds", (0.0, 3000.0))),
        p.get("tol"),
        cfg.policy,
    )
    return _plan_output(cfg, res, {"engine": "geometric_engine"})


def _cmd_plan_prob(cfg):
    p = cfg.params
    res = planner.min_response_prob(
        cfg.prior.v,
        float(p["K"]),
        float(p.get("purchase_rate", 1.0)),
        tuple(p.get("p_bounds", (2.0**-10, 1.0))),
        p.get("tol"),
        cfg.policy,
    )
    return _plan_output(cfg, res, {"engine": "geometric_engine"})


def _cmd_plan_profit(cfg):
    p = cfg.params
    try:
        v_grid, w_grid = _grid(p["v_grid"]), _grid(p["w_grid"])
    except KeyError as exc:
        raise ConfigError(f"plan-profit requires {exc.args[0]!r}") from None
    res = planner.optimize_profit(cfg.economics, v_grid, w_grid, cfg.policy, int(p.get("workers", 1)))
    return _plan_output(cfg, res, {"engine": "geometric_engine", "economics": cfg.economics.to_dict()})


def _cmd_verify(cfg):
    checks = verify_mod.run_all()
    ok = all(c.passed for c in checks)
    if cfg.fmt == "csv":
        text = _csv(["name", "passed", "residual", "tolerance"], [(c.name, c.passed, c.residual, c.tolerance) for c in checks])
    else:
        text = _json({"command": "verify", "passed": ok, "identities": [c.to_dict() for c in checks]})
    return text, ok


HANDLERS = {
    "law": _cmd_law,
    "stats": _cmd_stats,
    "simulate": _cmd_simulate,
    "plan-pool": _cmd_plan_pool,
    "plan-prob": _cmd_plan_prob,
    "plan-profit": _cmd_plan_profit,
}


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute one command; returns ``(exit_status, document)``."""
    if cfg.command == "verify":
        text, ok = _cmd_verify(cfg)
        return (EXIT_OK if ok else EXIT_VERIFY_FAILED), text
    return EXIT_OK, HANDLERS[cfg.command](cfg)


def _parse_seed(text: str | None) -> int | None:
    if text is None:
        return None
    if text == "auto":
        return secrets.randbits(64)
    try:
        seed = int(text)
    except ValueError:
        raise ConfigError(f"--seed must be an unsigned 64-bit integer or 'auto', got {text!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError(f"--seed out of range: {seed}")
    return seed


def _fail(status: int, kind: str, exc: BaseException, **extra) -> int:
    err = {"error": kind, "message": str(exc)}
    err.update({k: v for k, v in extra.items() if v is not None})
    sys.stderr.write(json.dumps(err, default=_json_default) + "\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="solicit", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file (optional for verify)")
    ap.add_argument("--output", help="write here instead of stdout")
    ap.add_argument("--format", default="json", choices=("json", "csv"))
    ap.add_argument("--seed", help="unsigned 64-bit seed, or 'auto' for fresh entropy")
    ap.add_argument("--curve", help="plan commands: also write the curve/surface CSV here")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        seed = _parse_seed(args.seed)
        if args.config is None:
            if args.command != "verify":
                raise ConfigError(f"command {args.command!r} requires --config")
            doc = {}
        else:
            try:
                with open(args.config) as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        cfg = RunConfig.from_dict(args.command, doc, args.format, seed)
        cfg.curve_path = args.curve
        status, text = run(cfg)
    except InfeasibleError as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible", exc, achieved=exc.achieved)
    except TruncationError as exc:
        return _fail(EXIT_NUMERICAL, "truncation", exc, residual=exc.residual, n_terms=exc.n_terms)
    except ArithmeticError as exc:
        return _fail(EXIT_NUMERICAL, "numerical", exc)
    except (ValueError, KeyError, TypeError) as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
