import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from solicit import cli

from conftest import GEO_HALF_V1

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def call(capsys, *argv):
    status = cli.main(list(argv))
    out = capsys.readouterr()
    return status, out.out, out.err


GEO_STATS = {"law": {"kind": "geometric", "p": 0.5}, "prior": {"kind": "poisson", "v": 1.0}}


def test_stats_example(tmp_path, capsys):
    status, out, _ = call(capsys, "stats", "--config", write(tmp_path, GEO_STATS))
    assert status == 0
    doc = json.loads(out)
    st = doc["stats"]
    assert st["e_T"] == pytest.approx(1.49138, abs=1e-5)
    assert st["e_Y"] == pytest.approx(0.609905, abs=1e-6)
    assert st["e_M"] == pytest.approx(GEO_HALF_V1["E_M"], abs=1e-12)
    assert doc["engines"]["e_Y"] == "geometric_engine"
    assert doc["engines"]["var_Y"] == "poisson_engine"


def test_stats_dispatch_to_finite_prior(tmp_path, capsys):
    doc = {"law": {"kind": "geometric", "p": 0.5}, "prior": {"kind": "binomial", "s": 2, "theta": 1.0}}
    status, out, _ = call(capsys, "stats", "--config", write(tmp_path, doc))
    res = json.loads(out)
    assert status == 0 and res["engines"]["e_Y"] == "finite_prior"
    assert res["stats"]["e_Y"] == pytest.approx(1.25, abs=1e-14)


def test_stats_non_geometric_uses_general_engine(tmp_path, capsys):
    doc = {"law": {"kind": "table", "masses": [0.3, 0.2, 0.1]}, "prior": {"kind": "poisson", "v": 2.0}}
    status, out, _ = call(capsys, "stats", "--config", write(tmp_path, doc))
    assert status == 0 and json.loads(out)["engines"]["e_Y"] == "poisson_engine"


def test_law_example_csv(tmp_path, capsys):
    doc = {"law": {"kind": "geometric", "p": 0.3}, "prior": {"kind": "poisson", "v": 0.0}}
    status, out, _ = call(capsys, "law", "--config", write(tmp_path, doc), "--format", "csv")
    assert status == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "prob"]
    assert rows[1] == ["1", "1.0"]
    assert rows[-1][0] == "residual" and float(rows[-1][1]) == 0.0


def test_law_csv_full_precision(tmp_path, capsys):
    status, out, _ = call(capsys, "law", "--config", write(tmp_path, GEO_STATS), "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))[1:-1]
    assert float(rows[1][1]) == pytest.approx(GEO_HALF_V1["P_T"][1], abs=1e-15)
    for _, p in rows:
        assert float(repr(float(p))) == float(p)


def test_verify_default_suite(capsys):
    status, out, _ = call(capsys, "verify")
    doc = json.loads(out)
    assert status == 0 and doc["passed"]
    assert len(doc["identities"]) >= 8
    assert all(c["passed"] for c in doc["identities"])


def test_simulate_byte_identical(tmp_path, capsys):
    doc = {"law": {"kind": "geometric", "p": 0.5}, "prior": {"kind": "poisson", "v": 3.0},
           "simulate": {"replicates": 20000, "chunk_size": 3000, "workers": 3}}
    cfg = write(tmp_path, doc)
    a = call(capsys, "simulate", "--config", cfg, "--seed", "42")[1]
    b = call(capsys, "simulate", "--config", cfg, "--seed", "42")[1]
    c = call(capsys, "simulate", "--config", cfg, "--seed", "43")[1]
    assert a == b and a != c
    assert json.loads(a)["report"]["seed"] == 42


def test_seed_parsing(tmp_path, capsys):
    cfg = write(tmp_path, {**GEO_STATS, "simulate": {"replicates": 10}})
    assert call(capsys, "simulate", "--config", cfg, "--seed", "-1")[0] == cli.EXIT_CONFIG
    assert call(capsys, "simulate", "--config", cfg, "--seed", str(2**64))[0] == cli.EXIT_CONFIG
    status, out, _ = call(capsys, "simulate", "--config", cfg, "--seed", "auto")
    assert status == 0 and 0 <= json.loads(out)["report"]["seed"] < 2**64


@pytest.mark.parametrize("name", ["stats_geometric", "law_v0", "simulate", "plan_pool", "plan_prob", "plan_profit"])
def test_shipped_configs_round_trip(name, tmp_path, capsys):
    command = {"stats_geometric": "stats", "law_v0": "law", "plan_pool": "plan-pool",
               "plan_prob": "plan-prob", "plan_profit": "plan-profit", "simulate": "simulate"}[name]
    out_path = tmp_path / "out.json"
    status = cli.main([command, "--config", str(CONFIGS / f"{name}.json"), "--output", str(out_path)])
    assert status == 0
    first = out_path.read_text()
    doc = json.loads(first)
    assert doc["command"] == command
    cli.main([command, "--config", str(CONFIGS / f"{name}.json"), "--output", str(out_path)])
    assert out_path.read_text() == first


def test_plan_outputs_and_curves(tmp_path, capsys):
    curve = tmp_path / "curve.csv"
    status, out, _ = call(capsys, "plan-pool", "--config", str(CONFIGS / "plan_pool.json"), "--curve", str(curve))
    assert status == 0
    res = json.loads(out)["result"]
    assert res["sales"] >= 25
    rows = list(csv.reader(curve.open()))
    assert rows[0] == ["param", "value"] and len(rows) > 3
    status, out, _ = call(capsys, "plan-profit", "--config", str(CONFIGS / "plan_profit.json"), "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["v", "w", "profit"]
    assert len(rows) == 1 + 31 * 39


def test_exit_codes(tmp_path, capsys):
    status, _, err = call(capsys, "plan-pool", "--config", write(tmp_path, {"law": {"kind": "geometric", "p": 0.001953125}, "plan-pool": {"K": 1e6}}))
    assert status == cli.EXIT_INFEASIBLE
    e = json.loads(err)
    assert e["error"] == "infeasible" and e["achieved"] > 0

    bad_law = {"law": {"kind": "geometric", "p": 2.0}, "prior": {"kind": "poisson", "v": 1.0}}
    status, _, err = call(capsys, "stats", "--config", write(tmp_path, bad_law))
    assert status == cli.EXIT_CONFIG and json.loads(err)["error"] == "config"

    status, _, err = call(capsys, "stats", "--config", str(tmp_path / "missing.json"))
    assert status == cli.EXIT_CONFIG

    status, _, _ = call(capsys, "plan-profit", "--config", write(tmp_path, GEO_STATS))
    assert status == cli.EXIT_CONFIG

    status, _, _ = call(capsys, "plan-pool", "--config", write(tmp_path, {"law": {"kind": "table", "masses": [0.5]}, "plan-pool": {"K": 1}}))
    assert status == cli.EXIT_CONFIG

    heavy = {"law": {"kind": "table", "masses": [0.01] * 50}, "prior": {"kind": "poisson", "v": 1e6},
             "policy": {"alpha": 1e-12, "hard_cap": 40}}
    status, _, err = call(capsys, "stats", "--config", write(tmp_path, heavy))
    assert status == cli.EXIT_NUMERICAL and json.loads(err)["error"] == "truncation"


def test_command_specific_alias(tmp_path, capsys):
    doc = {"prior": {"kind": "poisson", "v": 5.0}, "command-specific": {"K": 5.0, "p_bounds": [1e-6, 1.0]}}
    status, out, _ = call(capsys, "plan-prob", "--config", write(tmp_path, doc))
    assert status == 0 and json.loads(out)["result"]["chosen"]["p"] == 1.0


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "solicit.cli", "stats", "--config", write(tmp_path, GEO_STATS), "--format", "csv"],
                          capture_output=True, text=True, check=True)
    rows = dict(csv.reader(io.StringIO(proc.stdout)))
    assert float(rows["e_Y"]) == pytest.approx(0.609905, abs=1e-6)
