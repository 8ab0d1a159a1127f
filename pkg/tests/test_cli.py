import csv
import json
import math
from pathlib import Path

import pytest

from tippetop import cli, verification
from tippetop.verification import Check

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
TOP = {"m": 0.02, "R": 0.02, "alpha": 0.3, "I3": 3.2e-06, "rational": True}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def short_run(**over):
    cfg = {"top": dict(TOP), "mu": 0.3, "initial": {"theta": 0.1, "omega3": 155.0},
           "t_end": 0.2, "output": "run.csv"}
    cfg.update(over)
    return cfg


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_simulate_short_run(tmp_path):
    code = cli.main(["simulate", "--config", write(tmp_path, short_run()), "--out", str(tmp_path / "a")])
    assert code == 0
    table = rows(tmp_path / "a" / "run.csv")
    assert table[0] == cli.TRAJECTORY_COLUMNS
    assert len(table) == 202
    assert all(len(r) == 12 for r in table)
    side = json.loads((tmp_path / "a" / "run.json").read_text())
    assert side["integration"]["reason"] == "completed"
    assert side["config"]["rtol"] == 1e-9 and side["config"]["t_end"] == 0.2
    assert {"inversion", "conservation", "routh_range"} <= side.keys()


def test_simulate_is_deterministic_and_round_trips(tmp_path):
    cfg = write(tmp_path, short_run())
    cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
    cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")])
    a, b = tmp_path / "a", tmp_path / "b"
    assert (a / "run.csv").read_bytes() == (b / "run.csv").read_bytes()
    assert (a / "run.json").read_bytes() == (b / "run.json").read_bytes()
    echoed = json.loads((a / "run.json").read_text())["config"]
    cli.main(["simulate", "--config", write(tmp_path, echoed, "echo.json"), "--out", str(tmp_path / "c")])
    assert (a / "run.csv").read_bytes() == (tmp_path / "c" / "run.csv").read_bytes()
    assert (a / "run.json").read_bytes() == (tmp_path / "c" / "run.json").read_bytes()


def test_numbers_round_trip():
    for x in (0.1, 1 / 3, 6.874256636397774e-06, -0.0, 1e300):
        assert float(cli.fmt(x)) == x
        assert len(cli.fmt(x).lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 17


@pytest.mark.parametrize("cfg", [
    short_run(t_end=0.0),
    short_run(colour="red"),
    dict(short_run(), top={**TOP, "I1": 3e-6}),
    dict(short_run(), top={k: v for k, v in TOP.items() if k != "rational"}),
    dict(short_run(), initial={"theta": 4.0, "omega3": 1.0}),
    {"top": TOP},
])
def test_simulate_rejects_bad_config(tmp_path, cfg):
    assert cli.main(["simulate", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2


def test_non_finite_numbers_rejected(tmp_path):
    path = tmp_path / "nan.json"
    path.write_text(json.dumps(short_run()).replace('"t_end": 0.2', '"t_end": NaN'))
    assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


def test_simulate_abnormal_end(tmp_path):
    cfg = short_run(initial={"theta": 1.5, "theta_dot": 200.0, "omega3": 0.0}, t_end=1.0)
    assert cli.main(["simulate", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 3
    side = json.loads((tmp_path / "run.json").read_text())
    assert side["integration"]["reason"].startswith("NegativeNormalForce")
    assert 1 < len(rows(tmp_path / "run.csv")) < 1002


def analysis(tmp_path, **over):
    cfg = json.loads((CONFIGS / "example1_analysis.json").read_text())
    cfg.update(over)
    return write(tmp_path, cfg, "analysis.json")


def test_potential_example1(tmp_path):
    assert cli.main(["potential", "--config", analysis(tmp_path), "--out", str(tmp_path)]) == 0
    out = json.loads((tmp_path / "potential.json").read_text())
    assert float(f"{out['delta_minus']:.3g}") == 1.48e-7
    assert out["D1"] == pytest.approx(-6e-4, rel=0.02)
    assert out["lambda_thres"] == pytest.approx(3.44e-6, rel=5e-3)
    path = rows(tmp_path / "minimum_path.csv")
    assert path[0] == ["D", "z_min"] and len(path) == 22
    scan = rows(tmp_path / "potential_scan.csv")
    assert scan[0] == ["D", "z", "V"] and len(scan) == 1 + 3 * 201


def test_potential_requires_rational_regime(tmp_path):
    top = {"m": 0.02, "R": 0.02, "alpha": 0.3, "I3": 3.2e-06, "I1": 3.0e-06}
    assert cli.main(["potential", "--config", analysis(tmp_path, top=top), "--out", str(tmp_path)]) == 4
    assert cli.main(["period", "--config", analysis(tmp_path, top=top), "--out", str(tmp_path)]) == 4


def test_potential_lambda_or_initial(tmp_path):
    cfg = analysis(tmp_path, **{"lambda": 6.9e-6})
    assert cli.main(["potential", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_period_rows(tmp_path):
    cfg = analysis(tmp_path, d_grid=9)
    assert cli.main(["period", "--config", cfg, "--out", str(tmp_path)]) == 0
    recs = json.loads((tmp_path / "period.json").read_text())["rows"]
    assert len(recs) == 9 * 4
    assert rows(tmp_path / "period.csv")[0] == cli.PERIOD_COLUMNS
    for r in recs:
        assert 0.0497 <= r["T_max"] <= 0.0923
        if r["E_tilde"] == min(x["E_tilde"] for x in recs if x["D"] == r["D"]):
            assert r["k2"] == 0 and r["K"] == math.pi / 2
        if r["flag"] == "":
            assert r["T_exact"] <= r["T_upp"]


@pytest.fixture
def fake_criteria(monkeypatch):
    def install(passed):
        def run(seed=0):
            return [Check("c", 1.0, "1", passed)]
        monkeypatch.setattr(verification, "CRITERIA", {"X": ("fake", run)})
    return install


def test_verify_exit_codes(fake_criteria, capsys):
    fake_criteria(True)
    assert cli.main(["verify"]) == 0
    assert "[PASS]" in capsys.readouterr().out
    fake_criteria(False)
    assert cli.main(["verify"]) == 4
    assert "[FAIL]" in capsys.readouterr().out


def test_example_configs_validate():
    for name in ("example1.json", "cohen.json"):
        cfg = cli.load_config(CONFIGS / name, cli.RUN_SCHEMA, cli.RUN_DEFAULTS)
        cli.build_parameters(cfg["top"])
    cli.load_config(CONFIGS / "example1_analysis.json", cli.ANALYSIS_SCHEMA, cli.ANALYSIS_DEFAULTS)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["example1.json", "cohen.json"])
def test_simulate_reference_configs(tmp_path, name):
    assert cli.main(["simulate", "--config", str(CONFIGS / name), "--out", str(tmp_path)]) == 0
    side = json.loads(next(tmp_path.glob("*.json")).read_text())
    assert side["inversion"]["completed"]
    if name == "example1.json":
        assert 2 <= side["inversion"]["inversion_time"] <= 8
