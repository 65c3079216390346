import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from uirs.cli import main
from uirs.experiments import HEADERS, ConfigError, ExperimentConfig, run


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        ExperimentConfig.from_dict({"protocol": "unitarity", "bogus": 1})


def test_nested_unknown_key_rejected():
    with pytest.raises(ConfigError, match="noise"):
        ExperimentConfig.from_dict({"protocol": "unitarity", "m_list": [1, 2, 3], "noise": {"gate_lft": 0.1}})


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"n": 6}, "n"),
        ({"m_list": []}, "m_list"),
        ({"noise": {"spam_prep": 1.5}}, "noise.spam_prep"),
        ({"mode": "FAST"}, "mode"),
        ({"protocol": "nope"}, "protocol"),
        ({"V": "XXX"}, "V/W"),
    ],
)
def test_invalid_fields_named(patch, field):
    cfg = {"protocol": "unitarity", "n": 2, "m_list": [1, 2, 3]}
    cfg.update(patch)
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict(cfg)
    assert str(info.value).startswith(field)


def test_pauli_spec_forms():
    cfg = ExperimentConfig.from_dict({"protocol": "otoc-converge", "n": 3, "V": {"pauli": "Y", "site": 2}, "W": "IXI"})
    obs = cfg.observables()
    assert obs.V.word == "IIY" and obs.W.word == "IXI"


def test_default_observables():
    obs = ExperimentConfig.from_dict({"protocol": "otoc-converge", "n": 3}).observables()
    assert obs.V.word == "IIY" and obs.W.word == "IXI"


def test_protocol_headers_and_row_counts(tmp_path):
    cases = [
        {"protocol": "otoc-converge", "n": 1, "S": [50, 80], "N": 3},
        {"protocol": "otoc-vs-time", "n": 1, "S": 50, "N": 3, "t_list": [0.2, 0.4, 0.6]},
        {"protocol": "spam-compare", "n": 1, "S": 50, "N": 3, "p_list": [0.0, 0.2]},
        {"protocol": "unitarity", "n": 1, "S": 100, "m_list": [1, 2, 3, 4], "noise": {"gate_left": 0.1}},
    ]
    lengths = [2, 3, 2, 4]
    for case, count in zip(cases, lengths):
        out = tmp_path / f"{case['protocol']}.csv"
        case["output_path"] = str(out)
        run(ExperimentConfig.from_dict(case), workers=1)
        rows = _rows(out)
        assert rows[0] == HEADERS[case["protocol"]]
        assert len(rows) == count + 1
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert set(fit) == {"a", "b", "u", "residual"}


def test_spam_compare_uses_common_draws(tmp_path):
    out = tmp_path / "spam.csv"
    cfg = {"protocol": "spam-compare", "n": 2, "S": 200, "N": 4, "p_list": [0.0, 0.3], "output_path": str(out)}
    rows = run(ExperimentConfig.from_dict(cfg), workers=1)["rows"]
    # global depolarizing SPAM cancels in the ratio sample by sample
    assert np.isclose(rows[0][1], rows[1][1], rtol=1e-9)
    assert abs(rows[1][2] - rows[1][3]) > abs(rows[0][2] - rows[0][3])


def test_cli_run_and_seed_override(tmp_path, capsys):
    out = tmp_path / "u.csv"
    path = _write(tmp_path, {"protocol": "otoc-converge", "n": 1, "S": 60, "N": 3, "output_path": str(out)})
    assert main(["run", "--config", str(path)]) == 0
    first = out.read_bytes()
    assert main(["run", "--config", str(path), "--seed", "5"]) == 0
    assert out.read_bytes() != first
    assert main(["run", "--config", str(path), "--workers", "2"]) == 0
    assert main(["run", "--config", str(path)]) == 0
    assert out.read_bytes() == first


def test_cli_reports_config_errors(tmp_path, capsys):
    path = _write(tmp_path, {"protocol": "unitarity", "extra": 1})
    assert main(["run", "--config", str(path)]) == 2
    assert "extra" in capsys.readouterr().err


def test_cli_unwritable_output(tmp_path, capsys):
    path = _write(tmp_path, {"protocol": "otoc-converge", "n": 1, "S": 20, "N": 2, "output_path": str(tmp_path / "no" / "x.csv")})
    assert main(["run", "--config", str(path)]) == 2


def test_cli_oracle_check(capsys):
    assert main(["oracle-check"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("pass") >= 9


def test_cli_version():
    res = subprocess.run([sys.executable, "-m", "uirs.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("uirs ")


def test_workers_env_default(tmp_path, monkeypatch):
    out = tmp_path / "w.csv"
    path = _write(tmp_path, {"protocol": "otoc-converge", "n": 1, "S": 60, "N": 4, "output_path": str(out)})
    main(["run", "--config", str(path)])
    ref = out.read_bytes()
    monkeypatch.setenv("UIRS_WORKERS", "2")
    main(["run", "--config", str(path)])
    assert out.read_bytes() == ref
