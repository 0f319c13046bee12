import csv
import json

import numpy as np
import pytest

from dqho.exceptions import ConfigError
from dqho.io import TableWriter, header_lines, load_config, write_json


def test_defaults():
    cfg = load_config()
    assert cfg.model == "chain" and cfg.kappa == 0.5 and cfg.omega_r_value == 1.0
    assert cfg.explicit == ()


def test_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nkappa = 0.2   # inline\nOMEGA_R2=1.44\n\nwigner_times = 1, 2.5\n")
    cfg = load_config(path, {"t0": "0.7"})
    assert cfg.kappa == 0.2
    assert cfg.omega_r_value == pytest.approx(1.2)
    assert cfg.wigner_times == (1.0, 2.5)
    assert cfg.t0 == 0.7
    assert cfg.echo() == ["kappa=0.2", "omega_r2=1.44", "t0=0.7", "wigner_times=(1.0, 2.5)"]


@pytest.mark.parametrize("text,match", [
    ("bogus = 1\n", "unknown key"),
    ("kappa 0.2\n", "expected key=value"),
    ("kappa = abc\n", "bad value"),
    ("model = magic\n", "model"),
    ("tol = 0\n", "tol"),
    ("dt = 1\nt_max = 0.5\n", "t_max"),
    ("t0 = -1\n", "t0"),
    ("model = custom\n", "spectral_file"),
    ("prep = file\n", "prep_file"),
    ("omega_r = 1\nomega_r2 = 1\n", "not both"),
])
def test_invalid_configs(tmp_path, text, match):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError, match=match):
        load_config(path)


def test_unknown_key_location(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("kappa = 0.1\nnope = 2\n")
    with pytest.raises(ConfigError, match=r"bad.cfg:2"):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")


def test_header_lines():
    cfg = load_config(overrides={"kappa": "0.3"})
    lines = header_lines(cfg, "kernel")
    assert lines[1] == "command: kernel"
    assert "config: kappa=0.3" in lines
    assert sum(line.startswith("tolerance:") for line in lines) == 3


def test_csv_writer(tmp_path):
    w = TableWriter("csv", ["a", "b"])
    path = w.write(str(tmp_path / "t"), ["x", "flag", "n"], [(0.1, True, 3), (np.nan, False, 4)])
    lines = open(path).read().splitlines()
    assert lines[:2] == ["# a", "# b"]
    rows = list(csv.reader(lines[2:]))
    assert rows == [["x", "flag", "n"], ["0.1", "true", "3"], ["nan", "false", "4"]]


def test_json_writer(tmp_path):
    w = TableWriter("json", ["meta"])
    path = w.write(str(tmp_path / "t"), ["x"], [(np.float64(np.inf),), (2.0,)])
    data = json.loads(open(path).read())
    assert data == {"metadata": ["meta"], "columns": ["x"], "rows": [[None], [2.0]]}
    with pytest.raises(ConfigError):
        TableWriter("xml", [])


def test_write_json_converts_numpy(tmp_path):
    path = write_json(tmp_path / "p.json", {"a": np.arange(3), "b": {"c": np.bool_(True)}},
                      header=["h"])
    data = json.loads(open(path).read())
    assert data == {"metadata": ["h"], "a": [0, 1, 2], "b": {"c": True}}
