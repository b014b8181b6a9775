import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET
from importlib.resources import files

import numpy as np
import pytest

from unbounded_toeplitz import (RunConfig, classify_components, coeff_window,
                                ess_spectrum_sweep, split_and_realize)
from unbounded_toeplitz import cli, io
from unbounded_toeplitz.errors import ToeplitzError
from unbounded_toeplitz.examples import ExampleReport

DATA = files("unbounded_toeplitz") / "data"


def ex_path(k):
    return str(DATA / f"example{k}.json")


def run(argv, capsys):
    code = cli.main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


# -- JSON ------------------------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_symbol_round_trip(examples, k):
    sym = examples[k].symbol
    back = io.symbol_from_dict(json.loads(json.dumps(io.symbol_to_dict(sym))))
    for z in (0.3 + 0.2j, -2.0, 1.5j):
        np.testing.assert_array_equal(back(z), sym(z))


@pytest.mark.parametrize("k", [2, 3, 4])
def test_realization_round_trip(examples, k):
    real = split_and_realize(examples[k].symbol)
    back = io.realization_from_dict(json.loads(json.dumps(io.realization_to_dict(real))))
    for name in ("R0", "A", "B", "C", "alpha", "beta", "gamma"):
        np.testing.assert_array_equal(getattr(back, name), getattr(real, name))


def test_coeff_window_round_trip(examples):
    cw = coeff_window(examples[3].realization, 5)
    back = io.coeff_window_from_dict(json.loads(json.dumps(io.coeff_window_to_dict(cw))))
    for j in range(-5, 6):
        np.testing.assert_array_equal(back.a(j), cw.a(j))


@pytest.mark.parametrize("text", ["{", '{"m": 1}', '{"m": 2, "entries": [[]]}',
                                  '{"m": 1, "entries": [[{"num": [[1, 0]], "den": [[0, 0]]}]]}',
                                  '[1, 2]'])
def test_malformed_symbol(tmp_path, text):
    p = tmp_path / "bad.json"
    p.write_text(text)
    with pytest.raises(io.SymbolFormatError):
        io.load_symbol(p)


def test_fmt_complex_round_trips():
    z = 0.1 + 1 / 3j
    assert complex(io.fmt_complex(z)) == z


# -- CSV determinism and atomic writes ----------------------------------------------------

def test_csv_deterministic(examples):
    real = split_and_realize(examples[3].symbol)
    cfg = RunConfig(n_theta=90, grid_n=64, seed=3)
    texts = []
    for _ in range(2):
        cloud = ess_spectrum_sweep(real, cfg.n_theta, cfg)
        rm = classify_components(cloud, real, cfg)
        texts.append((io.ess_cloud_csv(cloud), io.region_map_csv(rm),
                      io.markov_csv(coeff_window(real, 8))))
    assert texts[0] == texts[1]
    assert texts[0][0].splitlines()[0] == "theta,re_lambda,im_lambda"
    assert texts[0][1].splitlines()[0] == "re,im,label"
    assert texts[0][2].splitlines()[0] == "k,row,col,value"


def test_atomic_write_success(tmp_path):
    p = io.atomic_write(tmp_path / "sub" / "a.txt", "hello\n")
    assert p.read_text() == "hello\n"
    assert os.listdir(tmp_path / "sub") == ["a.txt"]


def test_atomic_write_failure_leaves_nothing(tmp_path):
    target = tmp_path / "a.txt"
    target.write_text("old\n")

    with pytest.raises(TypeError):
        io.atomic_write(target, 12345)          # not a str: the write fails midway
    assert target.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["a.txt"]


def test_svg_is_xml(examples):
    real = split_and_realize(examples[2].symbol)
    cfg = RunConfig(n_theta=90, grid_n=48)
    cloud = ess_spectrum_sweep(real, cfg.n_theta, cfg)
    for text in (io.scatter_svg(cloud), io.region_svg(classify_components(cloud, real, cfg))):
        root = ET.fromstring(text)
        assert root.tag.endswith("svg")


# -- CLI ---------------------------------------------------------------------------------

def test_cli_malformed_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    code, _, err = run(["realize", str(p), "--out", str(tmp_path)], capsys)
    assert code == 2 and "error" in err


def test_cli_missing_file(tmp_path, capsys):
    code, _, _ = run(["realize", str(tmp_path / "nope.json")], capsys)
    assert code == 2


def test_cli_bad_lambda(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["resolvent", ex_path(2), "--lambda", "abc"])
    assert exc.value.code == 2


def test_cli_realize_example2(tmp_path, capsys):
    code, out, _ = run(["realize", ex_path(2), "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "n_plus = 1, n_minus = 1" in out
    d = json.loads((tmp_path / "example2_realization.json").read_text())
    assert d["A"]["rows"] == 1 and d["alpha"]["rows"] == 1
    assert (tmp_path / "example2_markov.csv").exists()


def test_cli_realize_example4(tmp_path, capsys):
    code, out, _ = run(["realize", ex_path(4), "--out", str(tmp_path)], capsys)
    assert code == 0 and "n_plus = 0, n_minus = 2" in out


def test_cli_ess_spec_example5(tmp_path, capsys):
    code, out, _ = run(["ess-spec", ex_path(5), "--n-theta", "32", "--out", str(tmp_path)], capsys)
    assert code == 0 and "essential spectrum: whole plane" in out
    side = json.loads((tmp_path / "example5_ess.json").read_text())
    assert side["whole_plane"] is True


def test_cli_e_set(tmp_path, capsys):
    code, out, _ = run(["e-set", ex_path(5), "--out", str(tmp_path)], capsys)
    assert code == 0 and "E(Omega): 2" in out
    e = json.loads((tmp_path / "example5_e_set.json").read_text())["e_set"]
    assert len(e) == 1 and abs(complex(*e[0]) - 2) < 1e-8


def test_cli_resolvent_negative_lambda(tmp_path, capsys):
    code, out, _ = run(["resolvent", ex_path(2), "--lambda", "-2.5,0", "--out", str(tmp_path)],
                       capsys)
    assert code == 0 and "Resolvent" in out
    d = json.loads((tmp_path / "example2_verdict.json").read_text())
    assert d["verdict"] == "Resolvent"


def test_cli_spectrum_example3(tmp_path, capsys):
    code, out, _ = run(["spectrum", ex_path(3), "--n-theta", "180", "--grid-n", "80",
                        "--out", str(tmp_path)], capsys)
    assert code == 0
    for suffix in ("_ess.csv", "_ess.svg", "_regions.csv", "_regions.svg", "_verdicts.json"):
        assert (tmp_path / f"example3{suffix}").exists()
    verdicts = json.loads((tmp_path / "example3_verdicts.json").read_text())
    assert {v["verdict"] for v in verdicts} >= {"Resolvent", "NotResolvent"}


def test_cli_spectrum_deterministic(tmp_path, capsys):
    outs = []
    for d in ("a", "b"):
        run(["spectrum", ex_path(2), "--n-theta", "90", "--grid-n", "48", "--seed", "5",
             "--out", str(tmp_path / d)], capsys)
        outs.append({f: (tmp_path / d / f).read_bytes() for f in os.listdir(tmp_path / d)
                     if f.endswith(".csv")})
    assert outs[0] == outs[1] and len(outs[0]) == 2


def test_cli_numerical_failure(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise ToeplitzError("synthetic")
    monkeypatch.setattr(cli, "split_and_realize", boom)
    code, _, err = run(["realize", ex_path(2), "--out", str(tmp_path)], capsys)
    assert code == 3 and "synthetic" in err


def test_cli_failed_check(tmp_path, capsys, monkeypatch):
    def failing(k, cfg=None, out_dir=None):
        rep = ExampleReport(k)
        rep.add("forced", 1.0, 2.0, False, tol=1e-12)
        return rep
    monkeypatch.setattr(cli, "reproduce_example", failing)
    code, out, _ = run(["example", "1", "--out", str(tmp_path)], capsys)
    assert code == 4 and "[FAIL]" in out


def test_cli_example_passes(tmp_path, capsys):
    code, out, _ = run(["example", "5", "--n-theta", "64", "--out", str(tmp_path)], capsys)
    assert code == 0 and "[FAIL]" not in out


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "unbounded_toeplitz", "e-set", ex_path(4),
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and "E(Omega): empty" in r.stdout
