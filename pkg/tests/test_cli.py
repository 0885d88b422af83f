import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from isomassive.cli import parse_pairs, parse_vertex, run


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_green_all_methods_agree(tmp_path):
    # both paths have simple poles, so the residue form applies as well
    assert run(["green", "--preset", "paper-fig4", "--k", "0.7", "--pairs", "(1,0,0):(0,0,0);(2,0,0):(0,0,0)",
                "--method", "all", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "green.csv")
    assert len(rows) == 8 and {r["method"] for r in rows} == {"local", "residue", "truncated", "fourier"}
    by_pair = {}
    for r in rows:
        by_pair.setdefault((r["x"], r["y"]), []).append(float(r["value"]))
    for vals in by_pair.values():
        assert max(vals) - min(vals) < 1e-8
    with open(tmp_path / "green.csv", "rb") as fh:
        assert b"\r\n" in fh.read()


@pytest.mark.parametrize("argv,files", [
    (["asymptotics", "--preset", "square"], ["asymptotics.csv"]),
    (["sample-forest", "--torus", "3x3", "--samples", "2"], ["forest.json", "forest.svg"]),
    (["marginals", "--preset", "triangular"], ["marginals.csv"]),
    (["amoeba", "--preset", "paper-fig4", "--grid", "20", "--boundary", "128"],
     ["amoeba.csv", "amoeba.svg", "amoeba.json"]),
    (["spectral", "--preset", "hexagonal"], ["charpoly.csv", "spectral.json"]),
    (["free-energy", "--preset", "hexagonal", "--k2", "0.25"], ["free_energy.csv"]),
    (["phase-scan", "--preset", "square", "--points", "6"], ["phase_scan.json"]),
    (["check-zinv", "--trials", "3"], ["zinv.csv"]),
    (["selftest", "--preset", "paper-fig4"], ["selftest.csv"]),
])
def test_subcommands_write_outputs(tmp_path, argv, files):
    assert run(argv + ["--out", str(tmp_path)]) == 0
    for f in files:
        path = tmp_path / f
        assert path.stat().st_size > 0
        if f.endswith(".svg"):
            assert ET.parse(path).getroot().tag.endswith("svg")
        if f.endswith(".json"):
            json.loads(path.read_text())


def test_selftest_all_pass(tmp_path):
    assert run(["selftest", "--preset", "triangular", "--k", "0.3", "--out", str(tmp_path)]) == 0
    assert all(r["status"] == "PASS" for r in read_csv(tmp_path / "selftest.csv"))


def test_spec_file(tmp_path):
    spec = tmp_path / "g.json"
    spec.write_text(json.dumps({"tracks": [{"h": 1, "v": 0, "alpha_bar": 1.5708},
                                           {"h": 1, "v": 1, "alpha_bar": 2.618},
                                           {"h": 0, "v": 1, "alpha_bar": 3.665}]}))
    assert run(["spectral", "--spec", str(spec), "--out", str(tmp_path)]) == 0


def test_error_exit_codes(tmp_path, capsys):
    assert run(["green", "--k", "1.5", "--out", str(tmp_path)]) == 1
    assert run(["green", "--pairs", "nonsense", "--out", str(tmp_path)]) == 1
    assert run(["spectral", "--spec", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        run(["no-such-command"])


def test_parsers():
    assert parse_vertex("(2,-1)") == (0, 2, -1)
    assert parse_vertex("(1,0,3)") == (1, 0, 3)
    assert parse_pairs("(0,0):(1,1);(1,2,3):(0,0,0)") == [((0, 0, 0), (0, 1, 1)), ((1, 2, 3), (0, 0, 0))]


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "isomassive.cli", "selftest", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0


def test_free_energy_closed_matches_fourier(tmp_path):
    assert run(["free-energy", "--preset", "square", "--k", "0.5", "--out", str(tmp_path)]) == 0
    row = read_csv(tmp_path / "free_energy.csv")[0]
    assert abs(float(row["closed"]) - float(row["fourier"])) < 1e-6
