import csv
import io
import json
import math

import pytest

from echobd.cli import main
from echobd.config import config_from_dict, load_config, nmodel_to_dict
from echobd.errors import ConfigError
from echobd.scenarios import random_admissible_nmodel

ALPHA = {"schema": 1, "profiles": [{"builder": "alpha_delta", "delta": {"surrogate": 0.07071067811865475}}]}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_indices(capsys):
    code, out, _ = run(capsys, "indices", "--r", "1.4142", "--n", "5")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "index", "symmetric_cz"]
    assert [int(r[1]) for r in rows[1:]] == [2 * math.floor(n * 1.4142) + 1 for n in range(1, 6)]
    assert out.endswith("\r\n")


def test_scan_two_rows_per_slope(tmp_path, capsys):
    cfg = write(tmp_path, "a.json", ALPHA)
    code, out, _ = run(capsys, "scan-orbits", "--profile", cfg, "--L", "50", "--qmax", "100")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["parameter", "p", "q", "action"]
    count = {}
    for r in rows:
        count[(r["p"], r["q"])] = count.get((r["p"], r["q"]), 0) + 1
    assert set(count.values()) == {2}


def test_check_and_plot(tmp_path, capsys):
    cfg = write(tmp_path, "a.json", ALPHA)
    assert run(capsys, "check-profile", "--profile", cfg)[0] == 0
    bad = write(tmp_path, "b.json", {"schema": 1, "profiles": [
        {"side": "torus-shell", "pieces": [{"lo": "1", "hi": "2", "f": ["1", "1"], "g": ["1", "1"]}]}]})
    code, out, _ = run(capsys, "check-profile", "--profile", bad)
    assert code == 1 and "VIOLATED" in out
    svg = tmp_path / "p.svg"
    assert run(capsys, "plot-profile", "--profile", cfg, "--out", str(svg))[0] == 0
    assert svg.read_text().startswith("<?xml")


def test_invalid_inputs_exit_two(tmp_path, capsys):
    assert run(capsys, "indices")[0] == 2
    assert run(capsys, "indices", "--r", "2", "--n", "3")[0] == 2
    assert run(capsys, "homology", "--model", str(tmp_path / "missing.json"))[0] == 2
    bad = write(tmp_path, "m.json", {"schema": 1, "orbits": [{"name": "g1", "kind": "elliptic", "action": 2}],
                                     "differentials": {"d_flat": {"g1": ["q"]}}})
    code, _, err = run(capsys, "homology", "--model", bad)
    assert code == 2 and "undeclared orbit 'q'" in err
    wrong = write(tmp_path, "w.json", {"schema": 2})
    code, _, err = run(capsys, "homology", "--model", wrong)
    assert code == 2 and "schema" in err
    assert run(capsys, "nonsense")[0] == 2


def test_admissibility_named_on_load():
    data = {"schema": 1, "orbits": [
        {"name": "g1", "kind": "elliptic", "action": 2.0}, {"name": "g2", "kind": "elliptic", "action": 1.0}],
        "differentials": {"d_flat": {"g2": ["g1"]}}}
    with pytest.raises(ConfigError, match="action"):
        config_from_dict(data)


def test_gen_model_roundtrip(tmp_path, capsys):
    code, out, _ = run(capsys, "gen-model", "--seed", "3", "--orbits", "4")
    assert code == 0
    path = tmp_path / "g.json"
    path.write_text(out)
    n = load_config(path).nmodel()
    ref = random_admissible_nmodel(3, 4, 6)
    assert n.d_flat == ref.d_flat and n.d_prime == ref.d_prime
    assert nmodel_to_dict(n)["differentials"] == json.loads(out)["differentials"]


def test_homology_and_pages(tmp_path, capsys):
    code, out, _ = run(capsys, "homology", "--seed", "2", "--orbits", "2", "--variant", "full")
    assert code == 0 and out.startswith("grade,j0")
    code, out, _ = run(capsys, "pages", "--seed", "2", "--filtration", "Gprime", "--r", "1", "--grade", "1")
    assert code == 0 and out.startswith("level,grade,dim")


def test_verify_deterministic_report(capsys):
    args = ("verify", "main", "--count", "2", "--seed", "7", "--deterministic")
    c1, o1, _ = run(capsys, *args)
    c2, o2, _ = run(capsys, *args)
    assert c1 == c2 == 0 and o1 == o2
    assert "summary: 4/4 passed" in o1
    _, o3, _ = run(capsys, "verify", "solid-torus")
    assert o3.startswith("# generated")


def test_verify_csv_tables(tmp_path, capsys):
    code, _, _ = run(capsys, "verify", "solid-torus", "--csv-dir", str(tmp_path / "t"), "--deterministic")
    assert code == 0
    assert (tmp_path / "t" / "solid-torus-limit.csv").read_bytes().startswith(b"n,dim\r\n0,1\r\n1,0\r\n")
