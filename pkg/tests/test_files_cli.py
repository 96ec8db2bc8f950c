import json
import subprocess
import sys

import pytest

from fcrystals.crystal import builtin_crystal
from fcrystals.errors import BadShape
from fcrystals.files import (
    crystal_to_dict,
    dict_to_crystal,
    read_crystal,
    stairs_datum_to_dict,
    write_crystal,
)
from fcrystals.stairs import build_stairs_datum
from fcrystals.witt import make_witt_ring


def _run(args, **kw):
    return subprocess.run(
        [sys.executable, "-m", "fcrystals.cli", *args],
        capture_output=True, text=True, **kw)


def test_round_trip(tmp_path):
    ring = make_witt_ring(2, 2, 4)
    C = builtin_crystal(ring, "supersingular", d=1)
    path = tmp_path / "ss.json"
    write_crystal(path, C)
    C2 = read_crystal(path)
    assert C2.B == C.B and C2.shift == C.shift and C2.ring == C.ring
    # second round trip is byte-identical
    path2 = tmp_path / "ss2.json"
    write_crystal(path2, C2)
    assert path.read_text() == path2.read_text()


def test_polarized_round_trip(tmp_path):
    ring = make_witt_ring(2, 3, 4)
    P = builtin_crystal(ring, "polarized_4_5_4", alpha=1)
    path = tmp_path / "pol.json"
    write_crystal(path, P)
    P2 = read_crystal(path)
    assert P2.J == P.J and P2.c == P.c and P2.base.B == P.base.B


def test_stairs_block_round_trip(tmp_path):
    ring = make_witt_ring(3, 1, 4)
    C = builtin_crystal(ring, "ordinary", r=2, d=1)
    datum = build_stairs_datum(C)
    path = tmp_path / "ord.json"
    write_crystal(path, C, datum=datum)
    C2, datum2 = read_crystal(path, want_datum=True)
    assert datum2 is not None
    assert stairs_datum_to_dict(datum2) == stairs_datum_to_dict(datum)


def test_unknown_keys_rejected():
    ring = make_witt_ring(2, 1, 3)
    d = crystal_to_dict(builtin_crystal(ring, "ordinary", r=2, d=1))
    d["extra"] = 1
    with pytest.raises(BadShape):
        dict_to_crystal(d)
    d2 = crystal_to_dict(builtin_crystal(ring, "ordinary", r=2, d=1))
    d2.pop("version")
    with pytest.raises(BadShape):
        dict_to_crystal(d2)
    d3 = crystal_to_dict(builtin_crystal(ring, "ordinary", r=2, d=1))
    d3["matrix"][0][0] = [9]  # not reduced mod 8
    with pytest.raises(BadShape):
        dict_to_crystal(d3)


def test_cli_deviation():
    res = _run(["deviation", "-1,1,-1,-1,1,1,0,-1"])
    assert res.returncode == 0
    out = json.loads(res.stdout)
    assert out["S"] == 2 and out["W"] == 3
    bad = _run(["deviation", "1,x"])
    assert bad.returncode == 2


def test_cli_polygon(tmp_path):
    ring = make_witt_ring(2, 1, 12)
    C = builtin_crystal(ring, "supersingular", d=1)
    path = tmp_path / "ss.json"
    write_crystal(path, C)
    res = _run(["polygon", str(path), "--newton"])
    assert res.returncode == 0
    out = json.loads(res.stdout)
    assert out["slopes"] == [[1, 2, 2]] and out["h"] == 1
    low = make_witt_ring(2, 1, 2)
    Clow = builtin_crystal(low, "supersingular", d=1)
    path2 = tmp_path / "low.json"
    write_crystal(path2, Clow)
    res2 = _run(["polygon", str(path2), "--newton"])
    assert res2.returncode == 3
    res3 = _run(["polygon", str(tmp_path / "missing.json")])
    assert res3.returncode == 2


def test_cli_bound():
    res = _run(["bound", "--rank", "2", "--s", "1", "--h-number", "1"])
    assert res.returncode == 0
    assert json.loads(res.stdout)["bound"] == "3"
    res2 = _run(["bound", "--pdiv", "3", "0", "--p", "2"])
    assert json.loads(res2.stdout)["bound"] == "0"


def test_cli_isom_and_hom(tmp_path):
    ring = make_witt_ring(2, 1, 4)
    O = builtin_crystal(ring, "ordinary", r=2, d=1)
    S = builtin_crystal(ring, "supersingular", d=1)
    po, ps = tmp_path / "o.json", tmp_path / "s.json"
    write_crystal(po, O)
    write_crystal(ps, S)
    same = _run(["isom", str(po), str(po)])
    assert same.returncode == 0 and json.loads(same.stdout)["found"]
    diff = _run(["isom", str(po), str(ps)])
    assert diff.returncode == 1
    out = json.loads(diff.stdout)
    assert not out["found"] and out["regime"] == "exhaustive"
    hom = _run(["hom", str(po), str(ps), "--prec", "2"])
    assert hom.returncode == 0
    out_h = json.loads(hom.stdout)
    assert "exponents" in out_h and "basis" in out_h


def test_cli_stairs_and_probe(tmp_path):
    ring = make_witt_ring(3, 1, 2)
    C = builtin_crystal(ring, "ordinary", r=2, d=1)
    path = tmp_path / "ord.json"
    write_crystal(path, C)
    res = _run(["stairs", str(path), "--twist-level", "1", "--seed", "0"])
    assert res.returncode == 0, res.stderr
    out = json.loads(res.stdout)
    assert out["verified"]
    probe = _run(["probe", str(path), "--trials", "2"])
    assert probe.returncode == 0
    rep = json.loads(probe.stdout)
    assert rep["upper"] == 1


def test_cli_verify_unknown_suite():
    res = _run(["verify", "--suite", "nope"])
    assert res.returncode == 2


def test_cli_jobs_deterministic(tmp_path):
    ring = make_witt_ring(2, 2, 3)
    C = builtin_crystal(ring, "supersingular", d=1)
    path = tmp_path / "ss.json"
    write_crystal(path, C)
    r1 = _run(["isom", str(path), str(path), "--jobs", "1"])
    r2 = _run(["isom", str(path), str(path), "--jobs", "2"])
    assert r1.returncode == r2.returncode == 0
    assert json.loads(r1.stdout)["witness"] == json.loads(r2.stdout)["witness"]


def test_verify_suite_fault_injection(monkeypatch):
    """A corrupted built-in constant must fail its named check."""
    import fcrystals.crystal as crystal_mod
    from fcrystals import verify as V

    real = crystal_mod._slope_thirds_family

    def corrupted(ring, alpha):
        C = real(ring, alpha)
        ents = C.B.mutable()
        ents[0][0] = ents[0][0] + ring.one()
        from fcrystals.plinalg import Matrix
        from fcrystals.crystal import FCrystal
        return FCrystal(ring, Matrix(ring, ents), 0)

    monkeypatch.setattr(crystal_mod, "_slope_thirds_family", corrupted)
    res = V._check("05 rank-6 thirds family", V.check_thirds_family)
    assert not res["ok"]


def test_cli_verify_fast_runs():
    res = _run(["verify", "--suite", "paper", "--fast"])
    assert res.returncode == 0, res.stderr[-500:]
    lines = [json.loads(x) for x in res.stdout.strip().splitlines()]
    assert len(lines) == 12 and all(r["ok"] for r in lines)
    assert "12/12" in res.stderr
