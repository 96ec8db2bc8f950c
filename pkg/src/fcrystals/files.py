"""Bit-exact JSON files for crystals, polarizations, and stairs data.

Schema (version 1): {"version": 1, "p", "q", "n", "rank", "shift",
"matrix": row-major entries, each entry the list of q coefficients},
optional "gram" (same entry format) with "gram_c", optional "stairs"
block.  Unknown keys are rejected.
"""

import json

from .crystal import FCrystal, PolarizedCrystal
from .errors import BadShape
from .plinalg import Matrix
from .witt import make_witt_ring

_TOP_KEYS = {"version", "p", "q", "n", "rank", "shift", "matrix",
             "gram", "gram_c", "stairs"}
_STAIRS_KEYS = {"basis", "permutation", "exponents", "torsion", "signs",
                "multiplicative", "unital", "square_zero", "strategy"}


def matrix_to_entries(M: Matrix):
    return [[list(e.coeffs) for e in row] for row in M.entries]


def entries_to_matrix(ring, rows, cols, entries):
    if len(entries) != rows or any(len(r) != cols for r in entries):
        raise BadShape("matrix entry shape mismatch")
    return Matrix(ring, [[ring.element(e) for e in row] for row in entries])


def crystal_to_dict(obj) -> dict:
    pol = None
    if isinstance(obj, PolarizedCrystal):
        pol = obj
        obj = obj.base
    ring = obj.ring
    out = {
        "version": 1,
        "p": ring.p,
        "q": ring.q,
        "n": ring.n,
        "rank": obj.rank,
        "shift": obj.shift,
        "matrix": matrix_to_entries(obj.B),
    }
    if pol is not None:
        out["gram"] = matrix_to_entries(pol.J)
        out["gram_c"] = pol.c
    return out


def dict_to_crystal(data: dict):
    if not isinstance(data, dict):
        raise BadShape("expected a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise BadShape(f"unknown keys: {sorted(unknown)}")
    if data.get("version") != 1:
        raise BadShape("unsupported or missing version (need 1)")
    for key in ("p", "q", "n", "rank", "shift", "matrix"):
        if key not in data:
            raise BadShape(f"missing key {key!r}")
    ring = make_witt_ring(data["p"], data["q"], data["n"])
    r = data["rank"]
    B = entries_to_matrix(ring, r, r, data["matrix"])
    # entries must already be reduced
    if matrix_to_entries(B) != data["matrix"]:
        raise BadShape("matrix entries are not reduced")
    C = FCrystal(ring, B, data["shift"])
    if (C.B, C.shift) != (B, data["shift"]):
        raise BadShape("matrix/shift are not in normalized form")
    if "gram" in data:
        J = entries_to_matrix(ring, r, r, data["gram"])
        if "gram_c" not in data:
            raise BadShape("gram needs gram_c")
        return PolarizedCrystal(C, J, data["gram_c"])
    if "gram_c" in data:
        raise BadShape("gram_c without gram")
    return C


def stairs_datum_to_dict(datum) -> dict:
    return {
        "basis": [matrix_to_entries(e) for e in datum.basis],
        "permutation": list(datum.perm),
        "exponents": list(datum.exponents),
        "torsion": datum.torsion,
        "signs": list(datum.signs),
        "multiplicative": datum.multiplicative,
        "unital": datum.unital,
        "square_zero": datum.square_zero,
        "strategy": datum.strategy,
    }


def dict_to_stairs_datum(data: dict, crystal):
    from .stairs import StairsDatum, _cycles_of
    unknown = set(data) - _STAIRS_KEYS
    if unknown:
        raise BadShape(f"unknown stairs keys: {sorted(unknown)}")
    ring = crystal.ring
    r = crystal.rank
    basis = [entries_to_matrix(ring, r, r, e) for e in data["basis"]]
    datum = StairsDatum(
        crystal, basis, list(data["permutation"]),
        list(data["exponents"]), data["torsion"],
        _cycles_of(list(data["permutation"])), list(data["signs"]),
        data["multiplicative"], data["unital"],
        data.get("square_zero", False), data.get("strategy", "file"),
    )
    datum.verify()
    return datum


def write_crystal(path, obj, datum=None):
    data = crystal_to_dict(obj)
    if datum is not None:
        data["stairs"] = stairs_datum_to_dict(datum)
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True)
        fh.write("\n")


def read_crystal(path, want_datum=False):
    with open(path) as fh:
        data = json.load(fh)
    obj = dict_to_crystal(data)
    if not want_datum:
        return obj
    datum = None
    if "stairs" in data:
        base = obj.base if isinstance(obj, PolarizedCrystal) else obj
        datum = dict_to_stairs_datum(data["stairs"], base)
    return obj, datum
