import random

import pytest

from fcrystals.bounds import epsilon_p
from fcrystals.crystal import builtin_crystal
from fcrystals.errors import (
    BadShape,
    PreconditionTooWeak,
    UnsupportedShape,
)
from fcrystals.plinalg import Matrix, det_valuation
from fcrystals.stairs import (
    StairsDatum,
    build_stairs_datum,
    lang_run,
    stairs_algebra_run,
    stairs_run,
    thirds_family_certificate,
)
from fcrystals.witt import make_witt_ring


def _general_twist(ring, r, level, rng):
    delta = Matrix(ring, [
        [ring.random_element(rng) * ring.p ** level for _ in range(r)]
        for _ in range(r)])
    return Matrix.identity(ring, r) + delta


def test_monomial_datum_ordinary():
    W = make_witt_ring(3, 1, 4)
    C = builtin_crystal(W, "ordinary", r=2, d=1)
    d = build_stairs_datum(C)
    assert d.strategy == "monomial"
    assert d.torsion == 0 and d.multiplicative and d.unital
    d.verify()


def test_monomial_datum_supersingular():
    W = make_witt_ring(2, 2, 4)
    SS = builtin_crystal(W, "supersingular", d=1)
    d = build_stairs_datum(SS)
    assert d.strategy == "monomial" and d.torsion == 1
    d.verify()


def test_unsupported_shape():
    W = make_witt_ring(2, 3, 4)
    F = builtin_crystal(W, "phi_alpha_4_5", alpha=1)
    with pytest.raises(UnsupportedShape):
        build_stairs_datum(F, dmax=2)


def test_precondition():
    W = make_witt_ring(2, 2, 5)
    SS = builtin_crystal(W, "supersingular", d=1)
    d = build_stairs_datum(SS)
    rng = random.Random(0)
    weak = _general_twist(W, 2, 1, rng)  # below 2m + eps_2 = 4
    with pytest.raises(PreconditionTooWeak):
        stairs_run(SS, weak, d)


def test_identity_twist():
    W = make_witt_ring(3, 1, 4)
    C = builtin_crystal(W, "ordinary", r=2, d=1)
    cert = stairs_run(C, Matrix.identity(W, 2))
    assert cert.witness == Matrix.identity(W, 2)
    assert cert.level == 4 and cert.reverify()


@pytest.mark.parametrize("p,n", [(2, 4), (3, 2)])
def test_stairs_ordinary(p, n):
    ring = make_witt_ring(p, 1, n)
    C = builtin_crystal(ring, "ordinary", r=2, d=1)
    datum = build_stairs_datum(C)
    n0 = 2 * datum.torsion + epsilon_p(p)
    rng = random.Random(1)
    for _ in range(6):
        g = _general_twist(ring, 2, n0, rng)
        cert = stairs_run(C, g, datum)
        assert cert.reverify()
        assert cert.level == cert.ring.n


@pytest.mark.parametrize("p", [2, 3])
def test_stairs_supersingular(p):
    n0 = 2 * 1 + epsilon_p(p)
    ring = make_witt_ring(p, 2, n0 + 1)
    SS = builtin_crystal(ring, "supersingular", d=1)
    datum = build_stairs_datum(SS)
    rng = random.Random(2)
    for _ in range(4):
        if p == 2:
            g = _general_twist(ring, 2, n0, rng)
        else:
            co = [ring.random_element(rng) * p ** n0 for _ in datum.basis]
            g = Matrix.identity(ring, 2) + datum.combine(co)
        cert = stairs_run(SS, g, datum)
        assert cert.reverify()
        assert cert.level > n0


@pytest.mark.parametrize("p", [2, 3])
def test_algebra_stairs_ordinary(p):
    ring = make_witt_ring(p, 1, 3)
    C = builtin_crystal(ring, "ordinary", r=2, d=1)
    datum = build_stairs_datum(C)
    rng = random.Random(3)
    for _ in range(4):
        g = _general_twist(ring, 2, 1, rng)
        cert = stairs_algebra_run(C, g, datum)
        assert cert.reverify() and cert.level == 3


@pytest.mark.parametrize("p", [2, 3])
def test_lang_supersingular(p):
    # p = 3 runs can exhaust the field table (the residue trivializer and
    # the follow-up digit both extend); at least one witness must land
    ring = make_witt_ring(p, 2, 2)
    SS = builtin_crystal(ring, "supersingular", d=1)
    rng = random.Random(4)
    ok = 0
    for _ in range(6):
        g = _general_twist(ring, 2, 1, rng)
        try:
            cert = lang_run(SS, g)
        except Exception:
            continue
        assert cert.reverify()
        ok += 1
    assert ok >= (3 if p == 2 else 1)


def test_lang_etale_any_unit():
    # at precision 1 the residue trivializer is the whole witness; it
    # exists inside the table for every unit (element orders are small)
    ring = make_witt_ring(3, 1, 1)
    ET = builtin_crystal(ring, "ordinary", r=2, d=0)
    rng = random.Random(5)
    for _ in range(4):
        while True:
            g = Matrix(ring, [[ring.random_element(rng) for _ in range(2)]
                              for _ in range(2)])
            try:
                if det_valuation(g) == 0:
                    break
            except Exception:
                continue
        cert = lang_run(ET, g, dmax=12)
        assert cert.reverify() and cert.level == 1


def test_stairs_agrees_with_unit_search():
    from fcrystals.semilinear import isom_search
    ring = make_witt_ring(3, 1, 2)
    C = builtin_crystal(ring, "ordinary", r=2, d=1)
    datum = build_stairs_datum(C)
    rng = random.Random(6)
    for _ in range(3):
        g = _general_twist(ring, 2, 1, rng)
        cert = stairs_run(C, g, datum)
        assert cert.reverify()
        res = isom_search(cert.crystal, cert.crystal.twist(cert.twist))
        assert res.witness is not None


def test_thirds_family_certificate():
    cert = thirds_family_certificate(make_witt_ring(2, 3, 4), alpha=1,
                                     trials=1)
    assert cert["upper"] == 3
    assert cert["components"]["upper_block"]["s_values"] == [0, 0, 1]
    assert cert["components"]["lower_block"]["square_zero"]
    assert cert["components"]["diagonal_blocks"]["torsions"] == (1, 1)
    assert all(v >= 1 for v in cert["evidence"].values())


def test_datum_verify_rejects_corruption():
    W = make_witt_ring(3, 1, 4)
    C = builtin_crystal(W, "ordinary", r=2, d=1)
    d = build_stairs_datum(C)
    bad = StairsDatum(C, d.basis, list(d.perm),
                      [e + 1 for e in d.exponents], d.torsion,
                      d.cycles, d.signs, d.multiplicative, d.unital,
                      d.square_zero, d.strategy)
    with pytest.raises(BadShape):
        bad.verify()
