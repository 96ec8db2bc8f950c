"""Effective torsion and truncation-level bounds, in exact big integers.

The recursion below is one sound reading of the existence proof for the
torsion bounds: it returns certified upper bounds, not the (unknown)
optimal constants.  Factorial growth is expected; everything is a Python
int.
"""

from functools import lru_cache

from .errors import BadParams


def epsilon_p(p: int) -> int:
    return 2 if p == 2 else 1


@lru_cache(maxsize=None)
def d_plus_bound0(a: int, c: int) -> int:
    """Upper bound for the torsion of rank-a crystals with s = 0, h = c."""
    if a < 1 or c < 0:
        raise BadParams("need a >= 1 and c >= 0")
    if a == 1 or c == 0:
        return 0
    split_case = max(
        d_plus_bound0(a1, c) + d_plus_bound0(a - a1, c) + c * a
        for a1 in range(1, a)
    )
    # simple case: c_1 = 0, c_{r+1} = c_r + d_r + r! * a * c
    c_t = 0
    fact = 1
    for r in range(1, a):
        c_t = c_t + d_plus_bound0(r, c) + fact * a * c
        fact *= r + 1
    return max(split_case, c_t)


def d_plus_bound(a: int, b: int, c: int) -> int:
    """Upper bound for the torsion of rank-a crystals, s-number b, h-number c."""
    if a < 1 or b < 0 or c < 0:
        raise BadParams("need a >= 1, b >= 0, c >= 0")
    if a == 1:
        return 0
    return b * (a - 1) + d_plus_bound0(a, c)


def n_fam_bound(v: int, s: int, h: int, p: int) -> int:
    """Isomorphism-level bound 2*d(v, s, h) + eps_p for a v-dimensional group."""
    if v < 1:
        raise BadParams("need v >= 1")
    return 2 * d_plus_bound(v, s, h) + epsilon_p(p)


def truncation_level_bound(kind: str, r: int, p: int, d=None) -> int:
    """Level at which the listed objects are determined up to isomorphism.

    kind="pdiv": height r, optional dimension d (0 or r short-circuits
    to 0); kind="polarized": the symplectic variant in terms of d = r/2.
    """
    if kind == "pdiv":
        if r < 1:
            raise BadParams("need r >= 1")
        if d is not None and d in (0, r):
            return 0
        return 2 * d_plus_bound(r * r, 1, 2) + epsilon_p(p)
    if kind == "polarized":
        if r < 1:
            raise BadParams("need d >= 1")
        dim = 2 * r * r + r
        return 2 * d_plus_bound(dim, 1, 2) + epsilon_p(p)
    raise BadParams(f"unknown bound kind {kind!r}")
