"""Exact arithmetic in truncated Witt rings of finite fields.

W_n(F_{p^q}) is realized as (Z/p^n)[t]/(f) where f is the unique monic
lift of the Conway polynomial of F_{p^q} whose roots are Teichmuller
representatives (equivalently f divides x^(p^q) - x at precision n).
With this choice the Frobenius is the ring map t -> t^p, and Teichmuller
lifts, base change and sigma-inverse are all exact polynomial algebra.

Elements are coefficient tuples of length q with entries in [0, p^n).
"""

import math

from .conway import conway_polynomial
from .errors import NoEmbedding, NotAUnit, RingMismatch

INFINITY = math.inf

_ring_cache = {}


def make_witt_ring(p: int, q: int, n: int) -> "WittRing":
    """Return W_n(F_{p^q}), cached.

    Raises NotPrime / UnknownField for parameters outside the built-in
    Conway table.
    """
    key = (p, q, n)
    ring = _ring_cache.get(key)
    if ring is None:
        ring = WittRing(p, q, n)
        _ring_cache[key] = ring
    return ring


class FieldCtx:
    """The residue field F_{p^q}, described by its Conway modulus."""

    __slots__ = ("p", "q", "modulus")

    def __init__(self, p, q):
        self.p = p
        self.q = q
        self.modulus = conway_polynomial(p, q)

    def __eq__(self, other):
        return (
            isinstance(other, FieldCtx)
            and (self.p, self.q) == (other.p, other.q)
        )

    def __hash__(self):
        return hash((self.p, self.q))

    def __repr__(self):
        return f"FieldCtx(p={self.p}, q={self.q})"


def _poly_mul_mod(a, b, f, mod):
    """(a * b) mod (f, mod) for coefficient tuples, f monic."""
    q = len(f) - 1
    res = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                res[i + j] = (res[i + j] + ai * bj) % mod
    for i in range(len(res) - 1, q - 1, -1):
        c = res[i]
        if c:
            res[i] = 0
            for j in range(q):
                res[i - q + j] = (res[i - q + j] - c * f[j]) % mod
    res = res[:q]
    res.extend([0] * (q - len(res)))
    return tuple(res)


def _poly_pow_mod(a, e, f, mod):
    q = len(f) - 1
    result = tuple([1] + [0] * (q - 1))
    base = a
    while e:
        if e & 1:
            result = _poly_mul_mod(result, base, f, mod)
        base = _poly_mul_mod(base, base, f, mod)
        e >>= 1
    return result


def _poly_deriv(f, mod):
    return tuple((i * f[i]) % mod for i in range(1, len(f)))


def _teichmuller_modulus(p, q, n):
    """Hensel lift of the Conway polynomial dividing x^(p^q) - x mod p^n."""
    f0 = conway_polynomial(p, q)
    pn = p ** n
    f = list(f0)
    if q == 1:
        # root is the Teichmuller lift of the mod-p root
        r = (-f0[0]) % p
        x = r
        for _ in range(n):
            x = pow(x, p, pn)
        return ((-x) % pn, 1)
    d0 = _poly_deriv(f0, p)
    xq = tuple([0, 1] + [0] * (q - 2))
    while True:
        fr = tuple(f)
        rem = _poly_pow_mod(xq, p ** q, fr, pn)
        rem = list(rem)
        rem[1] = (rem[1] - 1) % pn  # subtract x
        if not any(rem):
            break
        k = min(_int_val(c, p, n) for c in rem if c)
        rbar = tuple((c // p ** k) % p for c in rem)
        # correction h = -(rem/p^k) * f0' mod (f0, p)
        h = _poly_mul_mod(rbar, d0, f0, p)
        pk = p ** k
        for j in range(q):
            f[j] = (f[j] - pk * h[j]) % pn
    return tuple(f)


def _int_val(c, p, n):
    if c % p ** n == 0:
        return n
    v = 0
    while c % p == 0:
        c //= p
        v += 1
    return v


class WittRing:
    """W_n(F_{p^q}) as (Z/p^n)[t]/(modulus_lift); immutable once built."""

    def __init__(self, p, q, n):
        if n < 1 or q < 1:
            raise ValueError("need q >= 1 and n >= 1")
        self.field = FieldCtx(p, q)
        self.p = p
        self.q = q
        self.n = n
        self.pn = p ** n
        self.modulus_lift = _teichmuller_modulus(p, q, n)
        self._zero = tuple([0] * q)
        self._one = tuple([1] + [0] * (q - 1))
        # sigma(t^j) = (t^p)^j; precompute the q images
        if q == 1:
            self._sigma_imgs = (self._one,)
        else:
            tp = _poly_pow_mod(
                tuple([0, 1] + [0] * (q - 2)), p, self.modulus_lift, self.pn
            )
            imgs = [self._one]
            for _ in range(q - 1):
                imgs.append(
                    _poly_mul_mod(imgs[-1], tp, self.modulus_lift, self.pn)
                )
            self._sigma_imgs = tuple(imgs)
        self._sigma_inv_imgs = None
        self._embed_cache = {}

    # -- raw coefficient-tuple arithmetic ---------------------------------

    def _add(self, a, b):
        pn = self.pn
        return tuple((x + y) % pn for x, y in zip(a, b))

    def _sub(self, a, b):
        pn = self.pn
        return tuple((x - y) % pn for x, y in zip(a, b))

    def _neg(self, a):
        pn = self.pn
        return tuple((-x) % pn for x in a)

    def _mul(self, a, b):
        if self.q == 1:
            return ((a[0] * b[0]) % self.pn,)
        return _poly_mul_mod(a, b, self.modulus_lift, self.pn)

    def _smul(self, c, a):
        pn = self.pn
        return tuple((c * x) % pn for x in a)

    def _sigma_raw(self, a):
        if self.q == 1:
            return a
        res = self._zero
        for j, c in enumerate(a):
            if c:
                res = self._add(res, self._smul(c, self._sigma_imgs[j]))
        return res

    def _sigma_inv_raw(self, a):
        if self.q == 1:
            return a
        if self._sigma_inv_imgs is None:
            # sigma has order q, so sigma^{-1} = sigma^(q-1)
            t_img = tuple([0, 1] + [0] * (self.q - 2))
            for _ in range(self.q - 1):
                t_img = self._sigma_raw(t_img)
            imgs = [self._one]
            for _ in range(self.q - 1):
                imgs.append(self._mul(imgs[-1], t_img))
            self._sigma_inv_imgs = tuple(imgs)
        res = self._zero
        for j, c in enumerate(a):
            if c:
                res = self._add(res, self._smul(c, self._sigma_inv_imgs[j]))
        return res

    def _val(self, a):
        v = min(_int_val(c, self.p, self.n) for c in a)
        return INFINITY if v >= self.n else v

    def _inv(self, a):
        # inverse mod p by extended Euclid, then Hensel/Newton lift
        if self._val(a) != 0:
            raise NotAUnit(f"{a} has positive valuation")
        p, q, pn = self.p, self.q, self.pn
        abar = tuple(c % p for c in a)
        y = self._invert_mod_p(abar)
        y = tuple(y)
        prec = 1
        while prec < self.n:
            # y <- y * (2 - a*y)
            ay = self._mul(a, y)
            two_minus = self._sub(self._smul(2, self._one), ay)
            y = self._mul(y, two_minus)
            prec *= 2
        return y

    def _invert_mod_p(self, abar):
        p, q = self.p, self.q
        if q == 1:
            return (pow(abar[0], -1, p),)
        # extended Euclid in F_p[x] against the Conway modulus
        f0 = tuple(c % p for c in self.modulus_lift)
        r0, r1 = list(f0), list(abar) + [0]
        s0, s1 = [0] * (q + 1), [1] + [0] * q

        def deg(v):
            for i in range(len(v) - 1, -1, -1):
                if v[i]:
                    return i
            return -1

        while True:
            d1 = deg(r1)
            if d1 <= 0:
                break
            d0 = deg(r0)
            if d0 < d1:
                r0, r1, s0, s1 = r1, r0, s1, s0
                continue
            c = (r0[d0] * pow(r1[d1], -1, p)) % p
            shift = d0 - d1
            for i in range(d1 + 1):
                r0[i + shift] = (r0[i + shift] - c * r1[i]) % p
            for i in range(q + 1 - shift):
                s0[i + shift] = (s0[i + shift] - c * s1[i]) % p
        if deg(r1) != 0:
            raise NotAUnit("not invertible mod p")
        c = pow(r1[0], -1, p)
        return tuple((c * s1[i]) % p for i in range(q))

    # -- public element API ------------------------------------------------

    def element(self, coeffs) -> "WittElem":
        coeffs = tuple(int(c) % self.pn for c in coeffs)
        if len(coeffs) != self.q:
            raise ValueError(f"need exactly {self.q} coefficients")
        return WittElem(self, coeffs)

    def from_int(self, c) -> "WittElem":
        return WittElem(self, tuple([int(c) % self.pn] + [0] * (self.q - 1)))

    def zero(self):
        return WittElem(self, self._zero)

    def one(self):
        return WittElem(self, self._one)

    def gen(self):
        """The Teichmuller generator t (for q = 1, the lifted field generator)."""
        if self.q == 1:
            return WittElem(self, ((-self.modulus_lift[0]) % self.pn,))
        return WittElem(self, tuple([0, 1] + [0] * (self.q - 2)))

    def teichmuller(self, a) -> "WittElem":
        """Multiplicative lift of a residue-field element.

        ``a`` is a coefficient sequence mod p (or a WittElem, reduced mod p
        first).
        """
        if isinstance(a, WittElem):
            a = a.coeffs
        x = tuple(int(c) % self.p for c in a)
        if len(x) != self.q:
            raise ValueError(f"need exactly {self.q} coefficients")
        e = self.p ** self.q
        for _ in range(self.n - 1):
            x = _poly_pow_mod(x, e, self.modulus_lift, self.pn) if self.q > 1 \
                else (pow(x[0], e, self.pn),)
        return WittElem(self, x)

    def reduce_to(self, m):
        """Natural projection W_n -> W_m (m <= n)."""
        if m > self.n:
            raise ValueError("cannot increase precision")
        return make_witt_ring(self.p, self.q, m)

    def random_element(self, rng):
        return WittElem(
            self, tuple(rng.randrange(self.pn) for _ in range(self.q))
        )

    def random_unit(self, rng):
        while True:
            a = self.random_element(rng)
            if a.valuation() == 0:
                return a

    def __eq__(self, other):
        return (
            isinstance(other, WittRing)
            and (self.p, self.q, self.n) == (other.p, other.q, other.n)
        )

    def __hash__(self):
        return hash((self.p, self.q, self.n))

    def __repr__(self):
        return f"WittRing(p={self.p}, q={self.q}, n={self.n})"


class WittElem:
    """An element of a WittRing; immutable."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring, coeffs):
        self.ring = ring
        self.coeffs = coeffs

    def _check(self, other):
        if not isinstance(other, WittElem) or other.ring != self.ring:
            raise RingMismatch(f"{self!r} vs {other!r}")

    def __add__(self, other):
        self._check(other)
        return WittElem(self.ring, self.ring._add(self.coeffs, other.coeffs))

    def __sub__(self, other):
        self._check(other)
        return WittElem(self.ring, self.ring._sub(self.coeffs, other.coeffs))

    def __neg__(self):
        return WittElem(self.ring, self.ring._neg(self.coeffs))

    def __mul__(self, other):
        if isinstance(other, int):
            return WittElem(self.ring, self.ring._smul(other, self.coeffs))
        self._check(other)
        return WittElem(self.ring, self.ring._mul(self.coeffs, other.coeffs))

    def __rmul__(self, other):
        if isinstance(other, int):
            return WittElem(self.ring, self.ring._smul(other, self.coeffs))
        return NotImplemented

    def unit_inverse(self):
        return WittElem(self.ring, self.ring._inv(self.coeffs))

    def frobenius(self, power=1):
        """sigma^power; sigma is the lift of x -> x^p, of order q."""
        power %= self.ring.q
        c = self.coeffs
        if power == self.ring.q - 1 and power > 1:
            return WittElem(self.ring, self.ring._sigma_inv_raw(c))
        for _ in range(power):
            c = self.ring._sigma_raw(c)
        return WittElem(self.ring, c)

    def frobenius_inv(self):
        return WittElem(self.ring, self.ring._sigma_inv_raw(self.coeffs))

    def valuation(self):
        """Largest v < n with self in p^v * ring; INFINITY when zero."""
        return self.ring._val(self.coeffs)

    def divide_exact(self, k):
        """Divide by p^k; every coefficient must be divisible."""
        pk = self.ring.p ** k
        if any(c % pk for c in self.coeffs):
            raise ValueError(f"not divisible by p^{k}")
        return WittElem(self.ring, tuple(c // pk for c in self.coeffs))

    def reduce_to(self, target_ring):
        """Project to a lower-precision ring with the same (p, q)."""
        if (
            target_ring.p != self.ring.p
            or target_ring.q != self.ring.q
            or target_ring.n > self.ring.n
        ):
            raise RingMismatch("reduce_to needs same (p, q), lower n")
        pm = target_ring.pn
        return WittElem(target_ring, tuple(c % pm for c in self.coeffs))

    def residue(self):
        """Coefficients mod p, as a tuple (an F_{p^q} element)."""
        p = self.ring.p
        return tuple(c % p for c in self.coeffs)

    def embed(self, target: WittRing) -> "WittElem":
        """Frobenius-equivariant embedding W_n(F_{p^q}) -> W_n(F_{p^Q}), q | Q."""
        R, S = self.ring, target
        if R == S:
            return self
        if R.p != S.p or R.n != S.n or S.q % R.q != 0:
            raise NoEmbedding(f"no embedding {R!r} -> {S!r}")
        u = R._embed_cache.get((S.p, S.q, S.n))
        if u is None:
            e = (S.p ** S.q - 1) // (R.p ** R.q - 1)
            gen = S.gen()
            u = _poly_pow_mod(gen.coeffs, e, S.modulus_lift, S.pn) \
                if S.q > 1 else (pow(gen.coeffs[0], e, S.pn),)
            # the image must be a root of this ring's modulus
            acc = S._zero
            for c in reversed(R.modulus_lift):
                acc = S._mul(acc, u)
                acc = S._add(acc, tuple([c] + [0] * (S.q - 1)))
            assert not any(acc), "embedding image is not a modulus root"
            R._embed_cache[(S.p, S.q, S.n)] = u
        res = S._zero
        upow = S._one
        for c in self.coeffs:
            if c:
                res = S._add(res, S._smul(c, upow))
            upow = S._mul(upow, u)
        return WittElem(S, res)

    def is_zero(self):
        return not any(self.coeffs)

    def __eq__(self, other):
        return (
            isinstance(other, WittElem)
            and self.ring == other.ring
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.ring.p, self.ring.q, self.ring.n, self.coeffs))

    def __repr__(self):
        return f"W({list(self.coeffs)})"
