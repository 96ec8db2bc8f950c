"""Matrix algebra over truncated Witt rings.

Everything here is exact at the ring's precision: Smith normal form with
unimodular transforms, canonical (Howell) solution modules for linear
systems over Z/p^n, inverses with denominator exponents, and truncated
exponentials.
"""

from dataclasses import dataclass

from .errors import OutsideExpDomain, SingularAtPrecision
from .witt import INFINITY, WittElem, make_witt_ring


class Matrix:
    """Immutable matrix with WittElem entries, all sharing one ring."""

    __slots__ = ("ring", "rows", "cols", "entries")

    def __init__(self, ring, entries):
        self.ring = ring
        self.entries = tuple(tuple(row) for row in entries)
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.rows else 0
        for row in self.entries:
            if len(row) != self.cols:
                raise ValueError("ragged rows")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def identity(ring, r):
        z, o = ring.zero(), ring.one()
        return Matrix(ring, [[o if i == j else z for j in range(r)]
                             for i in range(r)])

    @staticmethod
    def zero(ring, rows, cols=None):
        z = ring.zero()
        cols = rows if cols is None else cols
        return Matrix(ring, [[z] * cols for _ in range(rows)])

    @staticmethod
    def from_ints(ring, int_rows):
        return Matrix(ring, [[ring.from_int(c) for c in row]
                             for row in int_rows])

    @staticmethod
    def scalar(ring, r, c):
        m = Matrix.zero(ring, r, r).mutable()
        e = ring.from_int(c) if isinstance(c, int) else c
        for i in range(r):
            m[i][i] = e
        return Matrix(ring, m)

    def mutable(self):
        return [list(row) for row in self.entries]

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        return Matrix(self.ring, [
            [a + b for a, b in zip(r1, r2)]
            for r1, r2 in zip(self.entries, other.entries)
        ])

    def __sub__(self, other):
        return Matrix(self.ring, [
            [a - b for a, b in zip(r1, r2)]
            for r1, r2 in zip(self.entries, other.entries)
        ])

    def __neg__(self):
        return Matrix(self.ring, [[-a for a in row] for row in self.entries])

    def __matmul__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        ring = self.ring
        mul, add = ring._mul, ring._add
        zero = ring._zero
        ot = list(zip(*[[e.coeffs for e in row] for row in other.entries]))
        out = []
        for row in self.entries:
            rc = [e.coeffs for e in row]
            orow = []
            for colc in ot:
                acc = zero
                for a, b in zip(rc, colc):
                    acc = add(acc, mul(a, b))
                orow.append(WittElem(ring, acc))
            out.append(orow)
        return Matrix(ring, out)

    def scale(self, c):
        """Multiply entrywise by an integer or a WittElem scalar."""
        return Matrix(self.ring,
                      [[e * c for e in row] for row in self.entries])

    def transpose(self):
        return Matrix(self.ring, list(zip(*self.entries)))

    def sigma(self, power=1):
        """Apply Frobenius entrywise."""
        return Matrix(self.ring, [[e.frobenius(power) for e in row]
                                  for row in self.entries])

    def kron(self, other):
        out = []
        for r1 in self.entries:
            for r2 in other.entries:
                out.append([a * b for a in r1 for b in r2])
        return Matrix(self.ring, out)

    # -- queries -----------------------------------------------------------

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def is_zero(self):
        return all(e.is_zero() for row in self.entries for e in row)

    def min_valuation(self):
        v = INFINITY
        for row in self.entries:
            for e in row:
                ev = e.valuation()
                if ev < v:
                    v = ev
        return v

    def congruence_level(self, other=None):
        """Valuation of (self - other); other defaults to the identity."""
        if other is None:
            other = Matrix.identity(self.ring, self.rows)
        return (self - other).min_valuation()

    def divide_exact(self, k):
        return Matrix(self.ring, [[e.divide_exact(k) for e in row]
                                  for row in self.entries])

    def reduce_to(self, ring):
        return Matrix(ring, [[e.reduce_to(ring) for e in row]
                             for row in self.entries])

    def embed(self, ring):
        return Matrix(ring, [[e.embed(ring) for e in row]
                             for row in self.entries])

    def flatten_ints(self):
        """Row-major Z/p^n coordinates (q per entry)."""
        out = []
        for row in self.entries:
            for e in row:
                out.extend(e.coeffs)
        return out

    @staticmethod
    def from_flat_ints(ring, rows, cols, flat):
        q = ring.q
        ents, k = [], 0
        for _ in range(rows):
            row = []
            for _ in range(cols):
                row.append(ring.element(flat[k:k + q]))
                k += q
            ents.append(row)
        return Matrix(ring, ents)

    def __eq__(self, other):
        return (
            isinstance(other, Matrix)
            and self.ring == other.ring
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.ring, self.entries))

    def __repr__(self):
        return f"Matrix({[[list(e.coeffs) for e in r] for r in self.entries]})"

    # -- characteristic polynomial (division-free) --------------------------

    def charpoly(self):
        """Coefficients c[0..r] of det(x*I - self), low degree first."""
        ring, r = self.ring, self.rows
        if r != self.cols:
            raise ValueError("charpoly needs a square matrix")
        one, zero = ring.one(), ring.zero()
        p_cur = [one]  # char poly of the empty matrix
        for k in range(1, r + 1):
            a = self.entries[k - 1][k - 1]
            # p_new = (x - a) * p_cur - sum_j (R M^j S) q_j(x)
            p_new = [zero] * (k + 1)
            for i, c in enumerate(p_cur):
                p_new[i + 1] = p_new[i + 1] + c
                p_new[i] = p_new[i] - a * c
            if k >= 2:
                R = [self.entries[k - 1][j] for j in range(k - 1)]
                S = [self.entries[i][k - 1] for i in range(k - 1)]
                w = R
                for j in range(k - 1):
                    dot = zero
                    for x, y in zip(w, S):
                        dot = dot + x * y
                    if not dot.is_zero():
                        # q_j(x) = sum_{i >= j+1} p_cur[i] x^(i-j-1)
                        for i in range(j + 1, k):
                            p_new[i - j - 1] = p_new[i - j - 1] - dot * p_cur[i]
                    if j < k - 2:
                        w = [
                            _dot(ring, w, [self.entries[t][col]
                                           for t in range(k - 1)])
                            for col in range(k - 1)
                        ]
            p_cur = p_new
        return p_cur


def _dot(ring, xs, ys):
    acc = ring.zero()
    for x, y in zip(xs, ys):
        acc = acc + x * y
    return acc


# -- Smith normal form ------------------------------------------------------


@dataclass
class SnfResult:
    exponents: list  # length min(rows, cols); value n means ">= precision"
    left: Matrix
    right: Matrix
    diagonal: Matrix


def smith_normal_form(A: Matrix) -> SnfResult:
    """Diagonalize A as left @ A @ right = diag(p^e_i), exactly.

    Pivots are minimal-valuation entries with (row, col) tie-break; the
    transforms are invertible over the ring and the diagonal entries are
    exact powers of p.  Exponent n stands for "zero at this precision".
    """
    ring = A.ring
    n = ring.n
    M = A.mutable()
    rows, cols = A.rows, A.cols
    L = Matrix.identity(ring, rows).mutable()
    R = Matrix.identity(ring, cols).mutable()
    k = 0
    exps = []
    dim = min(rows, cols)
    while k < dim:
        best, bi, bj = INFINITY, -1, -1
        for i in range(k, rows):
            for j in range(k, cols):
                v = M[i][j].valuation()
                if v < best:
                    best, bi, bj = v, i, j
        if best == INFINITY:
            exps.extend([n] * (dim - k))
            break
        if bi != k:
            M[k], M[bi] = M[bi], M[k]
            L[k], L[bi] = L[bi], L[k]
        if bj != k:
            for row in M:
                row[k], row[bj] = row[bj], row[k]
            for row in R:
                row[k], row[bj] = row[bj], row[k]
        v = int(best)
        u_inv = M[k][k].divide_exact(v).unit_inverse()
        M[k] = [u_inv * e for e in M[k]]
        L[k] = [u_inv * e for e in L[k]]
        for i in range(rows):
            if i == k:
                continue
            e = M[i][k]
            if e.is_zero():
                continue
            c = e.divide_exact(v)
            M[i] = [x - c * y for x, y in zip(M[i], M[k])]
            L[i] = [x - c * y for x, y in zip(L[i], L[k])]
        for j in range(cols):
            if j == k:
                continue
            e = M[k][j]
            if e.is_zero():
                continue
            c = e.divide_exact(v)
            for i in range(rows):
                M[i][j] = M[i][j] - c * M[i][k]
            for i in range(cols):
                R[i][j] = R[i][j] - c * R[i][k]
        exps.append(v)
        k += 1
    return SnfResult(exps, Matrix(ring, L), Matrix(ring, R), Matrix(ring, M))


def det_valuation(A: Matrix):
    """Valuation of det(A); INFINITY when not determined at this precision."""
    exps = smith_normal_form(A).exponents
    n = A.ring.n
    if A.rows != A.cols:
        raise ValueError("need a square matrix")
    if any(e >= n for e in exps):
        return INFINITY
    return sum(exps)


def inverse_with_shift(A: Matrix):
    """(C, e) with A @ C = C @ A = p^e * I exactly and e minimal."""
    ring = A.ring
    snf = smith_normal_form(A)
    if any(x >= ring.n for x in snf.exponents) or \
            sum(snf.exponents) >= ring.n:
        raise SingularAtPrecision("determinant valuation >= precision")
    e = max(snf.exponents) if snf.exponents else 0
    # A^{-1} = right @ diag(p^{-exp}) @ left
    mid = snf.right.mutable()
    for j, x in enumerate(snf.exponents):
        c = ring.p ** (e - x)
        for i in range(len(mid)):
            mid[i][j] = mid[i][j] * c
    C = Matrix(ring, mid) @ snf.left
    return C, e


def unit_inverse_matrix(A: Matrix) -> Matrix:
    """Exact inverse of a unit matrix (det a unit)."""
    C, e = inverse_with_shift(A)
    if e != 0:
        raise SingularAtPrecision("matrix is not a unit")
    return C


# -- integer linear algebra over Z/p^n ---------------------------------------


def _ival(c, p, n):
    if c == 0:
        return n
    v = 0
    while c % p == 0 and v < n:
        c //= p
        v += 1
    return v


def howell_form(rows, p, n):
    """Canonical Howell basis of the row span inside (Z/p^n)^m.

    Rows are lists of ints; the result is the unique echelon basis with
    pivots p^e, entries below pivots zero, entries above reduced mod the
    pivot, and span-closure rows included.
    """
    pn = p ** n
    work = [list(int(c) % pn for c in r) for r in rows if any(c % pn for c in r)]
    if not work:
        return []
    m = len(work[0])
    result = []
    for j in range(m):
        live = [r for r in work if any(r)]
        cand = [r for r in live if r[j] % pn]
        rest = [r for r in live if not r[j] % pn]
        if not cand:
            work = live
            continue
        v, piv = None, None
        for r in cand:
            rv = _ival(r[j], p, n)
            if v is None or rv < v:
                v, piv = rv, r
        cand.remove(piv)
        u = piv[j] // p ** v
        ui = pow(u, -1, pn)
        piv = [(ui * c) % pn for c in piv]
        for r in cand:
            c = r[j] // p ** v
            for t in range(m):
                r[t] = (r[t] - c * piv[t]) % pn
        if v > 0:
            extra = [(p ** (n - v) * c) % pn for c in piv]
            if any(extra):
                cand.append(extra)
        result.append((j, v, piv))
        work = cand + rest
    # reduce entries above each pivot
    basis = [piv for (_, _, piv) in result]
    for idx in range(len(result) - 1, -1, -1):
        j, v, piv = result[idx]
        pv = p ** v
        for r in basis[:idx]:
            c = r[j] // pv
            if c:
                for t in range(m):
                    r[t] = (r[t] - c * piv[t]) % pn
    return basis


def howell_pivots(basis, p, n):
    """(column, valuation) pairs for a Howell basis."""
    out = []
    for r in basis:
        for j, c in enumerate(r):
            if c:
                out.append((j, _ival(c, p, n)))
                break
    return out


@dataclass
class SolutionModule:
    """Canonical description of {x : A x = b} over Z/p^n."""
    has_solution: bool
    particular: list  # empty marker when no solution
    basis: list       # Howell basis of the homogeneous kernel
    p: int
    n: int

    def all_elements(self):
        """Iterate every solution (exponential; caller caps size)."""
        if not self.has_solution:
            return
        pn = self.p ** self.n
        piv = howell_pivots(self.basis, self.p, self.n)
        ranges = [self.p ** (self.n - v) for (_, v) in piv]
        m = len(self.particular)

        def rec(i, acc):
            if i == len(self.basis):
                yield acc[:]
                return
            row = self.basis[i]
            for c in range(ranges[i]):
                if c:
                    cur = [(a + c * row[t]) % pn for t, a in enumerate(acc)]
                else:
                    cur = acc
                yield from rec(i + 1, cur)
        yield from rec(0, list(self.particular) if m else [0] * 0)

    def size_log(self):
        """log_p of the number of solutions (kernel size)."""
        piv = howell_pivots(self.basis, self.p, self.n)
        return sum(self.n - v for (_, v) in piv)


class IntSolver:
    """SNF-factored integer matrix mod p^n, reusable for many solves."""

    def __init__(self, a_rows, p, n):
        self.p = p
        self.n = n
        self.pn = p ** n
        pn = self.pn
        A = [[int(c) % pn for c in row] for row in a_rows]
        self.rows = len(A)
        self.cols = len(A[0]) if A else 0
        L = [[1 if i == j else 0 for j in range(self.rows)]
             for i in range(self.rows)]
        R = [[1 if i == j else 0 for j in range(self.cols)]
             for i in range(self.cols)]
        dim = min(self.rows, self.cols)
        exps = []
        k = 0
        while k < dim:
            best, bi, bj = n, -1, -1
            for i in range(k, self.rows):
                Ai = A[i]
                for j in range(k, self.cols):
                    if Ai[j]:
                        v = _ival(Ai[j], p, n)
                        if v < best:
                            best, bi, bj = v, i, j
                            if v == 0:
                                break
                if best == 0:
                    break
            if bi < 0:
                exps.extend([n] * (dim - k))
                break
            if bi != k:
                A[k], A[bi] = A[bi], A[k]
                L[k], L[bi] = L[bi], L[k]
            if bj != k:
                for row in A:
                    row[k], row[bj] = row[bj], row[k]
                for row in R:
                    row[k], row[bj] = row[bj], row[k]
            v = best
            u = A[k][k] // p ** v
            ui = pow(u, -1, pn)
            A[k] = [(ui * c) % pn for c in A[k]]
            L[k] = [(ui * c) % pn for c in L[k]]
            pv = p ** v
            for i in range(self.rows):
                if i == k or not A[i][k]:
                    continue
                c = A[i][k] // pv
                Ak, Ai = A[k], A[i]
                Lk, Li = L[k], L[i]
                for t in range(self.cols):
                    Ai[t] = (Ai[t] - c * Ak[t]) % pn
                for t in range(self.rows):
                    Li[t] = (Li[t] - c * Lk[t]) % pn
            for j in range(self.cols):
                if j == k or not A[k][j]:
                    continue
                c = A[k][j] // pv
                for i in range(self.rows):
                    A[i][j] = (A[i][j] - c * A[i][k]) % pn
                for i in range(self.cols):
                    R[i][j] = (R[i][j] - c * R[i][k]) % pn
            exps.append(v)
            k += 1
        self.exps = exps
        self.L = L
        self.R = R

    def solve(self, b):
        """One solution of A x = b, or None."""
        p, n, pn = self.p, self.n, self.pn
        Lb = [sum(c * x for c, x in zip(row, b)) % pn for row in self.L]
        y = [0] * self.cols
        for i in range(self.rows):
            if i < len(self.exps):
                e = self.exps[i]
                if e >= n:
                    if Lb[i] % pn:
                        return None
                    continue
                pe = p ** e
                if Lb[i] % pe:
                    return None
                y[i] = Lb[i] // pe
            elif Lb[i] % pn:
                return None
        return [sum(rr * yy for rr, yy in zip(row, y)) % pn for row in self.R]

    def kernel_generators(self):
        p, n, pn = self.p, self.n, self.pn
        gens = []
        for i in range(self.cols):
            e = self.exps[i] if i < len(self.exps) else n
            if e == 0:
                continue
            c = p ** (n - e)
            g = [(c * self.R[t][i]) % pn for t in range(self.cols)]
            if any(g):
                gens.append(g)
        return gens


def solve_linear_module(a_rows, b, p, n) -> SolutionModule:
    """Canonical solution module of A x = b over Z/p^n."""
    solver = IntSolver(a_rows, p, n)
    x = solver.solve(b)
    if x is None:
        return SolutionModule(False, [], [], p, n)
    basis = howell_form(solver.kernel_generators(), p, n)
    x = reduce_against_howell(x, basis, p, n)
    return SolutionModule(True, x, basis, p, n)


def reduce_against_howell(x, basis, p, n):
    """Canonical coset representative of x modulo a Howell-spanned module."""
    pn = p ** n
    x = [int(c) % pn for c in x]
    for row in basis:
        j = next(i for i, c in enumerate(row) if c)
        v = _ival(row[j], p, n)
        c = x[j] // p ** v
        if c:
            for t in range(len(x)):
                x[t] = (x[t] - c * row[t]) % pn
    return x


def in_howell_span(x, basis, p, n):
    return not any(reduce_against_howell(x, basis, p, n))


# -- truncated exponential ---------------------------------------------------


def _vp_factorial(i, p):
    v, pk = 0, p
    while pk <= i:
        v += i // pk
        pk *= p
    return v


def exp_trunc(X: Matrix) -> Matrix:
    """Sum of X^i / i!, exact at the ring's precision.

    Domain: p >= 3 with X in p*End; p = 2 with X in 4*End, or X in 2*End
    with X @ X = 0 at this precision (the square-zero part of the
    nilpotent case; the series is then 1 + X exactly).
    """
    ring = X.ring
    p, n = ring.p, ring.n
    if X.is_zero():
        return Matrix.identity(ring, X.rows)
    l = X.min_valuation()
    if p >= 3:
        if l < 1:
            raise OutsideExpDomain("need X in p*End for p >= 3")
    else:
        if l < 1:
            raise OutsideExpDomain("need X in 2*End")
        if l == 1:
            if not (X @ X).is_zero():
                raise OutsideExpDomain(
                    "p = 2 with valuation 1 needs a square-zero argument"
                )
            return Matrix.identity(ring, X.rows) + X
    l = int(l)
    # indices with a chance to contribute below p^n, via the crude bound
    # val(X^i / i!) >= i*l - (i-1)/(p-1)
    idxs = []
    i = 1
    while True:
        if i * l - (i - 1) // (p - 1) < n + 1:
            idxs.append(i)
            i += 1
        else:
            break
    extra = max(_vp_factorial(i, p) for i in idxs)
    big = make_witt_ring(p, ring.q, n + extra)
    XL = Matrix.from_flat_ints(big, X.rows, X.cols, X.flatten_ints())
    acc = Matrix.identity(big, X.rows)
    term = Matrix.identity(big, X.rows)
    fact_unit, fact_val = 1, 0
    for i in idxs:
        term = term @ XL
        fact_val += _vp_factorial(i, p) - _vp_factorial(i - 1, p)
        f = i
        while f % p == 0:
            f //= p
        fact_unit = (fact_unit * f) % big.pn
        contrib = term.divide_exact(fact_val).scale(pow(fact_unit, -1, big.pn))
        acc = acc + contrib
    return acc.reduce_to(ring)


def extract_congruence_digit(g: Matrix, l: int) -> Matrix:
    """z with g = 1 + p^l z exactly, for unit g congruent to 1 mod p^l."""
    diff = g - Matrix.identity(g.ring, g.rows)
    if not diff.is_zero() and diff.min_valuation() < l:
        raise ValueError(f"matrix is not congruent to 1 mod p^{l}")
    return diff.divide_exact(l)
