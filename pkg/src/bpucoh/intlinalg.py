"""Exact linear algebra over the integers.

Everything in this module works with plain Python ints (arbitrary
precision) and matrices stored as lists of rows.  The Smith normal form
routine tracks the unimodular transforms on both sides, which is what
the rest of the package uses to compute kernels, cokernels and
subquotients of finitely generated abelian groups, with explicit
representative lifts for every cyclic summand.

Conventions:

* a "vector" is a list of ints; a "matrix" is a list of row lists;
* collections of lattice generators are passed as lists of vectors,
  interpreted as column generators inside the ambient ``Z^m``;
* torsion order 0 means infinite order throughout.
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple


class ContainmentError(ValueError):
    """Raised when a lattice is not contained where it must be."""


class NotPrimeError(ValueError):
    pass


def xgcd(a, b):
    """Return (g, x, y) with g = gcd(a,b) >= 0 and x*a + y*b = g."""
    x, nx = 1, 0
    y, ny = 0, 1
    g, ng = a, b
    while ng:
        q = g // ng
        x, nx = nx, x - q * nx
        y, ny = ny, y - q * ny
        g, ng = ng, g - q * ng
    if g < 0:
        x, y, g = -x, -y, -g
    return g, x, y


def identity_matrix(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(A, B):
    if not A or not B:
        return [[0] * (len(B[0]) if B else 0) for _ in A]
    n, k, m = len(A), len(B), len(B[0])
    C = [[0] * m for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        Ci = C[i]
        for t in range(k):
            a = Ai[t]
            if a:
                Bt = B[t]
                for j in range(m):
                    Ci[j] += a * Bt[j]
    return C


def mat_vec(A, v):
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def transpose(A, ncols=None):
    if not A:
        return [[] for _ in range(ncols)] if ncols else []
    return [list(col) for col in zip(*A)]


def matrix_from_columns(cols, ambient):
    """Assemble an ambient x len(cols) matrix from column vectors."""
    A = [[0] * len(cols) for _ in range(ambient)]
    for j, c in enumerate(cols):
        assert len(c) == ambient
        for i, x in enumerate(c):
            A[i][j] = x
    return A


def columns(A):
    return [list(col) for col in zip(*A)] if A else []


class SNFResult(NamedTuple):
    """U * A * V = S with U, V unimodular and S in Smith normal form."""

    U: list
    S: list
    V: list
    Uinv: list
    Vinv: list

    @property
    def diagonal(self):
        S = self.S
        n = min(len(S), len(S[0]) if S else 0)
        return [S[i][i] for i in range(n)]


def _row_op(M, i, j, a, b, c, d):
    # rows (i, j) <- (a*row_i + b*row_j, c*row_i + d*row_j)
    Mi, Mj = M[i], M[j]
    for t in range(len(Mi)):
        x, y = Mi[t], Mj[t]
        Mi[t] = a * x + b * y
        Mj[t] = c * x + d * y


def _col_op(M, i, j, a, b, c, d):
    # cols (i, j) <- (a*col_i + b*col_j, c*col_i + d*col_j)
    for row in M:
        x, y = row[i], row[j]
        row[i] = a * x + b * y
        row[j] = c * x + d * y


def snf(A, ncols=None):
    """Smith normal form with transforms.

    Returns SNFResult(U, S, V, Uinv, Vinv) with U*A*V = S, S diagonal
    with nonnegative entries d1 | d2 | ... and trailing zeros.  Pivots
    are chosen by minimal absolute value, which keeps intermediate
    entries small in practice.  Empty matrices are fine; pass ``ncols``
    when A has zero rows.
    """
    m = len(A)
    n = ncols if ncols is not None else (len(A[0]) if m else 0)
    for row in A:
        if len(row) != n:
            raise ValueError("ragged matrix")
    S = [list(row) for row in A]
    U, Uinv = identity_matrix(m), identity_matrix(m)
    V, Vinv = identity_matrix(n), identity_matrix(n)

    def rowop(i, j, a, b, c, d):
        # (a d - b c) = +-1; Uinv gets the inverse op on columns
        _row_op(S, i, j, a, b, c, d)
        _row_op(U, i, j, a, b, c, d)
        det = a * d - b * c
        _col_op(Uinv, i, j, det * d, -det * c, -det * b, det * a)

    def colop(i, j, a, b, c, d):
        _col_op(S, i, j, a, b, c, d)
        _col_op(V, i, j, a, b, c, d)
        det = a * d - b * c
        _row_op(Vinv, i, j, det * d, -det * c, -det * b, det * a)

    t = 0
    while True:
        piv = None
        best = None
        for i in range(t, m):
            Si = S[i]
            for j in range(t, n):
                v = Si[j]
                if v and (best is None or abs(v) < best):
                    best = abs(v)
                    piv = (i, j)
        if piv is None:
            break
        i0, j0 = piv
        if i0 != t:
            rowop(t, i0, 0, 1, 1, 0)
        if j0 != t:
            colop(t, j0, 0, 1, 1, 0)
        while True:
            for i in range(t + 1, m):
                b = S[i][t]
                if b:
                    a = S[t][t]
                    if b % a == 0:
                        rowop(t, i, 1, 0, -(b // a), 1)
                    else:
                        g, x, y = xgcd(a, b)
                        rowop(t, i, x, y, -(b // g), a // g)
            for j in range(t + 1, n):
                b = S[t][j]
                if b:
                    a = S[t][t]
                    if b % a == 0:
                        colop(t, j, 1, 0, -(b // a), 1)
                    else:
                        g, x, y = xgcd(a, b)
                        colop(t, j, x, y, -(b // g), a // g)
            # gcd col ops may have re-dirtied column t; loop until clean
            if all(S[i][t] == 0 for i in range(t + 1, m)) and all(
                S[t][j] == 0 for j in range(t + 1, n)
            ):
                break
        if S[t][t] < 0:
            for j in range(n):
                S[t][j] = -S[t][j]
            for j in range(m):
                U[t][j] = -U[t][j]
            for i in range(m):
                Uinv[i][t] = -Uinv[i][t]
        t += 1

    # enforce the divisibility chain d_i | d_{i+1}
    r = t
    changed = True
    while changed:
        changed = False
        for i in range(r - 1):
            a, b = S[i][i], S[i + 1][i + 1]
            if a and b % a != 0:
                g, x, y = xgcd(a, b)
                l = (a // g) * b
                # block transform sending diag(a, b) to diag(g, lcm)
                rowop(i, i + 1, x, y, -(b // g), a // g)
                colop(i, i + 1, 1, 1, -(y * b) // g, (x * a) // g)
                assert S[i][i] == g and S[i + 1][i + 1] == l
                assert S[i][i + 1] == 0 and S[i + 1][i] == 0
                changed = True
    return SNFResult(U, S, V, Uinv, Vinv)


def kernel_basis(A, ncols=None):
    """Basis of the integer kernel of A, as a list of column vectors."""
    m = len(A)
    n = ncols if ncols is not None else (len(A[0]) if m else 0)
    res = snf(A, ncols=n)
    diag = res.diagonal
    rank = sum(1 for d in diag if d)
    return [[res.V[i][j] for i in range(n)] for j in range(rank, n)]


def solve(A, b, ncols=None):
    """One integer solution x of A x = b, or None."""
    m = len(A)
    n = ncols if ncols is not None else (len(A[0]) if m else 0)
    res = snf(A, ncols=n)
    c = mat_vec(res.U, b)
    diag = res.diagonal
    y = [0] * n
    for i in range(m):
        d = diag[i] if i < len(diag) else 0
        if d:
            if c[i] % d:
                return None
            y[i] = c[i] // d
        elif c[i]:
            return None
    return mat_vec(res.V, y)


def lattice_basis(vectors, ambient):
    """Reduce column generators to a lattice basis (list of vectors)."""
    if not vectors:
        return []
    A = matrix_from_columns(vectors, ambient)
    res = snf(A)
    B = mat_mul(res.Uinv, res.S)
    diag = res.diagonal
    return [[B[i][j] for i in range(ambient)] for j in range(len(diag)) if diag[j]]


@dataclass(frozen=True)
class AbelianGroup:
    """A finitely generated abelian group in invariant-factor form.

    ``torsion`` is the tuple (d1, ..., dk) with 2 <= d1 | d2 | ... | dk.
    Two groups are isomorphic iff the fields are equal, so ``==`` is
    isomorphism.
    """

    free_rank: int
    torsion: Tuple[int, ...] = ()

    def __post_init__(self):
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a:
                raise ValueError("invariant factors must form a chain")
        if any(d < 2 for d in self.torsion):
            raise ValueError("invariant factors must be >= 2")

    @staticmethod
    def from_factors(free_rank, factors):
        """Build from arbitrary cyclic orders (0 = infinite, 1 dropped)."""
        free = free_rank + sum(1 for d in factors if d == 0)
        tor = [d for d in factors if d > 1]
        # invariant-factor merge via prime-power bookkeeping
        primary = {}
        for d in tor:
            dd = abs(d)
            p = 2
            while dd > 1:
                if dd % p == 0:
                    e = 0
                    while dd % p == 0:
                        dd //= p
                        e += 1
                    primary.setdefault(p, []).append(e)
                p += 1 if p == 2 else 2
        k = max((len(v) for v in primary.values()), default=0)
        invs = []
        for i in range(k):
            d = 1
            for p, es in primary.items():
                es_sorted = sorted(es, reverse=True)
                if i < len(es_sorted):
                    d *= p ** es_sorted[i]
            invs.append(d)
        return AbelianGroup(free, tuple(sorted(invs)))

    @property
    def is_trivial(self):
        return self.free_rank == 0 and not self.torsion

    def primary_decomposition(self):
        """Torsion as a sorted list of prime powers, paper style."""
        parts = []
        for d in self.torsion:
            dd = d
            p = 2
            while dd > 1:
                if dd % p == 0:
                    q = 1
                    while dd % p == 0:
                        dd //= p
                        q *= p
                    parts.append(q)
                p += 1 if p == 2 else 2
        return sorted(parts)

    def localize(self, p):
        if not _is_prime(p):
            raise NotPrimeError(f"{p} is not prime")
        tor = []
        for d in self.torsion:
            q = 1
            while d % p == 0:
                d //= p
                q *= p
            if q > 1:
                tor.append(q)
        return AbelianGroup(self.free_rank, tuple(sorted(tor)))

    def direct_sum(self, other):
        return AbelianGroup.from_factors(
            self.free_rank + other.free_rank, list(self.torsion) + list(other.torsion)
        )

    def __str__(self):
        if self.is_trivial:
            return "0"
        parts = ["Z"] * self.free_rank + [f"Z/{q}" for q in self.primary_decomposition()]
        return " + ".join(parts)


def _is_prime(p):
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


class QuotientPresentation:
    """The quotient L_num / L_den of two lattices in Z^ambient.

    Requires L_den <= L_num.  Exposes the group structure, one
    representative lift per cyclic summand (torsion lifts first, then
    free lifts), and coordinates of arbitrary lattice elements in the
    quotient, which is what the spectral sequence bookkeeping consumes.
    """

    def __init__(self, num_vectors, den_vectors, ambient):
        self.ambient = ambient
        basis = lattice_basis(num_vectors, ambient)
        self.basis = basis
        r = len(basis)
        B = matrix_from_columns(basis, ambient)
        self._B = B
        self._Bsnf = snf(B, ncols=r)
        Y = []
        for v in den_vectors:
            y = self._solve_basis(v)
            if y is None:
                raise ContainmentError("denominator lattice not inside numerator")
            Y.append(y)
        Ymat = matrix_from_columns(Y, r)
        ysnf = snf(Ymat, ncols=len(Y))
        self._U = ysnf.U  # numerator coords -> quotient coords
        diag = ysnf.diagonal
        rank_y = sum(1 for d in diag if d)
        lift_mat = mat_mul(B, ysnf.Uinv) if r else []
        orders = []
        lifts = []
        for i in range(r):
            d = diag[i] if i < len(diag) else 0
            if d == 1:
                continue
            orders.append(d)
            lifts.append([lift_mat[t][i] for t in range(ambient)])
        # sort: torsion by increasing order (SNF already ascending), free last
        tor = [(d, l) for d, l in zip(orders, lifts) if d]
        fre = [(d, l) for d, l in zip(orders, lifts) if d == 0]
        self.orders = [d for d, _ in tor] + [0 for _ in fre]
        self.lifts = [l for _, l in tor] + [l for _, l in fre]
        self.group = AbelianGroup.from_factors(0, self.orders)
        self._perm = None  # quotient coord index per summand
        idx_tor = [i for i in range(r) if 0 < (diag[i] if i < len(diag) else 0) != 1]
        idx_fre = [i for i in range(r) if (diag[i] if i < len(diag) else 0) == 0]
        self._coord_idx = idx_tor + idx_fre
        self._diag = [diag[i] if i < len(diag) else 0 for i in range(r)]

    def _solve_basis(self, v):
        # solve B y = v using the cached SNF of B
        res = self._Bsnf
        c = mat_vec(res.U, v)
        diag = res.diagonal
        y = [0] * len(self.basis)
        for i in range(len(c)):
            d = diag[i] if i < len(diag) else 0
            if d:
                if c[i] % d:
                    return None
                y[i] = c[i] // d
            elif c[i]:
                return None
        return mat_vec(res.V, y)

    def coords(self, v):
        """Coordinates of [v] per summand (reduced mod orders), or None
        if v is not in the numerator lattice."""
        y = self._solve_basis(v)
        if y is None:
            return None
        z = mat_vec(self._U, y) if self.basis else []
        out = []
        for pos, i in enumerate(self._coord_idx):
            d = self.orders[pos]
            out.append(z[i] % d if d else z[i])
        return out

    def is_zero(self, v):
        c = self.coords(v)
        if c is None:
            raise ContainmentError("vector not in numerator lattice")
        return all(x == 0 for x in c)

    def element_order(self, v):
        """Order of [v]; 0 means infinite."""
        c = self.coords(v)
        if c is None:
            raise ContainmentError("vector not in numerator lattice")
        m = 1
        for x, d in zip(c, self.orders):
            if d == 0:
                if x:
                    return 0
            elif x:
                dd = d // _gcd(d, x)
                m = m * dd // _gcd(m, dd)
        return m


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def quotient_with_lifts(num_vectors, den_vectors, ambient):
    q = QuotientPresentation(num_vectors, den_vectors, ambient)
    return q.group, q.lifts


def cokernel(A, nrows=None):
    """Structure of Z^rows / column span of A."""
    m = nrows if nrows is not None else len(A)
    if m == 0:
        return AbelianGroup(0)
    ncols = len(A[0]) if A else 0
    if ncols == 0:
        return AbelianGroup(m)
    diag = snf(A).diagonal
    factors = list(diag) + [0] * (m - len(diag))
    return AbelianGroup.from_factors(0, factors)


def vector_order_in_lattice(v, vectors, ambient):
    """Smallest m >= 1 with m*v in the given lattice; 0 if none."""
    if not vectors:
        return 0 if any(v) else 1
    A = matrix_from_columns(vectors, ambient)
    res = snf(A)
    c = mat_vec(res.U, v)
    diag = res.diagonal
    m = 1
    for i in range(ambient):
        d = diag[i] if i < len(diag) else 0
        if d:
            dd = d // _gcd(d, c[i])
            m = m * dd // _gcd(m, dd)
        elif c[i]:
            return 0
    return m


@dataclass
class Subquotient:
    """kernel lattice / image lattice inside Z^ambient_rank."""

    ambient_rank: int
    kernel_basis: List[List[int]]
    image_basis: List[List[int]]
    structure: AbelianGroup
    representative_lifts: List[List[int]]


def subquotient(kernel_vectors, image_vectors, ambient_rank):
    """Build the subquotient with explicit generator lifts.

    Raises ContainmentError when the image lattice is not inside the
    kernel lattice, which in this package always signals an engine bug
    (a differential failed to square to zero).
    """
    q = QuotientPresentation(kernel_vectors, image_vectors, ambient_rank)
    return Subquotient(
        ambient_rank=ambient_rank,
        kernel_basis=[list(v) for v in kernel_vectors],
        image_basis=[list(v) for v in image_vectors],
        structure=q.group,
        representative_lifts=q.lifts,
    )


def localize(group, p):
    """p-localization: keep the free rank and the p-primary torsion."""
    return group.localize(p)
