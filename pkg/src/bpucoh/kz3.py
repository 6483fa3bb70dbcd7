"""Chain-level model of K(Z,3) and its filtration spectral sequence.

The model is an acyclic differential graded algebra built from divided
power and exterior generators:

* ``u`` in degree 2 with divided powers gamma_j(u), the fiber part;
* odd generators ``b_{p,k}`` in degree 2 p^k + 1 for primes p and
  k >= 1, plus the degree-3 generator encoded here as ``b_{1,0}``;
* even generators ``a_{p,k}`` in degree 2 p^{k+1} + 2 with divided
  powers, for k >= 0.

The differential sends b_{p,k} to gamma_{p^k}(u) and a_{p,k} to
p b_{p,k+1} minus a correction tail whose integer coefficients come
from a fixed Bezout convention (``lambda_coeffs``); those coefficients
are exactly what makes the square of the differential vanish, which is
verified monomial by monomial whenever a complex is built.

Dualizing gives a cochain complex filtered by the degree of the
non-fiber tensor factor.  The spectral sequence of that filtration is
the cohomological Serre spectral sequence of the path fibration over
K(Z,3) from its second page on, and ``KPages`` computes any entry of
any page of it by exact integer linear algebra, with representative
lifts.  The named description of H^*(K(Z,3); Z) in degrees <= 14 (an
exterior class x1 and mod-p polynomial classes y_{p,k} subject to
x1^2 = y_{2,0}) is enumerated independently and cross-checked against
the complex.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

from .intlinalg import (
    AbelianGroup,
    NotPrimeError,
    QuotientPresentation,
    _is_prime,
    kernel_basis,
    mat_vec,
    matrix_from_columns,
    snf,
    solve,
    vector_order_in_lattice,
)

MAX_BUILD_DEGREE = 32


class DSquaredError(ValueError):
    """The differential failed to square to zero (bad coefficients)."""

    def __init__(self, monomial, value):
        self.monomial = monomial
        self.value = value
        super().__init__(f"d^2 != 0 on {mono_str(monomial)}: {value}")


class DegreeOutOfRange(ValueError):
    pass


# ---------------------------------------------------------------------------
# integer coefficient helpers


def lucas_binom(k, l, p):
    """C(k, l) mod p via the base-p digit product."""
    if not _is_prime(p):
        raise NotPrimeError(f"{p} is not prime")
    if k < 0 or l < 0:
        raise ValueError("nonnegative arguments required")
    out = 1
    while k or l:
        kr, lr = k % p, l % p
        out = (out * comb(kr, lr)) % p
        if out == 0:
            return 0
        k //= p
        l //= p
    return out


def bezout_coeffs(p, k, i):
    """Canonical integers (lam, mu) with p*lam + mu*C(p^{k+1}-1, p^i-1) = 1.

    mu is the minimal nonnegative solution, a convention fixed once so
    the whole model is reproducible.  The binomial coefficient is a
    unit mod p by Lucas, so the pair always exists.
    """
    if not _is_prime(p):
        raise NotPrimeError(f"{p} is not prime")
    if not (1 <= i <= k + 1):
        raise ValueError("need 1 <= i <= k+1")
    c = comb(p ** (k + 1) - 1, p ** i - 1)
    cc = c % p
    # minimal nonnegative mu with mu*c = 1 mod p
    mu = pow(cc, -1, p)
    lam = (1 - mu * c) // p
    return lam, mu


def lambda_coeffs(p, k):
    """The tail coefficients Lambda_0..Lambda_k for d(a_{p,k}).

    Lambda_0 is the product of all the lam_i (empty product 1 when
    k = 0), Lambda_i = mu_i * lam_{i+1} * ... * lam_k for middle i, and
    Lambda_k = mu_k.  Built from the canonical Bezout pairs.
    """
    if k == 0:
        return [1]
    lams = {}
    mus = {}
    for i in range(1, k + 1):
        lams[i], mus[i] = bezout_coeffs(p, k, i)
    out = []
    for i in range(0, k + 1):
        if i == 0:
            v = 1
            for j in range(1, k + 1):
                v *= lams[j]
        else:
            v = mus[i]
            for j in range(i + 1, k + 1):
                v *= lams[j]
        out.append(v)
    return out


# ---------------------------------------------------------------------------
# monomials and the differential
#
# A monomial is (ju, bs, aas): gamma_{ju}(u), a sorted tuple bs of odd
# generators (p, k) (with (1, 0) the degree-3 class), and a sorted tuple
# aas of ((p, k), j) for gamma_j(a_{p,k}).


def b_degree(p, k):
    return 2 * p**k + 1


def a_degree(p, k):
    return 2 * p ** (k + 1) + 2


def mono_degree(mono):
    ju, bs, aas = mono
    return (
        2 * ju
        + sum(b_degree(p, k) for p, k in bs)
        + sum(j * a_degree(p, k) for (p, k), j in aas)
    )


def mono_sdeg(mono):
    """Filtration degree: the non-fiber part of the total degree."""
    return mono_degree(mono) - 2 * mono[0]


def mono_str(mono):
    ju, bs, aas = mono
    bits = []
    if ju:
        bits.append(f"g{ju}(u)" if ju > 1 else "u")
    for p, k in bs:
        bits.append("b1" if (p, k) == (1, 0) else f"b[{p},{k}]")
    for (p, k), j in aas:
        base = f"a[{p},{k}]"
        bits.append(f"g{j}({base})" if j > 1 else base)
    return "*".join(bits) if bits else "1"


def mono_atoms(mono):
    ju, bs, aas = mono
    out = []
    if ju:
        out.append(("u", ju))
    for p, k in bs:
        out.append(("b", p, k))
    for (p, k), j in aas:
        out.append(("a", p, k, j))
    return out


def canonicalize(atoms):
    """Sort an atom word into a monomial, with the Koszul sign and the
    divided power binomial coefficients.  Returns (coeff, mono) or None
    when an odd generator repeats."""
    coeff = 1
    ju = 0
    odds = []
    apow = {}
    for atom in atoms:
        if atom[0] == "u":
            j = atom[1]
            if j:
                coeff *= comb(ju + j, j)
                ju += j
        elif atom[0] == "b":
            odds.append((atom[1], atom[2]))
        else:
            pk = (atom[1], atom[2])
            j = atom[3]
            if j:
                cur = apow.get(pk, 0)
                coeff *= comb(cur + j, j)
                apow[pk] = cur + j
    # insertion sort with transposition count
    sign = 1
    for i in range(1, len(odds)):
        j = i
        while j > 0 and odds[j - 1] > odds[j]:
            odds[j - 1], odds[j] = odds[j], odds[j - 1]
            sign = -sign
            j -= 1
    for x, y in zip(odds, odds[1:]):
        if x == y:
            return None
    mono = (ju, tuple(odds), tuple(sorted((pk, j) for pk, j in apow.items() if j)))
    return coeff * sign, mono


def _d_atom(atom, lam_fn, drop_u_terms=False):
    """Differential of a single atom as a list of (coeff, word)."""
    if atom[0] == "u":
        return []
    if atom[0] == "b":
        if drop_u_terms:
            return []
        p, k = atom[1], atom[2]
        return [(1, [("u", p**k)])]
    p, k, j = atom[1], atom[2], atom[3]
    prefix = [("a", p, k, j - 1)] if j > 1 else []
    lam = lam_fn(p, k)
    terms = [(p, prefix + [("b", p, k + 1)])]
    if not drop_u_terms:
        terms.append((-lam[0], prefix + [("b", 1, 0), ("u", p ** (k + 1) - 1)]))
        for i in range(1, k + 1):
            terms.append((-lam[i], prefix + [("b", p, i), ("u", p ** (k + 1) - p**i)]))
    return terms


def d_mono(mono, lam_fn, drop_u_terms=False):
    """Differential of a monomial as a dict monomial -> coefficient."""
    atoms = mono_atoms(mono)
    out = {}
    odd_before = 0
    for idx, atom in enumerate(atoms):
        sign = -1 if odd_before % 2 else 1
        for c, datoms in _d_atom(atom, lam_fn, drop_u_terms):
            word = atoms[:idx] + datoms + atoms[idx + 1 :]
            r = canonicalize(word)
            if r is not None:
                cc, m = r
                v = out.get(m, 0) + sign * c * cc
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        if atom[0] == "b":
            odd_before += 1
    return out


def primes_up_to_model(budget):
    """Primes contributing generators of degree <= budget."""
    out = []
    p = 2
    while 2 * p + 1 <= budget:
        if _is_prime(p):
            out.append(p)
        p += 1
    return out


def enumerate_monomials(budget, with_u=True):
    """All monomials of total degree <= budget, grouped by degree."""
    gens = []
    if 3 <= budget:
        gens.append(("b", 1, 0))
    for p in primes_up_to_model(budget):
        k = 1
        while b_degree(p, k) <= budget:
            gens.append(("b", p, k))
            k += 1
        k = 0
        while a_degree(p, k) <= budget:
            gens.append(("a", p, k))
            k += 1
    by_degree = {m: [] for m in range(budget + 1)}

    def rec(i, deg, bs, aas):
        if i == len(gens):
            if with_u:
                for ju in range(0, (budget - deg) // 2 + 1):
                    mono = (ju, tuple(bs), tuple(aas))
                    by_degree[deg + 2 * ju].append(mono)
            else:
                by_degree[deg].append((0, tuple(bs), tuple(aas)))
            return
        g = gens[i]
        rec(i + 1, deg, bs, aas)
        if g[0] == "b":
            d = b_degree(g[1], g[2])
            if deg + d <= budget:
                rec(i + 1, deg + d, bs + [(g[1], g[2])], aas)
        else:
            d = a_degree(g[1], g[2])
            j = 1
            while deg + j * d <= budget:
                rec(i + 1, deg + j * d, bs, aas + [((g[1], g[2]), j)])
                j += 1

    rec(0, 0, [], [])
    for m in by_degree:
        by_degree[m] = sorted(by_degree[m])
    return by_degree


class M3Complex:
    """The acyclic chain model, truncated at a maximal total degree.

    The basis is complete through degree ``max_degree + 1`` and the
    differential is assembled degree by degree; d^2 = 0 is checked on
    every basis element unless ``check_d2`` is disabled (the negative
    control in the tests does exactly that to watch the failure mode).
    """

    def __init__(self, max_degree, lam_fn=None, check_d2=True):
        if max_degree > MAX_BUILD_DEGREE:
            raise DegreeOutOfRange(f"max_degree {max_degree} > {MAX_BUILD_DEGREE}")
        self.max_degree = max_degree
        self.lam_fn = lam_fn or (lambda p, k: lambda_coeffs(p, k))
        budget = max_degree + 1
        self.basis = enumerate_monomials(budget)
        self.budget = budget
        self.index = {
            mono: i for m in self.basis for i, mono in enumerate(self.basis[m])
        }
        self.dmat = {}
        self.dcols = {}
        for m in range(1, budget + 1):
            src = self.basis.get(m, [])
            tgt = self.basis.get(m - 1, [])
            tix = {mono: i for i, mono in enumerate(tgt)}
            M = [[0] * len(src) for _ in tgt]
            cols = []
            for j, mono in enumerate(src):
                dm = d_mono(mono, self.lam_fn)
                cols.append(dm)
                for mm, c in dm.items():
                    M[tix[mm]][j] = c
            self.dmat[m] = M
            self.dcols[m] = cols
        if check_d2:
            self.check_d_squared()

    def dim(self, m):
        return len(self.basis.get(m, []))

    def check_d_squared(self):
        for m in range(2, self.budget + 1):
            for mono in self.basis.get(m, []):
                acc = {}
                for mm, c in self.dcols[m][self.index[mono]].items():
                    for mmm, cc in self.dcols[m - 1][self.index[mm]].items():
                        v = acc.get(mmm, 0) + c * cc
                        if v:
                            acc[mmm] = v
                        else:
                            acc.pop(mmm, None)
                if acc:
                    raise DSquaredError(mono, {mono_str(k): v for k, v in acc.items()})

    def homology(self, m):
        """H_m as (group, lifts) inside the degree-m basis."""
        dim_m = self.dim(m)
        if m == 0:
            ker = [[1 if i == j else 0 for i in range(dim_m)] for j in range(dim_m)]
        else:
            ker = kernel_basis(self.dmat[m], ncols=dim_m)
        img = []
        if m + 1 <= self.budget:
            M = self.dmat.get(m + 1)
            if M and self.dim(m + 1):
                img = [[row[j] for row in M] for j in range(self.dim(m + 1))]
        q = QuotientPresentation(ker, img, dim_m)
        return q.group, q.lifts


def build_m3(max_degree, lam_fn=None):
    """Build the chain model; raises DSquaredError on bad coefficients."""
    return M3Complex(max_degree, lam_fn=lam_fn, check_d2=True)


@dataclass
class AcyclicityReport:
    max_degree: int
    nonzero: list  # (degree, AbelianGroup) for failures in 1..D-1
    h0: AbelianGroup

    @property
    def ok(self):
        return not self.nonzero and self.h0 == AbelianGroup(1)


def verify_acyclic(max_degree, lam_fn=None):
    cx = M3Complex(max_degree, lam_fn=lam_fn, check_d2=True)
    bad = []
    h0, _ = cx.homology(0)
    for m in range(1, max_degree):
        g, _ = cx.homology(m)
        if not g.is_trivial:
            bad.append((m, g))
    return AcyclicityReport(max_degree, bad, h0)


# ---------------------------------------------------------------------------
# named description of H^*(K(Z,3); Z) in degrees <= 14

K_NAME_RANGE = 14


@dataclass(frozen=True)
class KClass:
    """A named generator of H^s(K(Z,3); Z), s <= 14.

    ``eps`` is the exterior x1 exponent, ``ymono`` a tuple of
    ((p, k), e) factors of y_{p,k} classes, all with the same p.  The
    order is 0 (infinite) for the classes 1 and x1, else p.
    """

    eps: int
    ymono: tuple

    @property
    def degree(self):
        return 3 * self.eps + sum(e * a_degree(p, k) for (p, k), e in self.ymono)

    @property
    def order(self):
        if not self.ymono:
            return 0
        return self.ymono[0][0][0]

    @property
    def name(self):
        bits = []
        if self.eps:
            bits.append("x1")
        for (p, k), e in self.ymono:
            s = f"y_{{{p},{k}}}"
            bits.append(s + (f"^{e}" if e > 1 else ""))
        return "*".join(bits) if bits else "1"

    def mult_x1(self):
        """The product x1 * self in the ring, or None when it is zero."""
        if self.eps == 0:
            return KClass(1, self.ymono)
        # x1^2 = y_{2,0}; a 2-class times a p-class dies for p odd
        if self.ymono and self.ymono[0][0][0] != 2:
            return None
        d = dict(self.ymono)
        d[(2, 0)] = d.get((2, 0), 0) + 1
        return KClass(0, tuple(sorted(d.items())))


def _y_generators(limit):
    out = []
    for p in primes_up_to_model(limit):
        k = 0
        while a_degree(p, k) <= limit:
            out.append((p, k))
            k += 1
    return out


def enumerate_k_classes(s):
    """Monomial basis of H^s(K(Z,3); Z) per the degree <= 14 picture."""
    if not (0 <= s <= K_NAME_RANGE):
        raise DegreeOutOfRange(f"names are only valid through degree {K_NAME_RANGE}")
    gens = _y_generators(K_NAME_RANGE)
    out = []

    def rec(i, deg, mono, prime):
        if deg > s:
            return
        if i == len(gens):
            for eps in (0, 1):
                if deg + 3 * eps == s:
                    out.append(KClass(eps, tuple(sorted(mono))))
            return
        rec(i + 1, deg, mono, prime)
        p, k = gens[i]
        if prime is None or p == prime:
            e = 1
            while deg + e * a_degree(p, k) <= s:
                rec(i + 1, deg + e * a_degree(p, k), mono + [((p, k), e)], p)
                e += 1

    rec(0, 0, [], None)
    return sorted(out, key=lambda c: (c.order, c.name))


def k_cohomology(s, cross_check=True):
    """(group, classes) for H^s(K(Z,3); Z), checked against the model.

    The independent check computes the cohomology of the dual of the
    non-fiber part of the chain model by Smith normal form and compares
    group structures.
    """
    classes = enumerate_k_classes(s)
    group = AbelianGroup.from_factors(0, [c.order for c in classes])
    if cross_check:
        model = _a3_dual_cohomology(s)
        if model != group:
            raise AssertionError(
                f"H^{s}: enumeration {group} disagrees with the chain model {model}"
            )
    return group, classes


@lru_cache(maxsize=None)
def _a3_basis(budget):
    return enumerate_monomials(budget, with_u=False)


def _a3_dmat(budget, m):
    """Matrix of the dualized non-fiber differential W^m -> W^{m+1}."""
    basis = _a3_basis(budget)
    src = basis.get(m, [])
    tgt = basis.get(m + 1, [])
    six = {mono: i for i, mono in enumerate(src)}
    lam = lambda p, k: lambda_coeffs(p, k)
    M = [[0] * len(src) for _ in tgt]
    for i, mono in enumerate(tgt):
        for mm, c in d_mono(mono, lam, drop_u_terms=True).items():
            M[i][six[mm]] = c
    return M


@lru_cache(maxsize=None)
def _a3_dual_cohomology(s):
    budget = K_NAME_RANGE + 1
    basis = _a3_basis(budget)
    dim_s = len(basis.get(s, []))
    ker = kernel_basis(_a3_dmat(budget, s), ncols=dim_s)
    img = []
    if s >= 1:
        M = _a3_dmat(budget, s - 1)
        img = [[row[j] for row in M] for j in range(len(basis.get(s - 1, [])))]
    q = QuotientPresentation(ker, img, dim_s)
    return q.group


# ---------------------------------------------------------------------------
# the filtration spectral sequence of the dual complex


class KPages:
    """Pages of the spectral sequence of the filtered dual complex.

    Entries E_r^{s,t} are subquotients of the degree s+t cochain
    lattice, computed from the standard two-lattice formula; the
    engine-facing helpers answer, for an E_2 element z, which multiple
    of z survives to page r, what the order of its class is, and where
    d_r sends it, all by exact integer lattice arithmetic.
    """

    def __init__(self, max_degree=15):
        self.cx = M3Complex(max_degree)
        self.max_degree = max_degree
        self._svals = {}
        self._dW = {}
        self._zcache = {}
        self._encache = {}
        self._dencache = {}

    def wdim(self, m):
        return self.cx.dim(m)

    def wbasis(self, m):
        return self.cx.basis.get(m, [])

    def svals(self, m):
        if m not in self._svals:
            self._svals[m] = [mono_sdeg(mono) for mono in self.wbasis(m)]
        return self._svals[m]

    def dW(self, m):
        """Coboundary W^m -> W^{m+1}: the transpose of the chain map."""
        if m not in self._dW:
            M = self.cx.dmat.get(m + 1)
            tgt = self.wdim(m + 1)
            src = self.wdim(m)
            if not M:
                self._dW[m] = [[0] * src for _ in range(tgt)]
            else:
                self._dW[m] = [[M[j][i] for j in range(src)] for i in range(tgt)]
        return self._dW[m]

    def _zlat(self, s_from, s_to, m):
        """{x in F^{s_from} W^m : dx in F^{s_to}} as ambient vectors."""
        key = (s_from, s_to, m)
        if key in self._zcache:
            return self._zcache[key]
        if m < 0 or m > self.max_degree:
            self._zcache[key] = []
            return []
        sv = self.svals(m)
        src_idx = [i for i, s in enumerate(sv) if s >= s_from]
        svt = self.svals(m + 1)
        row_idx = [i for i, s in enumerate(svt) if s < s_to]
        D = self.dW(m)
        A = [[D[i][j] for j in src_idx] for i in row_idx]
        ker = kernel_basis(A, ncols=len(src_idx))
        out = []
        for v in ker:
            w = [0] * self.wdim(m)
            for x, j in zip(v, src_idx):
                w[j] = x
            out.append(w)
        self._zcache[key] = out
        return out

    def zr(self, r, s, t):
        return self._zlat(s, s + r, s + t)

    def _den(self, r, s, t):
        """Denominator lattice of E_r^{s,t}."""
        key = (r, s, t)
        if key in self._dencache:
            return self._dencache[key]
        m = s + t
        out = [v for v in self._zlat(s + 1, s + r, m)]
        D = self.dW(m - 1) if m >= 1 else None
        for x in self._zlat(s - r + 1, s, m - 1):
            out.append(mat_vec(D, x))
        self._dencache[key] = out
        return out

    def entry(self, r, s, t):
        """E_r^{s,t} as a QuotientPresentation of cochain lattices."""
        key = (r, s, t)
        if key not in self._encache:
            num = self.zr(r, s, t)
            den = self._den(r, s, t)
            self._encache[key] = QuotientPresentation(num, den, self.wdim(s + t))
        return self._encache[key]

    # -- engine-facing helpers ------------------------------------------

    def class_lift(self, kclass):
        """Cochain vector representing a named class in E_2^{s,0}."""
        s = kclass.degree
        ent = self.entry(2, s, 0)
        targets = [c for c in enumerate_k_classes(s)]
        orders = [c.order for c in targets]
        assert sorted(orders) == sorted(ent.orders), (orders, ent.orders)
        # orders are pairwise distinct per degree in this range
        assert len(set(orders)) == len(orders)
        pos = [i for i, o in enumerate(ent.orders) if o == kclass.order]
        assert len(pos) == 1
        return ent.lifts[pos[0]]

    def shift_by_v(self, vec, s, j):
        """Tensor a pure-filtration-s vector in W^s with gamma_j(u)."""
        basis = self.wbasis(s)
        out = [0] * self.wdim(s + 2 * j)
        tix = self.cx.index
        for i, c in enumerate(vec):
            if c:
                ju, bs, aas = basis[i]
                assert ju == 0
                out[tix[(j, bs, aas)]] = c
        return out

    def element_vector(self, kclass, j):
        """Vector of v^j * xi for a named class xi."""
        return self.shift_by_v(self.class_lift(kclass), kclass.degree, j)

    def min_surviving_multiple(self, vec, s, t, r):
        """Least mu >= 1 with mu*[vec] surviving to page r; 0 if none."""
        gens = self.zr(r, s, t) + self._den(2, s, t)
        return vector_order_in_lattice(vec, gens, self.wdim(s + t))

    def page_representative(self, vec, s, t, r):
        """Split vec = zhat + boundary with zhat in Z_r, or None."""
        zr = self.zr(r, s, t)
        den = self._den(2, s, t)
        N = self.wdim(s + t)
        if not zr and not den:
            return None if any(vec) else [0] * N
        A = matrix_from_columns(zr + den, N)
        x = solve(A, vec, ncols=len(zr) + len(den))
        if x is None:
            return None
        zhat = [0] * N
        for c, v in zip(x[: len(zr)], zr):
            for i in range(N):
                zhat[i] += c * v[i]
        return zhat

    def class_order(self, vec, s, t, r):
        """Order of [vec] in E_r^{s,t} (0 = infinite); vec must survive."""
        zhat = self.page_representative(vec, s, t, r)
        if zhat is None:
            raise ValueError("class does not survive to this page")
        return self.entry(r, s, t).element_order(zhat)

    def dr(self, vec, s, t, r):
        """d_r of the page-r class of vec, as a target cochain vector."""
        zhat = self.page_representative(vec, s, t, r)
        if zhat is None:
            raise ValueError("class does not survive to this page")
        return mat_vec(self.dW(s + t), zhat)

    def express_in_named(self, vec, s, t, r):
        """Write a Z_r-vector at (s, t) as named coefficients.

        Returns a list of (KClass, j, coeff) with j = t/2, well defined
        modulo the page denominator."""
        assert t % 2 == 0
        j = t // 2
        named = enumerate_k_classes(s)
        lifts = [self.element_vector(c, j) for c in named]
        den = self._den(r, s, t)
        N = self.wdim(s + t)
        A = matrix_from_columns(lifts + den, N)
        x = solve(A, vec, ncols=len(lifts) + len(den))
        if x is None:
            raise ValueError("vector not expressible in the named basis")
        return [(c, j, coeff) for c, coeff in zip(named, x[: len(lifts)]) if coeff]

    def subquotient_entry(self, r, s, t):
        """Spec-facing view of one page entry."""
        from .intlinalg import Subquotient

        ent = self.entry(r, s, t)
        return Subquotient(
            ambient_rank=self.wdim(s + t),
            kernel_basis=self.zr(r, s, t),
            image_basis=self._den(r, s, t),
            structure=ent.group,
            representative_lifts=ent.lifts,
        )


_kpages_cache = {}


def k_pages(max_degree=15):
    """Shared KPages instance (the model is expensive to rebuild)."""
    if max_degree not in _kpages_cache:
        _kpages_cache[max_degree] = KPages(max_degree)
    return _kpages_cache[max_degree]
