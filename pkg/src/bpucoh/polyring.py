"""Graded polynomial algebra in Chern and torus variables.

Two variable kinds over the same exact-integer coefficient arithmetic:

* ``chern``: variables c_1..c_n with deg c_i = 2i;
* ``torus``: variables v_1..v_n with deg v_i = 2.

Polynomials are dicts from exponent tuples (length n) to nonzero int
coefficients.  The splitting map sends c_k to the k-th elementary
symmetric polynomial in the v_i; its one-sided inverse rewrites a
symmetric torus polynomial back in the c_k by repeatedly stripping the
graded-lex leading term (Gauss's algorithm).  The formal divergence is
the sum of the partial derivatives d/dv_i, and ``kernel_decompose``
rewrites a torus polynomial as sum theta_i * v_pivot^i with every
theta_i a polynomial in the differences v_j - v_pivot, hence killed by
the divergence.
"""

from dataclasses import dataclass
from math import comb

MAX_VARS = 64


class OddDegreeError(ValueError):
    pass


class NotSymmetricError(ValueError):
    pass


@dataclass(frozen=True)
class Poly:
    """Homogeneous polynomial with exact integer coefficients."""

    kind: str  # "chern" or "torus"
    n: int
    terms: tuple  # sorted tuple of (exponent tuple, coeff)

    def __post_init__(self):
        assert self.kind in ("chern", "torus")
        if self.n > MAX_VARS:
            raise ValueError("too many variables")

    @staticmethod
    def make(kind, n, term_map):
        terms = tuple(sorted((e, c) for e, c in term_map.items() if c))
        return Poly(kind, n, terms)

    @property
    def term_map(self):
        return dict(self.terms)

    def is_zero(self):
        return not self.terms

    def degree(self):
        """Topological degree; None for the zero polynomial."""
        if not self.terms:
            return None
        degs = {mono_degree(self.kind, e) for e, _ in self.terms}
        assert len(degs) == 1, "not homogeneous"
        return degs.pop()

    def __add__(self, other):
        assert (self.kind, self.n) == (other.kind, other.n)
        out = self.term_map
        for e, c in other.terms:
            out[e] = out.get(e, 0) + c
        return Poly.make(self.kind, self.n, out)

    def __neg__(self):
        return Poly(self.kind, self.n, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k):
        if k == 0:
            return Poly(self.kind, self.n, ())
        return Poly(self.kind, self.n, tuple((e, k * c) for e, c in self.terms))

    def __mul__(self, other):
        assert (self.kind, self.n) == (other.kind, other.n)
        out = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly.make(self.kind, self.n, out)

    def map_coeffs(self, f):
        return Poly.make(self.kind, self.n, {e: f(c) for e, c in self.terms})

    def content(self):
        g = 0
        for _, c in self.terms:
            g = _gcd(g, c)
        return g

    def __str__(self):
        if not self.terms:
            return "0"
        sym = "c" if self.kind == "chern" else "v"
        bits = []
        for e, c in sorted(self.terms, key=lambda t: t[0], reverse=True):
            mono = "*".join(
                f"{sym}{i+1}" + (f"^{k}" if k > 1 else "")
                for i, k in enumerate(e)
                if k
            )
            bits.append(f"{c}" + ("*" + mono if mono else ""))
        return " + ".join(bits)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def mono_degree(kind, e):
    if kind == "chern":
        return 2 * sum((i + 1) * k for i, k in enumerate(e))
    return 2 * sum(e)


def zero(kind, n):
    return Poly(kind, n, ())


def one(kind, n):
    return Poly(kind, n, (((0,) * n, 1),))


def monomial(kind, n, e, c=1):
    return Poly.make(kind, n, {tuple(e): c})


def chern_basis(n, t):
    """All Chern monomials of topological degree t, graded-lex order.

    The order is lexicographically decreasing on exponent tuples, fixed
    once so every matrix in the package uses the same bases.
    """
    if t < 0 or t % 2:
        raise OddDegreeError(f"degree {t} is not even and nonnegative")
    half = t // 2
    out = []

    def rec(i, remaining, exps):
        if i == n:
            if remaining == 0:
                out.append(tuple(exps))
            return
        w = i + 1
        for k in range(remaining // w, -1, -1):
            exps.append(k)
            rec(i + 1, remaining - w * k, exps)
            exps.pop()

    rec(0, half, [])
    return sorted(out, reverse=True)


_esym_cache = {}


def elementary_symmetric(n, k):
    """sigma_k(v_1..v_n) as a torus polynomial."""
    key = (n, k)
    if key not in _esym_cache:
        if k < 0 or k > n:
            _esym_cache[key] = zero("torus", n)
        else:
            out = {}
            for comb_ix in _combinations(n, k):
                e = [0] * n
                for i in comb_ix:
                    e[i] = 1
                out[tuple(e)] = 1
            _esym_cache[key] = Poly.make("torus", n, out)
    return _esym_cache[key]


def _combinations(n, k):
    import itertools

    return itertools.combinations(range(n), k)


_split_cache = {}


def split_monomial(n, e):
    """splitting_map of a single Chern monomial."""
    key = (n, tuple(e))
    if key not in _split_cache:
        p = one("torus", n)
        for i, k in enumerate(e):
            s = elementary_symmetric(n, i + 1)
            for _ in range(k):
                p = p * s
        _split_cache[key] = p
    return _split_cache[key]


def splitting_map(f):
    """Substitute c_k -> sigma_k(v_1..v_n)."""
    assert f.kind == "chern"
    out = zero("torus", f.n)
    for e, c in f.terms:
        out = out + split_monomial(f.n, e).scale(c)
    return out


def symmetrize_back(g):
    """Inverse of the splitting map on symmetric polynomials.

    Repeatedly strips the graded-lex leading monomial; a symmetric
    polynomial always has a partition-shaped leading exponent, and the
    matching product of elementary symmetric polynomials has the same
    leading term with coefficient one.  Raises NotSymmetricError when
    the input is not symmetric.
    """
    assert g.kind == "torus"
    n = g.n
    rest = g
    out = {}
    while not rest.is_zero():
        e, c = max(rest.terms, key=lambda t: t[0])
        if any(e[i] < e[i + 1] for i in range(n - 1)):
            raise NotSymmetricError(f"leading monomial {e} is not partition shaped")
        ce = tuple(e[i] - (e[i + 1] if i + 1 < n else 0) for i in range(n))
        out[ce] = out.get(ce, 0) + c
        rest = rest - split_monomial(n, ce).scale(c)
    return Poly.make("chern", n, out)


def divergence(g):
    """Formal divergence sum_i d/dv_i; drops degree by 2."""
    assert g.kind == "torus"
    out = {}
    for e, c in g.terms:
        for i, k in enumerate(e):
            if k:
                e2 = list(e)
                e2[i] -= 1
                e2 = tuple(e2)
                out[e2] = out.get(e2, 0) + c * k
    return Poly.make("torus", g.n, out)


def chern_divergence(f):
    """The divergence computed on the Chern side.

    Uses that the divergence is a derivation sending sigma_k to
    (n - k + 1) sigma_{k-1}; cross-checked against the torus-side
    composite in the tests.
    """
    assert f.kind == "chern"
    n = f.n
    out = {}
    for e, c in f.terms:
        for i, k in enumerate(e):
            if not k:
                continue
            coeff = c * k * (n - (i + 1) + 1)
            e2 = list(e)
            e2[i] -= 1
            if i >= 1:
                e2[i - 1] += 1
                out[tuple(e2)] = out.get(tuple(e2), 0) + coeff
            else:
                # d(c_1) = n, a constant multiple
                out[tuple(e2)] = out.get(tuple(e2), 0) + coeff
    return Poly.make("chern", n, out)


def kernel_decompose(g, pivot=None):
    """Write g = sum_i theta_i * v_pivot^i with theta_i killed by the
    divergence.

    Returns a list of (i, theta_i) with theta_i a nonzero polynomial
    whose variable j stands for the difference v_{j+1} - v_pivot (its
    pivot exponent is always zero).  ``pivot`` is a 0-based variable
    index, default the last variable.
    """
    assert g.kind == "torus"
    n = g.n
    piv = n - 1 if pivot is None else pivot
    buckets = {}
    for e, c in g.terms:
        others = [(j, e[j]) for j in range(n) if j != piv]
        base = e[piv]

        def expand(idx, coeff, wexp, extra):
            if idx == len(others):
                i = base + extra
                key = tuple(wexp)
                d = buckets.setdefault(i, {})
                d[key] = d.get(key, 0) + coeff
                return
            j, k = others[idx]
            for a in range(k + 1):
                wexp[j] = a
                expand(idx + 1, coeff * comb(k, a), wexp, extra + (k - a))
                wexp[j] = 0

        expand(0, c, [0] * n, 0)
    out = []
    for i in sorted(buckets):
        p = Poly.make("torus", n, buckets[i])
        if not p.is_zero():
            out.append((i, p))
    return out


def expand_differences(theta, pivot=None):
    """Substitute variable j |-> v_{j+1} - v_pivot in a difference
    polynomial, returning an honest torus polynomial."""
    n = theta.n
    piv = n - 1 if pivot is None else pivot
    out = zero("torus", theta.n)
    for e, c in theta.terms:
        assert e[piv] == 0
        p = monomial("torus", n, (0,) * n, c)
        for j, k in enumerate(e):
            if k and j != piv:
                diff = Poly.make(
                    "torus",
                    n,
                    {
                        tuple(1 if t == j else 0 for t in range(n)): 1,
                        tuple(1 if t == piv else 0 for t in range(n)): -1,
                    },
                )
                for _ in range(k):
                    p = p * diff
        out = out + p
    return out


def reassemble_decomposition(pairs, n, pivot=None):
    """Inverse of kernel_decompose, for round-trip checks."""
    piv = n - 1 if pivot is None else pivot
    out = zero("torus", n)
    vp = monomial("torus", n, tuple(1 if t == piv else 0 for t in range(n)))
    for i, theta in pairs:
        p = expand_differences(theta, pivot=piv)
        for _ in range(i):
            p = p * vp
        out = out + p
    return out


def divergence_matrix(n, t_from, t_to):
    """Matrix of the divergence on symmetric polynomials.

    Bases are chern_basis(n, t_from) for columns and chern_basis(n, t_to)
    for rows; requires t_to == t_from - 2.  Computed by composing the
    splitting map, the torus divergence and symmetrize_back.
    """
    if t_to != t_from - 2:
        raise ValueError("divergence drops the degree by exactly 2")
    cols = chern_basis(n, t_from)
    rows = chern_basis(n, t_to) if t_to >= 0 else []
    row_index = {e: i for i, e in enumerate(rows)}
    M = [[0] * len(cols) for _ in rows]
    for j, e in enumerate(cols):
        img = symmetrize_back(divergence(split_monomial(n, e)))
        for e2, c in img.terms:
            M[row_index[e2]][j] = c
    return M
