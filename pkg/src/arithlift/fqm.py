"""Discriminant groups d_k^{-1}L/L with Q/Z-valued quadratic forms, the
function space S_L, the Weil representation, the phi_{m,r} basis, and the
local Weil indices gamma_p.

Module elements are canonical coordinate tuples: rational coordinates of a
representative in the Z-basis of the underlying lattice, reduced mod 1 to
[0,1).  Orthogonal sums of modules are first-class (elements concatenate,
forms add); that carries the S_{S0} (x) S_Lambda factorization used by the
Eisenstein and L-function pipelines.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NotIntegral, NotOrthogonalSum
from .hermlat import HermitianLattice, RankOneSpec
from .quadfield import FracIdeal, QuadField

Frac = Fraction


def _canon(coords) -> tuple:
    return tuple(Frac(c) % 1 for c in coords)


class FiniteQuadraticModule:
    def __init__(self, field: QuadField, elements, qfunc, factors=None, lattice=None):
        self.field = field
        self.elements = sorted(elements)
        self.index = {el: i for i, el in enumerate(self.elements)}
        self._qfunc = qfunc
        self.factors = factors  # (M1, M2) when an orthogonal sum
        self.lattice = lattice
        self._qcache: dict = {}
        self._rsub: dict = {}

    # -- construction -----------------------------------------------------------

    @classmethod
    def from_lattice(cls, L: HermitianLattice) -> "FiniteQuadraticModule":
        if not L.is_integral():
            raise NotIntegral("discriminant module needs an integral lattice")
        dk = L.field.different_ideal()
        sup = L.r_inverse_superlattice(dk)
        gens = []
        for coords_idx in range(len(sup.z_basis())):
            kvec = sup.kvector_of_coords(
                [1 if i == coords_idx else 0 for i in range(len(sup.z_basis()))]
            )
            gens.append(_canon(L.coords_of_kvector(kvec)))
        elements = _closure(gens)

        def qfunc(el):
            return L.norm_of_coords(el) % 1

        return cls(L.field, elements, qfunc, lattice=L)

    @classmethod
    def orthogonal_sum(cls, M1: "FiniteQuadraticModule", M2: "FiniteQuadraticModule"):
        n1 = M1.coord_len()
        elements = [e1 + e2 for e1 in M1.elements for e2 in M2.elements]

        def qfunc(el):
            return (M1.Q(el[:n1]) + M2.Q(el[n1:])) % 1

        return cls(M1.field, elements, qfunc, factors=(M1, M2))

    # -- basics -------------------------------------------------------------------

    def coord_len(self) -> int:
        return len(self.elements[0]) if self.elements else 0

    def size(self) -> int:
        return len(self.elements)

    def zero(self) -> tuple:
        return tuple(Frac(0) for _ in range(self.coord_len()))

    def add(self, x, y) -> tuple:
        return tuple((a + b) % 1 for a, b in zip(x, y))

    def neg(self, x) -> tuple:
        return tuple((-a) % 1 for a in x)

    def smul(self, n, x) -> tuple:
        return tuple((n * a) % 1 for a in x)

    def reduce_coords(self, coords) -> tuple:
        return _canon(coords)

    def Q(self, el) -> Frac:
        el = _canon(el)
        if el not in self._qcache:
            self._qcache[el] = self._qfunc(el) % 1
        return self._qcache[el]

    def B(self, x, y) -> Frac:
        return (self.Q(self.add(x, y)) - self.Q(x) - self.Q(y)) % 1

    def order_of(self, el) -> int:
        n = 1
        for c in _canon(el):
            n = n * c.denominator // _gcd(n, c.denominator)
        return n

    def signature_key(self):
        if self.lattice is not None:
            return ("lattice", self.field.d, tuple(map(tuple, self.lattice.trace_half_gram())))
        return ("product", self.field.d, self.size())

    # -- p-primary structure --------------------------------------------------------

    def proj_p(self, el, p: int) -> tuple:
        """p-primary component of el (D squarefree, so exponent 1)."""
        n = self.order_of(el)
        if n % p:
            return self.zero()
        np_ = n // p
        # c = 1 mod p, 0 mod n/p
        if np_ == 1:
            c = 1
        else:
            c = np_ * pow(np_, -1, p)
        return self.smul(c, el)

    def supp(self, el) -> tuple:
        return tuple(
            p
            for p in self.field.prime_divisors_of_D
            if self.proj_p(el, p) != self.zero()
        )

    def q_mu(self, el) -> int:
        """Q_mu = product of p | D with nonzero p-component."""
        out = 1
        for p in self.supp(el):
            out *= p
        return out

    def qp_value(self, el, p: int) -> Frac:
        return self.Q(self.proj_p(el, p))

    def orbit_key(self, el):
        """Per-prime (support, local Q value) profile; a complete orbit
        invariant of the orthogonal group for rank-one modules."""
        out = []
        for p in self.field.prime_divisors_of_D:
            pr = self.proj_p(el, p)
            out.append(None if pr == self.zero() else self.qp_value(el, p))
        return tuple(out)

    # -- subgroups r^{-1}L/L ----------------------------------------------------------

    def r_subgroup(self, r_supp: tuple) -> frozenset:
        """Elements of r^{-1}L/L inside d^{-1}L/L, r = product of ramified
        primes over r_supp."""
        r_supp = tuple(sorted(r_supp))
        if r_supp in self._rsub:
            return self._rsub[r_supp]
        if self.factors is not None:
            M1, M2 = self.factors
            n1 = M1.coord_len()
            s1, s2 = M1.r_subgroup(r_supp), M2.r_subgroup(r_supp)
            out = frozenset(e1 + e2 for e1 in s1 for e2 in s2)
        elif self.lattice is not None:
            L = self.lattice
            r = L.field.ramified_product_ideal(r_supp)
            sup = L.r_inverse_superlattice(r)
            gens = []
            nb = len(sup.z_basis())
            for i in range(nb):
                kvec = sup.kvector_of_coords([1 if j == i else 0 for j in range(nb)])
                gens.append(_canon(L.coords_of_kvector(kvec)))
            out = frozenset(_closure(gens))
        else:
            raise NotOrthogonalSum("module lacks both lattice and product data")
        self._rsub[r_supp] = out
        return out


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _closure(gens):
    seen = {tuple(Frac(0) for _ in gens[0])} if gens else set()
    frontier = list(seen)
    gens = [_canon(g) for g in gens]
    while frontier:
        new = []
        for el in frontier:
            for g in gens:
                nxt = tuple((a + b) % 1 for a, b in zip(el, g))
                if nxt not in seen:
                    seen.add(nxt)
                    new.append(nxt)
        frontier = new
    return list(seen)


def discriminant_module(L: HermitianLattice) -> FiniteQuadraticModule:
    return FiniteQuadraticModule.from_lattice(L)


def rank_one_spec_module(s0: RankOneSpec) -> FiniteQuadraticModule:
    """Discriminant module of a rank-one adelic spec.

    The module only sees the local forms at p | D, so it is realized as the
    discriminant module of the honest lattice (O_k, c x ybar) where c is a
    positive integer with chi_{k,p}(c) = inv_p at every p | D."""
    c = s0.representing_scalar()
    L = HermitianLattice.rank1_principal(s0.field, scale=c)
    return FiniteQuadraticModule.from_lattice(L)


# ---------------------------------------------------------------------------
# functions on modules


@dataclass(frozen=True)
class SFunction:
    module: FiniteQuadraticModule
    values: tuple

    @classmethod
    def from_callable(cls, module, f) -> "SFunction":
        return cls(module, tuple(f(el) for el in module.elements))

    @classmethod
    def delta(cls, module, el) -> "SFunction":
        el = module.reduce_coords(el)
        return cls.from_callable(module, lambda x: 1 if x == el else 0)

    @classmethod
    def constant(cls, module, c=1) -> "SFunction":
        return cls.from_callable(module, lambda x: c)

    @classmethod
    def zero(cls, module) -> "SFunction":
        return cls.constant(module, 0)

    def value_at(self, el):
        return self.values[self.module.index[self.module.reduce_coords(el)]]

    def __add__(self, other):
        return SFunction(self.module, tuple(a + b for a, b in zip(self.values, other.values)))

    def __sub__(self, other):
        return SFunction(self.module, tuple(a - b for a, b in zip(self.values, other.values)))

    def __mul__(self, c):
        return SFunction(self.module, tuple(a * c for a in self.values))

    __rmul__ = __mul__

    def support_size(self) -> int:
        return sum(1 for v in self.values if v != 0)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def as_vector(self) -> np.ndarray:
        return np.array([complex(v) for v in self.values])

    def to_json(self):
        return {"values": [str(v) for v in self.values]}


def phi_basis(M: FiniteQuadraticModule, m, r_supp) -> SFunction:
    """phi_{m,r}: characteristic function of {x in r^{-1}L/L : Q(x) = m};
    identically zero iff m is not in N(r)^{-1} Z/Z."""
    m = Frac(m) % 1
    sub = M.r_subgroup(tuple(r_supp))
    return SFunction.from_callable(
        M, lambda el: 1 if (el in sub and M.Q(el) == m) else 0
    )


def phi_r(M: FiniteQuadraticModule, r_supp) -> SFunction:
    """Characteristic function of all of r^{-1}L/L."""
    sub = M.r_subgroup(tuple(r_supp))
    return SFunction.from_callable(M, lambda el: 1 if el in sub else 0)


def nonzero_phi_basis(M: FiniteQuadraticModule):
    """All distinct nonzero phi_{m,r} over r | d_k and m in N(r)^{-1}Z/Z."""
    k = M.field
    seen = {}
    for supp, r in k.r_ideal_divisors():
        nr = int(r.norm())
        for a in range(nr):
            m = Frac(a, nr)
            f = phi_basis(M, m, supp)
            if not f.is_zero() and f.values not in seen:
                seen[f.values] = (m, supp, f)
    return list(seen.values())


def transfer_invariant(phi: SFunction, target: FiniteQuadraticModule) -> SFunction:
    """Carry an orthogonal-group-invariant function between rank-one modules
    with isomorphic local forms, matching elements by orbit key."""
    src = phi.module
    table = {}
    for el in src.elements:
        key = src.orbit_key(el)
        val = phi.value_at(el)
        if key in table and table[key] != val:
            raise ValueError("function is not invariant; cannot transfer")
        table[key] = val
    return SFunction.from_callable(target, lambda el: table[target.orbit_key(el)])


# ---------------------------------------------------------------------------
# Weil representation


def _signature_mod8(M: FiniteQuadraticModule) -> int:
    if M.factors is not None:
        M1, M2 = M.factors
        return (_signature_mod8(M1) + _signature_mod8(M2)) % 8
    L = M.lattice
    S = np.array([[float(x) for x in row] for row in L.trace_half_gram()])
    eig = np.linalg.eigvalsh(S)
    bplus = int(np.sum(eig > 0))
    bminus = int(np.sum(eig < 0))
    return (bplus - bminus) % 8


def weil_generators(M: FiniteQuadraticModule):
    """Matrices (rho(T), rho(S)) of the Weil representation on S_M in the
    fixed element order: rho(T) = diag e(Q(mu)), rho(S) the finite Fourier
    transform normalized by e(-sig/8)/sqrt(|M|).

    They satisfy (rho(S) rho(T))^3 = rho(S)^2 and rho(S)^2 phi_mu =
    e(-sig/4) phi_{-mu}.
    """
    n = M.size()
    sig = _signature_mod8(M)
    T = np.zeros((n, n), dtype=complex)
    for i, el in enumerate(M.elements):
        q = M.Q(el)
        T[i, i] = np.exp(2j * np.pi * float(q))
    S = np.zeros((n, n), dtype=complex)
    root = np.exp(-2j * np.pi * sig / 8) / np.sqrt(n)
    for i, x in enumerate(M.elements):
        for j, y in enumerate(M.elements):
            b = M.B(x, y)
            S[i, j] = root * np.exp(-2j * np.pi * float(b))
    return T, S


def gamma_p(field: QuadField, n: int, inv_p: int, p: int) -> complex:
    """Local Weil index of a rank-n hermitian space with invariant inv_p at p:
    delta_p^{-n} chi_{k,p}(p)^n inv_p for p | D, else inv_p; delta_p = 1 or i
    as p = 1 or 3 mod 4."""
    if p in field.prime_divisors_of_D:
        delta = 1 if p % 4 == 1 else 1j
        return delta ** (-n) * field.chi_p(p, p) ** n * inv_p
    return complex(inv_p)


def gamma_Q(field: QuadField, n: int, inv_map, Q: int) -> complex:
    """Product of gamma_p over p | Q (Q a divisor of D)."""
    out = complex(1)
    for p in field.prime_divisors_of_D:
        if Q % p == 0:
            out *= gamma_p(field, n, inv_map(p) if callable(inv_map) else inv_map.get(p, 1), p)
    return out


def gamma_infinity(field: QuadField, n: int, inv_map) -> complex:
    """Convention: for an incoherent spec, gamma_infinity is defined so the
    full product over all places is -1."""
    prod = complex(1)
    for p in field.prime_divisors_of_D:
        v = inv_map(p) if callable(inv_map) else inv_map.get(p, 1)
        prod *= gamma_p(field, n, v, p)
    return -1 / prod


def restrict_to_sublattice(phi: SFunction, factor: int = 1) -> SFunction:
    """Pushforward S_{M1 (+) M2} -> S_{M_factor} along the inclusion of the
    factor: restriction of functions (the other coordinate set to 0)."""
    M = phi.module
    if M.factors is None:
        raise NotOrthogonalSum("restriction needs an orthogonal-sum module")
    M1, M2 = M.factors
    n1 = M1.coord_len()
    if factor == 1:
        z = M1.zero()
        return SFunction.from_callable(M2, lambda el: phi.value_at(z + el))
    z = M2.zero()
    return SFunction.from_callable(M1, lambda el: phi.value_at(el + z))


def lift_functional(w: SFunction, product_module: FiniteQuadraticModule, factor: int = 1) -> SFunction:
    """Dual map: a functional on the factor (stored as its value vector)
    becomes the functional on the sum supported where the other part is 0."""
    if product_module.factors is None:
        raise NotOrthogonalSum("lift needs an orthogonal-sum module")
    M1, M2 = product_module.factors
    n1 = M1.coord_len()
    if factor == 1:
        z1 = M1.zero()
        return SFunction.from_callable(
            product_module,
            lambda el: w.value_at(el[n1:]) if el[:n1] == z1 else 0,
        )
    z2 = M2.zero()
    return SFunction.from_callable(
        product_module,
        lambda el: w.value_at(el[:n1]) if el[n1:] == z2 else 0,
    )


def is_isotropic(M: FiniteQuadraticModule) -> bool:
    """True iff the module has an isotropic element of order D."""
    D = M.field.D
    return any(
        M.order_of(el) == D and M.Q(el) == 0 for el in M.elements
    )
