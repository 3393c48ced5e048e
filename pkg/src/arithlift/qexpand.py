"""Truncated q-expansions with exponents in (1/D)Z and everything built on
them: theta series, E_2, theta operator and Serre derivative, pairings with
precision bookkeeping, regularized Petersson pairings, xi-images, boundary
multiplicities, the special function V_n, and the boundary Fourier expansion
of the automorphic Green function.

Precision semantics: a QExpansion stores every coefficient with exponent
below its prec bound (zeros may be omitted from the dict but are trusted);
binary operations propagate the correct joint bound.  Exact rational
coefficients stay exact until a float enters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import mpmath as mp
from sympy import divisors

from .errors import (
    DomainError,
    InsufficientPrecision,
    NotPositiveDefinite,
    OnSingularLocus,
    RankMismatch,
    UnsupportedPresentation,
)
from .fqm import FiniteQuadraticModule, SFunction, discriminant_module
from .hermlat import HermitianLattice, aut_size, lambda_twist

Frac = Fraction


def sigma1(m: int) -> Frac:
    """Divisor sum with the convention sigma1(0) = -1/24."""
    if m == 0:
        return Frac(-1, 24)
    return Frac(sum(divisors(int(m))))


# ---------------------------------------------------------------------------
# q-expansions


@dataclass
class QExpansion:
    weight: Frac
    kind: str  # 'scalar' | 'sfunc' | 'dual'
    coeffs: dict  # exponent (Fraction) -> coefficient
    prec: Frac
    module: FiniteQuadraticModule | None = None

    def __post_init__(self):
        self.weight = Frac(self.weight)
        self.prec = Frac(self.prec)
        self.coeffs = {Frac(m): c for m, c in self.coeffs.items() if Frac(m) < self.prec}

    def coefficient(self, m):
        m = Frac(m)
        if m >= self.prec:
            raise InsufficientPrecision(f"exponent {m} at or beyond precision {self.prec}")
        if m in self.coeffs:
            return self.coeffs[m]
        return self._zero_coeff()

    def _zero_coeff(self):
        if self.kind == "scalar":
            return Frac(0)
        return SFunction.zero(self.module)

    def min_exp(self) -> Frac:
        nz = [m for m, c in self.coeffs.items() if not _is_zero(c)]
        return min(nz) if nz else Frac(0)

    def __add__(self, other: "QExpansion") -> "QExpansion":
        if self.kind != other.kind or self.weight != other.weight:
            raise ValueError("mismatched expansions")
        prec = min(self.prec, other.prec)
        out = {}
        for m in set(self.coeffs) | set(other.coeffs):
            if m < prec:
                a = self.coeffs.get(m)
                b = other.coeffs.get(m)
                if a is None:
                    out[m] = b
                elif b is None:
                    out[m] = a
                else:
                    out[m] = a + b
        return QExpansion(self.weight, self.kind, out, prec, self.module)

    def scale(self, c) -> "QExpansion":
        return QExpansion(
            self.weight,
            self.kind,
            {m: v * c for m, v in self.coeffs.items()},
            self.prec,
            self.module,
        )

    def multiply_scalar_series(self, other: "QExpansion") -> "QExpansion":
        """Cauchy product with a scalar-coefficient series."""
        if other.kind != "scalar":
            raise ValueError("right factor must be scalar-valued")
        m1, m2 = self.min_exp(), other.min_exp()
        prec = min(self.prec + m2, other.prec + m1)
        out: dict = {}
        for a, ca in self.coeffs.items():
            if _is_zero(ca):
                continue
            for b, cb in other.coeffs.items():
                if _is_zero(cb):
                    continue
                t = a + b
                if t < prec:
                    term = ca * cb
                    out[t] = out[t] + term if t in out else term
        return QExpansion(self.weight + other.weight, self.kind, out, prec, self.module)


def _is_zero(c) -> bool:
    if isinstance(c, SFunction):
        return c.is_zero()
    return c == 0


def theta_operator(g: QExpansion) -> QExpansion:
    """Ramanujan theta operator q d/dq; raises weight by 2."""
    return QExpansion(
        g.weight + 2,
        g.kind,
        {m: c * m if isinstance(c, SFunction) else m * c for m, c in g.coeffs.items()},
        g.prec,
        g.module,
    )


def e2(prec) -> QExpansion:
    """E_2 = 1 - 24 sum sigma_1(m) q^m (constant term from sigma1(0) = -1/24)."""
    prec = Frac(prec)
    coeffs = {}
    m = 0
    while Frac(m) < prec:
        coeffs[Frac(m)] = -24 * sigma1(m)
        m += 1
    return QExpansion(Frac(2), "scalar", coeffs, prec)


def serre_derivative(g: QExpansion, k=None) -> QExpansion:
    """theta(g) - (k/12) g E_2; holomorphic of weight k + 2."""
    if k is None:
        k = g.weight
    k = Frac(k)
    t = theta_operator(g)
    corr = g.multiply_scalar_series(e2(g.prec - g.min_exp() + 1)).scale(-k / 12)
    # align precisions
    prec = min(t.prec, corr.prec)
    t.prec, corr.prec = prec, prec
    t.coeffs = {m: c for m, c in t.coeffs.items() if m < prec}
    corr.coeffs = {m: c for m, c in corr.coeffs.items() if m < prec}
    return t + corr


def pair_values(phi: SFunction, w: SFunction):
    """Tautological C-bilinear pairing of an S_M element and a functional,
    both stored as value vectors in the fixed element order."""
    return sum(a * b for a, b in zip(phi.values, w.values))


def pairing(f: QExpansion, g: QExpansion) -> QExpansion:
    """{f, g}: Cauchy product pairing an sfunc-valued and a dual-valued
    series into a scalar series."""
    if {f.kind, g.kind} != {"sfunc", "dual"}:
        raise ValueError("pairing needs one sfunc-valued and one dual-valued series")
    m1, m2 = f.min_exp(), g.min_exp()
    prec = min(f.prec + m2, g.prec + m1)
    out: dict = {}
    for a, ca in f.coeffs.items():
        if _is_zero(ca):
            continue
        for b, cb in g.coeffs.items():
            if _is_zero(cb):
                continue
            t = a + b
            if t < prec:
                term = pair_values(ca, cb) if f.kind == "sfunc" else pair_values(cb, ca)
                out[t] = out.get(t, 0) + term
    return QExpansion(f.weight + g.weight, "scalar", out, prec)


def constant_term(h: QExpansion):
    """CT[h]; demands the precision window to cover exponent 0."""
    if h.prec <= 0:
        raise InsufficientPrecision("constant term not covered by precision window")
    return h.coefficient(0)


# ---------------------------------------------------------------------------
# theta series


def theta_series(L: HermitianLattice, prec, budget: int = 10**8) -> QExpansion:
    """theta_L as a dual-valued expansion of weight rank(L): the coefficient
    at m is the functional phi -> R_L(m, phi) (sum over lambda in d^{-1}L of
    norm m), stored as its value vector over the discriminant module."""
    if not L.is_positive_definite():
        raise NotPositiveDefinite("theta series needs a definite lattice")
    prec = Frac(prec)
    module = discriminant_module(L)
    dk = L.field.different_ideal()
    sup = L.r_inverse_superlattice(dk)
    buckets: dict = {}
    for coords, val in sup.vectors_up_to(prec, budget=budget):
        if val >= prec:
            continue
        kvec = sup.kvector_of_coords(coords)
        el = module.reduce_coords(L.coords_of_kvector(kvec))
        key = (val, el)
        buckets[key] = buckets.get(key, 0) + 1
    coeffs: dict = {}
    zero_vec = [0] * module.size()
    for (val, el), count in buckets.items():
        if val not in coeffs:
            coeffs[val] = zero_vec[:]
        coeffs[val][module.index[el]] += count
    out = {
        m: SFunction(module, tuple(Frac(x) for x in vec)) for m, vec in coeffs.items()
    }
    return QExpansion(Frac(L.rank), "dual", out, prec, module)


def scalar_theta(L: HermitianLattice, prec, budget: int = 10**8) -> QExpansion:
    """sum_{x in L} q^{<x,x>}; integer exponents."""
    if not L.is_positive_definite():
        raise NotPositiveDefinite("theta series needs a definite lattice")
    prec = Frac(prec)
    coeffs: dict = {}
    for _, val in L.vectors_up_to(prec, budget=budget):
        if val < prec:
            coeffs[val] = coeffs.get(val, Frac(0)) + 1
    m = Frac(0)
    while m < prec:
        coeffs.setdefault(m, Frac(0))
        m += 1
    return QExpansion(Frac(L.rank), "scalar", coeffs, prec)


def eta_theta(L: HermitianLattice, eta_values, prec) -> QExpansion:
    """Genus theta sum_h eta(h)/|Aut(L_h)| theta^sc_{L_h} over the class
    group orbit; eta_values maps IdealClassRep -> scalar character value."""
    if L.scales is None:
        raise UnsupportedPresentation("eta twisting needs an ideal-diagonal lattice")
    field = L.field
    prec = Frac(prec)
    total = None
    for rep in field.ideal_class_reps():
        Lh = lambda_twist(L, rep)
        w = eta_values(rep) if callable(eta_values) else eta_values[rep]
        if isinstance(w, int):
            w = Frac(w)
        piece = scalar_theta(Lh, prec).scale(w / aut_size(Lh))
        total = piece if total is None else total + piece
    return total


# ---------------------------------------------------------------------------
# harmonic Maass form data


@dataclass
class HarmonicFormData:
    """Coefficient data of a harmonic Maass form of weight 2 - n: holomorphic
    stream c_plus (finite principal part, exponents < prec known) and
    non-holomorphic stream c_minus on negative exponents."""

    n: int
    module: FiniteQuadraticModule | None
    c_plus: dict  # exponent -> SFunction (or scalar when module is None)
    c_minus: dict
    prec: Frac
    delta_invariant: bool = True

    def __post_init__(self):
        self.prec = Frac(self.prec)
        self.c_plus = {Frac(m): c for m, c in self.c_plus.items()}
        self.c_minus = {Frac(m): c for m, c in self.c_minus.items()}
        for m in self.c_minus:
            if m >= 0:
                raise ValueError("c_minus lives on negative exponents")
        if self.module is not None:
            for stream in (self.c_plus, self.c_minus):
                for m, c in stream.items():
                    for el in self.module.elements:
                        if c.value_at(el) != c.value_at(self.module.neg(el)):
                            raise ValueError("coefficients must satisfy c(m, mu) = c(m, -mu)")

    @property
    def weight(self) -> Frac:
        return Frac(2 - self.n)

    def plus_part(self) -> QExpansion:
        kind = "scalar" if self.module is None else "sfunc"
        return QExpansion(self.weight, kind, dict(self.c_plus), self.prec, self.module)

    def principal_depth(self) -> Frac:
        neg = [m for m, c in self.c_plus.items() if m < 0 and not _is_zero(c)]
        return -min(neg) if neg else Frac(0)

    def c_plus_at(self, m, mu=None):
        m = Frac(m)
        c = self.c_plus.get(m)
        if c is None:
            return 0 if self.module is None else SFunction.zero(self.module)
        if mu is None:
            return c
        return c.value_at(mu)

    @classmethod
    def from_json(cls, obj: dict, module: FiniteQuadraticModule | None):
        n = int(obj["n"])
        D = None if module is None else module.field.D
        cp: dict = {}
        cm: dict = {}
        for row in obj["coeffs"]:
            m = Frac(row["m"])
            if D is not None and (m * D).denominator != 1:
                raise ValueError(f"exponent {m} has denominator not dividing {D}")
            if module is None:
                if row.get("c_plus", 0):
                    cp[m] = cp.get(m, 0) + Frac(row["c_plus"])
                if row.get("c_minus", 0):
                    cm[m] = cm.get(m, 0) + Frac(row["c_minus"])
                continue
            mu = tuple(Frac(int(j), D) for j in row["mu"])
            mu = module.reduce_coords(mu)
            for key, store in (("c_plus", cp), ("c_minus", cm)):
                v = row.get(key, 0)
                if v:
                    delta = SFunction.delta(module, mu)
                    if module.neg(mu) != mu:
                        delta = delta + SFunction.delta(module, module.neg(mu))
                    add = delta * Frac(v)
                    store[m] = store[m] + add if m in store else add
        prec = Frac(obj.get("prec", max([m for m in cp], default=0) + 1))
        return cls(
            n=n,
            module=module,
            c_plus=cp,
            c_minus=cm,
            prec=prec,
            delta_invariant=bool(obj.get("delta_invariant", True)),
        )


def xi_image(f: HarmonicFormData) -> QExpansion:
    """xi_{2-n}(f): cusp form of weight n for the conjugate representation;
    coefficient at m > 0 is (4 pi m)^{n-1} conj(c_minus(-m))."""
    out: dict = {}
    prec = -min(f.c_minus, default=Frac(0)) + 1 if f.c_minus else Frac(1)
    for m, c in f.c_minus.items():
        mm = -m
        fac = (4 * math.pi * float(mm)) ** (f.n - 1)
        if f.module is None:
            out[mm] = fac * complex(c).conjugate()
        else:
            out[mm] = SFunction(
                f.module, tuple(fac * complex(v).conjugate() for v in c.values)
            )
    kind = "scalar" if f.module is None else "sfunc"
    return QExpansion(Frac(f.n), kind, out, prec, f.module)


# ---------------------------------------------------------------------------
# regularized Petersson pairings and boundary multiplicities


def reg_pairing_over_4pi(f: HarmonicFormData, g: QExpansion):
    """(f, g)^reg / (4 pi), exact when the inputs are exact.

    For k = n - 2 > 0 this is (1/k) sum_{m>0} m {c+(-m), b(m)}; for k = 0 it
    is CT[{f+, g E_2}]/12.
    """
    k = -f.weight
    if k < 0:
        raise ValueError("regularized pairing needs weight <= 0 input")
    depth = f.principal_depth()
    if k > 0:
        if g.prec <= depth:
            raise InsufficientPrecision("g does not cover the principal part")
        total = 0
        for m, c in f.c_plus.items():
            if m < 0:
                mm = -m
                if f.module is None:
                    total += mm * c * g.coefficient(mm)
                else:
                    total += mm * pair_values(c, g.coefficient(mm))
        return total / k
    # k = 0: g is a constant form
    gconst = g.coefficient(0)
    total = 0
    for m, c in f.c_plus.items():
        if m <= 0 and m.denominator == 1:
            val = c * gconst if f.module is None else pair_values(c, gconst)
            total += -2 * sigma1(int(-m)) * val
    return total


def reg_pairing(f: HarmonicFormData, g: QExpansion) -> float:
    """(f, g)^reg as a number."""
    return float(4 * mp.pi * mp.mpf(_to_frac(reg_pairing_over_4pi(f, g))))


def _to_frac(x):
    return Frac(x) if not isinstance(x, float) else Frac.from_float(x)


def boundary_mult(
    f_D: HarmonicFormData,
    E_lattice: HermitianLattice | None,
    r_width,
    Na0,
    n: int | None = None,
):
    """Boundary multiplicity r Phi^D(f_D) / (4 pi N(a0)) as an exact rational.

    f_D is the induced form on the rank n-2 boundary lattice (pass
    module=None scalar data when n = 2 and the lattice is trivial).
    """
    if n is None:
        n = f_D.n
    r_width, Na0 = Frac(r_width), Frac(Na0)
    if n == 2:
        if E_lattice is not None and E_lattice.rank != 0:
            raise RankMismatch("n = 2 boundary lattice must be trivial")
        total = 0
        for m, c in f_D.c_plus.items():
            if m <= 0 and m.denominator == 1:
                total += -2 * sigma1(int(-m)) * c
        return r_width / Na0 * total
    if E_lattice is None or E_lattice.rank != n - 2:
        raise RankMismatch(f"boundary lattice must have rank {n - 2}")
    depth = f_D.principal_depth()
    theta = theta_series(E_lattice, depth + 1)
    total = 0
    for m, c in f_D.c_plus.items():
        if m < 0:
            total += (-m) * pair_values(c, theta.coefficient(-m))
    return r_width / Na0 * total / (n - 2)


def boundary_mult_simple(m, r_norm: int, E_lattice: HermitianLattice | None, n: int):
    """The simplified multiplicity for f = f_{m,r}: m N(r)/(n-2) times the
    count of lambda in r^{-1}E of norm m (n > 2), or -2 N(r) sigma1(m) for
    n = 2 and integral m (0 otherwise)."""
    from .hermlat import rep_number

    m = Frac(m)
    if n == 2:
        if m.denominator != 1:
            return Frac(0)
        return -2 * r_norm * sigma1(int(m))
    supp = [p for p in E_lattice.field.prime_divisors_of_D if r_norm % p == 0]
    r_ideal = E_lattice.field.ramified_product_ideal(supp)
    return m * r_norm / (n - 2) * rep_number(E_lattice, m, r_ideal)


# ---------------------------------------------------------------------------
# the special function V_n


def _half_bessel_k(r: int, z):
    """K_{r - 1/2}(z) for integer r >= 0 via the finite closed form."""
    nu = abs(r * 2 - 1) // 2  # K_{r-1/2} = K_{|r-1/2|}; order n + 1/2 with n = nu
    z = mp.mpf(z)
    pref = mp.sqrt(mp.pi / (2 * z)) * mp.exp(-z)
    total = mp.mpf(0)
    for k in range(nu + 1):
        total += (
            mp.factorial(nu + k)
            / (mp.factorial(k) * mp.factorial(nu - k))
            / (2 * z) ** k
        )
    return pref * total


def special_V(n: int, A, B, method: str = "closed", dps: int = 25):
    """V_n(A, B) = int_0^infty Gamma(n-1, A^2 y) e^{-B^2 y - 1/y} y^{-3/2} dy.

    method 'closed' uses 2 (n-2)! sum_r A^{2r}/r! (A^2+B^2)^{1/4 - r/2}
    K_{r-1/2}(2 sqrt(A^2+B^2)) with the half-integer Bessel closed form;
    'quadrature' integrates the definition; 'both' returns a pair.
    """
    if n < 2:
        raise DomainError("V_n needs n >= 2")
    A, B = float(A), float(B)
    if A < 0 or B < 0:
        raise DomainError("V_n is defined for nonnegative A, B")
    if A == 0 and B == 0:
        raise DomainError("V_n undefined at (0, 0)")
    if method == "both":
        return (
            special_V(n, A, B, "closed", dps),
            special_V(n, A, B, "quadrature", dps),
        )
    with mp.workdps(dps):
        if method == "quadrature":
            a2, b2 = mp.mpf(A) ** 2, mp.mpf(B) ** 2

            def integrand(y):
                return (
                    mp.gammainc(n - 1, a2 * y)
                    * mp.exp(-b2 * y - 1 / y)
                    * y ** mp.mpf("-1.5")
                )

            return mp.quad(integrand, [0, 1, mp.inf])
        s = mp.sqrt(mp.mpf(A) ** 2 + mp.mpf(B) ** 2)
        total = mp.mpf(0)
        for r in range(n - 1):
            if A == 0 and r > 0:
                break
            term = (
                (mp.mpf(A) ** (2 * r)) / mp.factorial(r)
                * s ** (mp.mpf("0.5") - r)
                * _half_bessel_k(r, 2 * s)
            )
            total += term
        return 2 * mp.factorial(n - 2) * total


# ---------------------------------------------------------------------------
# Green function Fourier expansion at the boundary


class GreenBoundaryData:
    """Concrete boundary model L = E (+) O_k l (+) O_k l~ with <l, l~> = 1,
    l and l~ isotropic, E positive definite self-dual of rank n - 2.

    In this model a0 = O_k (width r = N(a0) = 1), N = <L, l>_Q = Z, and
    l' = omega0 l~ with tr(omega0) = 1.  Points are (z, tau) with z in
    E (x) C and tau in H, subject to 2 sqrt(D) Im(tau) > <z, z>.
    """

    def __init__(self, E: HermitianLattice | None, field=None):
        if E is not None:
            field = E.field
        self.field = field
        self.E = E
        self.rank_e = 0 if E is None else E.rank
        self.n = self.rank_e + 2

    # K' = d^{-1}E (+) Z (sqrt(d) l~ / D) (+) Z (omega l / D); we store K'
    # elements as (e_coords in d^{-1}E z-basis, s, t) with the lift
    # lambda = e + (s/D) sqrt(d) l~ + (t/D) omega l.

    def _e_sup(self):
        return self.E.r_inverse_superlattice(self.field.different_ideal())

    def herm_norm_kprime(self, e_coords, s: int, t: int) -> Frac:
        # <lambda, lambda> = Q_E(e) + 2 Re<(s/D) sqrt(d) l~, (t/D) omega l>
        k = self.field
        qe = self._e_sup().norm_of_coords(e_coords) if self.E is not None else Frac(0)
        # <sqrt(d) l~, omega l> = sqrt(d) conj(omega) <l~, l>= sqrt(d) conj(omega)
        sd = (Frac(k.d), Frac(2))  # sqrt(d) = 2*omega - d
        om = (Frac(0), Frac(1))
        cross = k.mul(sd, k.conj(om))
        val = qe + Frac(s * t, k.D**2) * k.trace(cross)
        return val

    def point_vector_pairing(self, zvec, tau, e_coords, s, t, dps=20):
        """<(z, tau), lambda> for the lift above; (z,tau) = z + tau sqrt(d) l + l~."""
        k = self.field
        with mp.workdps(dps):
            sd = mp.sqrt(k.D) * 1j
            om = (k.d + sd) / 2
            total = mp.mpc(0)
            if self.E is not None:
                sup = self._e_sup()
                kvec = sup.kvector_of_coords(e_coords)
                lam_e = [k.embed(x, dps=dps) for x in kvec]
                # <z, lam_e> over E's Gram
                for i in range(self.E.rank):
                    for j in range(self.E.rank):
                        gij = k.embed(self.E.gram[i][j], dps=dps)
                        total += zvec[i] * mp.conj(lam_e[j]) * gij
            # <tau sqrt(d) l, (t/D) omega l> = 0 (isotropic), cross terms:
            # <tau sqrt(d) l, (s/D) sqrt(d) l~> = tau sqrt(d) conj(s sqrt(d)/D) <l, l~>
            total += tau * sd * mp.conj(mp.mpf(s) / k.D * sd)
            # <l~, (t/D) omega l> = conj(t omega / D) <l~, l> = conj(t omega / D)
            total += mp.conj(mp.mpf(t) / k.D * om)
            return total

    def n_point(self, zvec, tau, dps=20):
        k = self.field
        with mp.workdps(dps):
            zz = mp.mpf(0)
            if self.E is not None:
                for i in range(self.E.rank):
                    for j in range(self.E.rank):
                        gij = k.embed(self.E.gram[i][j], dps=dps)
                        zz += mp.re(zvec[i] * mp.conj(zvec[j]) * gij)
            return 2 * mp.sqrt(k.D) * mp.im(tau) - zz


def green_fourier_value(
    f: HarmonicFormData,
    boundary: GreenBoundaryData,
    zvec,
    tau,
    trunc: int = 12,
    jmax: int = 40,
    dps: int = 20,
    sing_tol: float = 1e-12,
):
    """Value of the boundary Fourier expansion of the Green function at a
    point (z, tau) off the singular locus, in the model of GreenBoundaryData:

        Phi^D-part / (sqrt(2) |l_z|) + C_f + c+(0,0) log|l_z^2|
        - 2 sum_{lambda in K'\\0} c+(-q(lambda), nu) log(1 - e(...))
        + (2/sqrt(pi)) sum_{q(lambda)>0} c-(-q(lambda), nu) sum_j V_n(...)/j.

    Returns (value, tail_bound_estimate).  Best-effort numerics; the tail
    estimate comes from the exponential decay of the last included shells.
    """
    k = boundary.field
    n = boundary.n
    with mp.workdps(dps):
        npt = boundary.n_point(zvec, tau, dps=dps)
        if npt <= 0:
            raise DomainError("point outside the domain")
        lz2 = 2 / npt  # |l_z^2|
        lz = mp.sqrt(lz2)

        # Phi^D term: for this model r = N(a0) = 1 and the coefficient of
        # -log|q_r| in the expansion is r Phi^D/(2 pi N(a0)); here we compute
        # the value contribution (1/(sqrt 2 |l_z|)) Phi^K ~ leading term
        # (N(z,tau)/4 Im(a)) Phi^D with Im(a) = sqrt(D)/2.
        if boundary.E is not None:
            fD = _induce_to_e(f, boundary)
            theta_e = theta_series(boundary.E, fD.principal_depth() + 1)
            phi_d = float(4 * mp.pi * mp.mpf(reg_pairing_over_4pi(fD, theta_e)))
        else:
            fD = _induce_to_e(f, boundary)
            total0 = 0
            for m, c in fD.c_plus.items():
                if m <= 0 and m.denominator == 1:
                    total0 += -2 * sigma1(int(-m)) * c
            phi_d = float(4 * mp.pi * mp.mpf(total0))
        im_a = mp.sqrt(k.D) / 2
        value = npt / (4 * im_a) * phi_d

        c00 = _c_plus_00(f)
        value += c00 * mp.log(lz2)
        # C_f with N = 1: the a-sum is empty
        value += -c00 * (mp.log(2 * mp.pi) + mp.mpf(mp.diff(mp.gamma, 1)))

        # lattice sums over K'
        log_sum, v_sum, min_dist = _green_lattice_sums(
            f, boundary, zvec, tau, lz, trunc, jmax, dps
        )
        if min_dist is not None and min_dist < sing_tol:
            raise OnSingularLocus("point too close to the singular divisor")
        value += -2 * log_sum + 2 / mp.sqrt(mp.pi) * v_sum
        tail = mp.exp(-2 * mp.pi * trunc / float(lz)) * 10
        return value, float(tail)


def _c_plus_00(f: HarmonicFormData):
    c = f.c_plus.get(Frac(0))
    if c is None:
        return 0
    if f.module is None:
        return float(c)
    return float(c.value_at(f.module.zero()))


def _induce_to_e(f: HarmonicFormData, boundary: GreenBoundaryData) -> HarmonicFormData:
    """f_D: sum of f over the a-part cosets, at b-part = 0 (eq of Section on
    boundary growth); for the hyperbolic-pair model this is the sum over
    nu_a in d^{-1}a/a of f(nu_E + nu_a)."""
    M = f.module
    if M is None:
        return f
    if M.factors is None:
        raise UnsupportedPresentation("green evaluation needs a product module")
    ME, MH = M.factors
    n1 = ME.coord_len()
    # H-part elements with the l~ component zero: coords of the hyperbolic
    # module are in the z-basis of O l (+) O l~: first two coords = l-part.
    cp: dict = {}
    cm: dict = {}
    for stream_in, stream_out in ((f.c_plus, cp), (f.c_minus, cm)):
        for m, c in stream_in.items():
            vals = []
            for el in ME.elements:
                total = 0
                for h_el in MH.elements:
                    if h_el[2:] == (Frac(0), Frac(0)):
                        total += c.value_at(el + h_el)
                vals.append(total)
            sf = SFunction(ME, tuple(vals))
            if not sf.is_zero():
                stream_out[m] = sf
    if boundary.E is None:
        cp2 = {m: pair_values(c, SFunction.delta(ME, ME.zero())) for m, c in cp.items()}
        cm2 = {m: pair_values(c, SFunction.delta(ME, ME.zero())) for m, c in cm.items()}
        return HarmonicFormData(n=f.n, module=None, c_plus=cp2, c_minus=cm2, prec=f.prec)
    return HarmonicFormData(n=f.n, module=ME, c_plus=cp, c_minus=cm, prec=f.prec)


def _green_lattice_sums(f, boundary, zvec, tau, lz, trunc, jmax, dps):
    """The log(1 - e(..)) sum and the V_n sum over K', truncated."""
    k = boundary.field
    n = boundary.n
    M = f.module
    if M is None or M.factors is None:
        return mp.mpf(0), mp.mpf(0), None
    ME, MH = M.factors
    log_sum = mp.mpc(0)
    v_sum = mp.mpc(0)
    min_dist = None
    e_range = []
    if boundary.E is not None:
        sup = boundary._e_sup()
        for coords, _val in sup.vectors_up_to(trunc):
            e_range.append(coords)
    else:
        e_range = [()]
    for e_coords in e_range:
        for s in range(-trunc, trunc + 1):
            for t in range(-trunc, trunc + 1):
                if not any(e_coords) and s == 0 and t == 0:
                    continue
                # restrict s, t to K' support: s, t integers by construction
                qlam = boundary.herm_norm_kprime(e_coords, s, t)
                # coefficient lookup: nu runs over L'/L restricting to lambda
                cplus = f.c_plus.get(Frac(-qlam))
                cminus = f.c_minus.get(Frac(-qlam)) if qlam > 0 else None
                if (cplus is None or cplus.is_zero()) and cminus is None:
                    continue
                ip = boundary.point_vector_pairing(zvec, tau, e_coords, s, t, dps=dps)
                im_part = mp.im(ip)
                re_part = mp.re(ip)
                for nu_el, cval_p, cval_m in _restricting_cosets(
                    f, boundary, e_coords, s, t, cplus, cminus
                ):
                    phase = re_part + _nu_lprime_pairing(boundary, nu_el)
                    if cval_p:
                        arg = 1 - mp.exp(2j * mp.pi * (phase + 1j * abs(im_part)))
                        d = abs(arg)
                        if min_dist is None or d < min_dist:
                            min_dist = d
                        log_sum += cval_p * mp.log(arg)
                    if cval_m and qlam > 0:
                        for j in range(1, jmax + 1):
                            A = mp.pi * j * mp.sqrt(qlam) / lz
                            B = mp.pi * j * abs(im_part) / lz
                            v_sum += (
                                cval_m
                                / j
                                * mp.exp(2j * mp.pi * j * phase)
                                * special_V(n, float(A), float(B), dps=dps)
                            )
    return log_sum, v_sum, min_dist


def _restricting_cosets(f, boundary, e_coords, s, t, cplus, cminus):
    """nu in L'/L with nu restricted to L cap l-perp equal to lambda: the
    E-part must match e_coords mod E; the l-part functional is pinned by s
    and the l~ part is free only through the b-part being 0 on l-perp; in
    this model the matching cosets are (e mod E, s/D on l~, * on l)."""
    M = f.module
    ME, MH = M.factors
    k = boundary.field
    D = k.D
    e_el = ME.reduce_coords(
        boundary._e_sup().coords_of_kvector(
            boundary._e_sup().kvector_of_coords(e_coords)
        )
        if boundary.E is not None
        else ()
    )
    if boundary.E is not None:
        e_el = ME.reduce_coords(
            boundary.E.coords_of_kvector(boundary._e_sup().kvector_of_coords(e_coords))
        )
    out = []
    # MH coords: (l-part two coords, l~-part two coords) in the z-basis of O^2
    for h_el in MH.elements:
        # functional on O l determined by the l~ component: must equal the
        # lambda lift's l~ data: pairing with l of nu is h's l~ part.
        # We match: <l, nu> = conj(<nu, l>); encode via s/D agreement.
        lt_part = h_el[2:]
        target = (Frac(0) % 1, Frac(s, D) % 1)
        if lt_part != (Frac(target[0]), Frac(target[1])):
            continue
        nu = e_el + h_el
        cp = cplus.value_at(nu) if cplus is not None else 0
        cm = cminus.value_at(nu) if cminus is not None else 0
        if cp or cm:
            out.append((nu, cp, cm))
    return out


def _nu_lprime_pairing(boundary, nu_el):
    # <nu, l'>_Q with l' = omega0 l~: depends on the l-part of nu; for the
    # truncated best-effort evaluation we use the l-coset pairing directly.
    k = boundary.field
    lpart = nu_el[-4:-2] if len(nu_el) >= 4 else (Frac(0), Frac(0))
    # nu_l = x + y omega on l; <nu_l l, omega0 l~>_Q = tr((x + y omega) conj(omega0))
    om0 = (Frac(1 - k.d, 2), Frac(1))  # omega0 = (1+sqrt d)/2 = (1-d)/2 + omega
    val = k.trace(k.mul((lpart[0], lpart[1]), k.conj(om0)))
    return float(val % 1)
