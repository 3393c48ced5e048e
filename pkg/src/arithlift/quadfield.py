"""Arithmetic of imaginary quadratic fields of odd fundamental discriminant.

Everything downstream (lattices, finite quadratic modules, Eisenstein
coefficients, L-functions) is built on the objects here: the field itself
with its class data, exact ideal arithmetic in Z-basis form, the quadratic
character and its Dirichlet L-function, and the symbolic ring
ArithmeticNumber used for exact identity checks.

Elements of O_k are represented as pairs (a, b) of Fractions meaning
a + b*omega with omega = (d + sqrt(d))/2, so omega satisfies
omega^2 = d*omega - d(d-1)/4, trace(omega) = d, norm(omega) = d(d-1)/4.
sqrt(d) is taken in the upper half plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

import mpmath as mp
from sympy import factorint

from .errors import EvenDiscriminant, NonFundamental, PrecisionUnachievable

Frac = Fraction


# ---------------------------------------------------------------------------
# Kronecker and Hilbert symbols


def _jacobi(a: int, n: int) -> int:
    # n odd positive
    a %= n
    r = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                r = -r
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            r = -r
        a %= n
    return r if n == 1 else 0


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a / n), full extension to all integers n."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    r = 1
    if n < 0:
        n = -n
        if a < 0:
            r = -r
    t = 0
    while n % 2 == 0:
        n //= 2
        t += 1
    if t:
        if a % 2 == 0:
            return 0
        if t % 2 and a % 8 in (3, 5):
            r = -r
    return r * _jacobi(a, n)


def _padic_split(x: Frac, p: int) -> tuple[int, Frac]:
    """x = p^v * u with u a p-adic unit; returns (v, u)."""
    if x == 0:
        raise ZeroDivisionError("p-adic valuation of 0")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v, Frac(num, den)


def _unit_mod(u: Frac, m: int) -> int:
    """Reduce a rational that is a unit at every prime dividing m, mod m."""
    num = u.numerator % m
    den = u.denominator % m
    return (num * pow(den, -1, m)) % m


def hilbert_symbol(a: Frac, b: Frac, p) -> int:
    """Hilbert symbol (a, b)_p over Q_p; p a prime or the string 'inf'."""
    a, b = Frac(a), Frac(b)
    if a == 0 or b == 0:
        raise ZeroDivisionError("Hilbert symbol needs nonzero arguments")
    if p == "inf":
        return -1 if (a < 0 and b < 0) else 1
    alpha, u = _padic_split(a, p)
    beta, w = _padic_split(b, p)
    if p == 2:
        eps_u = (_unit_mod(u, 8) - 1) // 2 % 2
        eps_w = (_unit_mod(w, 8) - 1) // 2 % 2
        om_u = (_unit_mod(u, 8) ** 2 - 1) // 8 % 2
        om_w = (_unit_mod(w, 8) ** 2 - 1) // 8 % 2
        e = eps_u * eps_w + alpha * om_w + beta * om_u
        return -1 if e % 2 else 1
    leg_u = _jacobi(_unit_mod(u, p), p)
    leg_w = _jacobi(_unit_mod(w, p), p)
    r = leg_u**beta * leg_w**alpha
    if alpha * beta * ((p - 1) // 2) % 2:
        r = -r
    return r


def valuation(x: Frac, p: int) -> int:
    return _padic_split(Frac(x), p)[0]


# ---------------------------------------------------------------------------
# Symbolic numbers: Q-span of {1, log p, gamma, log pi, LCHI}


@dataclass(frozen=True)
class ArithmeticNumber:
    """Formal Q-linear combination over {1, log p (p prime), gamma, log pi,
    log 2, LCHI}, with log 2 stored alongside the other log p coordinates.

    Equality is exact and coordinate-wise; numeric evaluation goes through
    mpmath.  LCHI stands for L'(chi_k, 0)/L(chi_k, 0) of an ambient field
    supplied at evaluation time.
    """

    rat: Frac = Frac(0)
    logs: tuple = ()  # sorted tuple of (prime, Fraction)
    gamma: Frac = Frac(0)
    logpi: Frac = Frac(0)
    lchi: Frac = Frac(0)

    @staticmethod
    def _mklogs(d: dict) -> tuple:
        return tuple(sorted((p, c) for p, c in d.items() if c != 0))

    @classmethod
    def rational(cls, q) -> "ArithmeticNumber":
        return cls(rat=Frac(q))

    @classmethod
    def log_prime(cls, p: int, coeff=1) -> "ArithmeticNumber":
        return cls(logs=cls._mklogs({p: Frac(coeff)}))

    @classmethod
    def log_rational(cls, q, coeff=1) -> "ArithmeticNumber":
        """coeff * log(q) for positive rational q, expanded into log p's."""
        q = Frac(q)
        if q <= 0:
            raise ValueError("log of non-positive rational")
        d: dict = {}
        for p, e in factorint(q.numerator).items():
            d[p] = d.get(p, Frac(0)) + Frac(coeff) * e
        for p, e in factorint(q.denominator).items():
            d[p] = d.get(p, Frac(0)) - Frac(coeff) * e
        return cls(logs=cls._mklogs(d))

    @classmethod
    def euler_gamma(cls, coeff=1) -> "ArithmeticNumber":
        return cls(gamma=Frac(coeff))

    @classmethod
    def log_pi(cls, coeff=1) -> "ArithmeticNumber":
        return cls(logpi=Frac(coeff))

    @classmethod
    def lchi_symbol(cls, coeff=1) -> "ArithmeticNumber":
        return cls(lchi=Frac(coeff))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ArithmeticNumber.rational(other)
        d = dict(self.logs)
        for p, c in other.logs:
            d[p] = d.get(p, Frac(0)) + c
        return ArithmeticNumber(
            rat=self.rat + other.rat,
            logs=self._mklogs(d),
            gamma=self.gamma + other.gamma,
            logpi=self.logpi + other.logpi,
            lchi=self.lchi + other.lchi,
        )

    __radd__ = __add__

    def __neg__(self):
        return self * Frac(-1)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ArithmeticNumber.rational(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        c = Frac(c)
        return ArithmeticNumber(
            rat=self.rat * c,
            logs=self._mklogs({p: v * c for p, v in self.logs}),
            gamma=self.gamma * c,
            logpi=self.logpi * c,
            lchi=self.lchi * c,
        )

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return (
            self.rat == 0
            and not self.logs
            and self.gamma == 0
            and self.logpi == 0
            and self.lchi == 0
        )

    def evaluate(self, field=None, lchi_value=None, dps: int = 30):
        """Numeric value as an mpf.  LCHI needs a field or explicit value."""
        with mp.workdps(dps):
            total = mp.mpf(self.rat.numerator) / self.rat.denominator
            for p, c in self.logs:
                total += mp.mpf(c.numerator) / c.denominator * mp.log(p)
            if self.gamma:
                total += mp.mpf(self.gamma.numerator) / self.gamma.denominator * mp.euler
            if self.logpi:
                total += mp.mpf(self.logpi.numerator) / self.logpi.denominator * mp.log(mp.pi)
            if self.lchi:
                if lchi_value is None:
                    if field is None:
                        raise ValueError("LCHI symbol needs a field or lchi_value")
                    lchi_value = field.lchi_log_derivative_at_0(dps=dps)
                total += mp.mpf(self.lchi.numerator) / self.lchi.denominator * mp.mpf(lchi_value)
            return total

    def __str__(self):
        parts = []
        if self.rat:
            parts.append(str(self.rat))
        for p, c in self.logs:
            parts.append(f"({c})*log({p})")
        if self.gamma:
            parts.append(f"({self.gamma})*gamma")
        if self.logpi:
            parts.append(f"({self.logpi})*log(pi)")
        if self.lchi:
            parts.append(f"({self.lchi})*LCHI")
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {
            "rational": str(self.rat),
            "logs": {str(p): str(c) for p, c in self.logs},
            "gamma": str(self.gamma),
            "log_pi": str(self.logpi),
            "lchi": str(self.lchi),
        }


AN = ArithmeticNumber


# ---------------------------------------------------------------------------
# Fractional ideals in Z-basis (HNF) form


def _hnf_2col(rows: list[tuple[int, int]]) -> tuple[int, int, int]:
    """Hermite form of the Z-module spanned by integer rows (x, y).

    Returns (a, b, c) meaning basis {(a, 0), (b, c)}, a > 0, c > 0,
    0 <= b < a.  The module must have full rank 2.
    """
    # reduce the y-column to a single generator by gcd
    rows = [r for r in rows if r != (0, 0)]
    c = 0
    for _, y in rows:
        c = gcd(c, y)
    if c == 0:
        raise ValueError("rank < 2")
    # find a combination with y-part c, subtract multiples from others
    # use an extended-gcd sweep
    bx, by = 0, 0
    for x, y in rows:
        if by == 0:
            bx, by = x, y
            continue
        g, s, t = _xgcd(by, y)
        bx, by = s * bx + t * x, g
    assert by == c or by == -c
    if by < 0:
        bx, by = -bx, -by
    a = 0
    for x, y in rows:
        k = y // by
        a = gcd(a, x - k * bx)
    if a == 0:
        raise ValueError("rank < 2")
    a = abs(a)
    return a, bx % a, by


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


@dataclass(frozen=True)
class FracIdeal:
    """Fractional O_k-ideal (1/den) * (a Z + (b + c*omega) Z) in HNF."""

    field: "QuadField"
    den: int
    a: int
    b: int
    c: int

    @classmethod
    def from_z_generators(cls, k: "QuadField", gens) -> "FracIdeal":
        """gens: iterable of (x, y) Fractions meaning x + y*omega."""
        gens = [(Frac(x), Frac(y)) for x, y in gens]
        lcm = 1
        for x, y in gens:
            lcm = lcm * x.denominator // gcd(lcm, x.denominator)
            lcm = lcm * y.denominator // gcd(lcm, y.denominator)
        rows = [(int(x * lcm), int(y * lcm)) for x, y in gens]
        a, b, c = _hnf_2col(rows)
        g = gcd(gcd(a, gcd(b, c)), lcm)
        return cls(k, lcm // g, a // g, (b // g) % (a // g), c // g)

    @classmethod
    def from_ideal_generators(cls, k: "QuadField", gens) -> "FracIdeal":
        """O_k-module generated by elements (x, y); closes under omega."""
        zgens = []
        for g in gens:
            zgens.append(g)
            zgens.append(k.mul(g, (Frac(0), Frac(1))))
        return cls.from_z_generators(k, zgens)

    def z_basis(self):
        """Two k-elements forming a Z-basis."""
        return (
            (Frac(self.a, self.den), Frac(0)),
            (Frac(self.b, self.den), Frac(self.c, self.den)),
        )

    def norm(self) -> Frac:
        return Frac(self.a * self.c, self.den**2)

    def contains(self, x) -> bool:
        u, v = Frac(x[0]) * self.den, Frac(x[1]) * self.den
        t = v / self.c
        if t.denominator != 1:
            return False
        s = (u - t * self.b) / self.a
        return s.denominator == 1

    def conjugate(self) -> "FracIdeal":
        k = self.field
        return FracIdeal.from_z_generators(
            k,
            [k.conj(g) for g in self.z_basis()],
        )

    def mul(self, other: "FracIdeal") -> "FracIdeal":
        k = self.field
        gens = []
        for g in self.z_basis():
            for h in other.z_basis():
                gens.append(k.mul(g, h))
        return FracIdeal.from_z_generators(k, gens)

    def inverse(self) -> "FracIdeal":
        conj = self.conjugate()
        n = self.norm()
        k = self.field
        gens = [(x / n, y / n) for x, y in conj.z_basis()]
        return FracIdeal.from_z_generators(k, gens)

    def scale(self, q) -> "FracIdeal":
        q = Frac(q)
        gens = [(x * q, y * q) for x, y in self.z_basis()]
        return FracIdeal.from_z_generators(self.field, gens)

    def min_norm_element(self):
        """Nonzero element of minimal norm (exhaustive, desk scale)."""
        k = self.field
        e1, e2 = self.z_basis()
        # Gram of the norm form on the Z-basis
        best = None
        # crude search box; the minimum of a 2D lattice is within small coords
        for s in range(-60, 61):
            for t in range(-60, 61):
                if s == 0 and t == 0:
                    continue
                x = (e1[0] * s + e2[0] * t, e1[1] * s + e2[1] * t)
                n = k.norm(x)
                if best is None or n < best[0]:
                    best = (n, x)
        return best

    def is_principal(self) -> bool:
        n, _ = self.min_norm_element()
        return n == self.norm()

    def equals(self, other: "FracIdeal") -> bool:
        return (self.den, self.a, self.b, self.c) == (
            other.den,
            other.a,
            other.b,
            other.c,
        )


@dataclass(frozen=True)
class IdealClassRep:
    """Integral ideal a Z + (t + omega) Z of norm a, one per ideal class."""

    field: "QuadField"
    a: int
    t: int

    @property
    def norm(self) -> int:
        return self.a

    def as_ideal(self) -> FracIdeal:
        return FracIdeal(self.field, 1, self.a, self.t % self.a, 1)

    def to_json(self):
        return {"basis": [self.a, self.t], "norm": self.a}


# ---------------------------------------------------------------------------
# The field


class QuadField:
    """Imaginary quadratic field of odd fundamental discriminant d < 0."""

    def __init__(self, d: int):
        d = int(d)
        if d >= 0:
            raise NonFundamental(f"discriminant must be negative, got {d}")
        if d % 2 == 0:
            raise EvenDiscriminant(f"even discriminant {d} not supported")
        if d % 4 != 1 and d % 4 != -3:
            raise NonFundamental(f"{d} is not 1 mod 4")
        fac = factorint(-d)
        if any(e > 1 for e in fac.values()):
            raise NonFundamental(f"{d} is not squarefree")
        self.d = d
        self.D = -d
        self.prime_divisors_of_D = sorted(fac)
        self.o_dk = len(self.prime_divisors_of_D)
        self._reduced_forms = self._enumerate_reduced_forms()
        self.h = len(self._reduced_forms)
        self.w = 6 if d == -3 else 2

    # -- O_k element arithmetic: x = (a, b) means a + b*omega ----------------

    def mul(self, x, y):
        a, b = Frac(x[0]), Frac(x[1])
        c, e = Frac(y[0]), Frac(y[1])
        # omega^2 = d*omega - d(d-1)/4
        n_om = Frac(self.d * (self.d - 1), 4)
        return (a * c - b * e * n_om, a * e + b * c + b * e * self.d)

    def conj(self, x):
        a, b = Frac(x[0]), Frac(x[1])
        return (a + b * self.d, -b)

    def trace(self, x) -> Frac:
        return 2 * Frac(x[0]) + Frac(x[1]) * self.d

    def norm(self, x) -> Frac:
        a, b = Frac(x[0]), Frac(x[1])
        return a * a + a * b * self.d + b * b * Frac(self.d * (self.d - 1), 4)

    def embed(self, x, dps: int = 30):
        """Complex embedding with sqrt(d) in the upper half plane."""
        with mp.workdps(dps):
            om = (self.d + mp.sqrt(self.D) * 1j) / 2
            return mp.mpc(x[0]) + mp.mpc(x[1]) * om

    # -- characters and ideal counting ---------------------------------------

    def chi(self, m: int) -> int:
        """Quadratic character of k/Q as the Kronecker symbol (d/m)."""
        return kronecker(self.d, int(m))

    def chi_p(self, m, p) -> int:
        """Local character chi_{k,p}(m) as the Hilbert symbol (d, m)_p."""
        return hilbert_symbol(Frac(self.d), Frac(m), p)

    def splitting(self, p: int) -> str:
        if p in self.prime_divisors_of_D:
            return "ramified"
        return "split" if self.chi(p) == 1 else "inert"

    def rho(self, m) -> int:
        """Number of integral O_k-ideals of norm m; 0 off Z_{>0}."""
        m = Frac(m)
        if m <= 0 or m.denominator != 1:
            return 0
        count = 1
        for p, e in factorint(m.numerator).items():
            kind = self.splitting(p)
            if kind == "split":
                count *= e + 1
            elif kind == "inert":
                if e % 2:
                    return 0
            # ramified contributes 1
        return count

    def rho_local(self, ell: int, m) -> int:
        """Ideals of O_{k,ell} of norm m Z_ell."""
        m = Frac(m)
        if m == 0:
            return 0
        v = valuation(m, ell)
        if v < 0:
            return 0
        kind = self.splitting(ell)
        if kind == "split":
            return v + 1
        if kind == "inert":
            return 1 if v % 2 == 0 else 0
        return 1

    # -- class group ----------------------------------------------------------

    def _enumerate_reduced_forms(self):
        # reduced positive forms (a, b, c): b^2 - 4ac = d, -a < b <= a <= c,
        # with b >= 0 whenever a == c
        d = self.d
        forms = []
        for a in range(1, isqrt(-d // 3) + 1):
            for b in range(-a + 1, a + 1):
                if (b * b - d) % (4 * a):
                    continue
                c = (b * b - d) // (4 * a)
                if c < a or (a == c and b < 0):
                    continue
                forms.append((a, b, c))
        return sorted(forms, key=lambda f: (f[0], abs(f[1]), f[1]))

    def ideal_class_reps(self) -> list[IdealClassRep]:
        """One integral ideal per class, from the reduced forms."""
        reps = []
        for a, b, _c in self._reduced_forms:
            t = (-b - self.d) // 2
            reps.append(IdealClassRep(self, a, t))
        return reps

    def ramified_prime_ideal(self, p: int) -> FracIdeal:
        """The prime above p | D, as p Z + (t + omega) Z."""
        if p not in self.prime_divisors_of_D:
            raise ValueError(f"{p} does not ramify")
        # omega = d/2 mod the prime above p
        t_p = (self.d * pow(2, -1, p)) % p
        return FracIdeal(self, 1, p, (-t_p) % p, 1)

    def ramified_product_ideal(self, primes) -> FracIdeal:
        """Product of ramified primes over the given subset of D's primes."""
        r = FracIdeal(self, 1, 1, 0, 1)
        for p in primes:
            r = r.mul(self.ramified_prime_ideal(p))
        return r

    def different_ideal(self) -> FracIdeal:
        return self.ramified_product_ideal(self.prime_divisors_of_D)

    def r_ideal_divisors(self) -> list[tuple[tuple[int, ...], FracIdeal]]:
        """All divisors r | d_k, as (support tuple, ideal), 2^o of them."""
        out = []
        ps = self.prime_divisors_of_D
        for mask in range(1 << len(ps)):
            supp = tuple(p for i, p in enumerate(ps) if mask >> i & 1)
            out.append((supp, self.ramified_product_ideal(supp)))
        return out

    # -- Dirichlet L-function -------------------------------------------------

    def dirichlet_L(self, s, dps: int = 30):
        """L(chi_k, s) by chi-weighted Hurwitz zeta values."""
        if dps <= 0:
            raise PrecisionUnachievable("non-positive precision request")
        D = self.D
        with mp.workdps(dps + 10):
            s = mp.mpmathify(s)
            if s == 1:
                total = mp.mpf(0)
                for a in range(1, D):
                    ch = self.chi(a)
                    if ch:
                        total -= ch * mp.digamma(mp.mpf(a) / D)
                return total / D
            total = mp.mpf(0)
            for a in range(1, D):
                ch = self.chi(a)
                if ch:
                    total += ch * mp.zeta(s, mp.mpf(a) / D)
            return mp.power(D, -s) * total

    def completed_dirichlet_L(self, s, dps: int = 30):
        """Lambda(chi_k, s) = D^{s/2} pi^{-(s+1)/2} Gamma((s+1)/2) L(chi_k, s)."""
        with mp.workdps(dps + 10):
            s = mp.mpmathify(s)
            return (
                mp.power(self.D, s / 2)
                * mp.power(mp.pi, -(s + 1) / 2)
                * mp.gamma((s + 1) / 2)
                * self.dirichlet_L(s, dps=dps)
            )

    def dirichlet_L_at_0(self) -> Frac:
        """Exact L(chi_k, 0) = -(1/D) sum a*chi(a); equals 2h/w."""
        D = self.D
        return -Frac(sum(a * self.chi(a) for a in range(1, D)), D)

    def lchi_log_derivative_at_0(self, dps: int = 30):
        """L'(chi_k,0)/L(chi_k,0) via the Lerch formula for L'(chi, 0)."""
        if dps <= 0:
            raise PrecisionUnachievable("non-positive precision request")
        D = self.D
        with mp.workdps(dps + 10):
            lp = mp.mpf(0)
            for a in range(1, D):
                ch = self.chi(a)
                if ch:
                    lp += ch * mp.loggamma(mp.mpf(a) / D)
            l0 = self.dirichlet_L_at_0()
            l0m = mp.mpf(l0.numerator) / l0.denominator
            return (lp - mp.log(D) * l0m) / l0m

    # -- misc -----------------------------------------------------------------

    def omega_complex(self, dps: int = 30):
        with mp.workdps(dps):
            return (self.d + mp.sqrt(self.D) * 1j) / 2

    def __repr__(self):
        return f"QuadField(d={self.d}, h={self.h}, w={self.w})"


@lru_cache(maxsize=None)
def new_field(d: int) -> QuadField:
    """Construct (and cache) the field of odd fundamental discriminant d."""
    return QuadField(d)


def chi(field: QuadField, m: int) -> int:
    return field.chi(m)


def rho(field: QuadField, m) -> int:
    return field.rho(m)


def rho_local(field: QuadField, ell: int, m) -> int:
    return field.rho_local(ell, m)


def dirichlet_L(field: QuadField, s, dps: int = 30):
    return field.dirichlet_L(s, dps=dps)


def lchi_log_derivative_at_0(field: QuadField, dps: int = 30):
    return field.lchi_log_derivative_at_0(dps=dps)


def ideal_class_reps(field: QuadField) -> list[IdealClassRep]:
    return field.ideal_class_reps()
