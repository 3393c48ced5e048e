"""Rankin-Selberg convolution L-functions for scalar and vector valued
forms: newform ingestion with Hecke validation, Atkin-Lehner pseudo-
eigenvalues epsilon_Q, the twists g_Q, the scalar-to-vector induction, direct
summation with tail estimates, and analytic continuation of the completed
function Lambda*(s) = Lambda(chi_k, s+1) L(F, theta_Lambda, s) by a smoothed
contour-kernel method with the odd functional equation built in.

Continuation scheme.  In the convergence region

    Lambda*(s) = sum_N alpha_N gamma(s, z_N),
    gamma(u, z) = Gamma(u/2 + 1) Gamma(u/2 + n - 1) z^{-u/2},

where N runs over pairs (k, j) of a chi_k-index and a rescaled exponent
j = D m, alpha_N = (sqrt(D)/pi) chi(k) k^{-1} c(j/D) (4 pi j / D)^{1-n}, and
z_N = 4 pi^2 j k^2 / D^2.  Inserting Lambda*(s + w) e^{w^2/A} / w into a
contour integral, shifting across the pole at w = 0, and using the odd
functional equation Lambda*(-u) = -Lambda*(u) gives the everywhere-valid

    Lambda*(s) = sum_N alpha_N [ H(s, z_N; c) - H(-s, z_N; c~) ],
    H(u, z; c) = (1/2 pi i) int_{(c)} gamma(u + w, z) e^{w^2/A} dw / w,

with any c > sigma_c - Re u and c~ > sigma_c + Re u (sigma_c = n - 1).  The
kernels decay like z^{-(Re u + c)/2}, so only small z_N contribute.  The two
contours are chosen with different margins so the built-in antisymmetry is a
genuine quadrature consistency check rather than an algebraic identity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp
import numpy as np
from sympy import factorint, isprime, primerange

from .errors import (
    HeckeViolation,
    MissingCoefficient,
    OutsideConvergence,
    ParseError,
    PrecisionUnachievable,
)
from .fqm import gamma_p
from .hermlat import HermitianLattice, RankOneSpec, lambda_twist
from .quadfield import QuadField, _jacobi

Frac = Fraction


# ---------------------------------------------------------------------------
# newforms


@dataclass
class NewformData:
    field: QuadField  # fixes the level D and nebentypus chi_k^n
    n: int  # weight
    coeffs: dict  # m -> coefficient (int / Fraction / complex)

    @property
    def level(self) -> int:
        return self.field.D

    @property
    def mmax(self) -> int:
        return max(self.coeffs)

    def a(self, m: int):
        if m not in self.coeffs:
            raise MissingCoefficient(f"newform coefficient a({m}) not available")
        return self.coeffs[m]

    def nebentypus(self, m: int) -> int:
        if math.gcd(m, self.level) > 1:
            return 0
        return self.field.chi(m) ** self.n


def _parse_value(text: str):
    text = text.strip()
    try:
        if "/" in text:
            return Frac(text)
        if "." in text or "e" in text or "E" in text:
            return float(text)
        return int(text)
    except ValueError:
        try:
            return complex(text.replace(" ", ""))
        except ValueError as exc:
            raise ParseError(f"cannot parse coefficient {text!r}") from exc


def validate_hecke(g: NewformData):
    """a(1) = 1, full multiplicativity on coprime pairs, and the prime-power
    recursion a(p^{k+1}) = a(p) a(p^k) - chi(p) p^{n-1} a(p^{k-1})."""
    M = g.mmax
    if g.a(1) != 1:
        raise HeckeViolation("a(1) != 1")
    # smallest prime factor sieve
    spf = list(range(M + 1))
    for p in range(2, int(M**0.5) + 1):
        if spf[p] == p:
            for q in range(p * p, M + 1, p):
                if spf[q] == q:
                    spf[q] = p
    for m in range(2, M + 1):
        p = spf[m]
        pe = p
        rest = m // p
        while rest % p == 0:
            pe *= p
            rest //= p
        if rest > 1 and g.coeffs[m] != g.coeffs[pe] * g.coeffs[rest]:
            raise HeckeViolation(f"a({m}) != a({pe}) a({rest})")
    for p in primerange(2, int(M**0.5) + 1):
        chi_p = g.nebentypus(p)
        pk = p
        while pk * p <= M:
            lhs = g.coeffs[pk * p]
            rhs = g.coeffs[p] * g.coeffs[pk] - chi_p * p ** (g.n - 1) * g.coeffs[pk // p]
            if lhs != rhs:
                raise HeckeViolation(f"Hecke recursion fails at {p}^{{{pk * p}}}")
            pk *= p
    return g


def ingest_newform(path, field: QuadField, n: int) -> NewformData:
    """Read a CSV with header m,a_m (1..M contiguous) and validate."""
    coeffs: dict = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["m", "a_m"]:
            raise ParseError("expected CSV header 'm,a_m'")
        for row in reader:
            if not row:
                continue
            try:
                m = int(row[0])
            except ValueError as exc:
                raise ParseError(f"bad index {row[0]!r}") from exc
            coeffs[m] = _parse_value(row[1])
    M = max(coeffs, default=0)
    if set(coeffs) != set(range(1, M + 1)):
        raise ParseError("coefficient indices must be 1..M contiguous")
    return validate_hecke(NewformData(field, n, coeffs))


# ---------------------------------------------------------------------------
# Atkin-Lehner data and twists


def chi_Q(field: QuadField, Q: int, m: int) -> int:
    """The Q-part of chi_k as a Dirichlet character mod Q (Jacobi symbol)."""
    if math.gcd(m, Q) > 1:
        return 0
    return _jacobi(m % Q, Q) if Q > 1 else 1


def _delta_q(q: int) -> complex:
    return 1 if q % 4 == 1 else 1j


def epsilon_Q(g: NewformData, Q: int):
    """Pseudo-eigenvalue of the Atkin-Lehner operator W_Q: the product over
    q | Q of chi_Q^n(Q/q) lambda_q with lambda_q = conj(a(q)) times
    -q^{1-n/2} (n even) or delta_q q^{(1-n)/2} (n odd)."""
    if g.level % Q:
        raise ValueError("Q must divide the level")
    n = g.n
    out: complex | Frac = Frac(1) if n % 2 == 0 else complex(1)
    for q in factorint(Q):
        aq = g.a(q)
        aq_conj = aq.conjugate() if isinstance(aq, complex) else aq
        if n % 2 == 0:
            lam = aq_conj * -Frac(q) ** (1 - n // 2)
            out = out * chi_Q(g.field, Q, Q // q) ** n * lam
        else:
            lam = aq_conj * _delta_q(q) * q ** Frac(1 - n, 2)
            out = out * chi_Q(g.field, Q, Q // q) ** n * lam
    return out


def g_twist(g: NewformData, Q: int, M: int | None = None) -> dict:
    """Coefficient table of g_Q: a_Q(m) = chi_Q^n(m) a(m) for (m, Q) = 1,
    chi_{D/Q}^n(m) conj(a(m)) for (m, D/Q) = 1, multiplicative across
    coprime parts.  For even n this returns the table of g itself."""
    if M is None:
        M = g.mmax
    if M > g.mmax:
        raise MissingCoefficient(f"need coefficients to {M}")
    D = g.level
    n = g.n
    comp = D // Q
    out = {1: 1}
    # prime power values first
    ppvals: dict = {}
    for p in primerange(2, M + 1):
        pk = p
        while pk <= M:
            a = g.coeffs[pk]
            if Q % p == 0:
                # p | Q, so (pk, D/Q) = 1 and rule 2 applies
                a = a.conjugate() if isinstance(a, complex) else a
                ppvals[pk] = chi_Q(g.field, comp, pk) ** n * a
            else:
                ppvals[pk] = chi_Q(g.field, Q, pk) ** n * a
            pk *= p
    spf = list(range(M + 1))
    for p in range(2, int(M**0.5) + 1):
        if spf[p] == p:
            for q2 in range(p * p, M + 1, p):
                if spf[q2] == q2:
                    spf[q2] = p
    for m in range(2, M + 1):
        p = spf[m]
        pe = p
        rest = m // p
        while rest % p == 0:
            pe *= p
            rest //= p
        out[m] = ppvals[pe] * out[rest] if rest > 1 else ppvals[pe]
    return out


# ---------------------------------------------------------------------------
# the ambient space S = S0 (+) Lambda and the induction


@dataclass
class AmbientSpace:
    """Rank-n incoherent hermitian space data for S0 (+) Lambda."""

    field: QuadField
    n: int
    inv_map: dict  # p | D -> +-1

    @classmethod
    def make(cls, s0: RankOneSpec, Lambda: HermitianLattice) -> "AmbientSpace":
        field = s0.field
        n = 1 + Lambda.rank
        inv = {
            p: s0.inv_p(p) * Lambda.local_invariant(p)
            for p in field.prime_divisors_of_D
        }
        return cls(field, n, inv)

    def gamma_p(self, p: int) -> complex:
        return gamma_p(self.field, self.n, self.inv_map.get(p, 1), p)

    def gamma_Q(self, Q: int) -> complex:
        out = complex(1)
        for p in self.field.prime_divisors_of_D:
            if Q % p == 0:
                out *= self.gamma_p(p)
        return out


def induce_coefficient(g: NewformData, space: AmbientSpace, m, q_mu: int):
    """a(m, mu) = sum over q_mu | Q | D of Q^{1-n} eps_Q conj(gamma_Q) a_Q(mQ).

    m is a positive rational whose reduced denominator divides q_mu.
    """
    m = Frac(m)
    D = g.level
    n = g.n
    total = complex(0)
    for Q in _divisors(D):
        if Q % q_mu:
            continue
        mq = m * Q
        if mq.denominator != 1:
            continue
        mq = int(mq)
        if mq < 1:
            continue
        if mq > g.mmax:
            raise MissingCoefficient(f"need a_Q({mq})")
        total += (
            Q ** (1 - n)
            * complex(epsilon_Q(g, Q))
            * space.gamma_Q(Q).conjugate()
            * complex(_gq_value(g, Q, mq))
        )
    return total


_gq_cache: dict = {}


def _gq_value(g: NewformData, Q: int, m: int):
    if g.n % 2 == 0:
        return g.coeffs[m]
    key = (id(g), Q)
    if key not in _gq_cache:
        _gq_cache[key] = g_twist(g, Q)
    return _gq_cache[key][m]


def _divisors(D: int):
    out = [1]
    for p in factorint(D):
        out = [d * pe for d in out for pe in (1, p)]
    return sorted(out)


class InducedForm:
    """The vector valued form attached to g on the ambient module, exposed as
    a(m, mu) with mu ranging over a product module (S0-part, Lambda-part)."""

    def __init__(self, g: NewformData, space: AmbientSpace, module):
        self.g = g
        self.space = space
        self.module = module

    def a(self, m, mu):
        m = Frac(m)
        mu = self.module.reduce_coords(mu)
        if (m - self.module.Q(mu)).denominator != 1:
            return complex(0)
        return induce_coefficient(self.g, self.space, m, self.module.q_mu(mu))

    def coefficient(self, m):
        from .fqm import SFunction

        return SFunction.from_callable(self.module, lambda mu: self.a(m, mu))


def induce(g: NewformData, space: AmbientSpace, module) -> InducedForm:
    return InducedForm(g, space, module)


# ---------------------------------------------------------------------------
# rank-one theta streams bucketed by Q_mu (fast path for the L-series)


def rank1_theta_by_qmu(Lambda: HermitianLattice, jmax: int) -> dict:
    """For a rank-one lattice: counts R^{(Q')}(j/D) of vectors lambda in
    d^{-1}Lambda with <lambda,lambda> = j/D and Q_{lambda mod Lambda} = Q',
    for 0 <= j <= jmax.  Returns {Q': numpy int array of length jmax + 1}."""
    if Lambda.rank != 1:
        raise ValueError("fast path is rank-one only")
    field = Lambda.field
    D = field.D
    dk = field.different_ideal()
    sup = Lambda.r_inverse_superlattice(dk)
    S = sup.trace_half_gram()
    # clear denominators: Q(u, v) = (A u^2 + 2 B u v + C v^2) / den with
    # integer A, B, C; j = D * Q
    den = 1
    for row in S:
        for x in row:
            den = den * x.denominator // math.gcd(den, x.denominator)
    A = int(S[0][0] * den)
    B = int(S[0][1] * den)
    C = int(S[1][1] * den)
    bound = jmax * den // D  # A u^2 + 2 B u v + C v^2 <= bound
    # p-support congruences: lambda has trivial p-part iff
    # (u, v) satisfies c1 u + c2 v = 0 mod p, computed from the sublattice
    # p_ideal * sup inside sup.
    congruences = {}
    for p in field.prime_divisors_of_D:
        pid = field.ramified_prime_ideal(p)
        sub = sup.scaled_by_ideal(pid)
        cols = []
        for i in range(2):
            kvec = sub.kvector_of_coords([1 if j == i else 0 for j in range(2)])
            coords = sup.coords_of_kvector(kvec)
            cols.append([int(c) % p for c in coords])
        found = None
        for c1 in range(p):
            for c2 in range(p):
                if (c1, c2) == (0, 0):
                    continue
                if all((c1 * col[0] + c2 * col[1]) % p == 0 for col in cols):
                    found = (c1, c2)
                    break
            if found:
                break
        congruences[p] = found
    out = {Q: np.zeros(jmax + 1, dtype=np.int64) for Q in _divisors(D)}
    disc = B * B - A * C  # negative
    vmax = int(math.isqrt(max(0, bound * A // (-disc))) + 2)
    for v in range(-vmax, vmax + 1):
        # A u^2 + 2 B v u + (C v^2 - bound) <= 0
        aa, bb, cc = A, 2 * B * v, C * v * v - bound
        disc_u = bb * bb - 4 * aa * cc
        if disc_u < 0:
            continue
        r = math.isqrt(disc_u)
        lo = (-bb - r) // (2 * aa) - 1
        hi = (-bb + r) // (2 * aa) + 2
        u = np.arange(lo, hi, dtype=np.int64)
        vals = A * u * u + 2 * B * v * u + C * v * v
        mask = vals <= bound
        u = u[mask]
        vals = vals[mask]
        # j = D * Q(u, v); Q-values have denominator dividing D
        vd = vals * D
        if len(vd) and (vd % den).any():
            raise ValueError("norm outside the (1/D)-grid")
        jidx = vd // den
        qcodes = np.ones(len(u), dtype=np.int64)
        for p, (c1, c2) in congruences.items():
            nz = (c1 * u + c2 * v) % p != 0
            qcodes *= np.where(nz, p, 1)
        for Q in out:
            sel = qcodes == Q
            if sel.any():
                np.add.at(out[Q], jidx[sel], 1)
    return out


def build_vector_stream(
    g: NewformData,
    space: AmbientSpace,
    Lambda: HermitianLattice,
    jmax: int,
) -> np.ndarray:
    """c(j/D) = sum_nu conj(a(j/D, (0, nu))) R_Lambda(j/D, phi_nu) for
    1 <= j <= jmax, as a complex array indexed by j."""
    D = g.level
    n = g.n
    counts = rank1_theta_by_qmu(Lambda, jmax)
    divs = _divisors(D)
    eps = {Q: complex(epsilon_Q(g, Q)) for Q in divs}
    gam = {Q: space.gamma_Q(Q) for Q in divs}
    stream = np.zeros(jmax + 1, dtype=complex)
    # A_{Q'}(j) = sum_{Q' | Q | D, D | jQ} Q^{1-n} conj(eps_Q) gamma_Q conj(a_Q(jQ/D))
    for Qp in divs:
        cnt = counts[Qp]
        nz = np.nonzero(cnt)[0]
        nz = nz[nz > 0]
        if len(nz) == 0:
            continue
        for Q in divs:
            if Q % Qp:
                continue
            sel = nz[(nz * Q) % D == 0]
            if len(sel) == 0:
                continue
            idx = sel * Q // D
            ok = (idx >= 1) & (idx <= g.mmax)
            if not ok.all():
                raise MissingCoefficient(
                    f"stream needs newform coefficients to {int(idx.max())}"
                )
            avals = np.array(
                [complex(_gq_value(g, Q, int(i))).conjugate() for i in idx]
            )
            stream[sel] += (
                Q ** (1 - n) * eps[Q].conjugate() * gam[Q] * avals * cnt[sel]
            )
    return stream


def eta_weighted_stream(
    g: NewformData,
    space: AmbientSpace,
    Lambda: HermitianLattice,
    eta_values,
    jmax: int,
) -> np.ndarray:
    """sum over the class group of eta(c)/|Aut(Lambda_c)| times the stream of
    the twisted lattice."""
    from .hermlat import aut_size

    field = g.field
    total = np.zeros(jmax + 1, dtype=complex)
    for rep in field.ideal_class_reps():
        Lc = lambda_twist(Lambda, rep)
        w = eta_values(rep) if callable(eta_values) else eta_values[rep]
        total += complex(w) / aut_size(Lc) * build_vector_stream(g, space, Lc, jmax)
    return total


# ---------------------------------------------------------------------------
# direct summation


def direct_L(stream: np.ndarray, n: int, D: int, s, M: int | None = None):
    """Gamma(s/2 + n - 1) sum_j c_j (4 pi j / D)^{-s/2 - n + 1} over
    1 <= j <= M, plus a Deligne-type tail estimate.

    Returns (value, tail_bound).  The tail constant is calibrated on the
    computed range (sup of |c_j| j^{-alpha} over the top half, alpha =
    (n-1)/2 + (n-2) + 0.3), so the bound is semi-empirical but honest at
    desk scale."""
    if M is None:
        M = len(stream) - 1
    M = min(M, len(stream) - 1)
    sigma = complex(s).real
    if sigma <= n - 1 + 0.05:
        raise OutsideConvergence(f"Re(s) = {sigma} not above {n - 1}")
    j = np.arange(1, M + 1)
    c = stream[1 : M + 1]
    with mp.workdps(25):
        expo = -(complex(s) / 2 + n - 1)
        base = 4 * math.pi / D
        vals = c * np.exp(expo * (np.log(base) + np.log(j)))
        gam = complex(mp.gamma(complex(s) / 2 + n - 1))
        value = gam * vals.sum()
        alpha = (n - 1) / 2 + (n - 2) + 0.3
        half = max(1, M // 2)
        cconst = float(np.max(np.abs(stream[half : M + 1])) / half**alpha) * 1.5 if M > 4 else 1.0
        decay = alpha - sigma / 2 - n + 1  # < -1
        tail = (
            abs(gam)
            * cconst
            * base ** (-sigma / 2 - n + 1)
            * M ** (decay + 1)
            / (-decay - 1)
        )
        return complex(value), float(tail)


def scalar_direct_L(coeffs, rsc, n: int, s, M: int):
    """Direct scalar convolution Gamma(s/2+n-1) sum conj(a(m)) Rsc(m)
    (4 pi m)^{-s/2-n+1}; coeffs is the a_Q table (dict or array), rsc an
    array of representation numbers indexed by m."""
    sigma = complex(s).real
    if sigma <= n - 1 + 0.05:
        raise OutsideConvergence(f"Re(s) = {sigma} not above {n - 1}")
    with mp.workdps(25):
        gam = complex(mp.gamma(complex(s) / 2 + n - 1))
        total = complex(0)
        Mx = min(M, len(rsc) - 1)
        for m in range(1, Mx + 1):
            r = rsc[m]
            if not r:
                continue
            a = complex(coeffs[m]).conjugate()
            total += a * r * (4 * math.pi * m) ** (-(complex(s) / 2 + n - 1))
        return gam * total


# ---------------------------------------------------------------------------
# the completed function and its continuation


@dataclass
class LSeriesSpec:
    """Data of Lambda*(s) = Lambda(chi_k, s+1) L(F, theta_Lambda, s): the
    coefficient stream c(j/D) (complex array indexed by j = D m), the weight
    n, and the field.  Sign of the functional equation: -1."""

    field: QuadField
    n: int
    stream: np.ndarray

    def sigma_c(self) -> float:
        return self.n - 1.0


class KernelEvaluator:
    """Evaluates Lambda*(s) and its central derivative via the contour-kernel
    representation described in the module docstring."""

    def __init__(
        self,
        spec: LSeriesSpec,
        gauss_a: float = 225.0,
        tcut: float = 60.0,
        step: float = 0.05,
        margin_left: float = 7.5,
        margin_right: float = 9.5,
        zcut_tol: float = 1e-15,
        kmax: int = 400,
    ):
        self.spec = spec
        self.gauss_a = gauss_a
        self.tcut = tcut
        self.step = step
        self.margin_left = margin_left
        self.margin_right = margin_right
        self.zcut_tol = zcut_tol
        self.kmax = kmax
        self._pairs = None

    def _alpha_z(self):
        """Finite list of (alpha_N, z_N) pairs with everything the kernels
        can see (the kernels decay like z^{-c/2})."""
        if self._pairs is not None:
            return self._pairs
        spec = self.spec
        D = spec.field.D
        n = spec.n
        cmin = spec.sigma_c() + self.margin_left  # weakest kernel decay
        # include z with z^{-cmin/2} >= zcut_tol / (max |alpha|)
        logzcut = -2 * math.log(self.zcut_tol) / cmin
        zcut = math.exp(logzcut)
        alphas = []
        zs = []
        jmax = len(spec.stream) - 1
        for k in range(1, self.kmax + 1):
            ch = spec.field.chi(k)
            if ch == 0:
                continue
            zbase = 4 * math.pi**2 * k**2 / D**2
            jtop = min(jmax, int(zcut / zbase) + 1)
            if zbase > zcut:
                break
            for j in range(1, jtop + 1):
                c = spec.stream[j]
                if c == 0:
                    continue
                z = zbase * j
                if z > zcut:
                    break
                alpha = (
                    math.sqrt(D)
                    / math.pi
                    * ch
                    / k
                    * c
                    * (4 * math.pi * j / D) ** (1 - n)
                )
                alphas.append(alpha)
                zs.append(z)
        if not alphas:
            raise PrecisionUnachievable("empty kernel sum; stream too short")
        self._pairs = (np.array(alphas, dtype=complex), np.array(zs))
        return self._pairs

    def _kernel_values(self, u: complex, contour_c: float, zs: np.ndarray):
        """H(u, z; c) for all z at once, by trapezoid quadrature on the line
        Re w = c against the Gamma-product integrand."""
        n = self.spec.n
        t = np.arange(-self.tcut, self.tcut + self.step / 2, self.step)
        w = contour_c + 1j * t
        # log of Gamma((u+w)/2 + 1) Gamma((u+w)/2 + n - 1) e^{w^2/A} / w
        uw2 = (u + w) / 2
        lg = np.array(
            [
                complex(mp.loggamma(complex(x) + 1) + mp.loggamma(complex(x) + n - 1))
                for x in uw2
            ]
        )
        gvals = np.exp(lg + w * w / self.gauss_a) / w * (self.step / (2 * math.pi))
        lz = np.log(zs)
        mat = np.exp(np.outer(-lz, uw2))
        return mat @ gvals

    def lambda_star(self, s) -> complex:
        s = complex(s)
        alphas, zs = self._alpha_z()
        sig = self.spec.sigma_c()
        c_right = max(0.0, sig - s.real) + self.margin_left
        c_left = max(0.0, sig + s.real) + self.margin_right
        h_plus = self._kernel_values(s, c_right, zs)
        h_minus = self._kernel_values(-s, c_left, zs)
        return complex((alphas * (h_plus - h_minus)).sum())

    def lambda_star_derivative_at_0(self, h: float = 1e-3) -> tuple[float, float]:
        """Richardson-extrapolated central difference; returns (value,
        stability spread between the h and h/2 estimates)."""
        d1 = (self.lambda_star(h) - self.lambda_star(-h)) / (2 * h)
        d2 = (self.lambda_star(h / 2) - self.lambda_star(-h / 2)) / h
        rich = (4 * d2 - d1) / 3
        return float(rich.real), abs(d2 - d1)

    def l_prime_at_0(self, dps: int = 25) -> float:
        """L'(F, theta_Lambda, 0) = Lambda*'(0) / Lambda(chi_k, 1)."""
        num, _ = self.lambda_star_derivative_at_0()
        den = float(self.spec.field.completed_dirichlet_L(1, dps=dps))
        return num / den


def completed_L(spec: LSeriesSpec, s, **kwargs) -> complex:
    return KernelEvaluator(spec, **kwargs).lambda_star(s)


def completion_factor(field: QuadField, n: int, s, dps: int = 25) -> complex:
    """Lambda*(s)/L(F, theta, s) = Lambda(chi_k, s+1) in completed form."""
    with mp.workdps(dps):
        return complex(field.completed_dirichlet_L(mp.mpmathify(s) + 1, dps=dps))


def L_prime_at_0(spec: LSeriesSpec, **kwargs) -> float:
    return KernelEvaluator(spec, **kwargs).l_prime_at_0()


# ---------------------------------------------------------------------------
# scalar-vector decomposition


def class_of_ideal(field: QuadField, ideal):
    """Index of the ideal class among ideal_class_reps()."""
    for i, rep in enumerate(field.ideal_class_reps()):
        if ideal.mul(rep.as_ideal().inverse()).is_principal():
            return i
    raise ValueError("class not identified")


def scalar_vector_decomposition_check(
    g: NewformData,
    Lambda: HermitianLattice,
    s0: RankOneSpec,
    s,
    M: int,
    eta_values=None,
):
    """Residual of L(g_vec, theta_Lambda, s) = sum_Q Q^{s/2} conj(eps_Q)
    gamma_Q L(g_Q, theta^sc_{Lambda_q}, s) at truncation M, plus tail data.

    Returns dict with lhs, rhs, residual, tails.
    """
    from .qexpand import scalar_theta

    field = g.field
    D = field.D
    n = g.n
    space = AmbientSpace.make(s0, Lambda)
    jmax = M
    stream = build_vector_stream(g, space, Lambda, jmax)
    lhs, tail_l = direct_L(stream, n, D, s, M=jmax)
    rhs = complex(0)
    mtop = max(1, M // D)
    for Q in _divisors(D):
        supp = tuple(p for p in field.prime_divisors_of_D if Q % p == 0)
        rQ = field.ramified_product_ideal(supp)
        LQ = lambda_twist(Lambda, rQ)
        th = scalar_theta(LQ, mtop + 1)
        rsc = np.zeros(mtop + 1)
        for m, cval in th.coeffs.items():
            if m.denominator == 1 and int(m) <= mtop:
                rsc[int(m)] = float(cval)
        aq = {m: _gq_value(g, Q, m) for m in range(1, mtop + 1)}
        val = scalar_direct_L(aq, rsc, n, s, mtop)
        rhs += complex(s) ** 0 * Q ** (complex(s) / 2) * complex(
            epsilon_Q(g, Q)
        ).conjugate() * space.gamma_Q(Q) * val
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": abs(lhs - rhs),
        "tail_lhs": tail_l,
    }


def corollary_product_vs_sum(
    g: NewformData, space: AmbientSpace, eta_class_values=None
):
    """For even n: expand prod_p (1 + chi_eta(p^{-1}) eps_p gamma_p p^{s/2})
    into sum_Q x_Q Q^{s/2} and compare x_Q with conj(eps_Q) gamma_Q
    chi_eta(q^{-1}) exactly.  Returns (dict Q -> (product form, sum form))."""
    field = g.field
    if g.n % 2:
        raise ValueError("product form needs even weight")
    xs = {}
    for p in field.prime_divisors_of_D:
        chi_eta = 1
        if eta_class_values is not None:
            idx = class_of_ideal(field, field.ramified_prime_ideal(p).inverse())
            chi_eta = eta_class_values[idx]
        xs[p] = chi_eta * complex(epsilon_Q(g, p)) * space.gamma_p(p)
    out = {}
    for Q in _divisors(field.D):
        prod_form = complex(1)
        for p in xs:
            if Q % p == 0:
                prod_form *= xs[p]
        chi_eta_q = 1
        if eta_class_values is not None:
            supp = tuple(p for p in field.prime_divisors_of_D if Q % p == 0)
            idx = class_of_ideal(
                field, field.ramified_product_ideal(supp).inverse()
            )
            chi_eta_q = eta_class_values[idx]
        sum_form = complex(epsilon_Q(g, Q)).conjugate() * space.gamma_Q(Q) * chi_eta_q
        out[Q] = (prod_form, sum_form)
    return out


def theorem_maintheo2_rhs(
    g: NewformData,
    Lambda: HermitianLattice,
    s0: RankOneSpec,
    eta_values,
    eta_class_values,
    jmax: int = 2000,
    h: float = 1e-3,
):
    """Numeric right-hand side of the scalar-form main identity (even n):

        -2^{1-o} h_k^2/w_k^2 * d/ds [ L_sc(s) P(s) ] at s = 0,

    with P(s) = prod_p (1 + chi_eta(p^{-1}) eps_p gamma_p p^{s/2}) and
    L_sc(s) the scalar convolution with theta^sc_{eta, Lambda}, recovered
    from the vector pipeline as L_vec(s)/P(s).  Returns dict with the value
    and the vector-route cross-check."""
    field = g.field
    n = g.n
    if n % 2:
        raise ValueError("the product form needs even weight")
    space = AmbientSpace.make(s0, Lambda)
    stream = eta_weighted_stream(g, space, Lambda, eta_values, jmax)
    spec = LSeriesSpec(field, n, stream)
    ev = KernelEvaluator(spec)

    def l_vec(s):
        return ev.lambda_star(s) / completion_factor(field, n, s)

    xs = {}
    for p in field.prime_divisors_of_D:
        idx = class_of_ideal(field, field.ramified_prime_ideal(p).inverse())
        xs[p] = complex(eta_class_values[idx]) * complex(epsilon_Q(g, p)) * space.gamma_p(p)

    def P(s):
        out = complex(1)
        for p, x in xs.items():
            out *= 1 + x * p ** (complex(s) / 2)
        return out

    def Pprime(s):
        total = complex(0)
        for p, x in xs.items():
            term = x * math.log(p) / 2 * p ** (complex(s) / 2)
            for q, y in xs.items():
                if q != p:
                    term *= 1 + y * q ** (complex(s) / 2)
            total += term
        return total

    # scalar L from the ratio at staggered points (avoids zeros of P at 0)
    pts = [h, -h, 2 * h, -2 * h]
    lsc = {t: l_vec(t) / P(t) for t in pts}
    lsc0 = (4 * (lsc[h] + lsc[-h]) - (lsc[2 * h] + lsc[-2 * h])) / 6
    lsc_d1 = (lsc[h] - lsc[-h]) / (2 * h)
    lsc_d2 = (lsc[2 * h] - lsc[-2 * h]) / (4 * h)
    lsc_prime = (4 * lsc_d1 - lsc_d2) / 3
    degfac = 2 ** (1 - field.o_dk) * Frac(field.h**2, field.w**2)
    value = -float(degfac) * (lsc_prime * P(0) + lsc0 * Pprime(0)).real
    # vector-route cross-check: -deg * d/ds L_vec(0)
    dvec = (l_vec(h) - l_vec(-h)) / (2 * h)
    dvec2 = (l_vec(h / 2) - l_vec(-h / 2)) / h
    dvec_rich = (4 * dvec2 - dvec) / 3
    check = -float(degfac) * dvec_rich.real
    return {"value": value, "vector_route": check}
