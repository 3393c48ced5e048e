"""Intersection-number bookkeeping: local lengths nu_p, weighted geometric
point counts, CM-cycle degrees, the cotautological pairing, the
Chowla-Selberg constant, and exact cross-checks of the proper-intersection
identity and the scalar local identity.

The geometric left-hand sides (heights on integral models) enter only
through their closed-form right-hand sides; this module never claims an
independent height computation.  All identity checks run in the
ArithmeticNumber ring, so equalities are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .eisenstein import aplus, holomorphic_part, s0_module
from .errors import DegenerateTestFunction, SplitPrime
from .fqm import SFunction, discriminant_module, phi_r
from .hermlat import (
    HermitianLattice,
    RankOneSpec,
    aut_size,
    diff_set,
    rep_number,
)
from .quadfield import AN, ArithmeticNumber, QuadField, valuation

Frac = Fraction


@dataclass
class CycleConfig:
    """A CM-cycle configuration: the incoherent rank-one spec S0 and a
    self-dual positive definite Lambda of rank n - 1."""

    s0: RankOneSpec
    Lambda: HermitianLattice

    def __post_init__(self):
        if not self.s0.is_incoherent:
            raise ValueError("S0 must be incoherent")
        if not self.Lambda.is_self_dual():
            raise ValueError("Lambda must be self-dual")
        if not self.Lambda.is_positive_definite():
            raise ValueError("Lambda must be positive definite")

    @property
    def field(self) -> QuadField:
        return self.s0.field

    @property
    def n(self) -> int:
        return 1 + self.Lambda.rank

    def ambient_inv(self, p: int) -> int:
        return self.s0.inv_p(p) * self.Lambda.local_invariant(p)


def nu_p(field: QuadField, m1, p: int) -> Frac:
    """Local ring length ord_p(p m1) * (1/2 inert, 1 ramified)."""
    kind = field.splitting(p)
    if kind == "split":
        raise SplitPrime(f"{p} splits in the field")
    m1 = Frac(m1)
    ordp = 1 + valuation(m1, p)
    return Frac(ordp, 2) if kind == "inert" else Frac(ordp)


def _r_parts(field: QuadField, r_supp):
    r_supp = tuple(sorted(r_supp))
    return r_supp, field.ramified_product_ideal(r_supp)


def geometric_count(cfg: CycleConfig, m1, m2, r_supp) -> Frac:
    """(h/w) R_Lambda(m2, r)/|Aut Lambda| rho(m1 N(s)/p^eps) when Diff(m1)
    is a single prime p (s = prime-to-p part of r); 0 otherwise."""
    m1, m2 = Frac(m1), Frac(m2)
    if m1 <= 0:
        raise ValueError("geometric count needs m1 > 0")
    k = cfg.field
    diff = diff_set(cfg.s0, m1)
    if len(diff) != 1:
        return Frac(0)
    (p,) = diff.primes
    eps = 1 if k.splitting(p) == "inert" else 0
    s_supp = tuple(q for q in r_supp if q != p)
    _, s_ideal = _r_parts(k, s_supp)
    rho_val = k.rho(m1 * s_ideal.norm() / p**eps)
    if rho_val == 0:
        return Frac(0)
    _, r_ideal = _r_parts(k, r_supp)
    rep = rep_number(cfg.Lambda, m2, r_ideal)
    return Frac(k.h, k.w) * Frac(rep, aut_size(cfg.Lambda)) * rho_val


def deg_X_hat(cfg: CycleConfig, m1, m2, r_supp) -> ArithmeticNumber:
    """log N(p-frak) * nu_p(m1) * geometric_count, supported on the single
    Diff prime; N(p-frak) = p^2 for inert p and p for ramified p."""
    m1 = Frac(m1)
    diff = diff_set(cfg.s0, m1)
    if len(diff) != 1:
        return AN.rational(0)
    (p,) = diff.primes
    count = geometric_count(cfg, m1, m2, r_supp)
    if count == 0:
        return AN.rational(0)
    k = cfg.field
    log_np_coeff = 2 if k.splitting(p) == "inert" else 1
    coeff = log_np_coeff * nu_p(k, m1, p) * count
    return AN.log_prime(p, coeff)


def deg_cm_cycle(cfg: CycleConfig) -> Frac:
    """deg_C Y = h^2/w^2 * 2^{1-o(d)}/|Aut(Lambda)|."""
    k = cfg.field
    return Frac(k.h**2, k.w**2) * Frac(2, 2**k.o_dk) / aut_size(cfg.Lambda)


def eisenstein_side(cfg: CycleConfig, m1, m2, r_supp) -> ArithmeticNumber:
    """-deg_C Y * a+(m1, r) * R_Lambda(m2, r)."""
    k = cfg.field
    _, r_ideal = _r_parts(k, r_supp)
    rep = rep_number(cfg.Lambda, Frac(m2), r_ideal)
    if rep == 0:
        return AN.rational(0)
    a = aplus(cfg.s0, Frac(m1), tuple(r_supp))
    return a * (-deg_cm_cycle(cfg) * rep)


def proper_identity_check(cfg: CycleConfig, m1, m2, r_supp):
    """Exact comparison of the two pipelines for the 0-cycle degree.

    Returns (equal, degree side, Eisenstein side)."""
    lhs = deg_X_hat(cfg, m1, m2, r_supp)
    rhs = eisenstein_side(cfg, m1, m2, r_supp)
    return (lhs - rhs).is_zero(), lhs, rhs


def local_combo_check(s0_or_field, ell: int, m1, r_supp):
    """The local identity at ell | D, under the hypothesis Diff(m1) = {p}:

        rho_ell(m1 D) sum_{mu in local module, Q(mu) = m1 in Q_ell/Z_ell}
            2^{s_ell(mu)} phi_{r,ell}(mu)  =  2 rho_ell(m1 N(s)),

    with s the prime-to-p part of r.  The local rank-one module is enumerated
    as the ell-primary part of the spec's discriminant module, so the unit
    class of the form is the one attached to S0.

    Returns (holds, lhs, rhs, case_label).
    """
    from .hermlat import standard_incoherent

    if isinstance(s0_or_field, RankOneSpec):
        s0 = s0_or_field
    else:
        s0 = standard_incoherent(s0_or_field)
    field = s0.field
    m1 = Frac(m1)
    D = field.D
    if ell not in field.prime_divisors_of_D:
        raise ValueError(f"{ell} must divide D")
    diff = diff_set(s0, m1)
    if len(diff) != 1:
        raise ValueError("the local identity presumes Diff(m1) a singleton")
    (p,) = diff.primes
    s_norm = 1
    for q in r_supp:
        if q != p:
            s_norm *= q
    rhs = 2 * field.rho_local(ell, m1 * s_norm)

    module = s0_module(s0)
    v = valuation(m1, ell)
    lhs_sum = 0
    if v >= -1:
        # the ell-part of m1 as an element of (1/ell) Z / Z
        target = (m1 - _away_part(m1, ell)) % 1 if v == -1 else Frac(0)
        for el in module.elements:
            y = module.proj_p(el, ell)
            if el != y:
                continue  # enumerate the ell-primary subgroup once
            if module.Q(y) % 1 != target:
                continue
            if ell not in r_supp and y != module.zero():
                continue  # phi_{r, ell} vanishes off the trivial coset
            lhs_sum += 2 if y == module.zero() else 1
    lhs = field.rho_local(ell, m1 * D) * lhs_sum

    if v >= 0:
        case = "case1"
    elif v < -1:
        case = "case2"
    elif ell not in r_supp:
        case = "case3"
    elif ell != p:
        case = "case4"
    else:
        case = "case5"
    return lhs == rhs, lhs, rhs, case


def _away_part(m: Frac, ell: int) -> Frac:
    """The prime-to-ell part of m modulo Z_ell: m minus its ell-component
    under the partial-fraction (CRT) decomposition of Q/Z."""
    v = valuation(m, ell)
    if v >= 0:
        return m
    # write m = a / (ell^e b); the ell-component is (a (b^{-1} mod ell^e))/ell^e
    e = -v
    le = ell**e
    b = m.denominator // le
    a = m.numerator
    comp = Frac((a * pow(b, -1, le)) % le, le)
    return m - comp


def taut_pairing(cfg: CycleConfig, phi: SFunction) -> ArithmeticNumber:
    """[T-hat : Y] solved from phi(0) [T-hat : Y] = -deg_C Y a+(0, phi):
    the result -deg_C Y a+(0, phi)/phi(0) is phi-independent."""
    module = phi.module
    v0 = phi.value_at(module.zero())
    if v0 == 0:
        raise DegenerateTestFunction("phi(0) must be nonzero")
    a = aplus(cfg.s0, 0, phi)
    return a * (-deg_cm_cycle(cfg) / Frac(v0))


def chowla_selberg_rhs(field: QuadField) -> ArithmeticNumber:
    """-2 h_Falt(E) for CM by O_k: log(2 pi) + (1/2) log D + LCHI."""
    return (
        AN.log_rational(2)
        + AN.log_pi()
        + AN.log_rational(field.D, Frac(1, 2))
        + AN.lchi_symbol(1)
    )


# ---------------------------------------------------------------------------
# main theorem assembly


def main_theorem_rhs(cfg: CycleConfig, f, jmax: int = 20000, dps: int = 25):
    """-deg_C Y * L'(xi(f), theta_Lambda, 0) for a harmonic form f given by
    its coefficient streams on the (S0-module) x (Lambda-module) product.

    The conjugates in the convolution cancel the xi-normalization: the
    completed function is built from the stream
    c(m) = (4 pi m)^{n-1} {c^-(-m), R_Lambda(m)} which reduces to
    {conj(b(m)), R_Lambda(m)} for b the coefficients of xi(f)."""
    import numpy as np

    from .lfunc import KernelEvaluator, LSeriesSpec, completion_factor
    from .qexpand import theta_series

    k = cfg.field
    D = k.D
    n = cfg.n
    deg = deg_cm_cycle(cfg)
    if not f.c_minus:
        return {"value": 0.0, "lprime": 0.0, "deg": deg}
    module = f.module
    M0, ML = module.factors
    n0 = M0.coord_len()
    depth = -min(f.c_minus)
    theta = theta_series(cfg.Lambda, depth + 1)
    stream = np.zeros(int(depth * D) + 1, dtype=complex)
    for mneg, c in f.c_minus.items():
        m = -mneg
        j = int(m * D)
        r = theta.coefficient(m)
        total = complex(0)
        for idx, el in enumerate(module.elements):
            v = c.values[idx]
            if not v:
                continue
            if el[:n0] != M0.zero():
                continue
            total += complex(v) * float(r.value_at(el[n0:]))
        stream[j] += (4 * mp.pi * float(m)) ** (n - 1) * total
    spec = LSeriesSpec(k, n, stream)
    ev = KernelEvaluator(spec)
    lp = ev.l_prime_at_0(dps=dps)
    return {"value": -float(deg) * lp, "lprime": lp, "deg": deg}


def weakly_holomorphic_ledger(cfg: CycleConfig, m, r_supp, c00=Frac(0)):
    """Exact ledger identity for a weakly holomorphic f of f_{m,r} shape
    with R_Lambda(m, r) = 0:

        sum_{m1 + m2 = m, m1 > 0} deg X-hat(m1, m2, r)
          + deg_C Y * CT[{f+, E (x) theta}]
          - c+(0,0) * deg_C Y * a+(0, r)                       == 0,

    assembled from the three pipelines; returns (is_zero, the three parts).
    """
    from .eisenstein import ct_f_eisenstein_theta, holomorphic_part as hol
    from .fqm import FiniteQuadraticModule, phi_basis
    from .qexpand import HarmonicFormData, theta_series

    k = cfg.field
    D = k.D
    m = Frac(m)
    deg = deg_cm_cycle(cfg)
    _, r_ideal = _r_parts(k, r_supp)
    if rep_number(cfg.Lambda, m, r_ideal) != 0:
        raise ValueError("ledger identity needs R_Lambda(m, r) = 0")
    # proper part
    proper = AN.rational(0)
    j = 1
    while Frac(j, D) <= m:
        m1 = Frac(j, D)
        proper = proper + deg_X_hat(cfg, m1, m - m1, r_supp)
        j += 1
    # CM-value constant term for f+ = phi_{m,r} q^{-m} + c00 phi_0
    M0 = s0_module(cfg.s0)
    ML = discriminant_module(cfg.Lambda)
    M = FiniteQuadraticModule.orthogonal_sum(M0, ML)
    cp = {-m: phi_basis(M, m, r_supp)}
    if c00:
        cp[Frac(0)] = SFunction.delta(M, M.zero()) * c00
    f = HarmonicFormData(n=cfg.n, module=M, c_plus=cp, c_minus={}, prec=Frac(1))
    eis = hol(cfg.s0, m + 1)
    theta = theta_series(cfg.Lambda, m + 1)
    ct = ct_f_eisenstein_theta(f, eis, theta)
    cm_part = ct * deg
    # cotautological part
    taut = taut_pairing(cfg, phi_r(M0, r_supp)) * c00 if c00 else AN.rational(0)
    total = proper + cm_part + taut
    return total.is_zero(), proper, cm_part, taut
