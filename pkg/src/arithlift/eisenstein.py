"""Holomorphic-part coefficients a+ of the central derivative of the
incoherent weight-one Eisenstein series, the genus theta combination coming
from the Siegel-Weil identity, and the CM-value right-hand side.

All a+ values are exact ArithmeticNumbers:

  a+(0, phi)  = phi(0) (gamma + log 4 + log pi - log D - 2 LCHI)
  a+(m, phi)  = -(w/2h) rho(mD/p^eps) ord_p(pm) log p
                 * sum_{Q(mu) = m} 2^{s(mu)} phi(mu)        (Diff(m) = {p})

with a+ = 0 for m < 0 or |Diff(m)| > 1; s(mu) counts the primes q | D where
mu_q = 0, and eps = 1 exactly when p is inert.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .errors import InsufficientPrecision
from .fqm import (
    FiniteQuadraticModule,
    SFunction,
    discriminant_module,
    phi_r,
    rank_one_spec_module,
    transfer_invariant,
)
from .hermlat import HermitianLattice, RankOneSpec, diff_set, genus_rank_one
from .quadfield import AN, ArithmeticNumber, valuation

Frac = Fraction

_module_cache: dict = {}


def s0_module(s0: RankOneSpec) -> FiniteQuadraticModule:
    if s0 not in _module_cache:
        _module_cache[s0] = rank_one_spec_module(s0)
    return _module_cache[s0]


def _resolve_phi(s0: RankOneSpec, phi) -> SFunction:
    """phi may be an SFunction on the spec module or an r-support tuple."""
    if isinstance(phi, SFunction):
        return phi
    return phi_r(s0_module(s0), tuple(phi))


_aplus_cache: dict = {}


def aplus(s0: RankOneSpec, m, phi) -> ArithmeticNumber:
    """The coefficient a+(m, phi), exact in the symbol ring."""
    if not isinstance(phi, SFunction):
        key = (s0, Frac(m), tuple(phi))
        if key not in _aplus_cache:
            _aplus_cache[key] = _aplus_impl(s0, m, phi)
        return _aplus_cache[key]
    return _aplus_impl(s0, m, phi)


def _aplus_impl(s0: RankOneSpec, m, phi) -> ArithmeticNumber:
    m = Frac(m)
    k = s0.field
    phi = _resolve_phi(s0, phi)
    module = phi.module
    if m < 0:
        return AN.rational(0)
    if m == 0:
        base = (
            AN.euler_gamma()
            + AN.log_rational(4)
            + AN.log_pi()
            - AN.log_rational(k.D)
            - AN.lchi_symbol(2)
        )
        return base * Frac(phi.value_at(module.zero()))
    diff = diff_set(s0, m)
    if len(diff) != 1:
        return AN.rational(0)
    (p,) = diff.primes
    eps = 1 if k.splitting(p) == "inert" else 0
    rho_val = k.rho(m * k.D / p**eps)
    ordp = 1 + valuation(m, p)
    weight = Frac(0)
    target = m % 1
    for el in module.elements:
        if module.Q(el) == target:
            val = phi.value_at(el)
            if val:
                s_mu = k.o_dk - len(module.supp(el))
                weight += Frac(val) * 2**s_mu
    coeff = -Frac(k.w, 2 * k.h) * rho_val * ordp * weight
    return AN.log_prime(p, coeff)


@dataclass
class EisensteinCoefficients:
    """Table of a+(m) as functionals: for each exponent m < prec (with
    denominator dividing D) the tuple of a+(m, delta_mu) over the module
    elements in their fixed order."""

    s0: RankOneSpec
    module: FiniteQuadraticModule
    table: dict  # Frac -> tuple[ArithmeticNumber, ...]
    prec: Frac

    def functional(self, m):
        m = Frac(m)
        if m >= self.prec:
            raise InsufficientPrecision(f"a+ table stops before {m}")
        if m in self.table:
            return self.table[m]
        return tuple(AN.rational(0) for _ in self.module.elements)

    def apply(self, m, phi: SFunction) -> ArithmeticNumber:
        fn = self.functional(m)
        out = AN.rational(0)
        for val, a in zip(phi.values, fn):
            if val:
                out = out + a * Frac(val)
        return out


def holomorphic_part(s0: RankOneSpec, prec) -> EisensteinCoefficients:
    """All a+(m) for 0 <= m < prec with denominator dividing D."""
    prec = Frac(prec)
    module = s0_module(s0)
    D = s0.field.D
    table: dict = {}
    j = 0
    while Frac(j, D) < prec:
        m = Frac(j, D)
        fn = tuple(aplus(s0, m, SFunction.delta(module, el)) for el in module.elements)
        if any(not a.is_zero() for a in fn):
            table[m] = fn
        j += 1
    return EisensteinCoefficients(s0, module, table, prec)


@dataclass
class SiegelWeilTable:
    """Coefficient table of (2^o/h) sum over the genus of S0(infinity) of the
    rank-one theta functions: entry at m applies a Delta-invariant phi on the
    spec module via orbit-key transfer to each genus member.  The uniform
    factor v multiplying the whole antiholomorphic series is kept implicit;
    exponents index e^{2 pi i m tau-bar} in the positive definite
    normalization of the genus members."""

    s0: RankOneSpec
    table: dict  # Frac -> list of (orbit_key, count)
    prec: Frac

    def apply(self, m, phi: SFunction):
        m = Frac(m)
        if m >= self.prec:
            raise InsufficientPrecision(f"Siegel-Weil table stops before {m}")
        module = phi.module
        lookup: dict = {}
        for el in module.elements:
            lookup.setdefault(module.orbit_key(el), phi.value_at(el))
        total = 0
        for key, count in self.table.get(m, ()):  # count is a Fraction
            total += lookup[key] * count
        return total


def siegel_weil_theta(s0: RankOneSpec, prec) -> SiegelWeilTable:
    prec = Frac(prec)
    k = s0.field
    genus = genus_rank_one(k, s0)
    scale = Frac(2**k.o_dk, k.h)
    table: dict = {}
    for L0 in genus:
        module = discriminant_module(L0)
        dk = k.different_ideal()
        sup = L0.r_inverse_superlattice(dk)
        for coords, val in sup.vectors_up_to(prec):
            if val >= prec:
                continue
            kvec = sup.kvector_of_coords(coords)
            el = module.reduce_coords(L0.coords_of_kvector(kvec))
            key = module.orbit_key(el)
            bucket = table.setdefault(val, {})
            bucket[key] = bucket.get(key, Frac(0)) + scale
    return SiegelWeilTable(
        s0, {m: sorted(b.items()) for m, b in table.items()}, prec
    )


# ---------------------------------------------------------------------------
# CM value right-hand side


def ct_f_eisenstein_theta(
    f,
    eis: EisensteinCoefficients,
    theta,
) -> ArithmeticNumber:
    """CT[{f+, E (x) theta_Lambda}] as an exact ArithmeticNumber; f+ must be
    a stream of SFunctions on the orthogonal sum (spec module) x (Lambda
    module) and have rational coefficients.

    theta is the dual-valued QExpansion of Lambda (from theta_series).
    """
    M = f.module
    if M is None or M.factors is None:
        raise ValueError("CT assembly needs a product-module stream")
    M0, ML = M.factors
    n0 = M0.coord_len()
    depth = f.principal_depth()
    if eis.prec <= depth or theta.prec <= depth:
        raise InsufficientPrecision("tables do not cover the principal part")
    total = AN.rational(0)
    D = eis.s0.field.D
    for t, cf in f.c_plus.items():
        if t > 0 or cf.is_zero():
            continue
        span = -t
        # m1 + m2 = span over (1/D)-grid
        j = 0
        while Frac(j, D) <= span:
            m1 = Frac(j, D)
            m2 = span - m1
            fn1 = eis.functional(m1)
            try:
                r2 = theta.coefficient(m2)
            except InsufficientPrecision:
                j += 1
                continue
            if r2.is_zero():
                j += 1
                continue
            for idx, el in enumerate(M.elements):
                v = cf.values[idx]
                if not v:
                    continue
                a_part = fn1[M0.index[el[:n0]]]
                r_part = r2.value_at(el[n0:])
                if not a_part.is_zero() and r_part:
                    total = total + a_part * (Frac(v) * Frac(r_part))
            j += 1
    return total


def cm_value_rhs(
    f,
    s0: RankOneSpec,
    Lambda: HermitianLattice,
    prec,
    lfun_handle=None,
    dps: int = 25,
):
    """-L'(xi(f), theta_Lambda, 0) + CT[{f+, E (x) theta_Lambda}], numeric.

    lfun_handle(f) must return L'(xi(f), theta_Lambda, 0); it may be omitted
    when f is weakly holomorphic (c- = 0).
    """
    from .qexpand import theta_series

    eis = holomorphic_part(s0, Frac(prec))
    theta = theta_series(Lambda, Frac(prec))
    ct = ct_f_eisenstein_theta(f, eis, theta)
    value = ct.evaluate(field=s0.field, dps=dps)
    if f.c_minus:
        if lfun_handle is None:
            raise ValueError("c- is nonzero: an L-function evaluator is required")
        value = value - mp.mpf(lfun_handle(f))
    return value
