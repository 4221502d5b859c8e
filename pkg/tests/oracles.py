"""Independent numerical oracles backing the test suite.

Nothing in this module imports the package under test.  Population-level
quantities come from quadrature of closed-form hazard laws; finite-sample
quantities are recomputed from counting-process tables with exact Fraction
arithmetic.  Tests compare package output against these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate


# ---------------------------------------------------------------------------
# population laws of the two study groups

@dataclass(frozen=True)
class Population:
    """Two-cause competing-risks law with closed-form pieces.

    ``int_f1(a, b)`` is the exact integral of the cause-1 CIF over [a, b],
    used to collapse double integrals of covariance surfaces into single
    quadratures.
    """

    alpha1: Callable[[float], float]
    alpha2: Callable[[float], float]
    f1: Callable[[float], float]
    f2: Callable[[float], float]
    surv: Callable[[float], float]
    int_f1: Callable[[float, float], float]


def group1_population() -> Population:
    """Hazards exp(-u) and 1 - exp(-u); all-cause hazard 1."""
    return Population(
        alpha1=lambda u: math.exp(-u),
        alpha2=lambda u: 1.0 - math.exp(-u),
        f1=lambda t: 0.5 * (1.0 - math.exp(-2.0 * t)),
        f2=lambda t: (1.0 - math.exp(-t)) - 0.5 * (1.0 - math.exp(-2.0 * t)),
        surv=lambda t: math.exp(-t),
        int_f1=lambda a, b: 0.5 * (b - a) + 0.25 * (math.exp(-2.0 * b)
                                                    - math.exp(-2.0 * a)),
    )


def constant_pair_population(c: float) -> Population:
    """Hazards c and 2 - c; all-cause hazard 2."""
    return Population(
        alpha1=lambda u: c,
        alpha2=lambda u: 2.0 - c,
        f1=lambda t: 0.5 * c * (1.0 - math.exp(-2.0 * t)),
        f2=lambda t: 0.5 * (2.0 - c) * (1.0 - math.exp(-2.0 * t)),
        surv=lambda t: math.exp(-2.0 * t),
        int_f1=lambda a, b: 0.5 * c * (b - a) + 0.25 * c * (math.exp(-2.0 * b)
                                                            - math.exp(-2.0 * a)),
    )


def zeta_pop(pop: Population, lam: float, s1: float, s2: float) -> float:
    """Asymptotic covariance of the normalized cause-1 CIF estimator.

    zeta(s1, s2) integrates, over u up to min(s1, s2), the squared-influence
    kernel divided by the limiting at-risk fraction y(u) = S(u) exp(-lam u).
    """
    def kern(u):
        y = pop.surv(u) * math.exp(-lam * u)
        s2u = 1.0 - pop.f2(u)
        f1u = pop.f1(u)
        return ((s2u - pop.f1(s1)) * (s2u - pop.f1(s2)) * pop.alpha1(u)
                + (f1u - pop.f1(s1)) * (f1u - pop.f1(s2)) * pop.alpha2(u)) / y

    val, _ = integrate.quad(kern, 0.0, min(s1, s2), epsabs=1e-12, epsrel=1e-12)
    return val


def xi_pop(pop: Population, s: float) -> float:
    """Mean-drift term of the exchangeably weighted resampling limit.

    Censoring-free: only hazards and CIFs enter.
    """
    def kern(u):
        s2u = 1.0 - pop.f2(u)
        return ((s2u - pop.f1(s)) * pop.alpha1(u)
                + (pop.f1(u) - pop.f1(s)) * pop.alpha2(u))

    val, _ = integrate.quad(kern, 0.0, s, epsabs=1e-12, epsrel=1e-12)
    return val


def int_xi(pop: Population, t1: float, t2: float) -> float:
    """Integral of xi over the test window (nested quadrature)."""
    val, _ = integrate.quad(lambda s: xi_pop(pop, s), t1, t2,
                            epsabs=1e-10, epsrel=1e-10, limit=200)
    return val


def double_zeta_integral(pop: Population, lam: float, t1: float,
                         t2: float) -> float:
    """Exact collapse of the double integral of zeta over [t1, t2]^2.

    Writing the kernel as a(u) - b(u)(F1(r) + F1(s)) + c(u) F1(r) F1(s) and
    swapping integration order turns the triple integral into a single
    quadrature with L(u) = t2 - max(u, t1) and M(u) = int F1 over
    [max(u, t1), t2].
    """
    def outer(u):
        y = pop.surv(u) * math.exp(-lam * u)
        s2u = 1.0 - pop.f2(u)
        f1u = pop.f1(u)
        a = (s2u**2 * pop.alpha1(u) + f1u**2 * pop.alpha2(u)) / y
        b = (s2u * pop.alpha1(u) + f1u * pop.alpha2(u)) / y
        c = (pop.alpha1(u) + pop.alpha2(u)) / y
        lo = max(u, t1)
        length = t2 - lo
        mf1 = pop.int_f1(lo, t2)
        return a * length**2 - 2.0 * b * length * mf1 + c * mf1**2

    val, _ = integrate.quad(outer, 0.0, t2, points=[t1], epsabs=1e-11,
                            epsrel=1e-11, limit=200)
    return val


def sigma_zeta2(pop1: Population, pop2: Population, lam1: float, lam2: float,
                n1: int, n2: int, t1: float, t2: float) -> float:
    """Limit variance of the two-sample integral statistic (rho = 1)."""
    n = n1 + n2
    return ((n2 / n) * double_zeta_integral(pop1, lam1, t1, t2)
            + (n1 / n) * double_zeta_integral(pop2, lam2, t1, t2))


def sigma_zeta_tilde2(pop1: Population, pop2: Population, lam1: float,
                      lam2: float, n1: int, n2: int, t1: float,
                      t2: float) -> float:
    """Limit variance of the pooled exchangeably weighted statistic.

    Differs from sigma_zeta2 by a rank-one correction built from the
    difference of the two groups' xi functions.
    """
    n = n1 + n2
    p1, p2 = n1 / n, n2 / n
    gap = int_xi(pop1, t1, t2) - int_xi(pop2, t1, t2)
    return sigma_zeta2(pop1, pop2, lam1, lam2, n1, n2, t1, t2) \
        - 0.5 * p1 * p2 * gap * gap


# ---------------------------------------------------------------------------
# exact finite-sample recomputation with Fractions

@dataclass
class BruteTables:
    """Estimator tables recomputed with exact rational arithmetic.

    All lists are indexed by the grid of distinct exit times.  ``*_left``
    holds the left limit at each grid time.
    """

    times: list
    at_risk: list
    d1: list
    d2: list
    km: list
    km_left: list
    f1: list
    f1_left: list
    f2: list
    f2_left: list
    na1: list
    na2: list
    na1_left: list
    na2_left: list
    sig1: list

    def step(self, values, t, initial):
        """Right-continuous lookup of a value list at time t."""
        out = initial
        for tk, v in zip(self.times, values):
            if tk <= t:
                out = v
            else:
                break
        return out

    def f1_at(self, t):
        return self.step(self.f1, t, Fraction(0))

    def f2_at(self, t):
        return self.step(self.f2, t, Fraction(0))

    def km_at(self, t):
        return self.step(self.km, t, Fraction(1))


def brute_tables(times, at_risk, d1, d2) -> BruteTables:
    """Recompute KM, CIFs, cumulative hazards and the variance sum exactly."""
    times = [Fraction(t) if not isinstance(t, float) else Fraction(t)
             for t in times]
    km, f1, f2, na1, na2, sig1 = [], [], [], [], [], []
    km_left, f1_left, f2_left, na1_left, na2_left = [], [], [], [], []
    s, c1, c2, h1, h2, v1 = (Fraction(1), Fraction(0), Fraction(0),
                             Fraction(0), Fraction(0), Fraction(0))
    for y, e1, e2 in zip(at_risk, d1, d2):
        km_left.append(s)
        f1_left.append(c1)
        f2_left.append(c2)
        na1_left.append(h1)
        na2_left.append(h2)
        y = Fraction(y)
        c1 += s * Fraction(e1) / y
        c2 += s * Fraction(e2) / y
        h1 += Fraction(e1) / y
        h2 += Fraction(e2) / y
        v1 += Fraction(e1) / y**2
        s *= 1 - Fraction(e1 + e2) / y
        km.append(s)
        f1.append(c1)
        f2.append(c2)
        na1.append(h1)
        na2.append(h2)
        sig1.append(v1)
    return BruteTables(times, list(at_risk), list(d1), list(d2), km, km_left,
                       f1, f1_left, f2, f2_left, na1, na2, na1_left, na2_left,
                       sig1)


def _merged_grid(bt: BruteTables, rho_steps, a, b):
    pts = {Fraction(a), Fraction(b)}
    pts.update(t for t in bt.times if a < t < b)
    pts.update(t for t, _ in rho_steps if a < t < b)
    return sorted(pts)


def rho_value(rho_steps, t):
    out = rho_steps[0][1]
    for tk, v in rho_steps:
        if tk <= t:
            out = v
    return out


def brute_rho_integrals(bt: BruteTables, rho_steps, a, b):
    """(int rho, int rho * F1hat) over [a, b], exactly."""
    if a >= b:
        return Fraction(0), Fraction(0)
    pts = _merged_grid(bt, rho_steps, a, b)
    total_r = Fraction(0)
    total_rf = Fraction(0)
    for lo, hi in zip(pts[:-1], pts[1:]):
        r = rho_value(rho_steps, lo)
        total_r += r * (hi - lo)
        total_rf += r * bt.f1_at(lo) * (hi - lo)
    return total_r, total_rf


def brute_entry_integrals(bt: BruteTables, jumps, t1, t2, rho_steps):
    """Per-entry window integrals of the Z functions, exactly.

    ``jumps`` is a per-subject list of (time, cause) with None time for
    censored subjects.  Returns 2n Fractions: cause-1 slots then cause-2
    slots, matching the pooled layout.
    """
    t1, t2 = Fraction(t1), Fraction(t2)
    n = len(jumps)
    out = [Fraction(0)] * (2 * n)
    for i, (u, cause) in enumerate(jumps):
        if u is None or cause == 0:
            continue
        u = Fraction(u)
        if u > t2:
            continue
        k = bt.times.index(u)
        y = Fraction(bt.at_risk[k])
        start = max(u, t1)
        r_int, rf_int = brute_rho_integrals(bt, rho_steps, start, t2)
        if cause == 1:
            factor = 1 - bt.f2_left[k]
            out[i] = (factor * r_int - rf_int) / y
        else:
            factor = bt.f1_left[k]
            out[n + i] = (factor * r_int - rf_int) / y
    return out


def brute_tn_unscaled(bt1: BruteTables, bt2: BruteTables, t1, t2, rho_steps):
    """int rho (F1hat_1 - F1hat_2) over [t1, t2] as an exact Fraction."""
    t1, t2 = Fraction(t1), Fraction(t2)
    pts = {t1, t2}
    pts.update(t for t in bt1.times if t1 < t < t2)
    pts.update(t for t in bt2.times if t1 < t < t2)
    pts.update(t for t, _ in rho_steps if t1 < t < t2)
    pts = sorted(pts)
    total = Fraction(0)
    for lo, hi in zip(pts[:-1], pts[1:]):
        total += (rho_value(rho_steps, lo)
                  * (bt1.f1_at(lo) - bt2.f1_at(lo)) * (hi - lo))
    return total


def brute_zeta(bt: BruteTables, n: int, s1, s2):
    """Plug-in covariance of the normalized CIF estimator, exactly."""
    s1, s2 = Fraction(s1), Fraction(s2)
    lo = min(s1, s2)
    total = Fraction(0)
    for k, t in enumerate(bt.times):
        if t > lo:
            break
        y = Fraction(bt.at_risk[k])
        w1 = Fraction(n) * Fraction(bt.d1[k]) / y**2
        w2 = Fraction(n) * Fraction(bt.d2[k]) / y**2
        a1 = 1 - bt.f2_left[k]
        a2 = bt.f1_left[k]
        total += w1 * (a1 - bt.f1_at(s1)) * (a1 - bt.f1_at(s2))
        total += w2 * (a2 - bt.f1_at(s1)) * (a2 - bt.f1_at(s2))
    return total


def brute_xi_hat(bt: BruteTables, s):
    """Plug-in xi: sum of (1 - A1(u-) - A2(u-)) dF1hat(u) up to s."""
    s = Fraction(s)
    total = Fraction(0)
    for k, t in enumerate(bt.times):
        if t > s:
            break
        y = Fraction(bt.at_risk[k])
        df1 = bt.km_left[k] * Fraction(bt.d1[k]) / y
        total += (1 - bt.na1_left[k] - bt.na2_left[k]) * df1
    return total


# spot values for the group-1 law, cross-checked against the simplified
# closed form xi(s) = int_0^s (1 - u) exp(-2u) du
XI1_AT_1 = 0.28383382080915315
XI1_AT_15 = 0.274893534183932


if __name__ == "__main__":
    pop1 = group1_population()
    print("xi1(1.0)  =", xi_pop(pop1, 1.0))
    print("xi1(1.5)  =", xi_pop(pop1, 1.5))
    for pair in ((0.75, 0.75), (0.75, 1.5), (1.5, 1.5)):
        print(f"zeta1{pair} =", zeta_pop(pop1, 0.0, *pair))
    pop2 = constant_pair_population(1.0)
    print("sigma_zeta2 null (0,0) =",
          sigma_zeta2(pop1, pop2, 0.0, 0.0, 1, 1, 0.0, 1.5))
    print("sigma_zeta_tilde2 null (0,0) =",
          sigma_zeta_tilde2(pop1, pop2, 0.0, 0.0, 1, 1, 0.0, 1.5))
