"""Sponsorship game between the two CPs on ISP1, given ISP2's configuration.

Each CP decides whether to sponsor on ISP1 only (it cannot revisit its ISP2
decision at the same time). The equilibrium conditions reduce to comparing
ISP1's sponsorship charge with linear thresholds in (a1, a2, q2) whose weights
are the eight coefficients computed by :func:`nash_coefficients`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

from zrsim.market import market_share
from zrsim.user_model import CONFIGS, Config, ModelParams, consumption_table

NE_SLACK = 1e-12
DEVIATION_TOL = 1e-12


def share(params: ModelParams, m1: Config, m2: Config) -> float:
    """ISP1's market share x_{m1}^{m2}."""
    if params.mode.is_monopoly:
        return params.mode.fixed_share
    table = consumption_table(params)
    return market_share(table[m1].u, table[m2].u, params.t1, params.t2, clamp=params.allow_corner)


@dataclass(frozen=True)
class NashCoefficients:
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    gamma1: float
    gamma2: float
    delta1: float
    delta2: float
    m2: Config
    degenerate: bool = False  # a zero denominator was resolved by convention

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("alpha1", "alpha2", "beta1", "beta2", "gamma1", "gamma2", "delta1", "delta2")}

    # Right-hand sides of the equilibrium inequalities.
    def sn_upper(self, a1, a2, q2):  # CP1 keeps sponsoring against NN
        return a1 * self.alpha1 + q2 * self.alpha2

    def ns_upper(self, a1, a2, q2):
        return a2 * self.beta1 + q2 * self.beta2

    def ss_cp1(self, a1, a2, q2):  # CP1 keeps sponsoring against NS
        return a1 * self.gamma1 + q2 * self.gamma2

    def ss_cp2(self, a1, a2, q2):
        return a2 * self.delta1 + q2 * self.delta2


def _pair(x_hi, x_lo, th_other, th_lo, th_hi, own_on_isp2):
    """(1 - [(x_hi - x_lo) th_other + x_lo th_lo] / (x_hi th_hi),
        (x_hi - x_lo) th_other / (x_hi th_hi) if the CP sponsors on ISP2)."""
    den = x_hi * th_hi
    if den <= 0.0:
        return 1.0, 0.0, True
    cross = (x_hi - x_lo) * th_other
    first = 1.0 - (cross + x_lo * th_lo) / den
    second = cross / den if own_on_isp2 else 0.0
    return first, second, False


@lru_cache(maxsize=8192)
def _coefficients(market: ModelParams, m2: Config) -> NashCoefficients:
    th = consumption_table(market)
    x = {m: share(market, m, m2) for m in CONFIGS}
    cp1_on_2 = m2.sponsors(1)
    cp2_on_2 = m2.sponsors(2)
    t1m2 = th[m2].theta1
    t2m2 = th[m2].theta2
    a1, a2, da = _pair(x[Config.SN], x[Config.NN], t1m2, th[Config.NN].theta1, th[Config.SN].theta1, cp1_on_2)
    b1, b2, db = _pair(x[Config.NS], x[Config.NN], t2m2, th[Config.NN].theta2, th[Config.NS].theta2, cp2_on_2)
    g1, g2, dg = _pair(x[Config.SS], x[Config.NS], t1m2, th[Config.NS].theta1, th[Config.SS].theta1, cp1_on_2)
    d1, d2, dd = _pair(x[Config.SS], x[Config.SN], t2m2, th[Config.SN].theta2, th[Config.SS].theta2, cp2_on_2)
    return NashCoefficients(a1, a2, b1, b2, g1, g2, d1, d2, m2, da or db or dg or dd)


def market_only(params: ModelParams) -> ModelParams:
    """Params with revenue rates zeroed: the key for rate-independent caches."""
    if params.a1 == 0.0 and params.a2 == 0.0:
        return params
    return replace(params, a1=0.0, a2=0.0)


def nash_coefficients(params: ModelParams, m2: Config) -> NashCoefficients:
    return _coefficients(market_only(params), m2)


def equilibrium_configs(params: ModelParams, q1: float, q2: float, m2: Config,
                        slack: float = NE_SLACK) -> tuple:
    """Configurations on ISP1 that are Nash equilibria between the CPs,
    in the order NN, SN, NS, SS. Boundaries are inclusive.

    The tuple can be empty: for charges q2 well above the revenue rates the
    CPs' better responses may cycle with no pure equilibrium.
    """
    def _le(lhs, rhs):
        return lhs <= rhs + slack * max(1.0, abs(rhs))

    k = nash_coefficients(params, m2)
    a1, a2 = params.a1, params.a2
    sn_hi = k.sn_upper(a1, a2, q2)
    ns_hi = k.ns_upper(a1, a2, q2)
    g = k.ss_cp1(a1, a2, q2)
    d = k.ss_cp2(a1, a2, q2)
    out = []
    if _le(sn_hi, q1) and _le(ns_hi, q1):
        out.append(Config.NN)
    if _le(d, q1) and _le(q1, sn_hi):
        out.append(Config.SN)
    if _le(g, q1) and _le(q1, ns_hi):
        out.append(Config.NS)
    if _le(q1, g) and _le(q1, d):
        out.append(Config.SS)
    return tuple(out)


@dataclass(frozen=True)
class CpSurplusReport:
    cp1: float
    cp2: float

    def __getitem__(self, cp: int) -> float:
        return self.cp1 if cp == 1 else self.cp2


def cp_surplus(params: ModelParams, q1: float, m1: Config, q2: float, m2: Config) -> CpSurplusReport:
    th = consumption_table(params)
    x = share(params, m1, m2)
    out = []
    for cp in (1, 2):
        a = params.a(cp)
        on1 = (a - q1) if m1.sponsors(cp) else a
        on2 = (a - q2) if m2.sponsors(cp) else a
        out.append(x * on1 * th[m1].theta(cp) + (1.0 - x) * on2 * th[m2].theta(cp))
    return CpSurplusReport(*out)


def deviation_gains(params: ModelParams, q1: float, m1: Config, q2: float, m2: Config) -> dict:
    """Gain of each CP from reversing its ISP1 decision alone, by direct
    surplus comparison (no coefficients involved)."""
    base = cp_surplus(params, q1, m1, q2, m2)
    return {cp: cp_surplus(params, q1, m1.flipped(cp), q2, m2)[cp] - base[cp] for cp in (1, 2)}


def is_nash_by_deviation(params: ModelParams, q1: float, m1: Config, q2: float, m2: Config,
                         tol: float = DEVIATION_TOL) -> bool:
    gains = deviation_gains(params, q1, m1, q2, m2)
    return all(g <= tol for g in gains.values())
