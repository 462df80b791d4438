"""ISP surplus, best-response sponsorship charges and sponsorship thresholds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from zrsim.cp_game import DEVIATION_TOL, NE_SLACK, deviation_gains, nash_coefficients, share
from zrsim.errors import ParameterError
from zrsim.user_model import CONFIGS, Config, ModelParams, consumption_table

TIE_TOL = 1e-9
NN_MARKUP = 1e-6
NN_OFFSET = 1e-9


def isp_surplus(params: ModelParams, q1: float, m1: Config, q2: float, m2: Config, isp_index: int = 1) -> float:
    """Revenue of ISP ``isp_index``: its share times sponsorship charges on
    sponsored bytes plus user charges on the rest."""
    th = consumption_table(params)
    x = share(params, m1, m2)
    if isp_index == 1:
        frac, q, m = x, q1, m1
    else:
        frac, q, m = 1.0 - x, q2, m2
    per_user = sum((q if m.sponsors(cp) else params.p) * th[m].theta(cp) for cp in (1, 2))
    return frac * per_user


def own_view(params: ModelParams, isp_index: int) -> ModelParams:
    """Params with ``isp_index`` relabelled as ISP1."""
    return params if isp_index == 1 else params.swapped()


@dataclass(frozen=True)
class BestResponse:
    q: float
    config: Config
    profit: float
    # config -> (q, profit), or None when the config cannot be induced
    per_config: dict = field(compare=False)

    def feasible(self, m: Config) -> bool:
        return self.per_config.get(m) is not None


def nn_lower_bound(params: ModelParams, q_other: float, m_other: Config, isp_index: int = 1) -> float:
    """Smallest charge at which NN is an equilibrium on the responding ISP."""
    view = own_view(params, isp_index)
    k = nash_coefficients(view, m_other)
    return max(k.sn_upper(view.a1, view.a2, q_other), k.ns_upper(view.a1, view.a2, q_other))


def nn_enforcement_price(params: ModelParams, q_other: float, m_other: Config, isp_index: int = 1) -> float:
    return nn_lower_bound(params, q_other, m_other, isp_index) * (1.0 + NN_MARKUP) + NN_OFFSET


def _feasible(lo: float, q: float) -> bool:
    return lo <= q + NE_SLACK * max(1.0, abs(q))


def best_response(params: ModelParams, q_other: float, m_other: Config, isp_index: int = 1) -> BestResponse:
    """Profit-maximizing charge and induced CP equilibrium for one ISP, given
    the rival's charge and configuration.

    Within each target configuration the profit is increasing in the charge, so
    the optimum sits at the upper end of the interval on which that
    configuration is an equilibrium. Ties within TIE_TOL go to the earlier
    configuration in NN, SN, NS, SS order.
    """
    view = own_view(params, isp_index)
    k = nash_coefficients(view, m_other)
    a1, a2 = view.a1, view.a2
    th = consumption_table(view)
    p = view.p
    sn_hi = k.sn_upper(a1, a2, q_other)
    ns_hi = k.ns_upper(a1, a2, q_other)
    g = k.ss_cp1(a1, a2, q_other)
    d = k.ss_cp2(a1, a2, q_other)

    per = {}
    q_nn = max(sn_hi, ns_hi) * (1.0 + NN_MARKUP) + NN_OFFSET
    per[Config.NN] = (q_nn, share(view, Config.NN, m_other) * p * th[Config.NN].total)
    if _feasible(d, sn_hi):
        t = th[Config.SN]
        per[Config.SN] = (sn_hi, share(view, Config.SN, m_other) * (sn_hi * t.theta1 + p * t.theta2))
    else:
        per[Config.SN] = None
    if _feasible(g, ns_hi):
        t = th[Config.NS]
        per[Config.NS] = (ns_hi, share(view, Config.NS, m_other) * (ns_hi * t.theta2 + p * t.theta1))
    else:
        per[Config.NS] = None
    q_ss = min(g, d)
    per[Config.SS] = (q_ss, share(view, Config.SS, m_other) * q_ss * th[Config.SS].total)

    best = None
    for m in CONFIGS:
        entry = per[m]
        if entry is None:
            continue
        if best is None or entry[1] > best[2] + TIE_TOL * max(1.0, abs(best[2])):
            best = (entry[0], m, entry[1])
    return BestResponse(best[0], best[1], best[2], per)


def grid_best_response(params: ModelParams, q_other: float, m_other: Config, points: int = 10_000,
                       q_max: Optional[float] = None) -> tuple:
    """Brute-force ISP1 optimum: scan q on a uniform grid, find the CP
    equilibria at each q by direct deviation checks, keep the best one.

    Returns (q, config, profit).
    """
    if q_max is None:
        q_max = params.a1 + params.a2 + q_other
    qs = np.linspace(0.0, q_max, points)
    best = (math.nan, None, -math.inf)
    for m in CONFIGS:
        gains = deviation_gains(params, qs, m, q_other, m_other)
        ok = (gains[1] <= DEVIATION_TOL) & (gains[2] <= DEVIATION_TOL)
        if not ok.any():
            continue
        r = np.where(ok, isp_surplus(params, qs, m, q_other, m_other, 1), -np.inf)
        i = int(np.argmax(r))
        if r[i] > best[2]:
            best = (float(qs[i]), m, float(r[i]))
    return best


@dataclass(frozen=True)
class ThresholdReport:
    """Revenue-rate scale above which the responding ISP stops enforcing NN
    along the ray (a1, a2) = (a, rho a).

    ``a_prime`` / ``a_double_prime`` are the crossings of the NN profit with the
    SN / SS profit lines (inf when that configuration never beats NN).
    ``a_sn`` is the sufficient threshold for the symmetric SN-SN equilibrium,
    p theta1^SN / (theta1^SN - theta1^NN), which does not depend on t.
    """

    a_s: float
    branch: str
    a_prime: float
    a_double_prime: float
    a_sn: float
    found: bool = True

    @property
    def message(self) -> str:
        if not self.found:
            return "no sponsorship below a_max"
        return f"a_s = {self.a_s:.9g} ({self.branch} branch)"


def symmetric_sn_threshold(params: ModelParams) -> float:
    th = consumption_table(params)
    sn, nn = th[Config.SN].theta1, th[Config.NN].theta1
    if sn <= nn:
        return math.inf
    return params.p * sn / (sn - nn)


def _branch_profit(view: ModelParams, rho: float, a: float, q_other: float, m_other: Config, target: Config):
    br = best_response(view.with_rates(a, rho * a), q_other, m_other)
    e = br.per_config[target]
    return None if e is None else e[1]


def sponsorship_threshold(params: ModelParams, rho: float, m_other: Config = Config.NN, q_other: float = 0.0,
                          a_max: float = 1e6, isp_index: int = 1) -> ThresholdReport:
    """Threshold a_s = min(a', a'') along (a, rho a) for the responding ISP.

    The SN and SS profits are affine in a when the rival does not collect
    sponsorship charges that enter the thresholds (q_other = 0 or rival in
    NN), giving closed-form crossings; otherwise the crossings are located by
    bisection on (0, a_max].
    """
    if not (0.0 < rho < 1.0):
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")
    view = own_view(params, isp_index).with_rates(0.0, 0.0)
    th = consumption_table(view)
    k = nash_coefficients(view, m_other)
    r_nn = share(view, Config.NN, m_other) * view.p * th[Config.NN].total
    linear = q_other == 0.0 or m_other == Config.NN

    def crossing(target: Config) -> float:
        if linear:
            if target == Config.SN:
                # SN feasible iff alpha1 >= rho delta1 (independent of a)
                if k.alpha1 + NE_SLACK < rho * k.delta1:
                    return math.inf
                x = share(view, Config.SN, m_other)
                slope = x * k.alpha1 * th[Config.SN].theta1
                const = x * view.p * th[Config.SN].theta2
            else:
                x = share(view, Config.SS, m_other)
                slope = x * th[Config.SS].total * min(k.gamma1, rho * k.delta1)
                const = 0.0
            if slope <= 0.0:
                return math.inf
            return max((r_nn - const) / slope, 0.0)
        return _bisect_crossing(view, rho, q_other, m_other, target, r_nn, a_max)

    a_p = crossing(Config.SN)
    a_pp = crossing(Config.SS)
    a_s = min(a_p, a_pp)
    branch = "SN" if a_p <= a_pp else "SS"
    found = a_s <= a_max
    return ThresholdReport(a_s, branch, a_p, a_pp, symmetric_sn_threshold(view), found)


def _bisect_crossing(view, rho, q_other, m_other, target, r_nn, a_max, tol=1e-10):
    def gain(a):
        r = _branch_profit(view, rho, a, q_other, m_other, target)
        return -math.inf if r is None else r - r_nn

    if gain(a_max) <= 0:
        return math.inf
    lo, hi = 0.0, a_max
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if gain(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi
