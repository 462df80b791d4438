"""Alternating best-response dynamics between the ISPs and checks of the
resulting system equilibria."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from zrsim.cp_game import cp_surplus, equilibrium_configs, nash_coefficients, share
from zrsim.errors import ParameterError
from zrsim.isp_strategy import best_response, isp_surplus, nn_enforcement_price
from zrsim.market import aggregate_user_surplus
from zrsim.user_model import Config, ModelParams, consumption_table

Q_TOL = 1e-9
VERIFY_TOL = 1e-8


@dataclass(frozen=True)
class SystemState:
    q1: float
    m1: Config
    q2: float
    m2: Config
    x: float = field(default=float("nan"), compare=False)
    isp1: float = field(default=float("nan"), compare=False)
    isp2: float = field(default=float("nan"), compare=False)
    cp1: float = field(default=float("nan"), compare=False)
    cp2: float = field(default=float("nan"), compare=False)
    users: float = field(default=float("nan"), compare=False)
    users_without_transport: float = field(default=float("nan"), compare=False)

    @property
    def configs(self) -> tuple:
        return self.m1, self.m2

    @property
    def is_symmetric(self) -> bool:
        return self.m1 == self.m2

    def key(self, digits: int = 9) -> tuple:
        return self.m1, self.m2, round(self.q1, digits), round(self.q2, digits)

    def close_to(self, other: "SystemState", tol: float = Q_TOL) -> bool:
        return (self.configs == other.configs
                and abs(self.q1 - other.q1) <= tol * max(1.0, abs(self.q1))
                and abs(self.q2 - other.q2) <= tol * max(1.0, abs(self.q2)))


def make_state(params: ModelParams, q1: float, m1: Config, q2: float, m2: Config) -> SystemState:
    """SystemState with all derived surpluses filled in."""
    th = consumption_table(params)
    x = share(params, m1, m2)
    cps = cp_surplus(params, q1, m1, q2, m2)
    u1, u2 = th[m1].u, th[m2].u
    return SystemState(
        q1, m1, q2, m2, x,
        isp_surplus(params, q1, m1, q2, m2, 1),
        isp_surplus(params, q1, m1, q2, m2, 2),
        cps.cp1, cps.cp2,
        aggregate_user_surplus(u1, u2, x, params.t1, params.t2, True),
        aggregate_user_surplus(u1, u2, x, params.t1, params.t2, False),
    )


@dataclass(frozen=True)
class Converged:
    state: SystemState
    rounds: int
    history: list = field(default_factory=list, compare=False, repr=False)
    label = "converged"


@dataclass(frozen=True)
class Oscillating:
    cycle: list
    period: int
    history: list = field(default_factory=list, compare=False, repr=False)
    label = "oscillating"

    @property
    def state(self) -> SystemState:
        return self.cycle[-1]


@dataclass(frozen=True)
class MaxRoundsExceeded:
    history: list
    label = "max_rounds"

    @property
    def state(self) -> SystemState:
        return self.history[-1]


DynamicsOutcome = Union[Converged, Oscillating, MaxRoundsExceeded]


def initial_price(params: ModelParams, m2: Config) -> float:
    """Charge for ISP2's starting configuration, computed against ISP1 in NN.

    NN uses the NN-enforcement price; any other configuration uses the charge
    ISP2 would set to induce it.
    """
    if m2 == Config.NN:
        return nn_enforcement_price(params, 0.0, Config.NN, isp_index=2)
    entry = best_response(params, 0.0, Config.NN, isp_index=2).per_config[m2]
    if entry is None:
        raise ParameterError(f"ISP2 cannot induce {m2} against NN at these rates")
    return entry[0]


def run_dynamics(params: ModelParams, initial_m2: Config = Config.NN, initial_q2: Optional[float] = None,
                 max_rounds: int = 100, tol: float = Q_TOL) -> DynamicsOutcome:
    """Alternate best responses, ISP1 first, until a full round leaves the
    state unchanged or a state recurs.

    ``rounds`` of a Converged outcome is the round in which the limiting state
    was first reached; one further round confirmed it.
    """
    if max_rounds < 2:
        raise ParameterError("max_rounds must be >= 2")
    q2 = initial_price(params, initial_m2) if initial_q2 is None else float(initial_q2)
    m2 = initial_m2
    history: list = []
    seen: dict = {}
    for r in range(1, max_rounds + 1):
        b1 = best_response(params, q2, m2, 1)
        q1, m1 = b1.q, b1.config
        b2 = best_response(params, q1, m1, 2)
        q2, m2 = b2.q, b2.config
        state = SystemState(q1, m1, q2, m2)
        if history and state.close_to(history[-1], tol):
            final = make_state(params, *_prims(history[-1]))
            return Converged(final, r - 1, history)
        k = state.key()
        if k in seen:
            j = seen[k]
            cycle = [make_state(params, *_prims(s)) for s in history[j:]]
            if len(cycle) == 1:
                return Converged(cycle[0], j + 1, history)
            return Oscillating(cycle, len(cycle), history)
        seen[k] = len(history)
        history.append(state)
    return MaxRoundsExceeded([make_state(params, *_prims(s)) for s in history])


def _prims(s: SystemState) -> tuple:
    return s.q1, s.m1, s.q2, s.m2


@dataclass
class VerificationReport:
    isp_optimal: dict
    cp_nash: dict
    strong: dict
    witnesses: list

    @property
    def check_i(self) -> bool:
        return all(self.isp_optimal.values())

    @property
    def check_ii(self) -> bool:
        return all(self.cp_nash.values())

    @property
    def check_iii(self) -> bool:
        return all(self.strong.values())

    @property
    def ok(self) -> bool:
        return self.check_i and self.check_ii and self.check_iii


def _near_le(lhs: float, rhs: float, tol: float) -> bool:
    return lhs <= rhs + tol * max(1.0, abs(rhs))


def verify_system_equilibrium(params: ModelParams, state: SystemState, tol: float = VERIFY_TOL) -> VerificationReport:
    """Check (i) each ISP's charge is a best response to the rival's
    configuration, (ii) each configuration is a CP equilibrium at the current
    charges, (iii) no CP gains by reversing its decision on both ISPs at once."""
    q1, m1, q2, m2 = _prims(state)
    witnesses = []
    isp_ok, nash_ok, strong_ok = {}, {}, {}

    ne1 = equilibrium_configs(params, q1, q2, m2, slack=tol)
    ne2 = equilibrium_configs(params.swapped(), q2, q1, m1, slack=tol)
    nash_ok[1] = m1 in ne1
    nash_ok[2] = m2 in ne2
    for j in (1, 2):
        if not nash_ok[j]:
            witnesses.append(f"ISP{j}: {(m1, m2)[j - 1]} is not a CP equilibrium at the current charges")

    for j, (q_own, q_oth, m_oth) in ((1, (q1, q2, m2)), (2, (q2, q1, m1))):
        br = best_response(params, q_oth, m_oth, j)
        current = isp_surplus(params, q1, m1, q2, m2, j)
        isp_ok[j] = nash_ok[j] and _near_le(br.profit, current, tol)
        if not isp_ok[j]:
            witnesses.append(
                f"ISP{j}: best response q={br.q:.9g} {br.config} earns {br.profit:.9g} > {current:.9g}")

    base = cp_surplus(params, q1, m1, q2, m2)
    for cp in (1, 2):
        dev = cp_surplus(params, q1, m1.flipped(cp), q2, m2.flipped(cp))
        strong_ok[cp] = _near_le(dev[cp], base[cp], tol)
        if not strong_ok[cp]:
            witnesses.append(
                f"CP{cp}: reversing on both ISPs ({m1.flipped(cp)}, {m2.flipped(cp)}) earns "
                f"{dev[cp]:.9g} > {base[cp]:.9g}")
    return VerificationReport(isp_ok, nash_ok, strong_ok, witnesses)


def no_zero_rating_state(params: ModelParams) -> SystemState:
    """Both ISPs without a zero-rating platform (every CP pays nothing, NN)."""
    return make_state(params, 0.0, Config.NN, 0.0, Config.NN)


def sn_symmetric_price(params: ModelParams, a: Optional[float] = None) -> float:
    """Charge a (1 - theta1^NN / theta1^SN) at a symmetric SN-SN equilibrium."""
    th = consumption_table(params)
    a = params.a1 if a is None else a
    return a * (1.0 - th[Config.NN].theta1 / th[Config.SN].theta1)


def ss_symmetric_price(params: ModelParams, a_low: Optional[float] = None) -> float:
    """Charge a_low (1 - theta2^SN / (c/2)) at a symmetric SS-SS equilibrium,
    a_low being the smaller revenue rate."""
    th = consumption_table(params)
    a_low = min(params.a1, params.a2) if a_low is None else a_low
    return a_low * (1.0 - th[Config.SN].theta2 / (0.5 * params.c))


@dataclass(frozen=True)
class SymmetricDiagnostics:
    """Sufficient thresholds for the symmetric SN-SN and SS-SS equilibria
    (t1 = t2). They bound the regions from one side and are not tight."""

    a_sn: float
    rho_sn: float
    a_ss: float
    rho_ss: float


def symmetric_diagnostics(params: ModelParams, rho: float) -> SymmetricDiagnostics:
    th = consumption_table(params)
    c, p = params.c, params.p
    sn1, nn1, sn2 = th[Config.SN].theta1, th[Config.NN].theta1, th[Config.SN].theta2
    a_sn = p * sn1 / (sn1 - nn1)
    rho_sn = 0.5 * (sn1 - nn1) / (share(params, Config.SS, Config.SN) * c)
    k = nash_coefficients(params, Config.SS)
    squeeze = 1.0 - sn2 / (0.5 * c)
    rho_ss = k.alpha1 / (1.0 - k.alpha2) / squeeze
    a_low_bound = p / k.alpha1 if k.alpha1 > 0 else float("inf")
    # ISP1 leaving SS-SS for NN: x_NN^SS p (theta1^NN + theta2^NN) < 0.5 c a rho squeeze
    r_nn = share(params, Config.NN, Config.SS) * p * th[Config.NN].total
    a_n = r_nn / (0.5 * c * rho * squeeze) if squeeze > 0 else float("inf")
    return SymmetricDiagnostics(a_sn, rho_sn, max(a_low_bound, a_n), rho_ss)
