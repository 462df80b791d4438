"""Subscriber consumption model.

A subscriber of one ISP splits a capacity of ``c`` bytes between two
substitutable content providers. Sponsored (zero-rated) content is free, the
rest costs ``p`` per byte. The optimum depends only on the sponsorship
configuration of the ISP the subscriber is attached to.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from zrsim.errors import ParameterError, UtilityError
from zrsim.market import DUOPOLY, MarketMode

BISECTION_TOL = 1e-10
CONCAVITY_SAMPLES = 200


class Config(enum.Enum):
    """Sponsorship configuration on one ISP; first letter is CP1, second CP2.

    Declaration order doubles as the tie-break preference NN > SN > NS > SS.
    """

    NN = "NN"
    SN = "SN"
    NS = "NS"
    SS = "SS"

    def sponsors(self, cp: int) -> bool:
        return self.value[cp - 1] == "S"

    def flipped(self, cp: int) -> "Config":
        """The configuration with CP ``cp``'s decision reversed."""
        letters = list(self.value)
        letters[cp - 1] = "N" if letters[cp - 1] == "S" else "S"
        return Config("".join(letters))

    def mirrored(self) -> "Config":
        """Swap the roles of the two CPs (SN <-> NS)."""
        return Config(self.value[::-1])

    @property
    def n_sponsors(self) -> int:
        return self.value.count("S")

    @property
    def rank(self) -> int:
        return _ORDER[self]

    def __str__(self) -> str:
        return self.value


_ORDER = {m: i for i, m in enumerate(Config)}
CONFIGS = tuple(Config)


def _log_psi(z: float) -> float:
    return math.log1p(z)


def _log_dpsi(z: float) -> float:
    return 1.0 / (1.0 + z)


@dataclass(frozen=True)
class UtilitySpec:
    """Per-CP utility psi with its marginal dpsi.

    ``kind`` is ``"log"`` for psi(z) = log(1 + z) (closed-form solutions) or
    ``"custom"`` for any concave, strictly increasing psi supplied by the caller.
    """

    kind: str
    psi: Callable[[float], float] = field(compare=True)
    dpsi: Callable[[float], float] = field(compare=True)
    name: str = ""

    @classmethod
    def log_one_plus(cls) -> "UtilitySpec":
        return LOG_UTILITY

    @classmethod
    def custom(cls, psi, dpsi, name: str = "custom") -> "UtilitySpec":
        return cls("custom", psi, dpsi, name)

    @property
    def is_log(self) -> bool:
        return self.kind == "log"

    def check(self, c: float, samples: int = CONCAVITY_SAMPLES) -> None:
        """Sample [0, c] and raise UtilityError unless psi(0) >= 0 and dpsi is
        positive and non-increasing there."""
        if self.is_log:
            return
        if self.psi(0.0) < 0:
            raise UtilityError(f"utility {self.name!r}: psi(0) = {self.psi(0.0)} < 0")
        zs = np.linspace(0.0, c, samples)
        d = np.array([self.dpsi(float(z)) for z in zs])
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise UtilityError(f"utility {self.name!r}: marginal not strictly positive on [0, {c}]")
        if np.any(np.diff(d) > 1e-12 * np.maximum(1.0, np.abs(d[:-1]))):
            raise UtilityError(f"utility {self.name!r}: marginal increases somewhere on [0, {c}] (not concave)")


LOG_UTILITY = UtilitySpec("log", _log_psi, _log_dpsi, "log1p")


@dataclass(frozen=True)
class Expr:
    """A function of ``z`` given as a Python expression over the math module.

    Picklable and hashable by source, so expression utilities work in
    process pools and caches.
    """

    src: str

    def __post_init__(self):
        object.__setattr__(self, "_code", compile(self.src, "<utility>", "eval"))

    def __call__(self, z: float) -> float:
        env = {k: getattr(math, k) for k in dir(math) if not k.startswith("_")}
        env["z"] = z
        return float(eval(self._code, {"__builtins__": {}}, env))

    def __reduce__(self):
        return Expr, (self.src,)


def expression_utility(psi_src: str, dpsi_src: str) -> UtilitySpec:
    """Custom utility from expressions in ``z``, e.g. ("sqrt(1 + z) - 1", "0.5 / sqrt(1 + z)")."""
    return UtilitySpec("custom", Expr(psi_src), Expr(dpsi_src), psi_src)


@dataclass(frozen=True)
class ModelParams:
    """Exogenous quantities of the market.

    ``allow_corner`` lets market shares saturate at 0 or 1 when the Hotelling
    validity condition fails (all users flock to one ISP); by default such
    parameters raise.
    """

    p: float
    c: float
    t1: float
    t2: float
    a1: float = 0.0
    a2: float = 0.0
    utility: UtilitySpec = LOG_UTILITY
    mode: MarketMode = DUOPOLY
    allow_corner: bool = False

    def __post_init__(self):
        for name in ("p", "c", "t1", "t2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be > 0, got {v}")
        for name in ("a1", "a2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"{name} must be >= 0, got {v}")
        self.utility.check(self.c)

    @classmethod
    def symmetric(cls, p: float, c: float, t: float, a1: float = 0.0, a2: float = 0.0, **kw) -> "ModelParams":
        return cls(p=p, c=c, t1=t, t2=t, a1=a1, a2=a2, **kw)

    def with_rates(self, a1: float, a2: float) -> "ModelParams":
        return replace(self, a1=a1, a2=a2)

    def a(self, cp: int) -> float:
        return self.a1 if cp == 1 else self.a2

    def swapped(self) -> "ModelParams":
        """The same market seen from ISP2: transport costs (and any fixed
        share) exchanged, so that ISP2 can reuse ISP1's formulas."""
        return replace(self, t1=self.t2, t2=self.t1, mode=self.mode.swapped())

    def hotelling_gap(self) -> float:
        """u^SS - u^NN, which both transport costs must exceed."""
        prof = consumption_table(self)
        return prof[Config.SS].u - prof[Config.NN].u

    def validate_hotelling(self) -> None:
        if self.mode.is_monopoly or self.allow_corner:
            return
        gap = self.hotelling_gap()
        for name in ("t1", "t2"):
            if getattr(self, name) <= gap:
                raise ParameterError(
                    f"{name} = {getattr(self, name)} must exceed u^SS - u^NN = {gap:.9g} (Hotelling validity)"
                )


@dataclass(frozen=True)
class ConsumptionProfile:
    theta1: float
    theta2: float
    u: float

    def theta(self, cp: int) -> float:
        return self.theta1 if cp == 1 else self.theta2

    @property
    def total(self) -> float:
        return self.theta1 + self.theta2


def objective(params: ModelParams, config: Config, z1: float, z2: float) -> float:
    """User surplus of consuming (z1, z2) under ``config``."""
    psi = params.utility.psi
    paid = (0.0 if config.sponsors(1) else z1) + (0.0 if config.sponsors(2) else z2)
    return psi(z1) + psi(z2) - params.p * paid


def _bisect_decreasing(g: Callable[[float], float], lo: float, hi: float, tol: float = BISECTION_TOL) -> float:
    # root of a non-increasing g with g(lo) > 0 >= g(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _nn_level(p: float, c: float, utility: UtilitySpec) -> float:
    half = 0.5 * c
    if utility.is_log:
        return min(max(1.0 / p - 1.0, 0.0), half)
    dpsi = utility.dpsi
    if dpsi(0.0) <= p:
        return 0.0
    if dpsi(half) >= p:
        return half
    return _bisect_decreasing(lambda z: dpsi(z) - p, 0.0, half)


def _sn_share(p: float, c: float, utility: UtilitySpec) -> float:
    """Consumption of the sponsored CP when exactly one CP is sponsored.

    Capacity binds; the sponsored CP gets z maximizing
    psi(z) + psi(c - z) - p (c - z).
    """
    if utility.is_log:
        # FOC 1/(1+z) - 1/(1+c-z) + p = 0  <=>  p z^2 + (2 - p c) z - c - p (1 + c) = 0
        b = 2.0 - p * c
        disc = b * b + 4.0 * p * (c + p * (1.0 + c))
        # numerically stable positive root
        if b >= 0:
            z = 2.0 * (c + p * (1.0 + c)) / (b + math.sqrt(disc))
        else:
            z = (-b + math.sqrt(disc)) / (2.0 * p)
        return min(max(z, 0.0), c)
    dpsi = utility.dpsi

    def slope(z):
        return dpsi(z) - dpsi(c - z) + p

    if slope(c) >= 0:
        return c
    return _bisect_decreasing(slope, 0.0, c)


@lru_cache(maxsize=4096)
def _table(p: float, c: float, utility: UtilitySpec) -> dict:
    psi = utility.psi
    half = 0.5 * c
    out = {}
    out[Config.SS] = ConsumptionProfile(half, half, 2.0 * psi(half))
    z = _nn_level(p, c, utility)
    out[Config.NN] = ConsumptionProfile(z, z, 2.0 * psi(z) - 2.0 * p * z)
    z1 = _sn_share(p, c, utility)
    z2 = c - z1
    u = psi(z1) + psi(z2) - p * z2
    out[Config.SN] = ConsumptionProfile(z1, z2, u)
    out[Config.NS] = ConsumptionProfile(z2, z1, u)
    return out


def consumption_table(params: ModelParams) -> dict:
    """Optimal consumption for all four configurations (cached)."""
    return _table(params.p, params.c, params.utility)


def solve_consumption(params: ModelParams, config: Config) -> ConsumptionProfile:
    return consumption_table(params)[config]


def consumption_oracle(params: ModelParams, config: Config, grid_points: int = 4001) -> ConsumptionProfile:
    """Brute-force maximizer over a uniform grid of the feasible triangle.

    Independent of the closed forms: only evaluates psi. Accuracy O(c / grid_points).
    """
    if grid_points < 100:
        raise ParameterError("grid_points must be >= 100")
    n = grid_points
    zs = np.linspace(0.0, params.c, n)
    psi = params.utility.psi
    if params.utility.is_log:
        vals = np.log1p(zs)
    else:
        vals = np.array([psi(float(z)) for z in zs])
    v1 = vals - (0.0 if config.sponsors(1) else params.p) * zs
    v2 = vals - (0.0 if config.sponsors(2) else params.p) * zs
    best, bi, bj = -np.inf, 0, 0
    # row i may pair with columns j <= n - 1 - i (z1 + z2 <= c)
    for i in range(n):
        row = v2[: n - i]
        j = int(np.argmax(row))
        val = v1[i] + row[j]
        if val > best:
            best, bi, bj = val, i, j
    return ConsumptionProfile(float(zs[bi]), float(zs[bj]), float(best))
