"""Hotelling split of the subscriber base between the two ISPs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from zrsim.errors import MarketDomainError, ParameterError


@dataclass(frozen=True)
class MarketMode:
    """Duopoly (shares follow the Hotelling split) or a monopoly benchmark in
    which ISP1's share is pinned to ``fixed_share`` whatever the configurations."""

    fixed_share: Optional[float] = None

    def __post_init__(self):
        if self.fixed_share is not None and not (0.0 <= self.fixed_share <= 1.0):
            raise ParameterError(f"fixed_share must lie in [0, 1], got {self.fixed_share}")

    @property
    def is_monopoly(self) -> bool:
        return self.fixed_share is not None

    def swapped(self) -> "MarketMode":
        if self.fixed_share is None:
            return self
        return MarketMode(1.0 - self.fixed_share)

    @property
    def label(self) -> str:
        return "duopoly" if self.fixed_share is None else f"monopoly({self.fixed_share:.9g})"


DUOPOLY = MarketMode()


def monopoly(t1: float, t2: float) -> MarketMode:
    """Benchmark with shares frozen at the no-sponsorship split t2 / (t1 + t2)."""
    return MarketMode(t2 / (t1 + t2))


def market_share(u1: float, u2: float, t1: float, t2: float, clamp: bool = False) -> float:
    """Fraction of users on ISP1 solving u1 - t1 x = u2 - t2 (1 - x).

    With ``clamp`` the corner solutions x in {0, 1} are returned when the
    surplus gap exceeds a transport cost; otherwise that raises.
    """
    if t1 <= 0 or t2 <= 0:
        raise ParameterError(f"transport costs must be > 0, got t1={t1}, t2={t2}")
    gap = abs(u1 - u2)
    if not clamp:
        if t1 <= gap:
            raise MarketDomainError(f"t1 = {t1:.9g} does not exceed |u1 - u2| = {gap:.9g}", "t1")
        if t2 <= gap:
            raise MarketDomainError(f"t2 = {t2:.9g} does not exceed |u1 - u2| = {gap:.9g}", "t2")
    x = (u1 - u2 + t2) / (t1 + t2)
    return min(max(x, 0.0), 1.0)


def aggregate_user_surplus(u1: float, u2: float, x: float, t1: float, t2: float,
                           include_transport: bool = True) -> float:
    if not (0.0 <= x <= 1.0):
        raise ParameterError(f"x must lie in [0, 1], got {x}")
    total = x * u1 + (1.0 - x) * u2
    if include_transport:
        total -= 0.5 * t1 * x * x + 0.5 * t2 * (1.0 - x) ** 2
    return total
