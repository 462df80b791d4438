"""Parameter sweeps: region maps over (a1, a2) and surplus curves along
(a, rho a), with monopoly and no-zero-rating benchmarks."""
from __future__ import annotations

import csv
import os
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional

import numpy as np

from zrsim.dynamics import (Converged, MaxRoundsExceeded, Oscillating, SystemState, make_state,
                            no_zero_rating_state, run_dynamics)
from zrsim.errors import ParameterError
from zrsim.isp_strategy import best_response, nn_enforcement_price
from zrsim.market import DUOPOLY, MarketMode
from zrsim.user_model import LOG_UTILITY, Config, ModelParams, UtilitySpec

REGION_HEADER = ["a1", "a2", "label", "rounds", "q1", "q2"]
RAY_HEADER = ["a", "mode", "config1", "config2", "q1", "q2", "x", "isp1", "isp2", "cp1", "cp2",
              "users_with_transport", "users_without_transport"]
LABELS = ("NN", "SN", "NS", "SS", "ASYM", "OSC", "MAX")
MODES = ("duopoly", "monopoly", "no_zero_rating")


@dataclass(frozen=True)
class GridRange:
    min: float
    max: float
    steps: int

    def __post_init__(self):
        if self.steps < 2:
            raise ParameterError(f"grid needs at least 2 steps, got {self.steps}")
        if not (0 < self.min < self.max):
            raise ParameterError(f"grid range must satisfy 0 < min < max, got ({self.min}, {self.max})")

    @classmethod
    def up_to(cls, amax: float, steps: int) -> "GridRange":
        """``steps`` evenly spaced points on (0, amax]."""
        return cls(amax / steps, amax, steps)

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.steps)


@dataclass(frozen=True)
class SweepSpec:
    p: float = 0.35
    c: float = 4.0
    t1: float = 3.0
    t2: float = 3.0
    utility: UtilitySpec = LOG_UTILITY
    a1: GridRange = GridRange.up_to(10.0, 60)
    a2: Optional[GridRange] = None  # defaults to the a1 grid
    rho: Optional[float] = None
    modes: tuple = MODES
    allow_corner: bool = False
    max_rounds: int = 100
    initial_m2: Config = Config.NN
    out: Optional[str] = None

    def params(self, a1: float = 0.0, a2: float = 0.0, mode: MarketMode = DUOPOLY) -> ModelParams:
        return ModelParams(self.p, self.c, self.t1, self.t2, a1, a2, self.utility, mode, self.allow_corner)

    @property
    def a2_grid(self) -> GridRange:
        return self.a2 if self.a2 is not None else self.a1

    def monopoly_mode(self) -> MarketMode:
        return MarketMode(self.t2 / (self.t1 + self.t2))


@dataclass(frozen=True)
class RegionCell:
    a1: float
    a2: float
    label: str
    rounds: int
    q1: float
    q2: float


@dataclass(frozen=True)
class SurplusRow:
    a: float
    mode: str
    config1: str
    config2: str
    q1: float
    q2: float
    x: float
    isp1: float
    isp2: float
    cp1: float
    cp2: float
    users_with_transport: float
    users_without_transport: float


def outcome_label(outcome) -> str:
    if isinstance(outcome, Converged):
        s = outcome.state
        return str(s.m1) if s.m1 == s.m2 else "ASYM"
    if isinstance(outcome, Oscillating):
        return "OSC"
    return "MAX"


def outcome_rounds(outcome) -> int:
    if isinstance(outcome, Converged):
        return outcome.rounds
    return len(outcome.history)


def _workers() -> int:
    raw = os.environ.get("ZRSIM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"ZRSIM_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def _map(fn, items: list) -> list:
    n = _workers()
    if n == 1 or len(items) < 2 * n:
        return [fn(it) for it in items]
    try:
        pickle.dumps(items[0])
    except (pickle.PicklingError, AttributeError, TypeError):
        # utilities built from lambdas cannot cross process boundaries
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * n))))


def _region_cell(job) -> RegionCell:
    spec, a1, a2 = job
    o = run_dynamics(spec.params(a1, a2), spec.initial_m2, max_rounds=spec.max_rounds)
    s = o.state
    return RegionCell(float(a1), float(a2), outcome_label(o), outcome_rounds(o), s.q1, s.q2)


def sweep_region_map(spec: SweepSpec) -> list:
    """Run the dynamics on every (a1, a2) grid cell; rows ordered a1-major."""
    jobs = [(spec, a1, a2) for a1 in spec.a1.values() for a2 in spec.a2_grid.values()]
    cells = _map(_region_cell, jobs)
    if spec.out:
        write_csv(spec.out, REGION_HEADER, cells)
    return cells


def _row(a: float, mode: str, state: SystemState, config1=None, config2=None) -> SurplusRow:
    return SurplusRow(float(a), mode, config1 or str(state.m1), config2 or str(state.m2), state.q1, state.q2,
                      state.x, state.isp1, state.isp2, state.cp1, state.cp2, state.users,
                      state.users_without_transport)


def _cycle_average(params: ModelParams, cycle: list) -> SystemState:
    vals = {f.name: float(np.mean([getattr(s, f.name) for s in cycle]))
            for f in fields(SystemState) if f.name not in ("m1", "m2")}
    return SystemState(m1=cycle[-1].m1, m2=cycle[-1].m2, **vals)


def outcome_row(a: float, mode: str, params: ModelParams, outcome) -> SurplusRow:
    """Row for a dynamics outcome; an oscillating outcome reports surpluses
    averaged over its cycle with configs labelled OSC."""
    if isinstance(outcome, Converged):
        return _row(a, mode, outcome.state)
    if isinstance(outcome, Oscillating):
        return _row(a, mode, _cycle_average(params, outcome.cycle), "OSC", "OSC")
    return _row(a, mode, outcome.state, "MAX", "MAX")


def _ray_point(job) -> list:
    spec, a, rho = job
    rows = []
    a2 = rho * a
    if "duopoly" in spec.modes:
        params = spec.params(a, a2)
        rows.append(outcome_row(a, "duopoly", params, run_dynamics(params, spec.initial_m2,
                                                                   max_rounds=spec.max_rounds)))
    if "monopoly" in spec.modes:
        params = spec.params(a, a2, spec.monopoly_mode())
        rows.append(outcome_row(a, "monopoly", params, run_dynamics(params, spec.initial_m2,
                                                                    max_rounds=spec.max_rounds)))
    if "no_zero_rating" in spec.modes:
        rows.append(_row(a, "no_zero_rating", no_zero_rating_state(spec.params(a, a2))))
    return rows


def _check_rho(rho: float) -> None:
    if rho is None or not (0.0 < rho < 1.0):
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")


def sweep_surplus_ray(spec: SweepSpec, rho: Optional[float] = None) -> list:
    """Equilibrium surpluses along (a, rho a) for each requested mode."""
    rho = spec.rho if rho is None else rho
    _check_rho(rho)
    rows = [r for chunk in _map(_ray_point, [(spec, a, rho) for a in spec.a1.values()]) for r in chunk]
    if spec.out:
        write_csv(spec.out, RAY_HEADER, rows)
    return rows


def single_isp_state(params: ModelParams) -> SystemState:
    """ISP1's best response with ISP2 pinned at NN (NN-enforcement charge)."""
    q2 = nn_enforcement_price(params, 0.0, Config.NN, isp_index=2)
    br = best_response(params, q2, Config.NN, 1)
    return make_state(params, br.q, br.config, q2, Config.NN)


def sweep_single_isp(spec: SweepSpec, rho: Optional[float] = None) -> list:
    rho = spec.rho if rho is None else rho
    _check_rho(rho)
    rows = []
    for a in spec.a1.values():
        params = spec.params(a, rho * a)
        rows.append(_row(a, "single_isp", single_isp_state(params)))
        rows.append(_row(a, "no_zero_rating", no_zero_rating_state(params)))
    if spec.out:
        write_csv(spec.out, RAY_HEADER, rows)
    return rows


def fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def write_csv(path: str, header: list, rows: Iterable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            d = asdict(r)
            w.writerow([fmt(d[h]) for h in header])


def read_csv(path: str) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def label_grid(cells: list, spec: SweepSpec) -> np.ndarray:
    """Labels reshaped to an (a1 index, a2 index) array."""
    n1, n2 = spec.a1.steps, spec.a2_grid.steps
    return np.array([c.label for c in cells], dtype=object).reshape(n1, n2)


def rows_by_mode(rows: list, mode: str) -> list:
    return [r for r in rows if r.mode == mode]
