"""Equilibria of a zero-rating market: two ISPs competing for Hotelling
users, two content providers deciding whether to sponsor their traffic."""
from zrsim.cp_game import cp_surplus, equilibrium_configs, nash_coefficients
from zrsim.dynamics import run_dynamics, verify_system_equilibrium
from zrsim.errors import MarketDomainError, ModelError, ParameterError, UtilityError
from zrsim.experiments import GridRange, SweepSpec, sweep_region_map, sweep_single_isp, sweep_surplus_ray
from zrsim.isp_strategy import best_response, isp_surplus, sponsorship_threshold
from zrsim.market import market_share
from zrsim.user_model import Config, ModelParams, UtilitySpec, solve_consumption

__all__ = [
    "Config", "GridRange", "MarketDomainError", "ModelError", "ModelParams", "ParameterError",
    "SweepSpec", "UtilityError", "UtilitySpec", "best_response", "cp_surplus", "equilibrium_configs",
    "isp_surplus", "market_share", "nash_coefficients", "run_dynamics", "solve_consumption",
    "sponsorship_threshold", "sweep_region_map", "sweep_single_isp", "sweep_surplus_ray",
    "verify_system_equilibrium",
]
