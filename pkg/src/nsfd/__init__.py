"""Nonstandard finite difference schemes for Caputo fractional equations."""

from __future__ import annotations

from nsfd.caputo import SolutionDivergedError, TimeGrid, nsl1_apply
from nsfd.fraccore import (
    DenominatorSpec,
    DFKind,
    FractionalOrder,
    effective_temporal_df,
    l1_weights,
    make_df,
    mittag_leffler,
    parse_df,
    standard_effective_df,
)
from nsfd.ivp import IvpProblem, solve_ivp
from nsfd.locus import boundary_locus, classify_point, rmax, rmax_scan
from nsfd.tfde import SchemeConfig, SpaceGrid, TfdeProblem, solve, solve_1d, solve_2d

__version__ = "0.1.0"

__all__ = [
    "DFKind",
    "DenominatorSpec",
    "FractionalOrder",
    "IvpProblem",
    "SchemeConfig",
    "SolutionDivergedError",
    "SpaceGrid",
    "TfdeProblem",
    "TimeGrid",
    "boundary_locus",
    "classify_point",
    "effective_temporal_df",
    "l1_weights",
    "make_df",
    "mittag_leffler",
    "nsl1_apply",
    "parse_df",
    "rmax",
    "rmax_scan",
    "solve",
    "solve_1d",
    "solve_2d",
    "solve_ivp",
    "standard_effective_df",
]
