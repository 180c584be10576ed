"""Explicit NSL1 time stepping for the scalar problem ``D^a y = f(t)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from nsfd.caputo import SolutionDivergedError, TimeGrid
from nsfd.fraccore import (
    DenominatorSpec,
    DFKind,
    FractionalOrder,
    as_order,
    effective_temporal_df,
    l1_weights,
)
from nsfd.report import IvpErrorTable


@dataclass(frozen=True)
class IvpProblem:
    y0: float
    forcing: Callable[[float], float]
    exact: Optional[Callable[[float], float]] = None
    T: float = 1.0

    def __post_init__(self) -> None:
        if self.exact is not None and abs(self.exact(0.0) - self.y0) > 1.0e-14:
            raise ValueError(
                f"exact solution does not match the initial value: "
                f"y(0) = {self.exact(0.0)!r} but y0 = {self.y0!r}"
            )


@dataclass(frozen=True)
class IvpSolution:
    grid: TimeGrid
    y: np.ndarray = field(repr=False)


def solve_ivp(
    p: IvpProblem,
    alpha: FractionalOrder | float,
    N: int,
    phi_eff: DenominatorSpec,
) -> IvpSolution:
    r"""March the explicit NSL1 recurrence

    .. math::

        y^n = b_n y^0 + \sum_{j = 1}^{n - 1} (b_j - b_{j + 1}) y^{n - j}
            + \phi(\tau) \Gamma(2 - \alpha) f(t_n).

    Unlike the diffusion schemes, the forcing is taken at the new level
    :math:`t_n`.
    """
    alpha = as_order(alpha)
    if phi_eff.kind is not DFKind.TemporalEffective:
        raise TypeError(f"expected a temporal-effective DF: got {phi_eff.text}")

    grid = TimeGrid(p.T, N)
    b = l1_weights(alpha, N).b
    w = b[1:-1] - b[2:]  # w[k - 1] = b_k - b_{k + 1}
    coef = float(phi_eff(grid.tau)) * alpha.gamma2

    y = np.empty(N + 1)
    y[0] = p.y0
    for n in range(1, N + 1):
        history = np.dot(w[: n - 1], y[n - 1 : 0 : -1]) if n > 1 else 0.0
        y[n] = b[n] * p.y0 + history + coef * p.forcing(grid[n])
        if not math.isfinite(y[n]):
            raise SolutionDivergedError(n)

    return IvpSolution(grid, y)


def example_problem(name: str, alpha: FractionalOrder | float) -> IvpProblem:
    """Manufactured test problems on ``[0, 1]``.

    ``ex1``: ``y0 = 0``, exact ``y = t^(2 + a)``.
    ``ex2``: ``y0 = 1``, exact ``y = t^2 + 1``.
    """
    a = as_order(alpha).alpha
    if name == "ex1":
        g = math.gamma(3.0 + a) / 2.0
        return IvpProblem(
            y0=0.0,
            forcing=lambda t: t**2 * g,
            exact=lambda t: t ** (2.0 + a),
        )
    if name == "ex2":
        g = 2.0 / math.gamma(3.0 - a)
        return IvpProblem(
            y0=1.0,
            forcing=lambda t: g * t ** (2.0 - a),
            exact=lambda t: t**2 + 1.0,
        )
    raise ValueError(f"unknown example {name!r}: expected 'ex1' or 'ex2'")


def ivp_error_table(
    example: str,
    alphas: Iterable[float],
    N_list: Iterable[int],
    phi_bases: Iterable[DenominatorSpec],
    mode: str = "ratio",
    quantize: str = "published",
) -> IvpErrorTable:
    """Final-time errors ``|y(T) - y^N|`` for every ``(alpha, phi, N)`` cell."""
    N_list = list(N_list)
    phi_bases = list(phi_bases)
    table = IvpErrorTable(example=example, quantize=quantize)

    for a in alphas:
        p = example_problem(example, a)
        if p.exact is None:
            raise ValueError(f"example {example!r} has no exact solution")
        exact_T = p.exact(p.T)
        for base in phi_bases:
            phi_eff = effective_temporal_df(base, a, mode)
            cells = []
            for N in N_list:
                sol = solve_ivp(p, a, N, phi_eff)
                cells.append((N, abs(exact_T - sol.y[-1])))
            table.series[float(a), base.text] = cells

    return table
