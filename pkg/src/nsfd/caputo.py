"""Nonstandard L1 (NSL1) discretisation of the Caputo derivative."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from nsfd.fraccore import (
    DenominatorSpec,
    DFKind,
    FractionalOrder,
    WeightTable,
    as_order,
    l1_weights,
)


class SolutionDivergedError(ArithmeticError):
    """A time stepper produced non-finite or runaway values."""

    def __init__(self, step: int, detail: str = ""):
        self.step = step
        msg = f"solution diverged at step {step}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


#: Beyond this many history terms the sum is accumulated with :func:`math.fsum`.
COMPENSATED_SUM_THRESHOLD = 10_000


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_n = n * tau`` on ``[0, T]``."""

    T: float
    N: int

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError(f"horizon must be positive: got {self.T}")
        if self.N < 1:
            raise ValueError(f"number of steps must be positive: got {self.N}")

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.tau

    def __getitem__(self, n: int) -> float:
        return n * self.tau


@dataclass(frozen=True)
class SampledFunction:
    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.N + 1,):
            raise ValueError(
                f"expected {self.grid.N + 1} samples: got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, fn: Callable[[float], float], grid: TimeGrid) -> SampledFunction:
        return cls(grid, np.array([fn(t) for t in grid.nodes], dtype=np.float64))

    def __add__(self, other: SampledFunction) -> SampledFunction:
        return SampledFunction(self.grid, self.values + other.values)

    def __rmul__(self, c: float) -> SampledFunction:
        return SampledFunction(self.grid, c * self.values)


def nsl1_apply(
    y: SampledFunction,
    alpha: FractionalOrder | float,
    phi_eff: DenominatorSpec,
    n: int,
    weights: WeightTable | None = None,
) -> float:
    r"""Evaluate the NSL1 approximation of :math:`{}^C D^\alpha y(t_n)`.

    .. math::

        \frac{\phi(\tau)^{-1}}{\Gamma(2 - \alpha)} \left[
            b_1 y_n + \sum_{k = 1}^{n - 1} (b_{k + 1} - b_k) y_{n - k} - b_n y_0
        \right]
    """
    alpha = as_order(alpha)
    if phi_eff.kind is not DFKind.TemporalEffective:
        raise TypeError(f"expected a temporal-effective DF: got {phi_eff.text}")
    N = y.grid.N
    if not 1 <= n <= N:
        raise IndexError(f"time index must be in [1, {N}]: got {n}")
    if weights is None or weights.n_max < n:
        weights = l1_weights(alpha, n)

    b = weights.b
    v = y.values
    # Summation by parts turns the bracket into sum_k b_k (y_{n-k+1} - y_{n-k}),
    # which vanishes exactly on constants. Terms are taken in increasing k.
    terms = b[1 : n + 1] * (v[n:0:-1] - v[n - 1 :: -1][:n])
    if n > COMPENSATED_SUM_THRESHOLD:
        bracket = math.fsum(terms)
    else:
        bracket = float(np.sum(terms))
    return float(bracket / (float(phi_eff(y.grid.tau)) * alpha.gamma2))


@dataclass(frozen=True)
class OrderScanRow:
    N: int
    defect: float
    #: ``None`` for the first row, ``"exact"`` when the defect vanishes.
    observed_order: float | str | None


def observed_rate(coarse: float, fine: float) -> float | str | None:
    """Dyadic rate ``log2(coarse / fine)``; ``"exact"`` if either is zero."""
    if coarse == 0.0 or fine == 0.0:
        return "exact"
    return math.log2(coarse / fine)


def truncation_order_scan(
    exact_fn: Callable[[float], float],
    exact_caputo_at_T: float,
    alpha: FractionalOrder | float,
    phi_eff: DenominatorSpec,
    N_list,
    T: float = 1.0,
) -> list[OrderScanRow]:
    """Measure the NSL1 defect at ``t = T`` on a sequence of doubled grids."""
    N_list = [int(N) for N in N_list]
    if len(N_list) < 3:
        raise ValueError("need at least three grid sizes")
    if any(b != 2 * a for a, b in zip(N_list, N_list[1:])):
        raise ValueError(f"grid sizes must double: got {N_list}")

    alpha = as_order(alpha)
    weights = l1_weights(alpha, N_list[-1])

    rows = []
    prev = None
    for N in N_list:
        grid = TimeGrid(T, N)
        y = SampledFunction.from_callable(exact_fn, grid)
        defect = abs(exact_caputo_at_T - nsl1_apply(y, alpha, phi_eff, N, weights))
        order = None if prev is None else observed_rate(prev, defect)
        rows.append(OrderScanRow(N, defect, order))
        prev = defect

    return rows
