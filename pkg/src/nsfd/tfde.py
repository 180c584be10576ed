r"""Explicit NSFD schemes for the time-fractional diffusion equation

.. math::

    {}^C D^\alpha_t u = \Delta u + f, \qquad u = 0 \text{ on } \partial\Omega,

in one dimension on ``[0, L]`` and two dimensions on ``[0, L]^2``. The
Laplacian and the forcing are lagged to ``t_{n-1}`` so every step is explicit.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from nsfd.caputo import SolutionDivergedError, TimeGrid
from nsfd.fraccore import (
    DenominatorSpec,
    DFKind,
    FractionalOrder,
    as_order,
    l1_weights,
)
from nsfd.report import ConvergenceReport

#: Steps per block of the history kernel (see :func:`_march`).
HISTORY_BLOCK = 256
#: A run is flagged as diverged once its max-norm exceeds this factor
#: times ``(max|u^0| + 1)``.
DIVERGENCE_FACTOR = 1.0e12


class StabilityViolationError(ValueError):
    def __init__(self, report: StabilityReport):
        self.report = report
        super().__init__(
            f"stability condition violated: {report.lhs:.6g} > {report.threshold:.6g}"
        )


# {{{ grids and problems


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform grid with ``M`` subintervals per axis, ``h = L / M``.

    In 2D the nodes are numbered ``m = j * (M + 1) + i`` for ``x_i = i h``,
    ``y_j = j h``.
    """

    dim: int
    L: float
    M: int

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2: got {self.dim}")
        if not self.L > 0:
            raise ValueError(f"domain length must be positive: got {self.L}")
        if self.M < 2:
            raise ValueError(f"need at least 2 subintervals: got {self.M}")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def axis(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.h

    @property
    def num_nodes(self) -> int:
        return (self.M + 1) ** self.dim

    def flatten(self, i: int, j: int) -> int:
        return j * (self.M + 1) + i

    def unflatten(self, m: int) -> tuple[int, int]:
        j, i = divmod(m, self.M + 1)
        return i, j

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Node coordinates in flat-index order."""
        x = self.axis
        if self.dim == 1:
            return (x,)
        X, Y = np.meshgrid(x, x, indexing="xy")
        return X.ravel(), Y.ravel()

    def interior_mask(self) -> np.ndarray:
        inner = np.zeros(self.M + 1, dtype=bool)
        inner[1:-1] = True
        if self.dim == 1:
            return inner
        return np.logical_and.outer(inner, inner).ravel()


@dataclass(frozen=True)
class TfdeProblem:
    """Initial-boundary value problem with homogeneous Dirichlet data.

    The callables take coordinate arrays, followed by time for *forcing* and
    *exact*: ``initial(x)``, ``forcing(x, t)`` in 1D and ``initial(x, y)``,
    ``forcing(x, y, t)`` in 2D.
    """

    dim: int
    L: float
    T: float
    initial: Callable[..., np.ndarray]
    forcing: Callable[..., np.ndarray]
    exact: Optional[Callable[..., np.ndarray]] = None


@dataclass(frozen=True)
class SchemeConfig:
    alpha: FractionalOrder
    N: int
    phi_eff: DenominatorSpec
    #: One spatial DF, or a pair ``(psi_x, psi_y)`` in 2D.
    psi: DenominatorSpec | tuple[DenominatorSpec, DenominatorSpec]
    enforce_stability: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", as_order(self.alpha))
        if self.N < 1:
            raise ValueError(f"number of time steps must be positive: got {self.N}")
        if self.phi_eff.kind is not DFKind.TemporalEffective:
            raise TypeError(f"expected a temporal-effective DF: got {self.phi_eff.text}")
        for psi in self.psi_pair:
            if psi.kind is not DFKind.Spatial:
                raise TypeError(f"expected a spatial DF: got {psi.text}")

    @property
    def psi_pair(self) -> tuple[DenominatorSpec, DenominatorSpec]:
        if isinstance(self.psi, tuple):
            return self.psi
        return (self.psi, self.psi)

    def forcing_coefficient(self, T: float = 1.0) -> float:
        r""":math:`\phi(\tau) \Gamma(2 - \alpha)`."""
        return float(self.phi_eff(T / self.N)) * self.alpha.gamma2

    def mu(self, grid: SpaceGrid, T: float = 1.0) -> tuple[float, float]:
        r""":math:`\mu_i = \phi(\tau) \Gamma(2 - \alpha) / \psi_i(h)`."""
        c = self.forcing_coefficient(T)
        mu = tuple(c / float(psi(grid.h)) for psi in self.psi_pair)
        if not all(m > 0 for m in mu):
            raise ValueError(f"scheme coefficients must be positive: got {mu}")
        return mu


# }}}

# {{{ stability


@dataclass(frozen=True)
class StabilityReport:
    satisfied: bool
    lhs: float
    threshold: float


def stability_threshold(alpha: FractionalOrder | float) -> float:
    r""":math:`(1 - 2^{-\alpha}) / \Gamma(2 - \alpha)`."""
    alpha = as_order(alpha)
    return (1.0 - 2.0 ** (-alpha.alpha)) / alpha.gamma2


def check_stability(config: SchemeConfig, grid: SpaceGrid, T: float = 1.0) -> StabilityReport:
    """Sufficient max-norm stability condition of the explicit scheme."""
    phi = float(config.phi_eff(T / config.N))
    psis = config.psi_pair[: grid.dim]
    lhs = sum(phi / float(psi(grid.h)) for psi in psis)
    threshold = stability_threshold(config.alpha)
    return StabilityReport(lhs <= threshold, lhs, threshold)


def analytic_max_M(
    config: SchemeConfig, L: float, dim: int = 1, T: float = 1.0, M_max: int = 10**7
) -> int:
    """Largest ``M`` for which :func:`check_stability` passes.

    Assumes the ratio ``phi / psi(L / M)`` increases with ``M``.
    """
    def ok(M: int) -> bool:
        return check_stability(config, SpaceGrid(dim, L, M), T).satisfied

    if not ok(2):
        return 1
    lo, hi = 2, 4
    while ok(hi):
        lo, hi = hi, 2 * hi
        if hi > M_max:
            return M_max
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def scheme_coefficient_sum(weights, mu: float | tuple[float, float], n: int) -> float:
    r"""Sum of the coefficients multiplying past levels in the step to ``t_n``.

    For ``n >= 2`` this is :math:`2\mu + (1 - 2\mu - b_2) + \sum_{k=2}^{n-1}
    (b_k - b_{k+1}) + b_n`` (with :math:`2\mu` replaced by
    :math:`2\mu_1 + 2\mu_2` in 2D), which must equal one.
    """
    b = weights.b
    two_mu = 2.0 * sum(mu) if isinstance(mu, tuple) else 2.0 * mu
    if n == 1:
        return math.fsum([two_mu, 1.0 - two_mu])
    terms = [two_mu, 1.0 - two_mu - b[2], *(b[2:n] - b[3 : n + 1]), b[n]]
    return math.fsum(terms)


# }}}

# {{{ solution storage


@dataclass
class SolutionField:
    """Time history of a grid function; boundary nodes are identically zero."""

    grid: SpaceGrid
    time: TimeGrid
    #: Interior values, one row per time level ``0..N``.
    interior: np.ndarray = field(repr=False)

    def level(self, n: int) -> np.ndarray:
        """Full-grid values (flat index order) at time level *n*."""
        out = np.zeros(self.grid.num_nodes)
        out[self.grid.interior_mask()] = self.interior[n]
        return out

    @property
    def history(self) -> np.ndarray:
        """Full-grid history, shape ``(N + 1, num_nodes)``."""
        out = np.zeros((self.interior.shape[0], self.grid.num_nodes))
        out[:, self.grid.interior_mask()] = self.interior
        return out

    def final(self) -> np.ndarray:
        return self.level(self.interior.shape[0] - 1)

    def to_csv(self, n: int | None = None) -> str:
        """Snapshot of level *n* (default: final) as ``x[,y],u``."""
        n = self.interior.shape[0] - 1 if n is None else n
        coords = self.grid.coordinates()
        u = self.level(n)
        buf = io.StringIO()
        buf.write(("x,u" if self.grid.dim == 1 else "x,y,u") + "\n")
        for row in zip(*coords, u):
            buf.write(",".join(f"{v:.16e}" for v in row) + "\n")
        return buf.getvalue()


def max_error(field_: SolutionField, exact: Callable[..., np.ndarray]) -> float:
    """``max_m |u(x_m, T) - u^N_m|`` over all grid nodes."""
    T = field_.time.T
    ref = exact(*field_.grid.coordinates(), T)
    return float(np.max(np.abs(ref - field_.final())))


# }}}

# {{{ time marching


def _toeplitz_block(w_rev: np.ndarray, n0: int, nb: int) -> np.ndarray:
    """Rows ``r = 0..nb-1`` of ``W[r, j - 1] = w[n0 + r - j]``, ``j = 1..n0-1``.

    *w_rev* is ``w[::-1]`` for ``w`` of length ``N``.
    """
    N = w_rev.size
    windows = np.lib.stride_tricks.sliding_window_view(w_rev, n0 - 1)
    start = N - n0 - nb + 1
    return np.ascontiguousarray(windows[start : start + nb][::-1])


def _march(
    u0: np.ndarray,
    laplacian: Callable[[np.ndarray], np.ndarray],
    source: Callable[[float], np.ndarray],
    alpha: FractionalOrder,
    N: int,
    tau: float,
    coef: float,
    block: int = HISTORY_BLOCK,
) -> np.ndarray:
    r"""Shared explicit recurrence on the interior unknowns.

    .. math::

        u^n = L[u^{n-1}] + \sum_{k=1}^{n-1} (b_k - b_{k+1}) u^{n-k}
            + b_n u^0 + c f(t_{n-1})

    The memory sum is exact. It is evaluated in blocks of future steps: the
    part coming from levels before the block is a single Toeplitz
    matrix-matrix product, the rest is accumulated step by step.
    """
    P = u0.size
    b = l1_weights(alpha, max(N, 2)).b
    w = np.zeros(N + 1)
    w[1:N] = b[1:N] - b[2 : N + 1]
    w_rev = w[:N][::-1].copy()

    H = np.empty((N + 1, P))
    H[0] = u0
    limit = DIVERGENCE_FACTOR * (float(np.max(np.abs(u0), initial=0.0)) + 1.0)

    for n0 in range(1, N + 1, block):
        nb = min(block, N + 1 - n0)
        if n0 > 1:
            C = _toeplitz_block(w_rev, n0, nb) @ H[1:n0]
        else:
            C = np.zeros((nb, P))

        for r in range(nb):
            n = n0 + r
            hist = C[r]
            if r > 0:
                hist = hist + w[r:0:-1] @ H[n0:n]
            u = laplacian(H[n - 1]) + hist + b[n] * u0 + coef * source((n - 1) * tau)

            umax = np.max(np.abs(u), initial=0.0)
            if not np.isfinite(umax):
                raise SolutionDivergedError(n, "non-finite values")
            if umax > limit:
                raise SolutionDivergedError(n, f"max-norm {umax:.3e} exceeds {limit:.3e}")
            H[n] = u

    return H


def _prepare(p: TfdeProblem, config: SchemeConfig, M: int, dim: int):
    if p.dim != dim:
        raise ValueError(f"expected a {dim}D problem: got dim={p.dim}")
    grid = SpaceGrid(dim, p.L, M)
    time = TimeGrid(p.T, config.N)

    report = check_stability(config, grid, p.T)
    if not report.satisfied:
        if config.enforce_stability:
            raise StabilityViolationError(report)
        warnings.warn(
            f"stability condition not satisfied ({report.lhs:.6g} > "
            f"{report.threshold:.6g}); the run may diverge",
            RuntimeWarning,
            stacklevel=3,
        )

    coords = grid.coordinates()
    u0_full = np.asarray(p.initial(*coords), dtype=np.float64) * np.ones(grid.num_nodes)
    mask = grid.interior_mask()
    if np.max(np.abs(u0_full[~mask])) > 1.0e-12:
        raise ValueError("initial condition does not vanish on the boundary")

    interior = tuple(c[mask] for c in coords)
    coef = config.forcing_coefficient(p.T)

    def source(t: float) -> np.ndarray:
        return np.asarray(p.forcing(*interior, t), dtype=np.float64) * np.ones(mask.sum())

    return grid, time, u0_full[mask], config.mu(grid, p.T), coef, source


def solve_1d(p: TfdeProblem, config: SchemeConfig, M: int) -> SolutionField:
    """Run the explicit 1D scheme on ``M`` subintervals."""
    grid, time, u0, (mu, _), coef, source = _prepare(p, config, M, 1)

    def laplacian(u: np.ndarray) -> np.ndarray:
        out = -2.0 * u
        out[1:] += u[:-1]
        out[:-1] += u[1:]
        return mu * out

    H = _march(u0, laplacian, source, config.alpha, config.N, time.tau, coef)
    return SolutionField(grid, time, H)


def solve_2d(p: TfdeProblem, config: SchemeConfig, M: int) -> SolutionField:
    """Run the explicit 2D scheme on an ``M x M`` grid."""
    grid, time, u0, (mu_x, mu_y), coef, source = _prepare(p, config, M, 2)
    K = M - 1

    def laplacian(u: np.ndarray) -> np.ndarray:
        U = u.reshape(K, K)  # U[j, i]
        out = (-2.0 * (mu_x + mu_y)) * U
        out[:, 1:] += mu_x * U[:, :-1]
        out[:, :-1] += mu_x * U[:, 1:]
        out[1:, :] += mu_y * U[:-1, :]
        out[:-1, :] += mu_y * U[1:, :]
        return out.ravel()

    H = _march(u0, laplacian, source, config.alpha, config.N, time.tau, coef)
    return SolutionField(grid, time, H)


def solve(p: TfdeProblem, config: SchemeConfig, M: int) -> SolutionField:
    return solve_1d(p, config, M) if p.dim == 1 else solve_2d(p, config, M)


# }}}

# {{{ examples and studies


def example_tfde(name: str, alpha: FractionalOrder | float, L: float = 1.0) -> TfdeProblem:
    """Manufactured problems with zero initial data.

    ``ex3`` (1D): ``u = t^(3+a) sin(pi x / L)``.
    ``ex4`` (2D): ``u = t^(3+a) sin(pi x) sin(pi y)`` on the unit square.
    """
    a = as_order(alpha).alpha
    g = math.gamma(4.0 + a) / 6.0

    if name == "ex3":
        k = math.pi / L
        return TfdeProblem(
            dim=1,
            L=L,
            T=1.0,
            initial=lambda x: np.zeros_like(x),
            forcing=lambda x, t: t**3 * np.sin(k * x) * (g + k**2 * t**a),
            exact=lambda x, t: t ** (3.0 + a) * np.sin(k * x),
        )
    if name == "ex4":
        if L != 1.0:
            raise ValueError("ex4 is defined on the unit square")
        pi2 = math.pi**2
        return TfdeProblem(
            dim=2,
            L=1.0,
            T=1.0,
            initial=lambda x, y: np.zeros_like(x),
            forcing=lambda x, y, t: (
                t**3 * np.sin(np.pi * x) * np.sin(np.pi * y) * (g + 2.0 * pi2 * t**a)
            ),
            exact=lambda x, y, t: t ** (3.0 + a) * np.sin(np.pi * x) * np.sin(np.pi * y),
        )
    raise ValueError(f"unknown example {name!r}: expected 'ex3' or 'ex4'")


def convergence_study(
    example: str | TfdeProblem,
    alpha: FractionalOrder | float,
    N: int,
    phi_eff: DenominatorSpec,
    psi_list: Sequence[DenominatorSpec],
    M_list: Sequence[int],
    quantize: str = "published",
) -> ConvergenceReport:
    """Final-time max-norm errors for each ``(M, psi)`` cell.

    Cells that diverge are kept as ``None`` rather than dropped.
    """
    p = example_tfde(example, alpha) if isinstance(example, str) else example
    if p.exact is None:
        raise ValueError("convergence study needs an exact solution")
    M_list = [int(M) for M in M_list]

    errors: dict[str, list[float | None]] = {}
    for psi in psi_list:
        config = SchemeConfig(alpha, N, phi_eff, psi)
        col: list[float | None] = []
        for M in M_list:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    col.append(max_error(solve(p, config, M), p.exact))
            except SolutionDivergedError:
                col.append(None)
        errors[psi.text] = col

    meta = {
        "example": example if isinstance(example, str) else "custom",
        "alpha": as_order(alpha).alpha,
        "N": N,
        "T": p.T,
        "phi_eff": phi_eff.text,
    }
    return ConvergenceReport(M=M_list, errors=errors, metadata=meta, quantize=quantize)


@dataclass(frozen=True)
class FrontierPoint:
    M: int
    E_inf: float | None
    diverged: bool
    diverged_step: int | None = None


def stability_frontier_scan(
    alpha: FractionalOrder | float,
    L: float,
    N: int,
    phi_eff: DenominatorSpec,
    psi_pair: Sequence[DenominatorSpec],
    M_range: Sequence[int],
) -> dict[str, list[FrontierPoint]]:
    """Run the rescaled 1D example for each ``M`` and record error or divergence."""
    p = example_tfde("ex3", alpha, L=L)
    out: dict[str, list[FrontierPoint]] = {}
    for psi in psi_pair:
        config = SchemeConfig(alpha, N, phi_eff, psi)
        series = []
        for M in M_range:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    field_ = solve_1d(p, config, int(M))
            except SolutionDivergedError as exc:
                series.append(FrontierPoint(int(M), None, True, exc.step))
            else:
                series.append(FrontierPoint(int(M), max_error(field_, p.exact), False))
        out[psi.text] = series
    return out


def divergence_onset(series: Sequence[FrontierPoint]) -> int | None:
    """Smallest ``M`` in the series that diverged."""
    for pt in series:
        if pt.diverged:
            return pt.M
    return None


# }}}
