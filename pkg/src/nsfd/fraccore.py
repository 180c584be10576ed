"""Fractional-calculus building blocks shared by every scheme.

This module holds the validated fractional order, the L1 weight table, the
closed registry of nonstandard denominator functions (DFs) together with their
canonical text form, and a series evaluator for the Mittag-Leffler function.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# {{{ fractional order


@dataclass(frozen=True)
class FractionalOrder:
    """Fractional order :math:`\\alpha \\in (0, 1)` of a Caputo derivative."""

    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not (0.0 < a < 1.0) or not math.isfinite(a):
            raise ValueError(f"fractional order must lie in (0, 1): got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    def __float__(self) -> float:
        return self.alpha

    @property
    def gamma2(self) -> float:
        r""":math:`\Gamma(2 - \alpha)`, present in every scheme coefficient."""
        return math.gamma(2.0 - self.alpha)


def as_order(alpha: FractionalOrder | float) -> FractionalOrder:
    if isinstance(alpha, FractionalOrder):
        return alpha
    return FractionalOrder(alpha)


# }}}

# {{{ weights

_EXPM1_THRESHOLD = 1000


@dataclass(frozen=True)
class WeightTable:
    r"""L1 weights :math:`b_k = k^{1 - \alpha} - (k - 1)^{1 - \alpha}`.

    The array :attr:`b` is stored 1-based: ``b[0]`` is unused (set to NaN) so
    that ``b[k]`` matches the usual notation for ``k = 1, ..., n_max``.
    """

    alpha: FractionalOrder
    b: np.ndarray = field(repr=False)

    @property
    def n_max(self) -> int:
        return self.b.size - 1

    def __getitem__(self, k):
        return self.b[k]

    def differences(self) -> np.ndarray:
        """Return ``w`` with ``w[k] = b[k] - b[k + 1]`` for ``k = 1..n_max-1``.

        ``w[0]`` is unused (NaN). These are the (positive) memory coefficients
        multiplying past time levels in the explicit schemes.
        """
        w = np.full(self.n_max, np.nan)
        w[1:] = self.b[1:-1] - self.b[2:]
        return w

    def telescoping_sum(self, n: int) -> float:
        r""":math:`\sum_{j=1}^{n-1}(b_j - b_{j+1}) + b_n`, which equals 1."""
        if not 1 <= n <= self.n_max:
            raise IndexError(f"n must be in [1, {self.n_max}]: got {n}")
        return math.fsum([*(self.b[1:n] - self.b[2 : n + 1]), self.b[n]])


def l1_weights(alpha: FractionalOrder | float, n_max: int) -> WeightTable:
    """Build the L1 weight table ``b[1..n_max]``."""
    alpha = as_order(alpha)
    if n_max < 1:
        raise ValueError(f"n_max must be positive: got {n_max}")

    p = 1.0 - alpha.alpha
    k = np.arange(1, n_max + 1, dtype=np.float64)
    b = np.empty(n_max + 1)
    b[0] = np.nan
    b[1:] = k**p - (k - 1.0) ** p

    # k^p - (k-1)^p cancels badly for large k
    if n_max > _EXPM1_THRESHOLD:
        kk = k[_EXPM1_THRESHOLD:]
        b[_EXPM1_THRESHOLD + 1 :] = (kk - 1.0) ** p * np.expm1(p * np.log1p(1.0 / (kk - 1.0)))
    b[1] = 1.0

    return WeightTable(alpha=alpha, b=b)


# }}}

# {{{ denominator functions


class DFKind(enum.Enum):
    """Role of a denominator function in a scheme."""

    #: :math:`\varphi(\tau) = \tau + O(\tau^2)`, replaces :math:`\tau`.
    TemporalBase = "phi"
    #: :math:`\phi(\tau) = \tau^\alpha + O(\tau^{1 + \alpha})`, replaces :math:`\tau^\alpha`.
    TemporalEffective = "phieff"
    #: :math:`\psi(h) = h^2 + O(h^3)`, replaces :math:`h^2`.
    Spatial = "psi"


class UnknownDFError(KeyError):
    """Raised for a tag that is not in the denominator-function registry."""

    def __str__(self) -> str:
        return f"unknown denominator function: {self.args[0]!r}"


@dataclass(frozen=True)
class DenominatorSpec:
    """A denominator function from the closed registry.

    Instances are callable on positive step sizes (scalars or arrays).
    """

    kind: DFKind
    #: Registry tag, e.g. ``"sin"`` or ``"scaled-expm1"``.
    tag: str
    #: Real parameters, e.g. ``(("c", 1000.0),)``.
    params: tuple[tuple[str, float], ...] = ()
    #: Base DF, only for temporal-effective ``pow``/``ratio`` forms.
    base: DenominatorSpec | None = None
    #: Fractional order, only for temporal-effective DFs.
    alpha: float | None = None
    evaluator: Callable[[np.ndarray], np.ndarray] = field(
        default=None, repr=False, compare=False
    )

    def __call__(self, step):
        return self.evaluator(step)

    @property
    def text(self) -> str:
        """Canonical text form, e.g. ``phi=scaled-expm1(c=1000)``."""
        return f"{self.kind.value}={self.body}"

    @property
    def body(self) -> str:
        if self.base is not None:
            return f"{self.tag}({self.base.body})"
        if self.params:
            args = ",".join(f"{k}={_fmt_param(v)}" for k, v in self.params)
            return f"{self.tag}({args})"
        return self.tag

    def reference(self, step):
        """The standard quantity this DF stands in for (``tau``, ``tau^a``, ``h^2``)."""
        step = np.asarray(step, dtype=np.float64)
        if self.kind is DFKind.TemporalBase:
            return step
        if self.kind is DFKind.TemporalEffective:
            return step**self.alpha
        return step**2

    def __str__(self) -> str:
        return self.text


def _fmt_param(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


# tag -> (kind, parameter names, factory(params) -> evaluator)
_Factory = Callable[[dict], Callable[[np.ndarray], np.ndarray]]
_REGISTRY: dict[tuple[DFKind, str], tuple[tuple[str, ...], _Factory, str]] = {}
#: Upper end of the step range on which a DF is positive (default: unbounded).
_MAX_STEP: dict[tuple[DFKind, str], float] = {}


def _register(
    kind: DFKind, tag: str, params: tuple[str, ...], formula: str, max_step: float = math.inf
):
    def wrap(factory: _Factory) -> _Factory:
        _REGISTRY[kind, tag] = (params, factory, formula)
        _MAX_STEP[kind, tag] = max_step
        return factory

    return wrap


def _checked(text: str, max_step: float, fn):
    def evaluator(step):
        s = _arr(step)
        if not np.all((s > 0) & (s < max_step)):
            raise ValueError(f"{text} needs steps in (0, {max_step:.6g}): got {step}")
        return fn(s)

    return evaluator


def _arr(x):
    return np.asarray(x, dtype=np.float64)


@_register(DFKind.TemporalBase, "tau", (), "tau")
def _(p):
    return lambda t: _arr(t) * 1.0


@_register(DFKind.TemporalBase, "sin", (), "sin(tau)", max_step=math.pi)
def _(p):
    return lambda t: np.sin(_arr(t))


@_register(DFKind.TemporalBase, "sinh", (), "sinh(tau)")
def _(p):
    return lambda t: np.sinh(_arr(t))


@_register(DFKind.TemporalBase, "scaled-expm1", ("c",), "c*(exp(tau/c) - 1)")
def _(p):
    c = p["c"]
    return lambda t: c * np.expm1(_arr(t) / c)


@_register(DFKind.TemporalBase, "exp-decay", ("lam",), "(1 - exp(-lam*tau))/lam")
def _(p):
    lam = p["lam"]
    return lambda t: -np.expm1(-lam * _arr(t)) / lam


@_register(DFKind.Spatial, "h2", (), "h^2")
def _(p):
    return lambda h: _arr(h) ** 2


@_register(DFKind.Spatial, "4sin2-half", (), "4 sin^2(h/2)", max_step=2 * math.pi)
def _(p):
    return lambda h: 4.0 * np.sin(_arr(h) / 2.0) ** 2


@_register(DFKind.Spatial, "sin2", (), "sin^2(h)", max_step=math.pi)
def _(p):
    return lambda h: np.sin(_arr(h)) ** 2


@_register(DFKind.Spatial, "scaled-expdecay-sq", ("c",), "(c*(1 - exp(-h/c)))^2")
def _(p):
    c = p["c"]
    return lambda h: (-c * np.expm1(-_arr(h) / c)) ** 2


@_register(DFKind.Spatial, "4pi2-sinh2-pihalf", (), "(4/pi^2) sinh^2(pi*h/2)")
def _(p):
    return lambda h: 4.0 / np.pi**2 * np.sinh(np.pi * _arr(h) / 2.0) ** 2


@_register(DFKind.Spatial, "sinh2", (), "sinh^2(h)")
def _(p):
    return lambda h: np.sinh(_arr(h)) ** 2


@_register(DFKind.Spatial, "scaled-exp-sq", ("c",), "(c*(exp(h/c) - 1))^2")
def _(p):
    c = p["c"]
    return lambda h: (c * np.expm1(_arr(h) / c)) ** 2


@_register(DFKind.Spatial, "sinh-h2", (), "sinh(h^2)")
def _(p):
    return lambda h: np.sinh(_arr(h) ** 2)


def make_df(kind: DFKind | str, tag: str, **params: float) -> DenominatorSpec:
    """Construct a registered temporal-base or spatial DF."""
    kind = DFKind(kind)
    try:
        names, factory, _ = _REGISTRY[kind, tag]
    except KeyError:
        raise UnknownDFError(f"{kind.value}={tag}") from None

    if set(params) != set(names):
        raise ValueError(
            f"{kind.value}={tag} expects parameters {names}: got {tuple(params)}"
        )
    values = {k: float(params[k]) for k in names}
    for k, v in values.items():
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"parameter {k} of {tag} must be positive: got {v}")

    spec = DenominatorSpec(kind=kind, tag=tag, params=tuple((k, values[k]) for k in names))
    evaluator = _checked(spec.text, _MAX_STEP[kind, tag], factory(values))
    object.__setattr__(spec, "evaluator", evaluator)
    return spec


class ReductionMode(enum.Enum):
    r"""How a temporal-base DF is turned into the temporal-effective DF."""

    #: :math:`\phi(\tau) = \varphi(\tau)^\alpha`.
    Power = "pow"
    #: :math:`\phi(\tau) = \varphi(\tau) \tau^{\alpha - 1}`, i.e. the exact
    #: inverse of the factor :math:`\tau^{1 - \alpha} / \varphi(\tau)`.
    Ratio = "ratio"


def effective_temporal_df(
    base: DenominatorSpec,
    alpha: FractionalOrder | float,
    mode: ReductionMode | str = ReductionMode.Ratio,
) -> DenominatorSpec:
    """Derive the temporal-effective DF from a temporal-base DF."""
    if not isinstance(base, DenominatorSpec) or base.kind is not DFKind.TemporalBase:
        raise TypeError(f"expected a temporal-base DF: got {base!r}")

    a = as_order(alpha).alpha
    mode = ReductionMode(mode)
    phi = base.evaluator

    if base.tag == "tau":
        def evaluator(t):
            return _arr(t) ** a
    elif mode is ReductionMode.Power:
        def evaluator(t):
            return phi(t) ** a
    else:
        def evaluator(t):
            t = _arr(t)
            return phi(t) * t ** (a - 1.0)

    return DenominatorSpec(
        kind=DFKind.TemporalEffective,
        tag=mode.value,
        base=base,
        alpha=a,
        evaluator=evaluator,
    )


def standard_effective_df(alpha: FractionalOrder | float) -> DenominatorSpec:
    r"""The standard choice :math:`\phi(\tau) = \tau^\alpha`."""
    a = as_order(alpha).alpha
    return DenominatorSpec(
        kind=DFKind.TemporalEffective,
        tag="tau-alpha",
        alpha=a,
        evaluator=lambda t: _arr(t) ** a,
    )


def df_registry(alpha: FractionalOrder | float | None = None) -> list[DenominatorSpec]:
    """Enumerate the registry with the parameter values used in experiments.

    Temporal-effective DFs depend on the fractional order, so they are only
    included when *alpha* is given.
    """
    out = [
        make_df("phi", "tau"),
        make_df("phi", "sin"),
        make_df("phi", "sinh"),
        make_df("phi", "scaled-expm1", c=1.0),
        make_df("phi", "scaled-expm1", c=1000.0),
        make_df("phi", "exp-decay", lam=100.0),
        make_df("psi", "h2"),
        make_df("psi", "4sin2-half"),
        make_df("psi", "sin2"),
        make_df("psi", "scaled-expdecay-sq", c=100.0),
        make_df("psi", "4pi2-sinh2-pihalf"),
        make_df("psi", "sinh2"),
        make_df("psi", "scaled-exp-sq", c=100.0),
        make_df("psi", "scaled-exp-sq", c=1.0),
        make_df("psi", "sinh-h2"),
    ]
    if alpha is not None:
        bases = [df for df in out if df.kind is DFKind.TemporalBase]
        out.append(standard_effective_df(alpha))
        for mode in ReductionMode:
            out.extend(effective_temporal_df(b, alpha, mode) for b in bases[1:])
    return out


def registry_tags() -> list[str]:
    """Human-readable listing of every registered tag and its formula."""
    lines = []
    for (kind, tag), (names, _, formula) in _REGISTRY.items():
        args = f"({','.join(f'{n}=...' for n in names)})" if names else ""
        lines.append(f"{kind.value}={tag}{args}  {formula}")
    lines.append("phieff=tau-alpha  tau^alpha")
    lines.append("phieff=pow(<phi body>)  phi(tau)^alpha")
    lines.append("phieff=ratio(<phi body>)  phi(tau)*tau^(alpha-1)")
    return lines


_BODY_RE = re.compile(r"^([A-Za-z0-9-]+)(?:\((.*)\))?$")


def parse_df(text: str, alpha: FractionalOrder | float | None = None) -> DenominatorSpec:
    """Parse the canonical text form of a DF.

    Examples: ``phi=sin``, ``phi=scaled-expm1(c=1000)``, ``psi=sinh-h2``,
    ``phieff=pow(exp-decay(lam=100))``. Temporal-effective forms need *alpha*.
    """
    kind_s, sep, body = text.strip().partition("=")
    if not sep:
        raise UnknownDFError(text)
    try:
        kind = DFKind(kind_s)
    except ValueError:
        raise UnknownDFError(text) from None

    m = _BODY_RE.match(body)
    if m is None:
        raise UnknownDFError(text)
    tag, args = m.group(1), m.group(2)

    if kind is DFKind.TemporalEffective:
        if alpha is None:
            raise ValueError(f"parsing {text!r} requires the fractional order")
        if tag == "tau-alpha" and args is None:
            return standard_effective_df(alpha)
        if tag not in ("pow", "ratio") or args is None:
            raise UnknownDFError(text)
        base = parse_df(f"phi={args}")
        return effective_temporal_df(base, alpha, tag)

    params = {}
    if args:
        for item in args.split(","):
            k, eq, v = item.partition("=")
            if not eq:
                raise ValueError(f"malformed parameter {item!r} in {text!r}")
            params[k.strip()] = float(v)

    if (kind, tag) not in _REGISTRY:
        raise UnknownDFError(text)
    return make_df(kind, tag, **params)


def order_defect_constants(df: DenominatorSpec, steps) -> np.ndarray:
    r"""Return :math:`|g(s) / s_{\mathrm{ref}} - 1| / s` on the given steps.

    For a DF satisfying its order condition these stay bounded as ``s -> 0``.
    """
    steps = _arr(steps)
    return np.abs(df(steps) / df.reference(steps) - 1.0) / steps


# }}}

# {{{ Mittag-Leffler


class SeriesNotConvergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class MittagLefflerParams:
    alpha: float
    beta: float = 1.0
    tolerance: float = 1.0e-15
    max_terms: int = 2000

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive: got {self.alpha}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive: got {self.tolerance}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be positive: got {self.max_terms}")


def _ml_term(z: float, j: int, a: float, b: float) -> float:
    arg = a * j + b
    if arg <= 0 and float(arg).is_integer():
        return 0.0
    if j == 0:
        return 1.0 / math.gamma(arg)
    if z == 0.0:
        return 0.0
    if arg > 0:
        sign = 1.0 if (z > 0 or j % 2 == 0) else -1.0
        return sign * math.exp(j * math.log(abs(z)) - math.lgamma(arg))
    return z**j / math.gamma(arg)


def mittag_leffler(params: MittagLefflerParams, z: float) -> float:
    r"""Evaluate :math:`E_{\alpha, \beta}(z)` for real *z* by its power series.

    Terms are accumulated until they decrease below ``params.tolerance``.
    Cancellation limits the accuracy for large negative *z*.
    """
    a, b = params.alpha, params.beta
    z = float(z)

    terms = []
    prev = math.inf
    for j in range(params.max_terms):
        t = _ml_term(z, j, a, b)
        terms.append(t)
        mag = abs(t)
        # only stop once the terms are decaying
        if mag < params.tolerance and mag <= prev and a * j + b > 0:
            return math.fsum(terms)
        prev = mag

    raise SeriesNotConvergedError(
        f"series not converged: E_{{{a},{b}}}({z}) after {params.max_terms} terms"
    )


# }}}
