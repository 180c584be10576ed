r"""Absolute stability of the NSL1 scheme for ``D^a y = lambda * y``.

Substituting :math:`y^n = r^n` into the scheme gives the stability polynomial

.. math::

    p(r) = (d_1 - \hat\tau) r^n + \sum_{j = 1}^{n - 1} (d_{j + 1} - d_j) r^{n - j} - d_n,

with :math:`d_k = b_k / \Gamma(2 - \alpha)` and :math:`\hat\tau = \lambda \tau^\alpha`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from nsfd.fraccore import FractionalOrder, as_order, l1_weights

#: Largest degree accepted by the dense companion-matrix backend.
COMPANION_CEILING = 2000
#: Strict root condition: stable iff ``r_max < 1 - STABILITY_MARGIN``.
STABILITY_MARGIN = 1.0e-9


class RootFinderError(RuntimeError):
    pass


def scaled_weights(alpha: FractionalOrder | float, n: int) -> np.ndarray:
    """``d[k] = b[k] / Gamma(2 - alpha)`` for ``k = 1..n`` (``d[0]`` unused)."""
    alpha = as_order(alpha)
    return l1_weights(alpha, n).b / alpha.gamma2


@dataclass(frozen=True)
class StabilityPolynomial:
    alpha: FractionalOrder
    n: int
    tau_hat: complex
    #: Coefficients, highest degree first (``coeffs[0]`` multiplies ``r^n``).
    coeffs: np.ndarray = field(repr=False)

    def __call__(self, r):
        return np.polyval(self.coeffs, r)

    def roots(self, backend: str = "companion") -> np.ndarray:
        return polynomial_roots(self.coeffs, backend=backend, tau_hat=self.tau_hat)


def _coefficients(d: np.ndarray, n: int, tau_hat: complex) -> np.ndarray:
    th = complex(tau_hat)
    c = np.empty(n + 1, dtype=np.complex128 if th.imag else np.float64)
    c[0] = d[1] - (th if th.imag else th.real)
    c[1:n] = d[2 : n + 1] - d[1:n]
    c[n] = -d[n]
    return c


def stability_polynomial(
    alpha: FractionalOrder | float, n: int, tau_hat: complex
) -> StabilityPolynomial:
    """Assemble :math:`p(r)` of degree *n* (the ``O(tau)`` factor is dropped)."""
    if n < 1:
        raise ValueError(f"degree must be positive: got {n}")
    alpha = as_order(alpha)
    c = _coefficients(scaled_weights(alpha, n), n, tau_hat)
    return StabilityPolynomial(alpha, n, tau_hat, c)


# {{{ root finding


def _companion_roots(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.size - 1
    if n == 0:
        return np.empty(0, dtype=np.complex128)
    A = np.zeros((n, n), dtype=np.result_type(coeffs, np.float64))
    A[0, :] = -coeffs[1:] / coeffs[0]
    A[np.arange(1, n), np.arange(n - 1)] = 1.0
    return scipy.linalg.eigvals(A, overwrite_a=True, check_finite=False)


def aberth_roots(
    coeffs: np.ndarray, tol: float = 1.0e-15, max_iter: int = 1000
) -> np.ndarray:
    """Aberth-Ehrlich simultaneous iteration for all polynomial roots.

    :raises RootFinderError: if the corrections do not fall below *tol*.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    n = c.size - 1
    if n == 0:
        return np.empty(0, dtype=np.complex128)
    dc = c[:-1] * np.arange(n, 0, -1)

    # start on a circle whose radius matches the geometric mean of the root moduli
    radius = abs(c[-1] / c[0]) ** (1.0 / n)
    z = radius * np.exp(1j * (2.0 * np.pi * np.arange(n) / n + 0.4))

    for _ in range(max_iter):
        ratio = np.polyval(c, z) / np.polyval(dc, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        corr = ratio / (1.0 - ratio * inv.sum(axis=1))
        z = z - corr
        if np.all(np.abs(corr) <= tol * np.maximum(1.0, np.abs(z))):
            return z

    raise RootFinderError(f"Aberth iteration did not converge for degree {n}")


def polynomial_roots(
    coeffs: np.ndarray, backend: str = "companion", tau_hat: complex | None = None
) -> np.ndarray:
    """Roots of a polynomial given highest-degree-first coefficients."""
    coeffs = np.asarray(coeffs)
    n = coeffs.size - 1
    where = f"degree n={n}, tau_hat={tau_hat}"

    if backend not in ("companion", "aberth"):
        raise ValueError(f"unknown root-finding backend {backend!r}")
    if backend == "companion" and n > COMPANION_CEILING:
        raise RootFinderError(f"root-finder ceiling exceeded: {where} > {COMPANION_CEILING}")
    if not np.all(np.isfinite(coeffs)):
        raise RootFinderError(f"non-finite polynomial coefficients: {where}")

    try:
        roots = _companion_roots(coeffs) if backend == "companion" else aberth_roots(coeffs)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, RootFinderError) as exc:
        raise RootFinderError(f"root finder failed to converge: {where}") from exc

    if not np.all(np.isfinite(roots)):
        raise RootFinderError(f"root finder returned non-finite roots: {where}")
    return roots


# }}}

# {{{ r_max and classification


def _rmax_from_coeffs(c: np.ndarray, backend: str, tau_hat: complex) -> float:
    # a vanishing leading coefficient sends a root to infinity
    if abs(c[0]) <= 1.0e-14 * np.max(np.abs(c)):
        return math.inf
    return float(np.max(np.abs(polynomial_roots(c, backend, tau_hat))))


def rmax(
    alpha: FractionalOrder | float,
    n: int,
    tau_hat: complex,
    backend: str = "companion",
) -> float:
    """Largest root modulus of the degree-*n* stability polynomial."""
    p = stability_polynomial(alpha, n, tau_hat)
    return _rmax_from_coeffs(p.coeffs, backend, tau_hat)


def rmax_scan(
    alpha: FractionalOrder | float,
    N_ceiling: int,
    tau_hat_list: Iterable[complex],
    n_values: Sequence[int] | None = None,
    backend: str = "companion",
) -> dict[complex, list[tuple[int, float]]]:
    """``r_max`` against the degree ``n`` for each test point.

    By default every ``n = 1..N_ceiling`` is used; *n_values* restricts the
    scan to a subset (each must not exceed *N_ceiling*).
    """
    if backend == "companion" and N_ceiling > COMPANION_CEILING:
        raise RootFinderError(
            f"root-finder ceiling exceeded: N_ceiling={N_ceiling} > {COMPANION_CEILING}"
        )
    ns = list(range(1, N_ceiling + 1)) if n_values is None else sorted(set(n_values))
    if ns and (ns[0] < 1 or ns[-1] > N_ceiling):
        raise ValueError(f"degrees must lie in [1, {N_ceiling}]")

    d = scaled_weights(alpha, N_ceiling)
    out: dict[complex, list[tuple[int, float]]] = {}
    for th in tau_hat_list:
        out[th] = [(n, _rmax_from_coeffs(_coefficients(d, n, th), backend, th)) for n in ns]
    return out


class Stability(enum.Enum):
    Stable = "stable"
    Unstable = "unstable"


def is_stable_rmax(r: float) -> bool:
    return r < 1.0 - STABILITY_MARGIN


def classify_point(
    alpha: FractionalOrder | float,
    n: int,
    tau_hat: complex,
    backend: str = "companion",
) -> Stability:
    """Strict root condition: all roots strictly inside the unit circle."""
    r = rmax(alpha, n, tau_hat, backend)
    return Stability.Stable if is_stable_rmax(r) else Stability.Unstable


# }}}

# {{{ boundary locus


class LocusVariant(enum.Enum):
    #: The published closed-form expressions for the real and imaginary parts.
    AsPrinted = "as_printed"
    #: Direct division of :math:`p(e^{is}) = 0` by :math:`e^{ins}`.
    ComplexDivision = "complex_division"


@dataclass(frozen=True)
class LocusCurve:
    alpha: FractionalOrder
    n: int
    variant: LocusVariant
    s: np.ndarray = field(repr=False)
    x_hat: np.ndarray = field(repr=False)
    y_hat: np.ndarray = field(repr=False)

    @property
    def tau_hat(self) -> np.ndarray:
        return self.x_hat + 1j * self.y_hat


def _folded_dft(coeffs: np.ndarray, K: int) -> np.ndarray:
    r"""Return :math:`\sum_j c_j e^{-i j s_k}` at :math:`s_k = 2\pi k / K`."""
    j = np.arange(coeffs.size)
    folded = np.bincount(j % K, weights=coeffs, minlength=K)
    return np.fft.fft(folded)


def boundary_locus(
    alpha: FractionalOrder | float,
    n: int,
    num_samples: int = 2048,
    variant: LocusVariant | str = LocusVariant.ComplexDivision,
) -> LocusCurve:
    r"""Trace :math:`\hat\tau(s)` for :math:`s_k = 2\pi k / K`, ``K = num_samples``.

    Both variants reduce to sums of the form :math:`\sum_j c_j e^{-ijs}`,
    which are evaluated for all samples at once by folding the coefficients
    modulo ``K`` and taking an FFT, so the cost is ``O(n + K log K)``.
    """
    if num_samples < 16:
        raise ValueError(f"need at least 16 samples: got {num_samples}")
    if n < 2:
        raise ValueError(f"degree must be at least 2: got {n}")

    alpha = as_order(alpha)
    variant = LocusVariant(variant)
    K = num_samples
    k = np.arange(K)
    s = 2.0 * np.pi * k / K
    d = scaled_weights(alpha, n)
    w = d[2 : n + 1] - d[1:n]  # w[j - 1] = d_{j+1} - d_j, j = 1..n-1

    if variant is LocusVariant.ComplexDivision:
        c = np.concatenate([[d[1]], w, [-d[n]]])
        tau = _folded_dft(c, K)
        return LocusCurve(alpha, n, variant, s, tau.real.copy(), tau.imag.copy())

    # exact phases: n*s_k reduced modulo 2*pi
    ns = 2.0 * np.pi * ((n * k) % K) / K
    two_ns = 2.0 * np.pi * ((2 * n * k) % K) / K
    wsum = math.fsum(w)

    x_hat = d[1] - d[n] * np.cos(ns) + np.cos(ns) * wsum
    # sum_j w_j sin((2n - j) s) = Im(e^{2ins} sum_j w_j e^{-ijs})
    S = _folded_dft(np.concatenate([[0.0], w]), K)
    y_hat = d[1] * np.sin(two_ns) - d[n] * np.sin(ns) + (np.exp(1j * two_ns) * S).imag

    return LocusCurve(alpha, n, variant, s, x_hat, y_hat)


# }}}
