"""Error tables: dyadic rates, the display rounding of published tables and CSV output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence


def published_display(e: float) -> float:
    """Quantise an error the way the published tables print it.

    Values of at least ``1e-3`` appear in fixed point with four decimals
    (``0.0071`` is printed as ``7.1000e-03``); smaller values keep five
    significant digits.
    """
    if not math.isfinite(e):
        return e
    if abs(e) >= 1.0e-3:
        return round(e, 4)
    return float(f"{e:.4e}")


def quantize(errors: Sequence[float | None], mode: str) -> list[float | None]:
    if mode == "none":
        return list(errors)
    if mode == "published":
        return [None if e is None else published_display(e) for e in errors]
    raise ValueError(f"unknown quantisation mode {mode!r}: expected 'published' or 'none'")


def dyadic_rates(errors: Sequence[float | None]) -> list[float | None]:
    """``log2(E[k-1] / E[k])``; undefined for the first entry or nonpositive errors."""
    rates: list[float | None] = [None]
    for prev, cur in zip(errors, errors[1:]):
        if prev is None or cur is None or not (prev > 0 and cur > 0):
            rates.append(None)
        elif not (math.isfinite(prev) and math.isfinite(cur)):
            rates.append(None)
        else:
            rates.append(math.log2(prev / cur))
    return rates


def fmt_error(e: float | None) -> str:
    return "" if e is None else f"{e:.4e}"


def fmt_rate(r: float | None) -> str:
    return "" if r is None else f"{r:.4f}"


@dataclass
class IvpErrorRow:
    alpha: float
    N: int
    df: str
    E_inf: float
    rate: float | None


@dataclass
class IvpErrorTable:
    """Rows ``(alpha, N, df, E_inf, rate)`` grouped by ``(alpha, df)``.

    :attr:`errors` keeps the raw errors; rates are computed from the
    quantised errors selected by :attr:`quantize`.
    """

    example: str
    #: ``(alpha, df) -> [(N, E_inf), ...]`` in increasing ``N``.
    series: dict[tuple[float, str], list[tuple[int, float]]] = field(default_factory=dict)
    quantize: str = "published"

    def rows(self) -> list[IvpErrorRow]:
        out = []
        for (alpha, df), cells in self.series.items():
            Ns = [N for N, _ in cells]
            errors = quantize([e for _, e in cells], self.quantize)
            for N, e, r in zip(Ns, errors, dyadic_rates(errors)):
                out.append(IvpErrorRow(alpha, N, df, e, r))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "N", "df", "E_inf", "rate"])
        for row in self.rows():
            w.writerow([f"{row.alpha:g}", row.N, row.df, fmt_error(row.E_inf), fmt_rate(row.rate)])
        return buf.getvalue()


@dataclass
class ConvergenceReport:
    """Spatial convergence table: one row per ``M``, one column pair per DF.

    A diverged cell is stored as ``None`` and printed as ``diverged``.
    """

    M: list[int]
    #: ``df text -> E_inf per M`` (raw).
    errors: dict[str, list[float | None]]
    metadata: dict[str, object] = field(default_factory=dict)
    quantize: str = "published"

    def rates(self, df: str) -> list[float | None]:
        return dyadic_rates(quantize(self.errors[df], self.quantize))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["M"]
        for df in self.errors:
            header += [f"E_inf[{df}]", f"rate[{df}]"]
        w.writerow(header)

        cols = {df: (quantize(e, self.quantize), self.rates(df)) for df, e in self.errors.items()}
        for k, M in enumerate(self.M):
            row: list[object] = [M]
            for errs, rates in cols.values():
                row.append("diverged" if errs[k] is None else fmt_error(errs[k]))
                row.append(fmt_rate(rates[k]))
            w.writerow(row)
        return buf.getvalue()
