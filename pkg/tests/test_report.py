from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsfd.report import (
    ConvergenceReport,
    IvpErrorTable,
    dyadic_rates,
    fmt_error,
    fmt_rate,
    published_display,
    quantize,
)


def test_published_display_rounding():
    assert published_display(7.0978e-3) == 0.0071
    assert published_display(3.81234e-2) == 0.0381
    assert published_display(6.04681e-4) == 6.0468e-4
    assert published_display(0.0) == 0.0


@given(st.floats(min_value=1e-12, max_value=1.0))
def test_published_display_relative_error(e):
    # four decimals above 1e-3, five significant digits below
    bound = 0.5e-4 / e if e >= 1e-3 else 0.5e-4
    assert abs(published_display(e) - e) / e <= bound * (1 + 1e-9)


def test_rates():
    assert dyadic_rates([4.0, 1.0, None, 0.25]) == [None, 2.0, None, None]
    assert dyadic_rates([1.0, 0.0]) == [None, None]


def test_quantize_modes():
    assert quantize([0.00712, None], "published") == [0.0071, None]
    assert quantize([0.00712], "none") == [0.00712]
    with pytest.raises(ValueError):
        quantize([1.0], "nearest")


def test_formatting():
    assert fmt_error(0.0071) == "7.1000e-03"
    assert fmt_error(None) == ""
    assert fmt_rate(1.31069) == "1.3107"
    assert fmt_rate(None) == ""


def test_ivp_table_csv():
    t = IvpErrorTable("ex1", {(0.3, "phi=tau"): [(10, 7.1e-3), (20, 2.3e-3)]})
    lines = t.to_csv().splitlines()
    assert lines == [
        "alpha,N,df,E_inf,rate",
        "0.3,10,phi=tau,7.1000e-03,",
        f"0.3,20,phi=tau,2.3000e-03,{math.log2(7.1 / 2.3):.4f}",
    ]


def test_convergence_report_csv():
    r = ConvergenceReport([2, 4, 8], {"psi=h2": [0.1, 0.025, None]})
    lines = r.to_csv().splitlines()
    assert lines[0] == "M,E_inf[psi=h2],rate[psi=h2]"
    assert lines[1] == "2,1.0000e-01,"
    assert lines[2] == "4,2.5000e-02,2.0000"
    assert lines[3] == "8,diverged,"
