from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsfd.caputo import (
    SampledFunction,
    TimeGrid,
    nsl1_apply,
    observed_rate,
    truncation_order_scan,
)
from nsfd.fraccore import effective_temporal_df, make_df, parse_df, standard_effective_df
from oracles import l1_caputo_by_quadrature

alphas = st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9])


def sampled(fn, N, T=1.0):
    return SampledFunction.from_callable(fn, TimeGrid(T, N))


def test_grid_nodes_are_multiplicative():
    g = TimeGrid(1.0, 3)
    assert g.tau == 1.0 / 3
    assert g.nodes[3] == 3 * (1.0 / 3)
    assert g[2] == 2 * g.tau
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)


def test_sampled_function_length_checked():
    with pytest.raises(ValueError):
        SampledFunction(TimeGrid(1.0, 4), np.zeros(4))


@given(alphas, st.floats(min_value=-10, max_value=10), st.integers(min_value=1, max_value=60))
def test_constants_are_annihilated(alpha, c, N):
    y = sampled(lambda t: c, N)
    for df in (standard_effective_df(alpha), parse_df("phieff=ratio(sinh)", alpha)):
        for n in (1, N // 2 + 1, N):
            assert nsl1_apply(y, alpha, df, n) == 0.0


def test_linear_function_is_exact():
    y = sampled(lambda t: t, 16)
    val = nsl1_apply(y, 0.5, standard_effective_df(0.5), 16)
    assert val == pytest.approx(1.0 / math.gamma(1.5), abs=1e-12)
    assert val == pytest.approx(1.1283792, abs=1e-7)


def test_power_function_defect_scale():
    a = 0.3
    y = sampled(lambda t: t ** (2 + a), 10)
    val = nsl1_apply(y, a, standard_effective_df(a), 10)
    exact = math.gamma(3 + a) / 2
    # the IVP at the same resolution shows an error of 7.1e-3
    assert abs(val - exact) < 0.1
    assert abs(val - exact) / exact < 0.05


@given(
    alphas,
    st.lists(st.floats(min_value=-5, max_value=5), min_size=9, max_size=9),
    st.lists(st.floats(min_value=-5, max_value=5), min_size=9, max_size=9),
    st.floats(min_value=-3, max_value=3),
    st.floats(min_value=-3, max_value=3),
)
def test_linearity(alpha, yv, zv, a, b):
    g = TimeGrid(1.0, 8)
    y, z = SampledFunction(g, np.array(yv)), SampledFunction(g, np.array(zv))
    df = parse_df("phieff=pow(sinh)", alpha)
    for n in range(1, 9):
        lhs = nsl1_apply(a * y + b * z, alpha, df, n)
        rhs = a * nsl1_apply(y, alpha, df, n) + b * nsl1_apply(z, alpha, df, n)
        assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(lhs)) * 1e3)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("fn", [np.exp, lambda t: np.sin(3 * t), lambda t: t**1.5])
def test_standard_df_equals_quadrature_oracle(alpha, fn):
    N = 12
    y = sampled(fn, N)
    for n in (1, 5, N):
        ours = nsl1_apply(y, alpha, standard_effective_df(alpha), n)
        ref = l1_caputo_by_quadrature(y.values, y.grid.tau, alpha, n)
        assert ours == pytest.approx(ref, rel=1e-10, abs=1e-12)


def test_nonstandard_df_rescales_standard_value():
    alpha, N = 0.4, 20
    y = sampled(np.cos, N)
    std = nsl1_apply(y, alpha, standard_effective_df(alpha), N)
    phi = effective_temporal_df(make_df("phi", "sinh"), alpha, "ratio")
    ns = nsl1_apply(y, alpha, phi, N)
    tau = 1.0 / N
    assert ns == pytest.approx(std * tau**alpha / phi(tau), rel=1e-14)


def test_index_range_checked():
    y = sampled(np.exp, 5)
    df = standard_effective_df(0.5)
    for n in (0, 6):
        with pytest.raises(IndexError):
            nsl1_apply(y, 0.5, df, n)


def test_requires_effective_df():
    with pytest.raises(TypeError):
        nsl1_apply(sampled(np.exp, 5), 0.5, make_df("phi", "tau"), 5)


def test_compensated_summation_branch():
    # beyond the compensated-summation threshold the operator still kills constants
    y = sampled(lambda t: 3.0, 12_000)
    assert nsl1_apply(y, 0.5, standard_effective_df(0.5), 12_000) == pytest.approx(0, abs=1e-9)


# {{{ order scan


def caputo_t2(alpha):
    return 2.0 / math.gamma(3 - alpha)


def test_order_scan_t2_alpha05():
    rows = truncation_order_scan(lambda t: t**2, caputo_t2(0.5), 0.5,
                                 standard_effective_df(0.5), (40, 80, 160))
    assert rows[0].observed_order is None
    for r in rows[1:]:
        assert abs(r.observed_order - 1.5) <= 0.15


def test_order_scan_constant_is_exact():
    rows = truncation_order_scan(lambda t: 4.0, 0.0, 0.5, standard_effective_df(0.5), (4, 8, 16))
    assert all(r.defect == 0.0 for r in rows)
    assert [r.observed_order for r in rows[1:]] == ["exact", "exact"]


def test_order_scan_linear_defect_tiny():
    rows = truncation_order_scan(lambda t: t, 1 / math.gamma(1.5), 0.5,
                                 standard_effective_df(0.5), (10, 20, 40, 80))
    assert all(r.defect <= 1e-12 for r in rows)


def test_order_scan_needs_doubling():
    df = standard_effective_df(0.5)
    with pytest.raises(ValueError):
        truncation_order_scan(np.exp, 1.0, 0.5, df, (10, 20))
    with pytest.raises(ValueError):
        truncation_order_scan(np.exp, 1.0, 0.5, df, (10, 20, 30))


def test_observed_rate():
    assert observed_rate(4.0, 1.0) == 2.0
    assert observed_rate(0.0, 1.0) == "exact"


# }}}
