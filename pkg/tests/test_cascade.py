import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gkdv_collide.cascade import (CascadeSolution, assemble_FG, closed_forms, parse_orders, precedes,
                                  shift_constants, solve_cascade)
from gkdv_collide.errors import UnsupportedOrder
from gkdv_collide.profiles import moments


def test_p2_golden(cascade2):
    g = closed_forms(2)
    assert cascade2[(1, 0)].a == pytest.approx(2 / 3, abs=1e-7)
    assert cascade2[(1, 0)].b == pytest.approx(-2.0, abs=1e-7)
    assert cascade2[(2, 0)].b == pytest.approx(4 / 3, abs=1e-7)
    assert cascade2[(2, 0)].a == pytest.approx(-4 / 9, abs=1e-7)
    assert cascade2[(1, 1)].a == pytest.approx(2 / 3, abs=1e-7)
    assert g["a10"] == 2 / 3


def test_p4_closed_forms(cascade4):
    m = moments(4)
    g = closed_forms(4)
    assert g["a10"] == pytest.approx(-2 * m["int_Q1"] / m["int_Q2"], rel=1e-14)
    assert cascade4[(1, 0)].a == pytest.approx(g["a10"], abs=1e-8)
    assert cascade4[(1, 0)].b == pytest.approx(g["b10"], abs=1e-8)
    assert cascade4[(2, 0)].b == pytest.approx(g["b20"], abs=1e-6)
    assert abs(cascade4[(1, 0)].b + 0.9) < 0.05
    assert cascade4[(2, 0)].b < 0


@pytest.mark.parametrize("name", ["cascade2", "cascade4"])
def test_residuals_and_parity(name, request):
    cas = request.getfixturevalue(name)
    for kl, e in cas.entries.items():
        assert max(cas.residuals[kl]) < 1e-6
        assert e.A.parity_ok("even")
        assert e.B.parity_ok("odd")


def test_first_order_A_is_decaying(cascade4):
    A = cascade4[(1, 0)].A
    assert A.tilde.is_zero and A.hat.is_zero


def test_canonical_vs_explicit_gauge_p2(cascade2):
    raw = solve_cascade(2, gauge="canonical")
    # both gauges share (1,0) and differ along the homogeneous family only
    assert raw[(1, 0)].a == pytest.approx(cascade2[(1, 0)].a, abs=1e-12)
    for kl in ((2, 0), (1, 1)):
        g = cascade2[kl].gamma
        assert cascade2[kl].a == pytest.approx(raw[kl].a + g * raw[(1, 0)].a, abs=1e-9)
    s_raw = shift_constants(raw, 0.05, "canonical")
    s_exp = shift_constants(cascade2, 0.05, "canonical")
    assert s_raw["Delta"] == pytest.approx(s_exp["Delta"], rel=1e-9)


def test_json_round_trip(cascade4, tmp_path):
    path = tmp_path / "c.json"
    cascade4.to_json(path)
    back = CascadeSolution.from_json(path)
    for kl, e in cascade4.entries.items():
        assert back[kl].a == e.a and back[kl].b == e.b
        assert np.array_equal(back[kl].B.ybar, e.B.ybar)
        assert back[kl].A.tilde.tolist() == e.A.tilde.tolist()


def test_shift_constants_leading_term(cascade4):
    # Delta ~ a10 c^(-1/6) int Q for the first order
    m = moments(4)
    only = solve_cascade(4, [(1, 0)])
    c = 0.01
    d = shift_constants(only, c)
    assert d["Delta"] == pytest.approx(closed_forms(4)["Delta_leading_coef"] * c ** (-1 / 6), rel=1e-8)
    assert d["Delta_c"] == pytest.approx(2 * cascade4[(1, 0)].b)
    assert d["Delta"] == pytest.approx(-2 * c ** (-1 / 6) * m["int_Q1"] ** 2 / m["int_Q2"], rel=1e-8)


def test_order_validation():
    with pytest.raises(UnsupportedOrder):
        solve_cascade(4, [(2, 0)])
    with pytest.raises(UnsupportedOrder):
        solve_cascade(4, [(1, 0), (3, 0)])
    with pytest.raises(UnsupportedOrder):
        assemble_FG(5, 1, None)
    assert parse_orders("1,0; 2,0") == [(1, 0), (2, 0)]


orders = st.tuples(st.integers(1, 4), st.integers(0, 3))


@given(a=orders, b=orders)
def test_precedes_is_a_strict_order(a, b):
    assert not (precedes(a, b) and precedes(b, a))
    assert not precedes(a, a)
