import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkdv_collide.approx import (ApproxSolution, _qck, _terms, eval_v, eval_v_sharp, fit_slope,
                                 p2_explicit_match, p2_shifts, recomposition_error, residual_S,
                                 residual_sweep, write_sweep_csv)
from gkdv_collide.errors import WrongExponent
from gkdv_collide.profiles import eval_Q, eval_Qc


@pytest.fixture(scope="module")
def apx4(cascade4):
    return ApproxSolution(cascade4, 0.05)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 3), s=st.floats(-30, 30), c=st.floats(0.01, 0.5))
def test_qck_second_derivative(k, s, c):
    h = 1e-4
    fd = (_qck(4, c, k, s + h, 1) - _qck(4, c, k, s - h, 1)) / (2 * h)
    assert _qck(4, c, k, s, 2) == pytest.approx(fd, abs=1e-7)


def test_alpha_is_primitive_of_beta(apx4):
    s = np.linspace(-60, 60, 41)
    h = 1e-3
    fd = (apx4.alpha(s + h) - apx4.alpha(s - h)) / (2 * h)
    assert np.max(np.abs(fd - apx4.beta(s))) < 1e-6
    # the total jump of alpha is the shift Delta
    assert apx4.alpha(np.array([1e4]))[0] - apx4.alpha(np.array([-1e4]))[0] == pytest.approx(apx4.Delta, rel=1e-6)


@pytest.mark.parametrize("t_frac", [-0.7, 0.0, 0.4])
def test_symmetry(apx4, t_frac):
    # A even, B odd and alpha odd give v(-t, -x) = v(t, x)
    t = t_frac * apx4.T_c
    x = np.linspace(-25, 25, 51)
    assert np.max(np.abs(eval_v(apx4, t, x) - eval_v(apx4, -t, -x))) < 1e-8


def test_time_derivative_against_differences(apx4):
    t = 0.3 * apx4.T_c
    x = np.linspace(-20, 20, 41)
    e = 1e-4
    fd = (eval_v(apx4, t + e, x) - eval_v(apx4, t - e, x)) / (2 * e)
    assert np.max(np.abs(fd - _terms(apx4, t, x, True)[3])) < 1e-6


def test_coordinates_far_from_collision(apx4):
    # alpha tends to -+Delta/2 once the small soliton is far away
    x = np.linspace(-10, 10, 21)
    for t, sgn in ((-60.0, -1), (60.0, 1)):
        y, yc = apx4.coords(t, x)
        assert np.max(np.abs(y - (x - sgn * apx4.Delta / 2))) < 1e-3


def test_residual_cancels_orders_for_small_c(cascade4):
    # at small c the residual of (1,0) decays like Q_c^2 and (2,0) removes that term
    cs = [1e-3, 3e-4]
    s1 = fit_slope(cs, [residual_S(ApproxSolution(cascade4, c, [(1, 0)]), 0.0, h=0.1).norms["dx0"] for c in cs])
    s2 = fit_slope(cs, [residual_S(ApproxSolution(cascade4, c), 0.0, h=0.1).norms["dx0"] for c in cs])
    assert 0.6 < s1 < 0.8
    assert s2 > 0.95


def test_sharp_is_p4_only(cascade2):
    apx = ApproxSolution(cascade2, 0.05)
    with pytest.raises(WrongExponent):
        eval_v_sharp(apx, 0.0, np.zeros(3))
    with pytest.raises(WrongExponent):
        recomposition_error(apx, 1)


def test_recomposition_symmetric(apx4):
    a, b = recomposition_error(apx4, 1), recomposition_error(apx4, -1)
    for key in ("err_full", "err_two_soliton", "err_dx"):
        assert a[key] == pytest.approx(b[key], rel=1e-8)


def test_window_warning(apx4):
    with pytest.warns(UserWarning):
        eval_v(apx4, 2 * apx4.T_c, np.zeros(2))


def test_p2_explicit_solves_kdv():
    c = 0.05
    x = np.linspace(-200, 200, 4096, endpoint=False)
    L = 400.0
    k = 2 * np.pi * np.fft.fftfreq(x.size, L / x.size)
    for t in (-30.0, 0.0, 12.0):
        u = p2_explicit_match(c, t, x)
        e = 1e-4
        ut = (p2_explicit_match(c, t + e, x) - p2_explicit_match(c, t - e, x)) / (2 * e)
        flux = np.fft.ifft(1j * k * (-(k**2) * np.fft.fft(u) + np.fft.fft(u * u))).real
        assert np.max(np.abs(ut + flux)) < 1e-6


def test_p2_explicit_asymptotics():
    # large soliton at x = t before and x = t + Delta' after; small one at
    # x = ct + Delta'/sqrt(c) before and x = ct after
    c = 0.05
    sc = np.sqrt(c)
    d = p2_shifts(c)["Delta_prime"]
    for t, after in ((-400.0, False), (400.0, True)):
        xb = t + (d if after else 0.0)
        x = np.linspace(xb - 40, xb + 40, 801)
        assert np.max(np.abs(p2_explicit_match(c, t, x) - eval_Q(2, x - xb))) < 1e-8
        xs0 = c * t + (0.0 if after else d / sc)
        xs = np.linspace(xs0 - 60, xs0 + 60, 801)
        assert np.max(np.abs(p2_explicit_match(c, t, xs) - eval_Qc(2, xs - xs0, 0, c))) < 1e-8


def test_p2_shift_values():
    s = p2_shifts(0.05)
    sc = np.sqrt(0.05)
    assert s["Delta_prime"] == pytest.approx(2 * np.log((1 + sc) / (1 - sc)))
    assert s["Delta_prime_c"] == pytest.approx(-s["Delta_prime"] / sc)


@given(a=st.floats(-3, 3), k=st.floats(0.1, 10))
def test_fit_slope_recovers_power(a, k):
    cs = [0.05, 0.02, 0.01]
    assert fit_slope(cs, [k * c**a for c in cs]) == pytest.approx(a, abs=1e-9)


def test_sweep_csv(cascade4, tmp_path):
    rows = residual_sweep(cascade4, [0.05, 0.02], [(1, 0)])
    assert len(rows) == 6
    path = tmp_path / "s.csv"
    write_sweep_csv(rows, path, {"p": 4})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#") and "version=" in lines[0]
    assert lines[1] == "c,k0,l0,norm_name,value,fitted_slope"
