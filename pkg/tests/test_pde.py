import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkdv_collide.approx import p2_explicit_match
from gkdv_collide.errors import BlowupDetected, DomainTooSmall, InvalidParameter
from gkdv_collide.pde import (ETDRK4, Field, RunConfig, collide, conserved, defect, find_peaks,
                              fit_two_solitons, grid_points, identify_pair, load_checkpoint, run,
                              save_checkpoint, speed_from_amplitude, stable_dt, track_solitons)
from gkdv_collide.profiles import SolitonParams, eval_Q, eval_Qc


def soliton_field(p, L=80.0, n=1024, shift=0.0, frame=1.0):
    x = grid_points(L, n)
    return Field(p, L, eval_Q(p, x - shift), 0.0, frame)


@pytest.mark.parametrize("p", [2, 4])
def test_soliton_is_stationary_in_moving_frame(p):
    f0 = soliton_field(p)
    dt = stable_dt(p, f0.L, f0.n, 1.05 * eval_Q(p, 0.0))
    f1 = ETDRK4(p, f0.L, f0.n, dt).advance(f0, int(5 / dt))
    assert np.max(np.abs(f1.u - f0.u)) < 1e-10


@pytest.mark.parametrize("p", [2, 4])
def test_soliton_moves_with_unit_speed(p):
    f0 = soliton_field(p, frame=0.0)
    dt = 0.005
    steps = 400
    f1 = ETDRK4(p, f0.L, f0.n, dt, frame=0.0).advance(f0, steps)
    exact = eval_Q(p, f0.x - steps * dt)
    assert np.max(np.abs(f1.u - exact)) < 1e-5


def test_time_convergence_order():
    # stiff order reduction keeps ETDRK4 a little below 4 here
    f0 = soliton_field(4, frame=0.0)
    errs = []
    for dt in (0.01, 0.005):
        steps = int(round(2.0 / dt))
        f1 = ETDRK4(4, f0.L, f0.n, dt, frame=0.0).advance(f0, steps)
        errs.append(np.max(np.abs(f1.u - eval_Q(4, f0.x - 2.0))))
    assert np.log2(errs[0] / errs[1]) > 3.0


def test_backward_integration_returns():
    p, c = 2, 0.25
    x = grid_points(120.0, 1024)
    f0 = Field(p, 120.0, eval_Q(p, x + 10) + eval_Qc(p, x - 10, 0, c), 0.0, 1.0)
    fwd = run(f0, 6.0, 0.01, 1.0)
    back = run(fwd[-1], 0.0, 0.01, 1.0)
    assert back[-1].t == pytest.approx(0.0, abs=1e-12)
    assert np.max(np.abs(back[-1].u - f0.u)) < 1e-8
    assert [s.t for s in fwd] == pytest.approx([0, 1, 2, 3, 4, 5, 6])


def test_explicit_two_soliton_small_run():
    # the integrator reproduces the explicit KdV two-soliton through the collision
    c = 0.25
    L, n = 160.0, 2048
    x = grid_points(L, n)
    t0 = -15.0
    f0 = Field(2, L, p2_explicit_match(c, t0, x + t0), t0, 1.0)
    snaps = run(f0, 15.0, 0.005, 5.0)
    for s in snaps:
        U = p2_explicit_match(c, s.t, s.x + s.t)
        assert np.linalg.norm(s.u - U) / np.linalg.norm(U) < 1e-6
    drift = abs(conserved(snaps[-1])["energy"] / conserved(f0)["energy"] - 1)
    assert drift < 1e-8


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.005, 0.9), p=st.sampled_from([2, 4]))
def test_speed_from_amplitude_inverts_profile(c, p):
    assert speed_from_amplitude(p, eval_Qc(p, 0.0, 0, c)) == pytest.approx(c, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(s1=st.floats(-20, 20), s2=st.floats(20, 40), c=st.floats(0.05, 0.3))
def test_peaks_and_fit_recover_parameters(s1, s2, c):
    p = 4
    L, n = 800.0, 16384
    x = grid_points(L, n)
    f = Field(p, L, eval_Q(p, x - s1) + eval_Qc(p, x - s1 - s2 / np.sqrt(c), 0, c), 0.0)
    (x1, a1), (x2, a2) = identify_pair(f, c)
    assert x1 == pytest.approx(s1, abs=1e-3)
    fp = fit_two_solitons(f, (speed_from_amplitude(p, a1), x1, speed_from_amplitude(p, a2), x2), c)
    assert fp[0] == pytest.approx(1.0, abs=1e-8)
    assert fp[2] == pytest.approx(c, rel=1e-6)
    assert fp[3] == pytest.approx(s1 + s2 / np.sqrt(c), abs=1e-5)
    d = defect(f, *fp, c)
    assert d["full"]["h1c"] < 1e-7


def test_find_peaks_sorted():
    x = grid_points(100.0, 2048)
    f = Field(2, 100.0, eval_Q(2, x) + eval_Qc(2, x - 30, 0, 0.2), 0.0)
    peaks = find_peaks(f, 0.1)
    assert len(peaks) == 2 and peaks[0][1] > peaks[1][1]


def test_track_unwraps():
    x = grid_points(100.0, 1024)
    hist = [Field(2, 100.0, eval_Q(2, ((x - s + 50) % 100) - 50) + eval_Qc(2, x + 20, 0, 0.2), float(i))
            for i, s in enumerate((40.0, 45.0, 50.0, 55.0))]
    tr = track_solitons(hist, 0.2)
    assert np.all(np.diff(tr.rho1) > 0)


def test_conserved_quantities_of_soliton():
    from gkdv_collide.profiles import moments
    f = soliton_field(4, L=120.0, n=4096)
    m = moments(4)
    q = conserved(f)
    assert q["mass"] == pytest.approx(m["int_Q1"], rel=1e-10)
    assert q["energy"] == pytest.approx(m["energy"], rel=1e-9)


def test_checkpoint_round_trip(tmp_path):
    f = soliton_field(2)
    path = tmp_path / "u.bin"
    save_checkpoint(f, path, c=0.1)
    g, meta = load_checkpoint(path)
    assert np.array_equal(g.u, f.u) and meta["c"] == 0.1 and g.L == f.L


def test_blowup_detected():
    x = grid_points(40.0, 256)
    f = Field(4, 40.0, 100.0 * np.exp(-x**2), 0.0)
    with pytest.raises(BlowupDetected):
        ETDRK4(4, 40.0, 256, 1e-3).advance(f, 1)


def test_domain_too_small():
    cfg = RunConfig(T_run=50.0, L=60.0, n=512, dt=0.01, sample_dt=0.5, t_start=-50.0, fit_after=20.0)
    with pytest.raises(DomainTooSmall):
        collide(SolitonParams(4, 0.05), "pure", cfg)


def test_bad_source_and_dt():
    with pytest.raises(InvalidParameter):
        collide(SolitonParams(4, 0.05), "bogus")
    with pytest.raises(InvalidParameter):
        ETDRK4(2, 10.0, 64, 0.0)
