import numpy as np
import pytest
import scipy.linalg as spla

from drooploss.dynamics import InverterParams, assemble_decoupled, assemble_full
from drooploss.errors import ValidationError
from drooploss.h2 import h2_norm_analytic, h2_norm_gramian, solve_lyapunov
from drooploss.network import complete_graph, laplacian_eigenvalues, path_graph
from drooploss.sim import (
    SimConfig,
    empirical_h2,
    grounded_reduction,
    impulse_energies,
    settling_time,
    simulate,
)


@pytest.fixture
def path3():
    return assemble_decoupled(path_graph(3), InverterParams(alpha=0.2))


def x0_for(n, rng):
    return np.concatenate([rng.normal(0, 0.1, n), np.zeros(n), rng.normal(0, 0.05, n)])


def test_zero_state_without_noise_stays_zero(path3):
    tr = simulate(path3, SimConfig(horizon=1.0, noise_intensity=0.0))
    assert not tr.states.any()
    assert not tr.loss_series.any()
    assert tr.cumulative_loss[-1] == 0.0


def test_deterministic_run_tracks_matrix_exponential(path3):
    x0 = x0_for(3, np.random.default_rng(3))
    tr = simulate(path3, SimConfig(dt=1e-4, horizon=2.0, noise_intensity=0.0,
                                   initial_state=x0, record_stride=1000))
    for t, x in zip(tr.times, tr.states):
        exact = spla.expm(np.asarray(path3.A) * t) @ x0
        assert np.allclose(x, exact, atol=2e-4 * np.abs(x0).max())


def test_same_seed_same_path(path3):
    cfg = SimConfig(horizon=2.0, seed=5)
    a, b = simulate(path3, cfg), simulate(path3, cfg)
    c = simulate(path3, SimConfig(horizon=2.0, seed=6))
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)


def test_lossless_network_has_zero_loss():
    m = assemble_decoupled(path_graph(3, alpha=0.0), InverterParams())
    tr = simulate(m, SimConfig(horizon=1.0, seed=1))
    assert tr.states.any()
    assert np.all(tr.loss_series == 0.0)


def test_noise_intensity_scales_loss_exactly(path3):
    # intensity 4 doubles every state sample, which is exact in binary floating point
    a = simulate(path3, SimConfig(horizon=2.0, seed=2))
    b = simulate(path3, SimConfig(horizon=2.0, seed=2, noise_intensity=4.0))
    assert np.array_equal(b.states, 2 * a.states)
    assert np.array_equal(b.loss_series, 4 * a.loss_series)
    assert b.empirical_h2 == pytest.approx(4 * a.empirical_h2, rel=1e-14)


def test_initial_state_scaling_is_quadratic(path3):
    x0 = x0_for(3, np.random.default_rng(0))
    a = simulate(path3, SimConfig(horizon=3.0, noise_intensity=0.0, initial_state=x0))
    b = simulate(path3, SimConfig(horizon=3.0, noise_intensity=0.0, initial_state=2 * x0))
    assert np.array_equal(b.loss_series, 4 * a.loss_series)


def test_cumulative_loss_matches_gramian_quadratic_form(path3):
    x0 = x0_for(3, np.random.default_rng(4))
    Ar, _, Cr, P, _ = grounded_reduction(path3)
    X = solve_lyapunov(Ar, Cr.T @ Cr)
    xr = P @ x0
    tr = simulate(path3, SimConfig(dt=1e-4, horizon=40.0, noise_intensity=0.0,
                                   initial_state=x0, record_stride=10000))
    assert tr.cumulative_loss[-1] == pytest.approx(xr @ X @ xr, rel=1e-3)


def test_uniform_phase_shift_is_invisible(path3):
    # dyadic angles keep the grounded differences exact
    x0 = np.array([0.125, -0.25, 0.375, 0.0, 0.0, 0.0, 0.0625, -0.03125, 0.0])
    shift = np.zeros(9)
    shift[:3] = 0.5
    cfg = dict(horizon=2.0, seed=7, record_stride=3)
    a = simulate(path3, SimConfig(initial_state=x0, **cfg))
    b = simulate(path3, SimConfig(initial_state=x0 + shift, **cfg))
    assert np.array_equal(a.loss_series, b.loss_series)
    assert np.array_equal(a.cumulative_loss, b.cumulative_loss)
    assert a.empirical_h2 == b.empirical_h2
    assert np.array_equal(a.states[:, 3:], b.states[:, 3:])


def test_impulse_energies_three_way_oracle(path3):
    e = impulse_energies(path3)
    analytic = h2_norm_analytic(path3.params, laplacian_eigenvalues(path3.graph)).total
    gramian = h2_norm_gramian(path3).total
    assert e.sum() == pytest.approx(analytic, rel=1e-6)
    assert gramian == pytest.approx(analytic, rel=1e-6)


def test_complete_graph_channels_are_symmetric():
    m = assemble_decoupled(complete_graph(4), InverterParams(alpha=0.2))
    e = impulse_energies(m)
    assert np.allclose(e[:4], e[0], rtol=1e-9)
    assert np.allclose(e[4:], e[4], rtol=1e-9)


def test_impulse_energies_full_model():
    m = assemble_full(path_graph(4, b_range=(0.5, 2.0), seed=1, alpha=0.2),
                      InverterParams(k_p=[1, 2, 1, 2], tau_q=0.5))
    assert impulse_energies(m).sum() == pytest.approx(h2_norm_gramian(m).total, rel=1e-6)


def test_step_guard(path3):
    with pytest.raises(ValidationError, match="reduce dt"):
        simulate(path3, SimConfig(dt=0.5, horizon=1.0))


def test_empirical_h2_needs_long_window(path3):
    with pytest.raises(ValidationError):
        empirical_h2(path3, SimConfig(horizon=1.0))
    with pytest.raises(ValidationError):
        empirical_h2(path3, SimConfig(horizon=100.0, burn_in=0.0))


def test_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(dt=0.0)
    with pytest.raises(ValidationError):
        SimConfig(burn_in=1.0)
    with pytest.raises(ValidationError):
        SimConfig(noise_intensity=-1.0)


def test_settling_time():
    t = np.arange(6.0)
    assert settling_time(t, [1.0, 0.5, 0.2, 0.04, 0.01, 0.0]) == 3.0
    assert settling_time(t, np.zeros(6)) == 0.0
    assert settling_time(t, [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]) == float("inf")


def test_trajectory_csv(path3, tmp_path):
    tr = simulate(path3, SimConfig(horizon=0.01, seed=0))
    out = tmp_path / "traj.csv"
    tr.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("t,delta_1,") and lines[0].endswith(",V_3,loss")
    assert len(lines) == 1 + len(tr.times) == 12
