import numpy as np
import pytest

from src.solvers.integrate import Trajectory, integrate, sample_times


def test_zero_rhs_keeps_the_initial_state():
    traj = integrate(lambda q: np.zeros_like(q), np.array([1.0, -2.0]), 3.0)
    np.testing.assert_array_equal(traj.times, [0.0, 3.0])
    np.testing.assert_allclose(traj.final, [1.0, -2.0])


def test_exponential_decay():
    traj = integrate(lambda q: -q, np.array([1.0]), 2.0, rel_tol=1e-8, abs_tol=1e-10)
    assert traj.final[0] == pytest.approx(np.exp(-2.0), abs=1e-5)
    assert traj.n_evaluations > 0


def test_oscillator_conserves_energy():
    rotate = np.array([[0.0, 1.0], [-1.0, 0.0]])
    times = sample_times(10.0, 0.5)
    traj = integrate(lambda q: rotate @ q, np.array([1.0, 0.0]), 10.0, rel_tol=1e-9, abs_tol=1e-12, t_eval=times)
    energy = 0.5 * (traj.states**2).sum(axis=1)
    np.testing.assert_allclose(energy, 0.5, atol=1e-4)
    np.testing.assert_allclose(traj.states[:, 0], np.cos(times), atol=1e-4)


def test_batched_rhs_gives_the_same_trajectory():
    plain = integrate(lambda q: -0.5 * q, np.array([1.0, 3.0]), 1.0, rel_tol=1e-8, abs_tol=1e-10)
    batched = integrate(lambda q: -0.5 * q, np.array([1.0, 3.0]), 1.0, rel_tol=1e-8, abs_tol=1e-10, vectorized=True)
    np.testing.assert_allclose(batched.final, plain.final, rtol=1e-12)


def test_fixed_steps_converge_at_third_order():
    errors = []
    for h in (0.1, 0.05):
        traj = integrate(lambda q: -q, np.array([1.0]), 1.0, rel_tol=1e3, abs_tol=1e3, max_step=h, first_step=h)
        errors.append(abs(traj.final[0] - np.exp(-1.0)))
    assert np.log2(errors[0] / errors[1]) >= 2.5


def test_sample_times():
    np.testing.assert_allclose(sample_times(1.0, 0.25), [0.0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(sample_times(1.0, 0.3), [0.0, 0.3, 0.6, 0.9, 1.0])


def test_invalid_requests():
    with pytest.raises(ValueError):
        integrate(lambda q: q, np.ones(2), 0.0)
    with pytest.raises(ValueError):
        integrate(lambda q: q, np.array([np.nan, 1.0]), 1.0)
    with pytest.raises(ValueError):
        integrate(lambda q: q, np.ones(2), 1.0, rel_tol=0.0)
    with pytest.raises(ValueError):
        Trajectory(times=np.array([0.0, 1.0, 1.0]), states=np.zeros((3, 2)))
