import numpy as np
import pytest
import scipy.sparse as sp

from src.elastic_micro import BodyForce, MicroGridSpec
from src.heterogeneity import homogeneous_field
from src.solvers import SolverError
from src.solvers.equilibrium import equilibrium, full_domain_reference


def test_negative_identity():
    forcing = np.array([1.0, -2.0, 0.5, 3.0])
    result = equilibrium(-np.eye(4), forcing)
    np.testing.assert_allclose(result.q, forcing, rtol=1e-12)
    assert result.residual <= 1e-9


@pytest.mark.parametrize("preconditioner", ["ilu", "none"])
def test_diagonally_dominant_system(preconditioner):
    rng = np.random.default_rng(3)
    matrix = 4.0 * np.eye(50) + rng.uniform(-1.0, 1.0, (50, 50)) / 50
    forcing = rng.standard_normal(50)
    result = equilibrium(matrix, forcing, preconditioner=preconditioner)
    assert np.linalg.norm(matrix @ result.q + forcing) / np.linalg.norm(forcing) <= 1e-9
    assert result.preconditioned == (preconditioner == "ilu")
    assert result.iterations > 0


def test_exact_preconditioner_counts_one_iteration():
    # an exact factor converges half way through the first iteration
    matrix = sp.diags(np.arange(1.0, 11.0), format="csc")
    forcing = np.linspace(-1.0, 1.0, 10)
    result = equilibrium(matrix, forcing, drop_tol=0.0)
    np.testing.assert_allclose(result.q, -forcing / np.arange(1.0, 11.0), rtol=1e-12)
    assert result.preconditioned
    assert result.iterations == 1


def test_zero_forcing_gives_zero_state():
    result = equilibrium(sp.eye(6, format="csc"), np.zeros(6))
    np.testing.assert_array_equal(result.q, 0.0)
    assert result.iterations == 0


def test_invalid_requests():
    with pytest.raises(ValueError):
        equilibrium(np.eye(3), np.ones(4))
    with pytest.raises(ValueError):
        equilibrium(np.eye(3), np.ones(3), preconditioner="jacobi")


def test_unconverged_solve_raises():
    n = 200
    laplacian = sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="csc")
    with pytest.raises(SolverError):
        equilibrium(laplacian, np.ones(n), rtol=1e-14, maxiter=1, preconditioner="none", restarts=0)


def test_full_beam_under_uniform_axial_load():
    # nu = 0 decouples the axial problem: E u'' = -f between the fixed ends
    length, dx, f = 1.0, 0.02, 1e-3
    grid = MicroGridSpec(nx=49, ny=5, dx=dx, dy=0.02)
    force = BodyForce(np.full(grid.u_interior_shape, f), np.zeros(grid.v_interior_shape))
    net, result = full_domain_reference(grid, length, "fixed-fixed", homogeneous_field(1.0, 0.0, grid), force)

    u, v, udot, vdot = net.unpack(result.q)
    x, _ = net.u_coords()
    expected = f * (x - dx / 2) * (length + dx / 2 - x) / 2
    np.testing.assert_allclose(u, expected, rtol=1e-3, atol=1e-9)
    np.testing.assert_allclose(v, 0.0, atol=1e-9)
    np.testing.assert_allclose(udot, 0.0, atol=1e-9)
    np.testing.assert_allclose(vdot, 0.0, atol=1e-9)
