import numpy as np
import pytest

from src.elastic_micro import MicroGridSpec, StaggeredField, compute_stresses
from src.heterogeneity import RandomElasticitySpec, homogeneous_field, random_periodic_field
from src.patch_net import (
    CouplingError,
    CouplingSpec,
    MacroBC,
    PatchNetwork,
    PatchScheme,
    couple_patches,
    cross_beam_statistics,
    edge_values,
    interpolation_weights,
    restrict_to_patches,
)

GRID = MicroGridSpec(nx=4, ny=5, dx=0.05, dy=0.05)
SPECTRAL = CouplingSpec("spectral")
P4 = CouplingSpec("polynomial", 4)


def periodic_net(n_patches=5, coupling=SPECTRAL, grid=GRID):
    return PatchNetwork.periodic(grid, n_patches, 2 * np.pi, coupling, homogeneous_field(1.0, 0.3, grid))


def bounded_net(macro_bc, grid=GRID, n_patches=3, length=1.0):
    spec = RandomElasticitySpec(seed=3, period_x=2 * grid.dx)
    offsets = PatchNetwork.bounded_offsets(grid, n_patches, length)
    materials = [random_periodic_field(spec, grid, offset_cells=int(s)) for s in offsets]
    return PatchNetwork.bounded(grid, n_patches, length, CouplingSpec("polynomial", 2), macro_bc, materials)


def random_state(net, seed=0):
    return np.random.default_rng(seed).standard_normal(net.dim)


# --- interpolation ----------------------------------------------------------


def test_constants_pass_through_both_modes():
    centres = (np.arange(7) + 0.5) * 2 * np.pi / 7
    donors = np.ones((7, 3))
    for coupling in (SPECTRAL, P4):
        for side in ("left", "right"):
            edge = edge_values(donors, coupling, side, centres=centres, offset=0.4, period=2 * np.pi)
            np.testing.assert_allclose(edge, 1.0, atol=1e-12)


def test_bounded_polynomial_reproduces_low_degree_polynomials():
    centres = np.linspace(0.5, 9.5, 10)
    right = edge_values(centres, P4, "right", centres=centres, offset=0.3)
    left = edge_values(centres, P4, "left", centres=centres, offset=0.3)
    np.testing.assert_allclose(right, centres + 0.3, atol=1e-12)
    np.testing.assert_allclose(left, centres - 0.3, atol=1e-12)

    quartic = edge_values(centres**4, P4, "right", centres=centres, offset=0.3)
    np.testing.assert_allclose(quartic, (centres + 0.3) ** 4, rtol=1e-10)


def test_polynomial_weights_are_local():
    centres = (np.arange(9) + 0.5) * 2 * np.pi / 9
    weights = interpolation_weights(centres, 0.2, 4, period=2 * np.pi)
    np.testing.assert_allclose(weights.sum(axis=1), 1.0, atol=1e-12)
    for row in range(9):
        far = [(row + k) % 9 for k in (3, 4, 5, 6)]
        assert np.all(weights[row, far] == 0.0)


def test_spectral_shift_is_exact_for_resolved_modes():
    for n in (7, 8):
        centres = (np.arange(n) + 0.5) * 2 * np.pi / n
        shifted = edge_values(np.cos(centres), SPECTRAL, "right", centres=centres, offset=0.35, period=2 * np.pi)
        np.testing.assert_allclose(shifted, np.cos(centres + 0.35), atol=1e-12)


def test_coupling_errors():
    centres = np.linspace(0.5, 3.5, 4)
    with pytest.raises(CouplingError):
        edge_values(np.ones(4), SPECTRAL, "right", centres=centres, offset=0.1)
    with pytest.raises(CouplingError):
        edge_values(np.ones(4), P4, "right", centres=centres, offset=0.1, period=4.0)
    with pytest.raises(CouplingError):
        CouplingSpec("polynomial", 3)
    with pytest.raises(CouplingError):
        CouplingSpec("cubic")
    with pytest.raises(CouplingError):
        PatchNetwork.bounded(GRID, 3, 1.0, SPECTRAL, MacroBC.FIXED_FIXED, homogeneous_field(1.0, 0.3, GRID))


# --- network ----------------------------------------------------------------


def test_network_layout():
    net = periodic_net()
    assert net.dim == 5 * 2 * (4 * 4 + 4 * 5)
    np.testing.assert_allclose(net.centres, (np.arange(5) + 0.5) * 2 * np.pi / 5)
    q = random_state(net)
    np.testing.assert_array_equal(net.pack(*net.unpack(q)), q)


def test_periodicity_is_a_network_property():
    net = periodic_net()
    assert net.is_periodic is True
    assert net.spacing == pytest.approx(2 * np.pi / 5)
    assert bounded_net("fixed-free").is_periodic is False
    # the constructor stays callable on instances
    assert net.periodic(GRID, 3, 1.0, SPECTRAL, homogeneous_field(1.0, 0.3, GRID)).n_patches == 3


def test_invalid_networks_rejected():
    mat = homogeneous_field(1.0, 0.3, GRID)
    with pytest.raises(ValueError):
        PatchNetwork(GRID, [0.1, 0.2, 0.3], 1.0, P4, MacroBC.FIXED_FIXED, mat)
    with pytest.raises(ValueError):
        PatchNetwork(GRID, [0.5, 1.5], 2.0, SPECTRAL, MacroBC.PERIODIC, mat)
    with pytest.raises(ValueError):
        PatchNetwork(GRID, [0.5], 1.0, SPECTRAL, MacroBC.PERIODIC, mat)
    with pytest.raises(ValueError):
        PatchNetwork.bounded_offsets(GRID, 3, 1.013)


def test_bounded_offsets_put_outer_edges_on_the_ends():
    grid = MicroGridSpec(nx=7, ny=5, dx=0.01, dy=0.05)
    offsets = PatchNetwork.bounded_offsets(grid, 5, 1.0)
    np.testing.assert_array_equal(offsets, [0, 23, 46, 69, 92])

    net = PatchNetwork.bounded(grid, 5, 1.0, P4, "fixed-fixed", homogeneous_field(1.0, 0.3, grid))
    left_edge = net.centres[0] + grid.x_of_index(0)
    right_edge = net.centres[-1] + grid.x_of_index(grid.nx + 1)
    assert left_edge == pytest.approx(0.0, abs=1e-12)
    assert right_edge == pytest.approx(1.0, abs=1e-12)


def test_zero_state_is_an_equilibrium():
    net = periodic_net()
    np.testing.assert_array_equal(PatchScheme(net, kappa=1e-3)(np.zeros(net.dim)), 0.0)


@pytest.mark.parametrize("coupling", [SPECTRAL, P4])
def test_rigid_translation_has_no_acceleration(coupling):
    net = periodic_net(coupling=coupling)
    u, v, udot, vdot = net.unpack(np.zeros(net.dim))
    q = net.pack(u + 0.7, v - 0.3, udot, vdot)
    f = PatchScheme(net, kappa=1e-3)(q)
    np.testing.assert_allclose(f, 0.0, atol=1e-10)


def test_polynomial_coupling_only_reaches_stencil_neighbours():
    net = periodic_net(n_patches=9, coupling=P4)
    u, v, udot, vdot = net.unpack(np.zeros(net.dim))
    u[4] = np.random.default_rng(1).standard_normal(u[4].shape)
    f = PatchScheme(net, kappa=1e-3)(net.pack(u, v, udot, vdot))
    for block in net.unpack(f):
        assert np.all(block[[0, 1, 7, 8]] == 0.0)
    assert np.any(net.unpack(f)[2][3] != 0.0)


def test_scheme_is_linear_and_batches():
    net = periodic_net()
    scheme = PatchScheme(net, kappa=1e-3)
    q1, q2 = random_state(net, 1), random_state(net, 2)
    combined = scheme(2.0 * q1 - 0.5 * q2)
    np.testing.assert_allclose(combined, 2.0 * scheme(q1) - 0.5 * scheme(q2), rtol=1e-10, atol=1e-10)

    batched = scheme(np.stack([q1, q2]))
    np.testing.assert_allclose(batched[0], scheme(q1), rtol=1e-13, atol=1e-12)
    np.testing.assert_allclose(batched[1], scheme(q2), rtol=1e-13, atol=1e-12)


def test_fixed_ends_zero_the_edge_columns():
    net = bounded_net(MacroBC.FIXED_FIXED)
    field = couple_patches(random_state(net), net)
    nx = GRID.nx
    for arr in (field.u, field.v, field.udot, field.vdot):
        assert np.all(arr[0, 0] == 0.0)
        assert np.all(arr[-1, nx + 1] == 0.0)
        assert np.any(arr[1, 0] != 0.0)


def test_free_end_is_traction_free():
    net = bounded_net(MacroBC.FIXED_FREE)
    field = couple_patches(random_state(net, 4), net)
    nx, ny = GRID.nx, GRID.ny
    assert np.all(field.u[0, 0] == 0.0) and np.all(field.v[0, 0] == 0.0)

    for u, v in ((field.u, field.v), (field.udot, field.vdot)):
        stress = compute_stresses(StaggeredField(u, v, field.udot, field.vdot), net.materials, GRID)
        np.testing.assert_allclose(stress.sxx[-1, nx, 1:ny], 0.0, atol=1e-11)
        np.testing.assert_allclose(stress.sxy[-1, nx, 1:ny - 1], 0.0, atol=1e-11)


def test_cross_beam_statistics_of_uniform_state():
    net = periodic_net()
    u, v, udot, vdot = net.unpack(np.zeros(net.dim))
    stats = cross_beam_statistics(net.pack(u + 0.25, v - 1.5, udot, vdot), net)
    assert stats.ubar.shape == (5, GRID.nx)
    np.testing.assert_allclose(stats.ubar, 0.25, atol=1e-14)
    np.testing.assert_allclose(stats.vbar, -1.5, atol=1e-14)
    np.testing.assert_allclose(stats.ustd, 0.0, atol=1e-14)
    np.testing.assert_allclose(stats.vstd, 0.0, atol=1e-14)
    np.testing.assert_allclose(stats.x, net.v_coords()[0][:, :, 0])


def test_restriction_matches_patch_coordinates():
    full_grid = MicroGridSpec(nx=19, ny=5, dx=0.05, dy=0.05)
    full = PatchNetwork.full_domain(full_grid, 1.0, "fixed-fixed", homogeneous_field(1.0, 0.3, full_grid))
    net = bounded_net(MacroBC.FIXED_FIXED)
    np.testing.assert_array_equal(net.offsets_cells, [0, 8, 15])

    ux, _ = full.u_coords()
    vx, _ = full.v_coords()
    q_full = full.pack(ux, vx, np.zeros_like(ux), np.zeros_like(vx))
    u, v = restrict_to_patches(q_full, full, net)
    np.testing.assert_allclose(u, net.u_coords()[0], atol=1e-12)
    np.testing.assert_allclose(v, net.v_coords()[0], atol=1e-12)
