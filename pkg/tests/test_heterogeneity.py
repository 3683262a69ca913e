import numpy as np
import pytest

from src.elastic_micro import MicroGridSpec, lame_from_engineering
from src.heterogeneity import (
    InclusionSpec,
    RandomElasticitySpec,
    export_material_csv,
    homogeneous_field,
    import_material_csv,
    inclusion_field,
    inclusion_mask,
    random_periodic_field,
)


def engineering(lam, mu):
    return mu * (3 * lam + 2 * mu) / (lam + mu), lam / (2 * (lam + mu))


def test_random_field_is_reproducible_per_seed():
    grid = MicroGridSpec(nx=7, ny=9, dx=0.05, dy=0.05)
    spec = RandomElasticitySpec(seed=42, period_x=0.25)
    a = random_periodic_field(spec, grid)
    b = random_periodic_field(spec, grid)
    c = random_periodic_field(RandomElasticitySpec(seed=43, period_x=0.25), grid)
    np.testing.assert_array_equal(a.lambda_n, b.lambda_n)
    np.testing.assert_array_equal(a.mu_s, b.mu_s)
    assert not np.array_equal(a.lambda_n, c.lambda_n)


def test_random_field_respects_sampling_ranges():
    grid = MicroGridSpec(nx=7, ny=9, dx=0.05, dy=0.05)
    field = random_periodic_field(RandomElasticitySpec(seed=1, period_x=0.25), grid)
    assert field.is_elliptic()
    for lam, mu in ((field.lambda_n, field.mu_n), (field.lambda_s, field.mu_s)):
        E, nu = engineering(lam, mu)
        assert np.all(E >= np.exp(-1) - 1e-12) and np.all(E <= np.exp(1) + 1e-12)
        assert np.all(nu >= 0.2 - 1e-12) and np.all(nu <= 0.4 + 1e-12)


def test_random_field_is_periodic_in_x():
    grid = MicroGridSpec(nx=13, ny=5, dx=0.05, dy=0.05)
    field = random_periodic_field(RandomElasticitySpec(seed=9, period_x=0.25), grid)
    np.testing.assert_array_equal(field.lambda_n[5:], field.lambda_n[:-5])
    np.testing.assert_array_equal(field.mu_s[5:], field.mu_s[:-5])


def test_patch_offsets_cut_the_same_realisation_as_the_full_beam():
    spec = RandomElasticitySpec(seed=5, period_x=0.15)
    full_grid = MicroGridSpec(nx=30, ny=5, dx=0.05, dy=0.05)
    patch_grid = MicroGridSpec(nx=7, ny=5, dx=0.05, dy=0.05)
    full = random_periodic_field(spec, full_grid)
    for offset in (0, 4, 11):
        patch = random_periodic_field(spec, patch_grid, offset_cells=offset)
        np.testing.assert_array_equal(patch.lambda_n, full.lambda_n[offset:offset + 8])
        np.testing.assert_array_equal(patch.mu_n, full.mu_n[offset:offset + 8])
        np.testing.assert_array_equal(patch.lambda_s, full.lambda_s[offset:offset + 8])
        np.testing.assert_array_equal(patch.mu_s, full.mu_s[offset:offset + 8])


def test_incommensurate_period_rejected():
    grid = MicroGridSpec(nx=7, ny=5, dx=0.05, dy=0.05)
    with pytest.raises(ValueError):
        random_periodic_field(RandomElasticitySpec(seed=0, period_x=0.123), grid)


def test_inclusion_mask_counts_nodes_inside_the_rectangle():
    grid = MicroGridSpec(nx=9, ny=7, dx=0.05, dy=0.05)
    normal, shear = inclusion_mask(InclusionSpec(E_in=0.1, nu_in=0.3), grid)
    assert normal.sum() == 6
    assert shear.sum() == 4

    empty_n, empty_s = inclusion_mask(InclusionSpec(E_in=0.1, nu_in=0.3, length_cells=0, width_cells=0), grid)
    assert not empty_n.any() and not empty_s.any()


def test_inclusion_field_values():
    grid = MicroGridSpec(nx=9, ny=7, dx=0.05, dy=0.05)
    spec = InclusionSpec(E_in=0.01, nu_in=0.3)
    field = inclusion_field(spec, 1.0, 0.3, grid)
    inside_n, _ = inclusion_mask(spec, grid)
    lam_in, mu_in = lame_from_engineering(0.01, 0.3)
    lam_m, mu_m = lame_from_engineering(1.0, 0.3)
    np.testing.assert_allclose(field.mu_n[inside_n], mu_in)
    np.testing.assert_allclose(field.mu_n[~inside_n], mu_m)
    np.testing.assert_allclose(field.lambda_n[inside_n], lam_in)
    np.testing.assert_allclose(field.lambda_n[~inside_n], lam_m)


def test_unit_inclusion_equals_homogeneous_matrix():
    grid = MicroGridSpec(nx=9, ny=7, dx=0.05, dy=0.05)
    field = inclusion_field(InclusionSpec(E_in=1.0, nu_in=0.3), 1.0, 0.3, grid)
    plain = homogeneous_field(1.0, 0.3, grid)
    for name in ("lambda_n", "mu_n", "lambda_s", "mu_s"):
        np.testing.assert_array_equal(getattr(field, name), getattr(plain, name))


def test_oversized_inclusion_rejected():
    grid = MicroGridSpec(nx=9, ny=7, dx=0.05, dy=0.05)
    with pytest.raises(ValueError):
        inclusion_mask(InclusionSpec(E_in=0.1, nu_in=0.3, length_cells=7), grid)
    with pytest.raises(ValueError):
        inclusion_mask(InclusionSpec(E_in=0.1, nu_in=0.3, width_cells=6), grid)


def test_material_csv_preserves_values(tmp_path):
    grid = MicroGridSpec(nx=7, ny=5, dx=0.05, dy=0.05)
    field = random_periodic_field(RandomElasticitySpec(seed=8, period_x=0.25), grid)
    path = tmp_path / "material.csv"
    export_material_csv(field, grid, path)
    loaded = import_material_csv(path, grid)
    for name in ("lambda_n", "mu_n", "lambda_s", "mu_s"):
        np.testing.assert_array_equal(getattr(loaded, name), getattr(field, name))

    with pytest.raises(ValueError):
        import_material_csv(path, MicroGridSpec(nx=8, ny=5, dx=0.05, dy=0.05))
