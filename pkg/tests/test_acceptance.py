"""
Full-size scenario checks of the expected beam behaviour.
Run with `pytest -m slow`; each takes seconds to minutes.
"""
from pathlib import Path

import numpy as np
import pytest

from src.config import load_config
from src.experiments import run_scenario

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# thin strip in plane strain with E = 1, nu = 0.3, W = 0.2: E' = E / (1 - nu^2)
E_STRIP = 1.0 / (1.0 - 0.3**2)
COMPRESSION_K1 = np.sqrt(E_STRIP)
BENDING_K1 = np.sqrt(E_STRIP * 0.2**2 / 12)


def run(name, *overrides):
    return run_scenario(load_config(CONFIGS / f"{name}.toml", overrides=list(overrides)))


@pytest.fixture(scope="module")
def convergence():
    return run("convergence-study")


def test_spectral_coupling_is_invariant_to_patch_count(convergence):
    spectral = convergence.tables["spectral_invariance"]
    assert convergence.summary["spectral_max_spread"] < 1e-8
    assert set(spectral["patches"]) == {5, 10, 20, 40}


def test_homogeneous_macroscale_eigenvalues(convergence):
    spectral = convergence.tables["spectral_invariance"]
    rows = spectral[spectral["material"] == "homogeneous"].set_index(["branch", "patches"])
    compression = rows.loc[("compression", 5)]
    bending = rows.loc[("bending", 5)]
    assert compression["im"] == pytest.approx(COMPRESSION_K1, rel=0.02)
    assert bending["im"] == pytest.approx(BENDING_K1, rel=0.05)
    assert -5e-3 < compression["re"] < 0
    assert -5e-3 < bending["re"] < 0


def test_polynomial_coupling_error_decays_like_n_to_the_minus_p(convergence):
    slopes = convergence.tables["slopes"]
    for _, row in slopes.iterrows():
        if row["points"] < 2:
            continue
        assert row["slope"] == pytest.approx(-row["order"], abs=1.0), row.to_dict()


def test_damped_heterogeneous_spectrum_is_stable():
    summary = run("spectrum").summary
    assert summary["rigid_modes"] == 4
    assert summary["max_real_excluding_rigid"] <= 1e-6
    assert summary["conjugate_pairing_error"] < 1e-8


def test_undamped_spectrum_is_purely_imaginary():
    summary = run("undamped", "dynamics.enabled=false").summary
    assert summary["rigid_modes"] == 4
    assert summary["max_abs_real"] <= 1e-6


def test_undamped_beam_keeps_oscillating():
    bundle = run("undamped")
    summary = bundle.summary
    bending = 2 * np.pi / summary["bending_k1"].imag
    assert np.isfinite(summary["bending_period"])
    assert 70.0 < summary["bending_period"] < 140.0
    assert summary["bending_period"] == pytest.approx(bending, rel=0.10)
    assert summary["compression_period"] == pytest.approx(2 * np.pi / summary["compression_k1"].imag, rel=0.05)


def test_soft_inclusions_slow_and_damp_compression_waves():
    bundle = run("inclusions")
    table = bundle.tables["inclusions"].set_index("E_in")
    assert bundle.summary["max_real_excluding_rigid"] <= 1e-7
    assert bundle.summary["compression_im_non_increasing"]

    assert table.loc[1.0, "compression_im"] == pytest.approx(COMPRESSION_K1, rel=0.02)
    assert table.loc[1.0, "bending_im"] == pytest.approx(0.059, rel=0.05)
    assert abs(table.loc[0.001, "compression_re"]) >= 5 * abs(table.loc[1.0, "compression_re"])
    assert table.loc[0.001, "bending_im"] >= 0.85 * table.loc[1.0, "bending_im"]

    assert bundle.summary["dynamics_E_in"] == 0.1
    assert table.loc[0.1, "compression_im"] == pytest.approx(0.909, rel=0.05)
    assert table.loc[0.1, "bending_im"] == pytest.approx(0.056, rel=0.10)
    measured = bundle.tables["frequencies"].set_index("branch")
    for branch, rel in (("compression", 0.05), ("bending", 0.10)):
        row = measured.loc[branch]
        assert row["measured_frequency"] == pytest.approx(row["eigen_frequency"], rel=rel), branch


def test_fixed_fixed_errors_fall_with_order():
    errors = run("fixed-fixed-equilibrium").tables["errors"].set_index(["order", "patches"])["error"]
    p4 = errors.loc[4]
    assert np.all((p4 >= 1e-3) & (p4 <= 1.0))
    assert errors.loc[(6, 17)] * 10 <= errors.loc[(4, 17)]
    assert errors.loc[(8, 17)] * 10 <= errors.loc[(6, 17)]


def test_standing_wave_periods_match_the_spectrum():
    dynamics = run("periodic-dynamics").summary
    spectrum = run("periodic-dynamics", "scenario=spectrum").summary
    compression = 2 * np.pi / spectrum["compression_k1"].imag
    bending = 2 * np.pi / spectrum["bending_k1"].imag

    assert dynamics["compression_period"] == pytest.approx(compression, rel=0.05)
    assert dynamics["bending_period"] == pytest.approx(bending, rel=0.10)
    assert spectrum["max_real_excluding_rigid"] <= 1e-6
    assert dynamics["compression_period"] == pytest.approx(6.0, rel=0.10)
    assert dynamics["bending_period"] == pytest.approx(60.0, rel=0.15)
