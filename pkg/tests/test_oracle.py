import warnings

import numpy as np
import pytest

from dqho.bath import DiscreteBath, SpectralDensity, discretize, thermal_preparation
from dqho.chain import ChainParams, chain_spectral_density, u_chain
from dqho.exceptions import ConfigError, PositivityError
from dqho.oracle import (
    build_finite,
    chain_site_stiffness,
    evolve_exact,
    find_recurrence,
    product_covariance,
    revival_time_estimate,
    thermal_chain_covariance,
    write_comparison_csv,
)
from dqho.propagation import PhaseMoments

from conftest import read_table

REF_CHAIN = ChainParams(0.6, 0.5, 1.0)


def test_stiffness_layout():
    K = chain_site_stiffness(REF_CHAIN, 4)
    assert K.shape == (5, 5)
    assert np.allclose(K, K.T)
    assert K[0, 0] == pytest.approx(REF_CHAIN.omega**2)
    assert K[0, 1] == pytest.approx(-np.sqrt(2) * REF_CHAIN.central_coupling)
    assert K[1, 2] == pytest.approx(-REF_CHAIN.site_coupling)
    assert K[0, 2] == 0


def test_diagonalisation_accuracy():
    fs = build_finite(REF_CHAIN, n=64)
    assert fs.residual() < 1e-12
    assert fs.orthogonality_error() < 1e-12
    assert fs.central_weights().sum() == pytest.approx(1.0)


def test_single_site_is_decoupled_oscillator():
    fs = build_finite(REF_CHAIN, n=0)
    t = np.linspace(0, 10, 11)
    assert np.allclose(evolve_exact(fs, times=t).u, np.sin(t * REF_CHAIN.omega) / REF_CHAIN.omega)
    assert revival_time_estimate(fs) == np.inf


def test_two_mode_revival_is_beat_period():
    bath = DiscreteBath(np.array([1.0]), np.array([0.3]))
    fs = build_finite(bath, omega=1.0)
    w = np.sort(fs.frequencies)
    assert revival_time_estimate(fs) == pytest.approx(2 * np.pi / (w[1] - w[0]))


def test_revival_grows_with_size():
    est = [revival_time_estimate(build_finite(REF_CHAIN, n=n)) for n in (32, 64, 128, 256)]
    assert np.all(np.diff(est) > 0)
    assert est[-1] / est[0] == pytest.approx(8.0, rel=0.1)


def test_degenerate_spectrum_warns():
    bath = DiscreteBath(np.array([1.0, 1.0]), np.array([0.0, 0.0]))
    fs = build_finite(bath, omega=1.0)
    with pytest.warns(RuntimeWarning):
        assert revival_time_estimate(fs) == 0.0


def test_unbounded_hamiltonian_rejected():
    bath = DiscreteBath(np.array([0.5]), np.array([1.0]))
    with pytest.raises(PositivityError):
        build_finite(bath, omega=0.5)


def test_build_errors():
    with pytest.raises(ConfigError):
        build_finite(REF_CHAIN)
    with pytest.raises(ConfigError):
        build_finite(chain_spectral_density(REF_CHAIN), omega=1.0)
    with pytest.raises(ConfigError):
        build_finite("chain", omega=1.0)


def test_oracle_matches_continuum_before_revival():
    fs = build_finite(REF_CHAIN, n=256)
    horizon = 0.5 * revival_time_estimate(fs)
    t = np.linspace(0, horizon, 2001)
    err = np.abs(evolve_exact(fs, times=t).u - u_chain(REF_CHAIN, t))
    assert err.max() < 1e-3


def test_discretized_continuum_converges():
    spec = chain_spectral_density(REF_CHAIN)
    t = np.linspace(0, 30, 301)
    ref = u_chain(REF_CHAIN, t)
    errs = [np.abs(evolve_exact(build_finite(spec, 1.0, n=n), times=t).u - ref).max()
            for n in (64, 256)]
    assert errs[1] < errs[0] < 0.05


def test_exact_moments_uncertainty_and_energy():
    n = 48
    fs = build_finite(REF_CHAIN, n=n)
    central = PhaseMoments.coherent(REF_CHAIN.omega, 1.0, 0.0)
    cov = thermal_chain_covariance(REF_CHAIN, n, central.sigma, 0.5)
    mean = np.r_[1.0, np.zeros(n), 0.0, np.zeros(n)]
    ev = evolve_exact(fs, mean, cov, np.linspace(0, 40, 41))
    assert np.all(np.linalg.det(ev.sigma) >= 0.25 - 1e-12)
    # energy is conserved by the full propagator
    M = fs.evolution_blocks(17.0)
    assert fs.energy(M @ mean, M @ cov @ M.T) == pytest.approx(fs.energy(mean, cov), rel=1e-12)


def test_product_covariance_layout():
    cov = product_covariance(np.array([[1.0, 0.1], [0.1, 2.0]]), [3.0, 4.0], [5.0, 6.0], [0.2, 0.3])
    assert cov.shape == (6, 6)
    assert cov[0, 3] == 0.1 and cov[1, 1] == 3.0 and cov[5, 5] == 6.0 and cov[2, 5] == 0.3


def test_discrete_means_drive_centre():
    spec = chain_spectral_density(REF_CHAIN)
    fs, moments = build_finite(spec, 1.0, n=20, prep=thermal_preparation(0.3))
    assert moments.sqq.shape == (20,)
    mean = np.zeros(42)
    mean[5] = 1.0
    ev = evolve_exact(fs, mean, np.eye(42), [0.0, 5.0])
    assert abs(ev.X[0, 0]) < 1e-14 and abs(ev.X[1, 0]) > 1e-3


def test_quasi_periodic_recurrence():
    """A small system returns close to its initial segment of u."""
    fs = build_finite(ChainParams(0.6, 0.1, 1.0), n=8)
    rv = revival_time_estimate(fs)
    tau, dev = find_recurrence(fs, 5.0, 250 * rv, dt=0.05)
    assert tau > rv
    assert dev < 1e-2


def test_comparison_csv(tmp_path):
    t = np.linspace(0, 1, 5)
    write_comparison_csv(tmp_path / "o.csv", t, np.sin(t), np.sin(t) + 1e-6, ["hdr"])
    table = read_table(tmp_path / "o.csv")
    assert list(table) == ["t", "u_oracle", "u_continuum", "abs_err"]
    assert np.allclose(np.asarray(table["abs_err"], float), 1e-6)
