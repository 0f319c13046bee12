import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import j0

from dqho.bath import positivity_check, thermal_energy
from dqho.chain import (
    ChainParams,
    chain_continuation,
    chain_continuation_z2,
    chain_gamma,
    chain_poles_closed_form,
    chain_positivity,
    chain_spectral_density,
    homogeneous_stationary,
    no_pole_condition,
    parameter_scan,
    pole_sweep_path,
    positivity_threshold,
    quench_preparation,
    quench_stationary,
    u_chain,
    weak_damping_temperature,
)
from dqho.equilibrium import effective_frequency_temperature, stationary_state
from dqho.exceptions import ConfigError, NotEquilibratingError
from dqho.response import compute_u_fourier, find_poles

# homogeneous chain, kappa = 1/2, T0 = 0.2, from 30-digit arithmetic
HOM_SQQ, HOM_SPP = 0.545983507034209271169, 0.506783654906304231096
HOM_OMEGA, HOM_T = 0.963433044002285181174, 0.262184956997299150875
# weak-damping quench temperature at T0 = 0.5, omega_r^2 = 1.5, same
WEAK_T = 0.635016639637491390696


def test_params_validation():
    with pytest.raises(ConfigError):
        ChainParams(0.0, 0.1, 1.0)
    with pytest.raises(ConfigError):
        ChainParams(1.2, 0.1, 1.0)
    with pytest.raises(ConfigError):
        ChainParams(0.5, 0.1, 0.0)


def test_band_and_center_value():
    p = ChainParams(0.4, 0.3, 1.0, omega_b=2.0)
    spec = chain_spectral_density(p)
    assert spec.support == pytest.approx((2 * np.sqrt(0.6), 2 * np.sqrt(1.4)))
    k, kb = p.central_coupling, p.site_coupling
    assert spec(p.omega_b) == pytest.approx(4 / np.pi * k**2 / kb)
    assert spec(1.0) == 0.0


def test_square_root_edges():
    p = ChainParams(0.5, 0.5, 1.0)
    lo, _ = p.band
    d = np.array([1e-6, 4e-6])
    g = chain_gamma(p, lo + d)
    assert g[1] / g[0] == pytest.approx(2.0, rel=1e-5)


@pytest.mark.parametrize("kappa", [0.2, 0.5, 0.9])
def test_band_edge_values(kappa):
    p = ChainParams(0.5, kappa, 1.0)
    z2 = np.array([0.5, 1.0, 1.5]) + 0j
    scale = kappa**2 / 0.5
    expected = np.array([-1, -1j, 1]) * scale
    assert np.max(np.abs(chain_continuation_z2(p, z2) - expected)) < 1e-10
    # through z = sqrt(z2) the branch points amplify the rounding of z**2
    assert np.allclose(chain_continuation(p, np.sqrt(z2)), expected, atol=1e-7)


def test_boundary_identity():
    p = ChainParams(0.6, 0.5, 1.0)
    spec = chain_spectral_density(p)
    w = np.linspace(*spec.support, 201)[1:-1]
    assert np.allclose(-2 / np.pi * spec.boundary(w).imag, spec(w), atol=1e-10, rtol=0)


def test_positivity_examples():
    assert positivity_threshold(0.2, 0.5) == pytest.approx(0.12628, abs=1e-5)
    ok, margin = chain_positivity(ChainParams(0.3, 0.0, 0.7))
    assert ok and margin == pytest.approx(0.49)
    ok, margin = chain_positivity(ChainParams(1.0, 0.6, 0.6))
    assert abs(margin) < 1e-15


@pytest.mark.parametrize("kb,kappa,r2", [(0.2, 0.5, 0.3), (0.6, 0.5, 1.0), (0.9, 0.3, 0.5),
                                         (1.0, 0.4, 0.2)])
def test_positivity_matches_integral(kb, kappa, r2):
    p = ChainParams(kb, kappa, np.sqrt(r2))
    res = positivity_check(chain_spectral_density(p), p.omega)
    assert res.margin == pytest.approx(chain_positivity(p)[1], abs=1e-8)


def test_no_pole_homogeneous_equality():
    c = no_pole_condition(ChainParams(0.5, 0.5, 1.0))
    assert c.ok and abs(c.lower_margin) < 1e-15 and abs(c.upper_margin) < 1e-15


def test_no_pole_two_pole_case():
    c = no_pole_condition(ChainParams(0.4, 0.5, 1.0))
    assert not c.ok and not c.lower and not c.upper


@settings(max_examples=200, deadline=None)
@given(kb=st.floats(0.01, 1.0), kappa=st.floats(0.0, 1.2), r2=st.floats(0.01, 2.5))
def test_no_pole_implies_basic_restrictions(kb, kappa, r2):
    c = no_pole_condition(ChainParams(kb, kappa, np.sqrt(r2)))
    if c.ok:
        assert kappa <= kb * (1 + 1e-12)
        assert abs(1 - r2) <= kb * (1 + 1e-12)


@pytest.mark.parametrize("kappa", [0.2, 0.5, 0.8])
def test_ullersma_point(kappa):
    p = ChainParams(1.0, kappa, kappa)
    assert no_pole_condition(p).lower_margin == pytest.approx(chain_positivity(p)[1], abs=1e-12)


@pytest.mark.parametrize("kb,kappa,r2", [(0.2, 0.5, 0.4), (0.4, 0.5, 1.0), (0.8, 0.5, 1.6),
                                         (0.3, 0.2, 1.5), (0.9, 0.6, 0.4)])
def test_closed_form_poles_match_root_finder(kb, kappa, r2):
    p = ChainParams(kb, kappa, np.sqrt(r2))
    numeric = [q.omega for q in find_poles(chain_spectral_density(p), p.omega)]
    assert np.allclose(chain_poles_closed_form(p), numeric, atol=1e-10)


def test_u_chain_matches_generic_pipeline():
    p = ChainParams(0.6, 0.5, 1.0)
    t = np.arange(0, 60.0001, 0.05)
    rf = compute_u_fourier(chain_spectral_density(p), p.omega, t)
    u = u_chain(p, t)
    assert np.max(np.abs(u - rf.u)) < 1e-6
    assert abs(u[0]) < 1e-12
    assert (u[1] - u[0]) / 0.05 == pytest.approx(1.0, abs=1e-3)
    # band-edge decay is algebraic, so the residual shrinks slowly but steadily
    amp = [np.max(np.abs(u_chain(p, np.linspace(T - 5, T + 5, 401)))) for T in (50, 100, 400)]
    assert amp[0] < 0.1 and amp[2] < 5e-3
    assert amp[0] > amp[1] > amp[2]


def test_u_chain_with_poles_delegates():
    p = ChainParams(0.8, 0.5, np.sqrt(1.6))
    t = np.linspace(0, 30, 601)
    rf = compute_u_fourier(chain_spectral_density(p), p.omega, t)
    assert np.allclose(u_chain(p, t), rf.u, atol=1e-12)


def test_homogeneous_tail_power_law():
    kappa = 0.1
    p = ChainParams(kappa, kappa, 1.0)
    amps = {}
    for T in (400.0, 1600.0):
        t = np.linspace(T, T + 130, 4001)
        amps[T] = np.max(np.abs(u_chain(p, t)))
    assert amps[1600.0] == pytest.approx(2 / np.sqrt(np.pi * kappa * 1600), rel=0.05)
    assert amps[1600.0] / amps[400.0] == pytest.approx(0.5, rel=0.1)


def test_quench_preparation_values():
    p = ChainParams(0.5, 0.3, 1.0, omega_b=1.5)
    prep = quench_preparation(p, 0.4)
    e = thermal_energy(0.4, 1.5)
    assert prep.qq(1.2) == pytest.approx(e / 1.5**2)
    assert prep.pp(1.2) == pytest.approx(e)
    assert prep.energy(1.5) == pytest.approx(e)
    assert prep.sigma2 is None


def test_quench_zero_temperature_energy():
    p = ChainParams(0.5, 0.3, 1.0)
    prep = quench_preparation(p, 0.0)
    w = np.linspace(*p.band, 41)
    assert np.allclose(prep.energy(w), 0.25 * (1 + w**2))
    assert np.all(prep.energy(w) >= w / 2 - 1e-15)
    assert prep.energy(1.0) == pytest.approx(0.5)


@pytest.mark.parametrize("kb,kappa,r", [(0.6, 0.2, 1.0), (0.6, 0.5, 1.0), (0.8, 0.3, 1.1)])
def test_quench_closed_form_vs_numeric(kb, kappa, r):
    p = ChainParams(kb, kappa, r)
    qs = quench_stationary(p, 0.5)
    st_num = stationary_state(chain_spectral_density(p), p.omega, quench_preparation(p, 0.5))
    assert np.allclose(st_num.sigma, qs.sigma, rtol=1e-4, atol=0)
    e = thermal_energy(0.5, 1.0)
    assert qs.sigma[1, 1] == pytest.approx(0.5 * (1 + r**2) * e, rel=1e-14)
    assert qs.omega_inf < p.omega_r


def test_quench_pole_regime_refused():
    with pytest.raises(NotEquilibratingError):
        quench_stationary(ChainParams(0.2, 0.5, np.sqrt(0.4)), 0.5)


def test_quench_weak_coupling_limits():
    for kb in (0.6, 0.9):
        qs = quench_stationary(ChainParams(kb, 1e-4, np.sqrt(1.5)), 0.5)
        assert qs.omega_inf == pytest.approx(np.sqrt(1.5), rel=1e-7)
        assert qs.t_inf == pytest.approx(WEAK_T, rel=1e-6)


def test_weak_damping_temperature_dual_arcoth():
    r = np.sqrt(1.5)
    x = 0.5 * (r + 1 / r) / np.tanh(1.0)
    direct = 0.5 * r / (0.5 * np.log((x + 1) / (x - 1)))
    assert weak_damping_temperature(r, 0.5) == pytest.approx(direct, rel=1e-14)
    assert weak_damping_temperature(r, 0.5) == pytest.approx(WEAK_T, rel=1e-13)
    assert weak_damping_temperature(1.0, 0.37) == pytest.approx(0.37, rel=1e-13)


@pytest.mark.parametrize("t0", [0.4, 0.6, 0.8])
def test_weak_damping_curves_monotone(t0):
    r = np.sqrt(np.linspace(0.0, 2.0, 401)[1:])
    assert np.all(np.diff(weak_damping_temperature(r, t0)) > 0)


def test_weak_damping_curve_dips_at_low_temperature():
    # at T0 = 0.2 the curve has an interior minimum below T0 near omega_r^2 = 0.85
    t = weak_damping_temperature(np.sqrt(np.array([0.01, 0.852, 1.0])), 0.2)
    assert t[2] == pytest.approx(0.2, rel=1e-13)
    assert t[1] < 0.2
    assert t[0] > t[1]
    assert t[1] == pytest.approx(0.192832, abs=1e-5)


def test_homogeneous_reference_values():
    sigma, om, t = homogeneous_stationary(0.5, 0.2)
    assert sigma[0, 0] == pytest.approx(HOM_SQQ, rel=1e-13)
    assert sigma[1, 1] == pytest.approx(HOM_SPP, rel=1e-13)
    assert om == pytest.approx(HOM_OMEGA, rel=1e-13)
    assert t == pytest.approx(HOM_T, rel=1e-12)
    om2, t2 = effective_frequency_temperature(sigma)
    assert om2 == pytest.approx(om, rel=1e-12) and t2 == pytest.approx(t, rel=1e-12)


def test_homogeneous_limits():
    _, om, t = homogeneous_stationary(0.0, 0.3)
    assert om == 1.0 and t == pytest.approx(0.3, rel=1e-13)
    _, _, t1 = homogeneous_stationary(1.0, 0.0)
    assert t1 == pytest.approx(0.5, abs=1e-12)
    _, _, t_near = homogeneous_stationary(1 - 1e-12, 1e-3)
    assert t_near == pytest.approx(0.5, abs=1e-3)
    with pytest.raises(ConfigError):
        homogeneous_stationary(1.1, 0.2)


def test_homogeneous_orderings():
    kappa = np.linspace(0.01, 0.99, 99)
    for t0 in (0.1, 0.5, 1.0):
        _, om, t = homogeneous_stationary(kappa, t0)
        assert np.all(om <= 1.0)
        assert np.all(t > t0)


def test_scan_matches_analytic_regions_kappa_zero():
    grid = parameter_scan(0.0, np.linspace(0.05, 1.0, 12), np.linspace(0.05, 2.0, 12))
    expected = np.abs(1 - grid["omega_r2"]) <= grid["kappa_b"]
    assert np.array_equal(grid["pole_count"] == 0, expected)


def test_scan_parallel_identical():
    kb, r2 = np.linspace(0.1, 1.0, 6), np.linspace(0.2, 2.0, 6)
    a = parameter_scan(0.5, kb, r2, jobs=1)
    b = parameter_scan(0.5, kb, r2, jobs=2)
    assert a.tobytes() == b.tobytes()


def test_scan_region_topology():
    # at fixed kappa_b below the cusp: two poles low, one pole in between, none never
    r2 = np.linspace(0.2, 2.0, 37)
    grid = parameter_scan(0.5, [0.3], r2)
    counts = grid["pole_count"]
    assert set(counts) <= {1, 2}
    # above the cusp the no-pole window opens around omega_r^2 = 1
    grid = parameter_scan(0.5, [0.8], r2)
    window = grid["omega_r2"][grid["pole_count"] == 0]
    lo, hi = 1 - (0.64 - 0.25) / 0.8, 1 + (0.64 - 0.25) / 0.8
    assert window.min() >= lo and window.max() <= hi
    assert np.all(grid["pole_count"][grid["omega_r2"] < lo] >= 1)


def test_cusp():
    c = no_pole_condition(ChainParams(0.5, 0.5, 1.0))
    assert c.ok
    for dr2 in (-1e-3, 1e-3):
        assert not no_pole_condition(ChainParams(0.5, 0.5, np.sqrt(1 + dr2))).ok
    assert not no_pole_condition(ChainParams(0.499, 0.5, 1.0)).ok


def test_sweep_poles_outside_band():
    s, kb, r2 = pole_sweep_path(40)
    assert np.all(np.diff(s) > 0)
    for b, q in zip(kb, r2):
        p = ChainParams(b, 0.5, np.sqrt(q))
        if not chain_positivity(p)[0]:
            continue
        for pole in find_poles(chain_spectral_density(p), p.omega):
            y = pole.omega**2
            assert y < 1 - b or y > 1 + b


def test_sweep_weights_vanish_at_boundaries():
    # crossing into the no-pole window at kappa_b = 1/2 on the middle segment
    weights = []
    for b in (0.45, 0.49, 0.499):
        p = ChainParams(b, 0.5, 1.0)
        weights.append(sum(q.weight for q in find_poles(chain_spectral_density(p), p.omega)))
    assert weights[0] > weights[1] > weights[2]
    assert weights[2] < 0.05


def test_homogeneous_u_lattice_values():
    """[DERIVED] 25-digit lattice integral (1/pi) int_0^pi sin(w_k t)/w_k dk, w_k^2 = 1 - kappa cos k."""
    u = u_chain(ChainParams(0.1, 0.1, 1.0), np.array([10.0, 50.0, 100.0]))
    expected = [-0.49633533398530524288, 0.0043673738931294325671, 0.11386666525831054391]
    assert np.allclose(u, expected, atol=1e-7, rtol=0)


def test_bessel_law_is_leading_order():
    # J0(kappa t / 2) sin t drops O(kappa) terms, so its error scales with kappa
    t = np.arange(0, 100.0001, 0.05)
    errs = [np.max(np.abs(u_chain(ChainParams(k, k, 1.0), t) - j0(k * t / 2) * np.sin(t)))
            for k in (0.1, 0.05, 0.025)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2
