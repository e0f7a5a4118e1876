import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from pumped_bh import (
    ModelParams,
    build_green_system,
    classify_single_cavity,
    critical_interaction,
    find_poles,
    single_cavity_phase_diagram,
    solve_steady_moments,
)
from pumped_bh.oracle import FockSpec, build_liouvillian, coherence_poles
from pumped_bh.spectra import noise_state_margin, pole_branches, sort_poles, track_branches


def noise_system(p, L=4):
    return build_green_system(p, L, solve_steady_moments(p, L))


class TestFindPoles:
    def test_triangular_without_pump(self):
        p = ModelParams(omega_c=0.7, U=6.0, gamma_p=0.0, gamma_l=0.4, kappa=1.0)
        poles = find_poles(noise_system(p)).poles
        m = np.arange(1, 5)
        expected = p.omega_c + p.U * (m - 1) - 1j * (p.gamma_l * (2 * m - 1) / 2 + p.kappa * (m - 1) ** 2)
        np.testing.assert_allclose(poles, sort_poles(expected), atol=1e-12)

    def test_pure_loss_first_pole(self):
        p = ModelParams(omega_c=2.0, U=0.0, gamma_p=0.0, gamma_l=0.6, kappa=0.0)
        assert find_poles(noise_system(p, 1)).poles[0] == pytest.approx(2.0 - 0.3j)

    @given(st.floats(-20, 20), st.floats(0, 1.5), st.floats(0, 1.5), st.integers(0, 2**31))
    @settings(max_examples=25, deadline=None)
    def test_poles_zero_inverse_green(self, U, gp, gl, seed):
        p = ModelParams(U=U, gamma_p=gp, gamma_l=gl + 0.05, kappa=1.0)
        g = build_green_system(p, 4, [1.0, 0.5, 0.3, 0.2])
        poles = find_poles(g).poles
        rng = np.random.default_rng(seed)
        for w in rng.normal(size=5) * 10 + 1j * rng.normal(size=5):
            charpoly = np.prod(w - poles)
            assert charpoly == pytest.approx(np.linalg.det(w * np.eye(4) - g.M), rel=1e-8)

    def test_conjugation_maps_poles(self, noise_params):
        p = noise_params.replace(omega_c=1.5, U=12.0)
        a = find_poles(noise_system(p)).poles
        b = find_poles(noise_system(p.conjugate())).poles
        np.testing.assert_allclose(sort_poles(-np.conj(a)), b, atol=1e-10)


class TestClassification:
    def test_noise_state_without_interaction(self, noise_params):
        phase = classify_single_cavity(noise_params)
        assert phase.label == "NoiseState"
        assert phase.max_im < -1e-9

    def test_strong_gain_destabilises(self):
        p = ModelParams(gamma_p=0.6, gamma_l=0.2, kappa=1.0)
        assert classify_single_cavity(p.replace(U=80.0)).label == "NoiseState"
        assert classify_single_cavity(p.with_chi(0.29).replace(U=80.0)).label == "CoherentState"

    def test_critical_interaction_values(self, noise_params):
        assert critical_interaction(noise_params.with_chi(0.29)) == pytest.approx(34.67, abs=0.01)
        assert critical_interaction(noise_params.with_chi(0.27)) == pytest.approx(57.27, abs=0.01)
        assert critical_interaction(noise_params.with_chi(0.2)) is None

    def test_critical_interaction_decreases_with_chi(self, noise_params):
        values = [critical_interaction(noise_params.with_chi(c)) for c in (0.27, 0.28, 0.29, 0.3)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_margin_is_max_imag(self, noise_params):
        p = noise_params.replace(U=10.0)
        assert noise_state_margin(p) == find_poles(noise_system(p)).max_im


class TestBranches:
    def test_tracking_undoes_permutation(self):
        base = np.array([1 - 1j, 2 - 0.5j, 3 - 2j])
        lists = [base, base[[2, 0, 1]] + 0.01, base[[1, 2, 0]] + 0.02]
        tracked = track_branches(lists)
        np.testing.assert_allclose(tracked[-1], sort_poles(base) + 0.02)

    def test_branches_continuous(self, noise_params):
        U = np.linspace(0, 50, 501)
        br = pole_branches(noise_params, U)
        assert np.max(np.abs(np.diff(br, axis=0))) < 0.5
        # at large U the real parts are spaced by about U
        np.testing.assert_allclose(br[-1].real / 50.0, [0, 1, 2, 3], atol=0.05)


class TestPhaseDiagram:
    def test_boundary_matches_direct_root(self, noise_params):
        U = np.linspace(20, 80, 13)
        chi = np.array([0.0, 0.27, 0.29])
        pd = single_cavity_phase_diagram(noise_params, U, chi, refine_tol=1e-6)
        assert all(lbl == "NoiseState" for lbl in pd.labels[0])
        assert {b.row for b in pd.boundary} == {1, 2}
        for b in pd.boundary:
            p = noise_params.with_chi(b.axis2_value)
            direct = brentq(lambda u: noise_state_margin(p.replace(U=u)) + 1e-9, 20, 80, xtol=1e-9)
            assert b.axis1_value == pytest.approx(direct, abs=1e-5)
            assert b.direction == 1


def test_weak_pump_poles_match_density_matrix():
    # with weak pumping the truncated hierarchy converges quickly
    p = ModelParams(omega_c=0.5, U=3.0, gamma_p=0.02, gamma_l=0.5, kappa=1.0)
    hier = find_poles(noise_system(p, 4)).poles
    exact = coherence_poles(build_liouvillian(p, FockSpec(n_max=12)))
    for z in hier[:2]:
        assert np.min(np.abs(exact - z)) < 2e-3
