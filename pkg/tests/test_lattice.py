import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pumped_bh import (
    BZPoint,
    DomainError,
    build_green_system,
    classify_lattice,
    classify_single_cavity,
    dispersion,
    dispersion_curve,
    dressed_poles,
    find_poles,
    find_tip,
    solve_steady_moments,
)
from pumped_bh.lattice import (
    SPECIAL_POINTS,
    brute_force_bz_max_imag,
    parse_point,
    sigma_bound,
    wavevector_for,
)
from pumped_bh.spectra import rank_one_max_imag

from helpers import dyson_roots

G, M, X = SPECIAL_POINTS["G"], SPECIAL_POINTS["M"], SPECIAL_POINTS["X"]
components = st.floats(-math.pi, math.pi)


def noise_system(p, L=4):
    return build_green_system(p, L, solve_steady_moments(p, L))


class TestDispersion:
    def test_special_points(self):
        assert dispersion(G, 10.0).value == pytest.approx(10.0)
        assert dispersion(M, 10.0).value == pytest.approx(-10.0)
        assert dispersion(X, 10.0).value == pytest.approx(0.0, abs=1e-14)

    def test_band_convention_flips_sign(self):
        assert dispersion(G, 10.0, "band").value == pytest.approx(-10.0)

    def test_literal_normalization(self):
        assert dispersion(G, 10.0, normalization="literal").value == pytest.approx(40.0)
        assert sigma_bound(10.0, "literal") == pytest.approx(40.0)

    def test_rejects_negative_hopping(self):
        with pytest.raises(DomainError):
            dispersion(G, -1.0)

    def test_unknown_convention(self):
        with pytest.raises(DomainError):
            dispersion(G, 1.0, "other")

    @given(components, components, st.floats(0, 100))
    def test_bounded_and_symmetric(self, kx, ky, J):
        s = dispersion(BZPoint(kx, ky), J).value
        assert abs(s) <= J * (1 + 1e-12)
        assert dispersion(BZPoint(-kx, -ky), J).value == pytest.approx(s, abs=1e-12)
        assert dispersion(BZPoint(ky, kx), J).value == pytest.approx(s, abs=1e-12)
        assert dispersion(BZPoint(kx, ky), J, "band").value == pytest.approx(-s, abs=1e-12)

    @given(st.floats(-1, 1))
    def test_wavevector_inverts_dispersion(self, x):
        k = wavevector_for(5.0 * x, 5.0)
        assert dispersion(k, 5.0).value == pytest.approx(5.0 * x, abs=1e-9)

    def test_parse_point(self):
        assert parse_point("m") == M
        k = parse_point("pi/2:-pi")
        assert k.kx == pytest.approx(math.pi / 2) and k.ky == pytest.approx(-math.pi)
        assert parse_point("0.5:0").kx == 0.5
        assert G.tag == "(0,0)" and M.tag == "(pi,pi)"
        with pytest.raises(DomainError):
            parse_point("4:0")
        with pytest.raises(DomainError):
            parse_point("a:b")


class TestDressedPoles:
    def test_zero_self_energy(self, noise_params):
        sysm = noise_system(noise_params.replace(U=20.0))
        np.testing.assert_allclose(dressed_poles(sysm, 0.0).poles, find_poles(sysm).poles, atol=1e-12)

    @pytest.mark.parametrize("U, sigma", [(0.0, 3.0), (20.0, -15.0), (35.0, 50.0), (10.0, 0.7)])
    def test_dyson_roots(self, noise_params, U, sigma):
        sysm = noise_system(noise_params.replace(U=U))
        ours = dressed_poles(sysm, sigma).poles
        ref = dyson_roots(sysm, sigma)
        for r in ref:
            assert np.min(np.abs(ours - r)) < 1e-8 * max(1.0, abs(r))

    def test_rank_one_matches_dressed(self, noise_params):
        sysm = noise_system(noise_params.replace(U=30.0))
        sig = np.linspace(-40, 40, 9)
        batched = rank_one_max_imag(sysm, sig)
        single = [dressed_poles(sysm, s).max_im for s in sig]
        np.testing.assert_allclose(batched, single, atol=1e-12)


class TestClassification:
    def test_zero_hopping_is_single_cavity(self, noise_params):
        for chi in (0.2, 0.29):
            p = noise_params.with_chi(chi).replace(U=60.0)
            single = classify_single_cavity(p)
            lat = classify_lattice(p)
            assert (lat.label == "Delocalized") == (single.label == "CoherentState")
            assert lat.max_im == single.max_im

    def test_reference_points(self, noise_params):
        assert classify_lattice(noise_params.replace(U=20.0, J=30.0)).label == "Localized"
        deep = classify_lattice(noise_params.replace(U=40.0, J=60.0))
        assert deep.label == "Delocalized"
        assert deep.mode == "(pi,pi)"
        assert classify_lattice(noise_params.replace(U=18.0, J=60.0)).mode == "(0,0)"

    def test_band_convention_swaps_mode_labels(self, noise_params):
        p = noise_params.replace(U=40.0, J=60.0)
        positive, band = classify_lattice(p), classify_lattice(p, convention="band")
        assert positive.max_im == band.max_im
        assert (positive.mode, band.mode) == ("(pi,pi)", "(0,0)")

    def test_against_brillouin_zone_grid(self, noise_params):
        rng = np.random.default_rng(2024)
        checked = 0
        for _ in range(50):
            p = noise_params.replace(U=rng.uniform(0, 60), J=rng.uniform(0, 80))
            scan = classify_lattice(p)
            grid_max, _ = brute_force_bz_max_imag(p, grid=101)
            # the scan is a continuous maximisation, so never below the grid value
            assert scan.max_im >= grid_max - 1e-9
            if abs(grid_max) > 1e-3:
                assert (scan.label == "Delocalized") == (grid_max > 0)
                checked += 1
        assert checked > 40

    @pytest.mark.parametrize("U", [10.0, 25.0, 45.0])
    def test_monotone_in_hopping(self, noise_params, U):
        J = np.linspace(0, 80, 41)
        vals = [classify_lattice(noise_params.replace(U=U, J=j)).max_im for j in J]
        assert np.all(np.diff(vals) >= -1e-9)

    def test_reentrant_cut_inside_onset_window(self, noise_params):
        U = np.linspace(0, 60, 241)
        flags = np.array([classify_lattice(noise_params.replace(U=u, J=50.0)).label == "Delocalized"
                          for u in U], dtype=int)
        starts = np.flatnonzero(np.diff(np.concatenate([[0], flags])) == 1)
        assert len(starts) == 2
        assert U[starts[0]] == pytest.approx(14.5, abs=0.5)

    def test_tip_is_marginal_for_both_modes(self, noise_params):
        tip = find_tip(noise_params, (20.0, 35.0))
        assert tip.U == pytest.approx(27.4399, abs=1e-3)
        assert tip.J == pytest.approx(56.2724, abs=1e-3)
        sysm = noise_system(noise_params.replace(U=tip.U))
        edges = rank_one_max_imag(sysm, [tip.sigma, -tip.sigma])
        np.testing.assert_allclose(edges, 0.0, atol=1e-9)


class TestDispersionCurve:
    def test_flat_without_hopping(self, noise_params):
        p = noise_params.replace(U=15.0)
        table = dispersion_curve(p, 4, [G, M, X], samples_per_segment=20)
        assert np.ptp(table.branches, axis=0).max() < 1e-12
        np.testing.assert_allclose(table.branches[0], find_poles(noise_system(p)).poles, atol=1e-12)

    def test_path_geometry(self, noise_params):
        table = dispersion_curve(noise_params.replace(J=10.0), 4, [G, M, X], samples_per_segment=10)
        assert len(table.points) == 21
        assert table.distance[-1] == pytest.approx(math.pi * math.sqrt(2) + math.pi)
        assert table.labels == {0: "(0,0)", 10: "(pi,pi)", 20: "(pi,0)"}
        assert table.sigma[0] == pytest.approx(10.0) and table.sigma[10] == pytest.approx(-10.0)

    def test_resolution_converged(self, noise_params):
        p = noise_params.replace(U=40.0, J=60.0)
        coarse = dispersion_curve(p, 4, [G, M, X], 100)
        fine = dispersion_curve(p, 4, [G, M, X], 400)
        assert coarse.max_im == pytest.approx(fine.max_im, abs=1e-6)
        np.testing.assert_allclose(coarse.branches, fine.branches[::4], atol=1e-12)
