import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from starjam import (ChannelParams, Geometry, dbm_to_watts, gen_channels,
                     load_channel_set, perturb_csi, rayleigh_link, save_channel_set)
from conftest import reference_geometry


class TestDbmToWatts:
    def test_known_points(self):
        assert dbm_to_watts(10.0) == pytest.approx(0.01)
        assert dbm_to_watts(-80.0) == pytest.approx(1e-11)
        assert dbm_to_watts(0.0) == pytest.approx(1e-3)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            dbm_to_watts(float("nan"))

    @given(st.floats(min_value=-150.0, max_value=60.0))
    def test_monotone_and_positive(self, p):
        w = dbm_to_watts(p)
        assert w > 0
        assert dbm_to_watts(p + 1.0) > w


class TestGeometry:
    def test_ris_grid_is_square_for_square_counts(self):
        geom = reference_geometry(l_ris=16)
        pos = geom.ris_positions()
        assert pos.shape == (16, 3)
        # 4x4 grid spanned by x and z, all at the same y
        assert np.unique(np.round(pos[:, 0], 9)).size == 4
        assert np.unique(np.round(pos[:, 2], 9)).size == 4
        assert np.allclose(pos[:, 1], 0.0)

    def test_near_square_fallback(self):
        geom = reference_geometry(l_ris=7)
        pos = geom.ris_positions()
        assert pos.shape == (7, 3)
        # ceil(sqrt(7)) = 3 columns
        assert np.unique(np.round(pos[:3, 0], 9)).size == 3

    def test_antennas_on_a_line(self):
        geom = reference_geometry(m_tx=4)
        pos = geom.tx_positions()
        deltas = np.diff(pos, axis=0)
        assert np.allclose(deltas, [[0.0, 0.025, 0.0]])

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            reference_geometry(l_ris=0)


class TestGenChannels:
    def test_pure_los_entry_magnitude_and_phase(self, channel_params):
        # single surface element: |h| = lambda/(4 pi r), phase = -2 pi r/lambda
        geom = reference_geometry(l_ris=1, m_tx=1, n_rx=1)
        ch = gen_channels(geom, channel_params, np.random.default_rng(0))
        r = np.linalg.norm(geom.ris_positions()[0] - geom.rx_positions()[0])
        lam = channel_params.wavelength
        assert abs(ch.h_ir[0, 0]) == pytest.approx(lam / (4 * np.pi * r), rel=1e-12)
        expected_phase = (-2 * np.pi * r / lam) % (2 * np.pi)
        assert np.angle(ch.h_ir[0, 0]) % (2 * np.pi) == pytest.approx(expected_phase, abs=1e-9)

    def test_large_rician_factor_limit(self, geometry):
        # K -> inf: the scatter term vanishes and |h_ie| -> lambda/(4 pi r^(k/2))
        params = ChannelParams(rician_k=1e12)
        ch = gen_channels(geometry, params, np.random.default_rng(1))
        r = np.linalg.norm(geometry.ris_positions() - geometry.pos_eve[None, :], axis=1)
        expected = params.wavelength / (4 * np.pi * r ** (params.rician_pathloss_exp / 2))
        assert np.allclose(np.abs(ch.h_ie), expected, rtol=1e-5)

    def test_seed_determinism(self, geometry, channel_params):
        a = gen_channels(geometry, channel_params, np.random.default_rng(5))
        b = gen_channels(geometry, channel_params, np.random.default_rng(5))
        c = gen_channels(geometry, channel_params, np.random.default_rng(6))
        for name in ("h_tr", "h_ir", "h_ti", "h_ie", "h_ar"):
            assert np.array_equal(getattr(a, name), getattr(b, name))
        assert a.h_ae == b.h_ae
        assert np.linalg.norm(a.h_tr - c.h_tr) > 0

    def test_surface_links_deterministic_across_seeds(self, geometry, channel_params):
        a = gen_channels(geometry, channel_params, np.random.default_rng(5))
        b = gen_channels(geometry, channel_params, np.random.default_rng(99))
        assert np.array_equal(a.h_ir, b.h_ir)
        assert np.array_equal(a.h_ti, b.h_ti)

    def test_direct_links_paired_across_surface_sizes(self, channel_params):
        small = gen_channels(reference_geometry(l_ris=9), channel_params,
                             np.random.default_rng(11))
        big = gen_channels(reference_geometry(l_ris=25), channel_params,
                           np.random.default_rng(11))
        assert np.array_equal(small.h_ar, big.h_ar)
        assert small.h_ae == big.h_ae
        assert np.array_equal(small.h_tr, big.h_tr)

    def test_rician_entry_power(self, channel_params):
        # E|h|^2 = lambda^2/(16 pi^2 r^kappa) for unit gains, within 3%
        geom = reference_geometry(l_ris=1, m_tx=1, n_rx=1)
        rng = np.random.default_rng(7)
        draws = np.array([
            gen_channels(geom, channel_params, np.random.default_rng(s)).h_tr[0, 0]
            for s in rng.integers(0, 2**31, size=20000)
        ])
        r = np.linalg.norm(geom.tx_positions()[0] - geom.rx_positions()[0])
        expected = channel_params.wavelength**2 / (
            16 * np.pi**2 * r**channel_params.rician_pathloss_exp)
        assert np.mean(np.abs(draws)**2) == pytest.approx(expected, rel=0.03)

    def test_rayleigh_power_law(self):
        # doubling the distance divides E|h|^2 by 2^alpha, within 5%
        rng = np.random.default_rng(3)
        alpha = 4.0
        near = rayleigh_link(np.zeros((100000, 3)), np.array([2.0, 0, 0]), alpha, 1.0, rng)
        far = rayleigh_link(np.zeros((100000, 3)), np.array([4.0, 0, 0]), alpha, 1.0, rng)
        ratio = np.mean(np.abs(near)**2) / np.mean(np.abs(far)**2)
        assert ratio == pytest.approx(2.0**alpha, rel=0.05)

    def test_all_outputs_finite(self, channels):
        for name in ("h_tr", "h_ir", "h_ti", "h_ie", "h_ar"):
            assert np.all(np.isfinite(getattr(channels, name)))

    def test_colocated_nodes_rejected(self, channel_params):
        geom = reference_geometry()
        bad = Geometry(
            pos_alice=geom.pos_eve.copy(), pos_eve=geom.pos_eve,
            pos_bob_tx_first=geom.pos_bob_tx_first,
            pos_bob_rx_first=geom.pos_bob_rx_first,
            pos_ris_first=geom.pos_ris_first,
            element_spacing=0.025, m_tx=2, n_rx=2, l_ris=4)
        with pytest.raises(ValueError, match="zero distance"):
            gen_channels(bad, channel_params, np.random.default_rng(0))

    def test_cosine_gain_model_runs(self, geometry):
        params = ChannelParams(gain_model="cosine")
        ch = gen_channels(geometry, params, np.random.default_rng(2))
        assert np.all(np.isfinite(ch.h_tr))


class TestPerturbCsi:
    def test_zero_eps_identity(self, channels):
        out = perturb_csi(channels.h_ie, 0.0, np.random.default_rng(0))
        assert np.array_equal(out, channels.h_ie)

    def test_full_eps_drops_true_channel(self, channels):
        rng_state = np.random.default_rng(12)
        out1 = perturb_csi(channels.h_ie, 1.0, rng_state)
        out2 = perturb_csi(2.0 * channels.h_ie, 1.0, np.random.default_rng(12))
        # error variance scales with |h|, so equality up to the sqrt scaling
        assert np.allclose(np.abs(out2), np.sqrt(2.0) * np.abs(out1))

    def test_error_variance_matches_magnitude_convention(self, channels):
        eps = 0.5
        rng = np.random.default_rng(17)
        n = 20000
        errs = np.array([
            perturb_csi(channels.h_ie, eps, rng) - math.sqrt(1 - eps) * channels.h_ie
            for _ in range(n)
        ])
        emp_var = np.mean(np.abs(errs)**2, axis=0)
        assert np.allclose(emp_var, eps * np.abs(channels.h_ie), rtol=0.05)

    def test_power_convention_switch(self, channels):
        eps = 0.5
        rng = np.random.default_rng(18)
        errs = np.array([
            perturb_csi(channels.h_ie, eps, rng, error_variance="power")
            - math.sqrt(1 - eps) * channels.h_ie
            for _ in range(20000)
        ])
        emp_var = np.mean(np.abs(errs)**2, axis=0)
        assert np.allclose(emp_var, eps * np.abs(channels.h_ie)**2, rtol=0.05)

    def test_rejects_bad_eps(self, channels):
        with pytest.raises(ValueError):
            perturb_csi(channels.h_ie, 1.5, np.random.default_rng(0))


def test_channel_dump_round_trip(tmp_path, channels):
    path = tmp_path / "channels.txt"
    save_channel_set(path, channels)
    back = load_channel_set(path)
    for name in ("h_tr", "h_ir", "h_ti", "h_ie", "h_ar"):
        assert np.allclose(getattr(back, name), getattr(channels, name), rtol=0, atol=1e-16)
    assert back.h_ae == pytest.approx(channels.h_ae, abs=1e-16)
