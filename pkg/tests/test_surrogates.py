import numpy as np
import pytest

from rsma_ris.model import BeamformerSet, DesignPoint, RisPhase
from rsma_ris.metrics import common_rates_all, private_rates_all
from rsma_ris.surrogates import (
    DegenerateExpansionError,
    beam_surrogate_coefficients,
    eval_beam_surrogate,
    eval_ris_surrogate,
    ris_surrogate_coefficients,
)
from conftest import crandn, make_cfg, make_drop, make_point


def true_rate(cfg, drop, ris, beams, kind, k):
    if kind == "private":
        return float(private_rates_all(cfg, drop, ris, beams)[k])
    return float(common_rates_all(cfg, drop, ris, beams)[k])


def perturbed_beams(beams, rng, scale):
    Uc = beams.U_common + scale * crandn(rng, *beams.U_common.shape)
    Up = beams.U_private + scale * crandn(rng, *beams.U_private.shape)
    return BeamformerSet(Uc, Up)


def instance(seed, **kw):
    rng = np.random.default_rng(seed)
    cfg = make_cfg(**kw)
    drop = make_drop(cfg, rng)
    dp = make_point(cfg, rng)
    return cfg, drop, dp, rng


KINDS = ("private", "common")


class TestBeamSide:
    def test_tightness_at_expansion(self):
        for seed in range(100):
            cfg, drop, dp, _ = instance(seed)
            co = beam_surrogate_coefficients(cfg, drop, dp.ris, dp.beams)
            for kind in KINDS:
                for k in range(cfg.K):
                    bound = eval_beam_surrogate(co, dp.ris, dp.beams, kind, k, cfg.sigma2)
                    rate = true_rate(cfg, drop, dp.ris, dp.beams, kind, k)
                    assert abs(bound - rate) <= 1e-7 * max(1.0, abs(rate))

    def test_global_minorization(self):
        for seed in range(10):
            cfg, drop, dp, rng = instance(seed)
            co = beam_surrogate_coefficients(cfg, drop, dp.ris, dp.beams)
            for _ in range(100):
                scale = rng.choice([1e-1, 1.0, 3.0])
                beams = perturbed_beams(dp.beams, rng, scale)
                for kind in KINDS:
                    k = int(rng.integers(cfg.K))
                    bound = eval_beam_surrogate(co, dp.ris, beams, kind, k, cfg.sigma2)
                    rate = true_rate(cfg, drop, dp.ris, beams, kind, k)
                    assert bound <= rate + 1e-7

    def test_gradient_consistency(self):
        h = 1e-5
        for seed in range(8):
            cfg, drop, dp, rng = instance(seed)
            co = beam_surrogate_coefficients(cfg, drop, dp.ris, dp.beams)
            dUc = crandn(rng, *dp.beams.U_common.shape)
            dUp = crandn(rng, *dp.beams.U_private.shape)

            def shifted(t):
                return BeamformerSet(dp.beams.U_common + t * dUc, dp.beams.U_private + t * dUp)

            for kind in KINDS:
                for k in range(cfg.K):
                    d_rate = (
                        true_rate(cfg, drop, dp.ris, shifted(h), kind, k)
                        - true_rate(cfg, drop, dp.ris, shifted(-h), kind, k)
                    ) / (2 * h)
                    d_bound = (
                        eval_beam_surrogate(co, dp.ris, shifted(h), kind, k, cfg.sigma2)
                        - eval_beam_surrogate(co, dp.ris, shifted(-h), kind, k, cfg.sigma2)
                    ) / (2 * h)
                    assert d_bound == pytest.approx(d_rate, rel=1e-4, abs=1e-8)

    def test_quadratic_kernels_are_psd(self):
        for seed in range(20):
            cfg, drop, dp, _ = instance(seed)
            co = beam_surrogate_coefficients(cfg, drop, dp.ris, dp.beams)
            for ms in list(co.private) + list(co.common):
                B = ms.B
                np.testing.assert_allclose(B, B.conj().T, atol=1e-10)
                assert np.linalg.eigvalsh(B).min() >= -1e-9

    def test_single_user_scalar_hand_formula(self):
        cfg = make_cfg(K=1, N_bs=1, N_u=1, M=0, sigma2=0.5)
        rng = np.random.default_rng(0)
        drop = make_drop(cfg, rng)
        dp = make_point(cfg, rng, common=False)
        co = beam_surrogate_coefficients(cfg, drop, dp.ris, dp.beams, include_common=False)
        s_bar = abs(drop.F[0, 0, 0] * dp.beams.U_private[0, 0, 0]) ** 2
        # no interference: own-signal-to-noise ratio
        C = s_bar / cfg.sigma2
        eye_term = np.log1p(C)
        assert co.private[0].g == pytest.approx(2 * s_bar / (cfg.sigma2 + s_bar), rel=1e-12)
        # reconstruct the constant from the hand formulas
        from rsma_ris.metrics import inverse_q

        g = co.private[0].g
        D = inverse_q(cfg.eps_p) / np.sqrt(cfg.n_p * g)
        v_inv = 1.0 / (cfg.sigma2 + s_bar)
        a_expected = (
            eye_term
            - C
            - inverse_q(cfg.eps_p) / (2 * np.sqrt(cfg.n_p)) * np.sqrt(g)
            - D * (1.0 - 2.0 * cfg.sigma2 * v_inv)
        )
        assert co.private[0].a == pytest.approx(a_expected, rel=1e-12)

    def test_kernel_reduces_to_inverse_difference_at_half_error(self, rng):
        # eps = 0.5 zeroes the dispersion weight, leaving W^-1 - V^-1 (PSD)
        cfg = make_cfg(eps_p=0.4999999999, eps_c=0.4999999999)
        drop = make_drop(cfg, rng)
        dp = make_point(cfg, rng)
        co = beam_surrogate_coefficients(cfg, drop, dp.ris, dp.beams)
        from rsma_ris.model import effective_channels_all

        H = effective_channels_all(drop, dp.ris)
        k = 0
        T = [
            H[k] @ dp.beams.U_private[j] @ dp.beams.U_private[j].conj().T @ H[k].conj().T
            for j in range(cfg.K)
        ]
        W = cfg.sigma2 * np.eye(cfg.N_u) + sum(T) - T[k]
        V = W + T[k]
        expected = np.linalg.inv(W) - np.linalg.inv(V)
        np.testing.assert_allclose(co.private[k].B, expected, atol=1e-8)

    def test_degenerate_expansion_reported(self, rng):
        cfg = make_cfg()
        drop = make_drop(cfg, rng)
        beams = BeamformerSet.zeros(cfg.K, cfg.N_bs, cfg.N)
        with pytest.raises(DegenerateExpansionError) as exc:
            beam_surrogate_coefficients(cfg, drop, RisPhase.zeros(cfg.M), beams)
        assert ("private", 0) in exc.value.streams


class TestRisSide:
    def test_tightness_at_expansion(self):
        for seed in range(100):
            cfg, drop, dp, _ = instance(seed)
            co = ris_surrogate_coefficients(cfg, drop, dp.beams, dp.ris)
            for kind in KINDS:
                for k in range(cfg.K):
                    bound = eval_ris_surrogate(co, dp.beams, dp.ris, kind, k, cfg.sigma2, drop)
                    rate = true_rate(cfg, drop, dp.ris, dp.beams, kind, k)
                    assert abs(bound - rate) <= 1e-7 * max(1.0, abs(rate))

    def test_lower_bound_within_unit_disc(self):
        for seed in range(10):
            cfg, drop, dp, rng = instance(seed)
            co = ris_surrogate_coefficients(cfg, drop, dp.beams, dp.ris)
            for _ in range(100):
                r = np.sqrt(rng.random(cfg.M))
                ris = RisPhase(r * np.exp(2j * np.pi * rng.random(cfg.M)))
                for kind in KINDS:
                    k = int(rng.integers(cfg.K))
                    bound = eval_ris_surrogate(co, dp.beams, ris, kind, k, cfg.sigma2, drop)
                    rate = true_rate(cfg, drop, ris, dp.beams, kind, k)
                    assert bound <= rate + 1e-7

    def test_concavity_via_midpoints(self, rng):
        cfg, drop, dp, rng = instance(7)
        co = ris_surrogate_coefficients(cfg, drop, dp.beams, dp.ris)
        for _ in range(50):
            p1 = np.sqrt(rng.random(cfg.M)) * np.exp(2j * np.pi * rng.random(cfg.M))
            p2 = np.sqrt(rng.random(cfg.M)) * np.exp(2j * np.pi * rng.random(cfg.M))
            mid = RisPhase((p1 + p2) / 2)
            for kind in KINDS:
                k = int(rng.integers(cfg.K))
                v_mid = eval_ris_surrogate(co, dp.beams, mid, kind, k, cfg.sigma2, drop)
                v1 = eval_ris_surrogate(co, dp.beams, RisPhase(p1), kind, k, cfg.sigma2, drop)
                v2 = eval_ris_surrogate(co, dp.beams, RisPhase(p2), kind, k, cfg.sigma2, drop)
                assert v_mid >= 0.5 * (v1 + v2) - 1e-9

    def test_zero_psi_matches_direct_channel_evaluation(self, rng):
        cfg, drop, dp, rng = instance(11)
        co = ris_surrogate_coefficients(cfg, drop, dp.beams, dp.ris)
        zero = RisPhase.zeros(cfg.M)
        for kind in KINDS:
            for k in range(cfg.K):
                bound = eval_ris_surrogate(co, dp.beams, zero, kind, k, cfg.sigma2, drop)
                rate = true_rate(cfg, drop, zero, dp.beams, kind, k)
                assert bound <= rate + 1e-7

    def test_gradient_consistency_in_psi(self):
        h = 1e-5
        for seed in range(8):
            cfg, drop, dp, rng = instance(seed)
            co = ris_surrogate_coefficients(cfg, drop, dp.beams, dp.ris)
            direction = crandn(rng, cfg.M)

            def shifted(t):
                return RisPhase(dp.ris.psi + t * direction)

            for kind in KINDS:
                for k in range(cfg.K):
                    d_rate = (
                        true_rate(cfg, drop, shifted(h), dp.beams, kind, k)
                        - true_rate(cfg, drop, shifted(-h), dp.beams, kind, k)
                    ) / (2 * h)
                    d_bound = (
                        eval_ris_surrogate(co, dp.beams, shifted(h), kind, k, cfg.sigma2, drop)
                        - eval_ris_surrogate(co, dp.beams, shifted(-h), kind, k, cfg.sigma2, drop)
                    ) / (2 * h)
                    assert d_bound == pytest.approx(d_rate, rel=1e-4, abs=1e-8)

    def test_no_ris_bound_constant_and_exact(self, rng):
        cfg = make_cfg(M=0)
        drop = make_drop(cfg, rng)
        dp = make_point(cfg, rng)
        co = ris_surrogate_coefficients(cfg, drop, dp.beams, dp.ris)
        for kind in KINDS:
            for k in range(cfg.K):
                bound = eval_ris_surrogate(
                    co, dp.beams, RisPhase.zeros(0), kind, k, cfg.sigma2, drop
                )
                rate = true_rate(cfg, drop, dp.ris, dp.beams, kind, k)
                assert bound == pytest.approx(rate, rel=1e-10, abs=1e-10)


def test_anchor_rates_stored(rng):
    cfg, drop, dp, rng = instance(3)
    co = beam_surrogate_coefficients(cfg, drop, dp.ris, dp.beams)
    np.testing.assert_allclose(co.r_p_bar, private_rates_all(cfg, drop, dp.ris, dp.beams), rtol=1e-9)
    np.testing.assert_allclose(co.r_c_bar, common_rates_all(cfg, drop, dp.ris, dp.beams), rtol=1e-9)


def test_sdma_mode_skips_common_side(rng):
    cfg, drop, dp, rng = instance(4)
    beams = BeamformerSet(np.zeros_like(dp.beams.U_common), dp.beams.U_private)
    co = beam_surrogate_coefficients(cfg, drop, dp.ris, beams, include_common=False)
    assert co.common is None and co.r_c_bar is None
    with pytest.raises(ValueError):
        eval_beam_surrogate(co, dp.ris, beams, "common", 0, cfg.sigma2)
