import numpy as np
import pytest

from rsma_ris.channels import TopologyConfig, generate_drop
from rsma_ris.metrics import metrics_report, powers_all, private_rates_all
from rsma_ris.model import validate_design
from rsma_ris.optimizer import (
    AoOptions,
    VariantSpec,
    ao_solve,
    initialize,
    quadratic_transform_weights,
)
from conftest import make_cfg, make_drop, make_point


def physical_cfg(alpha=1.0, K=3, M=8, P_db=10.0, **kw):
    return make_cfg(
        K=K, N_bs=2, N_u=2, M=M, P=10 ** (P_db / 10), sigma2=1e-13,
        l=np.full(K, 256 * np.log(2.0)), alpha=alpha, eta=3.0, P_s=1.0, **kw,
    )


def physical_drop(cfg, seed):
    rng = np.random.default_rng(seed)
    return generate_drop(cfg, TopologyConfig(), rng, seed=seed)


class TestVariantSpec:
    def test_parse_labels(self):
        for name, access, mode in [
            ("RIS-RSMA", "RSMA", "optimized"),
            ("no-ris-sdma", "SDMA", "absent"),
            ("RIS-Rand-RSMA", "RSMA", "random"),
        ]:
            v = VariantSpec.parse(name)
            assert (v.access, v.ris_mode) == (access, mode)
        assert VariantSpec.parse("RIS-RSMA").label == "RIS-RSMA"

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError):
            VariantSpec.parse("OMA")


class TestInitialize:
    def test_sdma_has_zero_common_block_and_shares(self):
        cfg = physical_cfg()
        drop = physical_drop(cfg, 0)
        dp = initialize(cfg, drop, VariantSpec.parse("RIS-SDMA"), np.random.default_rng(0))
        assert dp.beams.common_power() == 0.0
        assert np.all(dp.z == 0)

    def test_total_power_is_ninety_percent(self):
        cfg = physical_cfg()
        drop = physical_drop(cfg, 1)
        for name in ("RIS-RSMA", "RIS-SDMA"):
            dp = initialize(cfg, drop, VariantSpec.parse(name), np.random.default_rng(1))
            assert dp.beams.total_power() == pytest.approx(0.9 * cfg.P, abs=1e-9)

    def test_feasible_on_100_random_drops(self):
        cfg = physical_cfg(K=2, M=4)
        for seed in range(100):
            drop = physical_drop(cfg, seed)
            for name in ("RIS-RSMA", "No-RIS-SDMA", "RIS-Rand-RSMA"):
                dp = initialize(cfg, drop, VariantSpec.parse(name), np.random.default_rng(seed))
                assert validate_design(cfg, drop, dp).feasible, (name, seed)

    def test_absent_mode_zeroes_ris(self):
        cfg = physical_cfg()
        drop = physical_drop(cfg, 2)
        dp = initialize(cfg, drop, VariantSpec.parse("No-RIS-RSMA"), np.random.default_rng(0))
        assert np.all(dp.ris.psi == 0)

    def test_random_mode_unit_modulus(self):
        cfg = physical_cfg()
        drop = physical_drop(cfg, 3)
        dp = initialize(cfg, drop, VariantSpec.parse("RIS-Rand-SDMA"), np.random.default_rng(0))
        np.testing.assert_allclose(np.abs(dp.ris.psi), 1.0, atol=1e-12)


class TestTransformWeights:
    def test_zero_rate_gives_zero_weight(self, rng):
        cfg = make_cfg()
        drop = make_drop(cfg, rng)
        dp = make_point(cfg, rng, common=False)
        from rsma_ris.model import BeamformerSet, DesignPoint, RisPhase

        zero_dp = DesignPoint(
            beams=BeamformerSet.zeros(cfg.K, cfg.N_bs, cfg.N),
            ris=dp.ris,
            z=np.zeros(cfg.K),
        )
        assert np.all(quadratic_transform_weights(cfg, drop, zero_dp) == 0)

    def test_arithmetic_example(self, rng):
        # r = 4, p = 2 -> lam = 1
        lam = np.sqrt(4.0) / 2.0
        assert lam == 1.0

    def test_transform_recovers_ratio_exactly(self, rng):
        cfg = make_cfg()
        drop = make_drop(cfg, rng)
        dp = make_point(cfg, rng)
        lam = quadratic_transform_weights(cfg, drop, dp)
        r = np.maximum(dp.z + private_rates_all(cfg, drop, dp.ris, dp.beams), 0.0)
        p = powers_all(cfg, dp.beams)
        lhs = 2 * lam * np.sqrt(r) - lam**2 * p
        np.testing.assert_allclose(lhs, r / p, rtol=1e-10)


class TestAoSolve:
    def test_trace_monotone_within_slack(self):
        cfg = physical_cfg(alpha=0.5)
        drop = physical_drop(cfg, 4)
        tr = ao_solve(cfg, drop, VariantSpec.parse("RIS-RSMA"),
                      AoOptions(rng=np.random.default_rng(4), max_iter=40))
        objs = [r.objective for r in tr.records]
        for prev, cur in zip(objs, objs[1:]):
            assert cur <= prev + 1e-6

    def test_best_pointer_and_verdict(self):
        cfg = physical_cfg(alpha=1.0)
        drop = physical_drop(cfg, 5)
        tr = ao_solve(cfg, drop, VariantSpec.parse("RIS-RSMA"),
                      AoOptions(rng=np.random.default_rng(5), max_iter=60))
        assert tr.verdict == "converged"
        assert tr.objective <= tr.initial_objective + 1e-9
        assert tr.objective == pytest.approx(
            metrics_report(cfg, drop, tr.final_point).objective, rel=1e-12
        )

    def test_absent_equals_optimized_with_zero_elements(self):
        cfg = physical_cfg(M=0)
        drop = physical_drop(cfg, 6)
        tr_abs = ao_solve(cfg, drop, VariantSpec.parse("No-RIS-RSMA"),
                          AoOptions(rng=np.random.default_rng(6), max_iter=25))
        tr_opt = ao_solve(cfg, drop, VariantSpec.parse("RIS-RSMA"),
                          AoOptions(rng=np.random.default_rng(6), max_iter=25))
        objs_abs = [r.objective for r in tr_abs.records]
        objs_opt = [r.objective for r in tr_opt.records]
        np.testing.assert_allclose(objs_abs, objs_opt, rtol=1e-12)

    def test_stationarity_at_convergence(self):
        cfg = physical_cfg(alpha=1.0)
        drop = physical_drop(cfg, 7)
        opts = AoOptions(rng=np.random.default_rng(7), delta=1e-4, max_iter=80)
        tr = ao_solve(cfg, drop, VariantSpec.parse("RIS-RSMA"), opts)
        assert tr.verdict == "converged"
        objs = [r.objective for r in tr.records]
        if len(objs) >= 4:
            tail = abs(objs[-1] - objs[-4])
            assert tail <= opts.delta * abs(objs[-1]) * 3

    def test_warm_start_dominance(self):
        cfg = physical_cfg(alpha=0.5)
        for seed in range(3):
            drop = physical_drop(cfg, 20 + seed)
            sdma = ao_solve(cfg, drop, VariantSpec.parse("RIS-SDMA"),
                            AoOptions(rng=np.random.default_rng(seed), max_iter=40))
            rsma = ao_solve(cfg, drop, VariantSpec.parse("RIS-RSMA"),
                            AoOptions(rng=np.random.default_rng(seed), max_iter=40,
                                      warm_starts=(sdma.final_point,)))
            assert rsma.objective <= sdma.objective + 1e-6
            noris = ao_solve(cfg, drop, VariantSpec.parse("No-RIS-RSMA"),
                             AoOptions(rng=np.random.default_rng(seed), max_iter=40))
            ris = ao_solve(cfg, drop, VariantSpec.parse("RIS-RSMA"),
                           AoOptions(rng=np.random.default_rng(seed), max_iter=40,
                                     warm_starts=(noris.final_point,)))
            assert ris.objective <= noris.objective + 1e-6

    def test_final_point_feasible(self):
        cfg = physical_cfg(alpha=0.5)
        drop = physical_drop(cfg, 9)
        for name in ("RIS-RSMA", "RIS-SDMA", "RIS-Rand-RSMA", "No-RIS-SDMA"):
            tr = ao_solve(cfg, drop, VariantSpec.parse(name),
                          AoOptions(rng=np.random.default_rng(9), max_iter=30))
            rep = validate_design(cfg, drop, tr.final_point)
            assert rep.feasible, (name, rep)

    def test_random_phase_never_optimized(self):
        cfg = physical_cfg(alpha=1.0)
        drop = physical_drop(cfg, 10)
        tr = ao_solve(cfg, drop, VariantSpec.parse("RIS-Rand-RSMA"),
                      AoOptions(rng=np.random.default_rng(10), max_iter=20))
        init = initialize(cfg, drop, VariantSpec.parse("RIS-Rand-RSMA"),
                          np.random.default_rng(10))
        np.testing.assert_allclose(tr.final_point.ris.psi, init.ris.psi, rtol=1e-12)
