import numpy as np
import pytest

from rsma_ris.channels import TopologyConfig, generate_drop
from rsma_ris.metrics import metrics_report
from rsma_ris.model import BeamformerSet, DesignPoint, RisPhase, validate_design
from rsma_ris.optimizer import AoOptions, VariantSpec, ao_solve
from rsma_ris.oracle import grid_oracle
from conftest import make_cfg


def tiny_cfg(alpha=1.0, P_db=10.0, K=2, M=1):
    return make_cfg(
        K=K, N_bs=1, N_u=1, M=M, P=10 ** (P_db / 10), sigma2=1e-13,
        l=np.full(K, 256 * np.log(2.0)), alpha=alpha, eta=3.0, P_s=1.0,
    )


def tiny_drop(cfg, seed):
    return generate_drop(cfg, TopologyConfig(), np.random.default_rng(seed), seed=seed)


def test_rejects_non_tiny():
    cfg = make_cfg(K=2, N_bs=2, N_u=2, M=1)
    drop = tiny_drop(tiny_cfg(), 0)
    with pytest.raises(ValueError):
        grid_oracle(cfg, drop, VariantSpec.parse("RIS-RSMA"))


def test_vanishing_power_reports_infeasible():
    cfg = tiny_cfg(P_db=-2800.0)  # power so small every finite-blocklength rate is negative
    drop = tiny_drop(cfg, 1)
    res = grid_oracle(cfg, drop, VariantSpec.parse("RIS-RSMA"))
    assert res.status == "infeasible"
    assert np.isinf(res.objective)


def test_single_user_oracle_beats_hand_point():
    cfg = tiny_cfg(K=1)
    drop = tiny_drop(cfg, 2)
    res = grid_oracle(cfg, drop, VariantSpec.parse("RIS-RSMA"))
    assert res.status == "ok"
    hand = DesignPoint(
        beams=BeamformerSet(
            np.zeros((1, 1), complex), np.array([[[np.sqrt(cfg.P)]]], dtype=complex)
        ),
        ris=RisPhase(np.array([1.0 + 0j])),
        z=np.zeros(1),
    )
    assert res.objective <= metrics_report(cfg, drop, hand).objective + 1e-12


def test_oracle_design_is_feasible_and_consistent():
    cfg = tiny_cfg(alpha=0.5)
    drop = tiny_drop(cfg, 3)
    res = grid_oracle(cfg, drop, VariantSpec.parse("RIS-RSMA"))
    assert res.status == "ok"
    assert validate_design(cfg, drop, res.design).feasible
    assert metrics_report(cfg, drop, res.design).objective == pytest.approx(
        res.objective, rel=1e-9, abs=1e-9
    )


def test_sdma_oracle_never_beats_rsma_oracle():
    cfg = tiny_cfg()
    drop = tiny_drop(cfg, 4)
    rsma = grid_oracle(cfg, drop, VariantSpec.parse("RIS-RSMA"))
    sdma = grid_oracle(cfg, drop, VariantSpec.parse("RIS-SDMA"))
    assert rsma.objective <= sdma.objective + 1e-12


def test_ao_matches_oracle_within_tolerance():
    cfg = tiny_cfg(alpha=1.0)
    for seed in range(2):
        drop = tiny_drop(cfg, 10 + seed)
        res = grid_oracle(cfg, drop, VariantSpec.parse("RIS-RSMA"))
        tr = ao_solve(cfg, drop, VariantSpec.parse("RIS-RSMA"),
                      AoOptions(rng=np.random.default_rng(seed), max_iter=60))
        assert abs(tr.objective - res.objective) <= 0.05 * abs(res.objective)
