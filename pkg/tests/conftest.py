import numpy as np
import pytest

from rsma_ris.model import BeamformerSet, ChannelDrop, DesignPoint, RisPhase, ScenarioConfig


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def make_cfg(
    K=2, N_bs=2, N_u=2, M=3, P=4.0, sigma2=1.0, n_p=256, n_c=256,
    eps_p=5e-6, eps_c=5e-6, l=None, alpha=0.5, eta=2.0, P_s=1.0,
):
    if l is None:
        l = np.full(K, 100.0)
    return ScenarioConfig(
        K=K, N_bs=N_bs, N_u=N_u, M=M, P=P, sigma2=sigma2, n_p=n_p, n_c=n_c,
        eps_p=eps_p, eps_c=eps_c, l=l, alpha=alpha, eta=eta, P_s=P_s,
    )


def make_drop(cfg, rng, scale=1.0):
    """Unit-scale synthetic channels matching cfg's shapes."""
    F = scale * crandn(rng, cfg.K, cfg.N_u, cfg.N_bs)
    if cfg.M:
        G_list = scale * crandn(rng, cfg.K, cfg.N_u, cfg.M)
        G = scale * crandn(rng, cfg.M, cfg.N_bs)
    else:
        G_list = np.zeros((cfg.K, cfg.N_u, 0), dtype=complex)
        G = np.zeros((0, cfg.N_bs), dtype=complex)
    return ChannelDrop(F=F, G_list=G_list, G=G, seed=None)


def make_beams(cfg, rng, power_frac=0.9, common=True):
    """Random beamformers scaled to use power_frac of the budget."""
    Uc = crandn(rng, cfg.N_bs, cfg.N) if common else np.zeros((cfg.N_bs, cfg.N), complex)
    Up = crandn(rng, cfg.K, cfg.N_bs, cfg.N)
    beams = BeamformerSet(Uc, Up)
    fac = np.sqrt(power_frac * cfg.P / beams.total_power())
    return BeamformerSet(Uc * fac, Up * fac)


def make_point(cfg, rng, common=True, unit_ris=True):
    beams = make_beams(cfg, rng, common=common)
    if cfg.M:
        ris = RisPhase(np.exp(2j * np.pi * rng.random(cfg.M)))
        if not unit_ris:
            ris = RisPhase(ris.psi * rng.random(cfg.M))
    else:
        ris = RisPhase.zeros(0)
    return DesignPoint(beams=beams, ris=ris, z=np.zeros(cfg.K))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
