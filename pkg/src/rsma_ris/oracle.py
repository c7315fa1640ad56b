"""Exhaustive grid search over tiny single-antenna instances, used as an
independent optimum reference for the alternating optimizer.

Only instances with K <= 2, N_bs = N_u = 1, M <= 1 are accepted; everything
is scalar there, so true rates for the whole grid evaluate vectorized. The
grid covers 33 power levels per private stream, 17 common-power levels, 64
unit-modulus RIS phases, and 33 splits of the full common-rate cap.
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .model import BeamformerSet, ChannelDrop, DesignPoint, RisPhase, ScenarioConfig
from .metrics import inverse_q
from .optimizer import VariantSpec

__all__ = ["OracleResult", "grid_oracle"]

_POWER_LEVELS = 33
_COMMON_LEVELS = 17
_PHASE_LEVELS = 64
_Z_LEVELS = 33


@dataclass(frozen=True)
class OracleResult:
    status: str               # "ok" | "infeasible"
    objective: float
    design: DesignPoint | None


def _check_tiny(cfg: ScenarioConfig) -> None:
    if cfg.K > 2 or cfg.N_bs != 1 or cfg.N_u != 1 or cfg.M > 1:
        raise ValueError(
            "grid_oracle only accepts tiny instances (K <= 2, N_bs = N_u = 1, M <= 1)"
        )


def grid_oracle(cfg: ScenarioConfig, drop: ChannelDrop, variant: VariantSpec) -> OracleResult:
    """Best true objective over the exhaustive grid, with its arg point.

    Grid cells where the common power is positive but some user's common
    rate is negative violate the decodability cap for every z >= 0 and are
    excluded as infeasible.
    """
    _check_tiny(cfg)
    K = cfg.K
    q_p, q_c = inverse_q(cfg.eps_p), inverse_q(cfg.eps_c)
    s2 = cfg.sigma2

    if variant.ris_mode == "random":
        raise ValueError("grid_oracle compares against optimized or absent RIS modes only")
    if cfg.M == 1 and variant.ris_mode == "optimized":
        psis = np.exp(2j * np.pi * np.arange(_PHASE_LEVELS) / _PHASE_LEVELS)
    else:
        psis = np.array([0.0 + 0.0j])

    # |effective channel|^2 per (psi, user)
    h2 = np.empty((psis.shape[0], K))
    for k in range(K):
        f = complex(drop.F[k][0, 0])
        if cfg.M == 1:
            g_cascade = complex(drop.G_list[k][0, 0]) * complex(drop.G[0, 0])
        else:
            g_cascade = 0.0
        h2[:, k] = np.abs(f + psis * g_cascade) ** 2

    p_lvls = np.linspace(0.0, cfg.P, _POWER_LEVELS)
    pc_lvls = (
        np.linspace(0.0, cfg.P, _COMMON_LEVELS) if variant.rsma else np.array([0.0])
    )
    if K == 2:
        p1, p2, pc = np.meshgrid(p_lvls, p_lvls, pc_lvls, indexing="ij")
        p_priv = np.stack([p1, p2], axis=-1)          # (..., K)
    else:
        p1, pc = np.meshgrid(p_lvls, pc_lvls, indexing="ij")
        p_priv = p1[..., None]
    total = p_priv.sum(axis=-1) + pc
    power_ok = total <= cfg.P * (1.0 + 1e-12)

    fracs = np.linspace(0.0, 1.0, _Z_LEVELS) if K == 2 else np.array([1.0])

    best_val = np.inf
    best = None
    for a, psi in enumerate(psis):
        h2a = h2[a]                                    # (K,)
        cell_shape = total.shape
        r_p = np.empty(cell_shape + (K,))
        r_c = np.empty(cell_shape + (K,))
        for k in range(K):
            tk = h2a[k] * p_priv[..., k]
            t_all = h2a[k] * p_priv.sum(axis=-1)
            noise_int = s2 + (t_all - tk)
            snr = tk / noise_int
            x_p = tk / (s2 + t_all)
            r_p[..., k] = np.log1p(snr) - q_p * np.sqrt(2.0 * x_p / cfg.n_p)
            sc = h2a[k] * pc
            x_c = sc / (s2 + sc + t_all)
            r_c[..., k] = np.log1p(sc / (s2 + t_all)) - q_c * np.sqrt(2.0 * x_c / cfg.n_c)
        cap = r_c.min(axis=-1)
        common_ok = (pc <= 0.0) | (cap >= 0.0)
        feas = power_ok & common_ok
        if not feas.any():
            continue
        cap_use = np.where((pc > 0.0) & (cap > 0.0), cap, 0.0)
        p_served = cfg.P_s + cfg.eta * p_priv + (cfg.eta / K) * pc[..., None]
        for s in fracs:
            share = np.stack([s * cap_use, (1.0 - s) * cap_use], axis=-1)[..., :K]
            r_tot = np.maximum(r_p + share, 0.0)
            with np.errstate(divide="ignore"):
                delay = np.where(r_tot > 0, cfg.l / np.where(r_tot > 0, r_tot, 1.0), np.inf)
            ee = r_tot / p_served
            obj = cfg.alpha * delay.max(axis=-1) - (1.0 - cfg.alpha) * ee.min(axis=-1)
            obj = np.where(feas, obj, np.inf)
            idx = np.unravel_index(np.argmin(obj), obj.shape)
            if obj[idx] < best_val:
                best_val = float(obj[idx])
                best = (psi, p_priv[idx], float(pc[idx]), share[idx])

    if best is None or not np.isfinite(best_val):
        return OracleResult(status="infeasible", objective=np.inf, design=None)

    psi, p_k, p_c, z = best
    beams = BeamformerSet(
        np.array([[np.sqrt(p_c)]], dtype=complex),
        np.sqrt(np.asarray(p_k, dtype=float)).reshape(K, 1, 1).astype(complex),
    )
    ris = RisPhase(np.array([psi])) if cfg.M == 1 else RisPhase.zeros(0)
    dp = DesignPoint(beams=beams, ris=ris, z=np.asarray(z, dtype=float).reshape(K))
    return OracleResult(status="ok", objective=best_val, design=dp)
