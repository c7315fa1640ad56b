"""Performance functionals: short-packet (finite-blocklength) rates for the
common and private messages, the reliability split, per-user power, energy
efficiency, transmission delay, and the scalar trade-off objective.

Rate model per user k, with effective channel H_k and beamformers U (common)
and U_j (private):

    r_ck = ln|I + (s2 I + sum_j T_kj)^{-1} S_ck|
           - Qinv(eps_c) * sqrt(2 Tr(S_ck (s2 I + S_ck + sum_j T_kj)^{-1}) / n_c)
    r_pk = ln|I + (s2 I + sum_{j!=k} T_kj)^{-1} S_k|
           - Qinv(eps_p) * sqrt(2 Tr(S_k (s2 I + sum_j T_kj)^{-1}) / n_p)

with T_kj = H_k U_j U_j^H H_k^H, S_k = T_kk, S_ck = H_k U U^H H_k^H. The
common stream is decoded first and cancelled, so it is absent from the
private-message expressions. Rates may be negative at low SNR / short
blocklength; callers clamp for physical metrics, the optimizer consumes the
raw values.
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np
from scipy.special import ndtri

from .model import (
    BeamformerSet,
    ChannelDrop,
    DesignPoint,
    RisPhase,
    ScenarioConfig,
    effective_channels_all,
)

__all__ = [
    "MetricsReport",
    "inverse_q",
    "reliability_split",
    "common_rate_fbl",
    "private_rate_fbl",
    "common_rates_all",
    "private_rates_all",
    "power_consumption",
    "powers_all",
    "metrics_report",
    "true_objective",
]


def inverse_q(p: float) -> float:
    """Inverse of the Gaussian tail function Q(x) = P[N(0,1) > x].

    Antisymmetric around p = 1/2; absolute accuracy far below 1e-9.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"inverse_q requires p in (0, 1), got {p}")
    return float(-ndtri(p))


def reliability_split(eps_total: float, policy: str = "equal") -> tuple[float, float]:
    """Split an end-to-end decoding error budget into (eps_c, eps_p).

    The common stream must be decoded before SIC, so the combined error is
    eps_c + (1 - eps_c) eps_p <= eps_c + eps_p; the equal split makes the
    conservative bound meet the budget exactly.
    """
    if not 0.0 < eps_total < 0.5:
        raise ValueError(f"eps_total must lie in (0, 0.5), got {eps_total}")
    if policy != "equal":
        raise ValueError(f"unknown reliability split policy: {policy!r}")
    return eps_total / 2.0, eps_total / 2.0


def _rate_terms(
    cfg: ScenarioConfig, drop: ChannelDrop, ris: RisPhase, beams: BeamformerSet
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-user covariance building blocks.

    Returns (S_c, T, T_sum): S_c[k] is the received common-signal covariance,
    T[k, j] the covariance of private stream j at user k, T_sum[k] their sum
    over j. All N_u x N_u Hermitian.
    """
    H = effective_channels_all(drop, ris)                      # (K, N_u, N_bs)
    Xp = np.einsum("kub,jbn->kjun", H, beams.U_private)        # (K, K, N_u, N)
    T = np.einsum("kjun,kjvn->kjuv", Xp, Xp.conj())
    T_sum = T.sum(axis=1)
    Xc = H @ beams.U_common                                    # (K, N_u, N)
    S_c = np.einsum("kun,kvn->kuv", Xc, Xc.conj())
    return S_c, T, T_sum


def _logdet_ratio(num: np.ndarray, den: np.ndarray) -> float:
    """ln|num| - ln|den| for Hermitian positive definite matrices."""
    s_num, ld_num = np.linalg.slogdet(num)
    s_den, ld_den = np.linalg.slogdet(den)
    if s_num.real <= 0 or s_den.real <= 0:
        raise np.linalg.LinAlgError("covariance matrix is not positive definite")
    return float(ld_num - ld_den)


def _dispersion_trace(signal: np.ndarray, total: np.ndarray) -> float:
    """Tr(signal @ total^{-1}), clipped at 0 against roundoff."""
    val = float(np.real(np.trace(np.linalg.solve(total, signal))))
    return max(val, 0.0)


def common_rates_all(
    cfg: ScenarioConfig, drop: ChannelDrop, ris: RisPhase, beams: BeamformerSet
) -> np.ndarray:
    """Vector of common-message rates r_ck, nats/use (possibly negative)."""
    S_c, _, T_sum = _rate_terms(cfg, drop, ris, beams)
    eye = np.eye(cfg.N_u)
    q = inverse_q(cfg.eps_c)
    out = np.empty(cfg.K)
    for k in range(cfg.K):
        W = cfg.sigma2 * eye + T_sum[k]
        V = W + S_c[k]
        ld = _logdet_ratio(V, W)
        disp = _dispersion_trace(S_c[k], V)
        out[k] = ld - q * np.sqrt(2.0 * disp / cfg.n_c)
    return out


def private_rates_all(
    cfg: ScenarioConfig, drop: ChannelDrop, ris: RisPhase, beams: BeamformerSet
) -> np.ndarray:
    """Vector of private-message rates r_pk, nats/use (possibly negative)."""
    _, T, T_sum = _rate_terms(cfg, drop, ris, beams)
    eye = np.eye(cfg.N_u)
    q = inverse_q(cfg.eps_p)
    out = np.empty(cfg.K)
    for k in range(cfg.K):
        V = cfg.sigma2 * eye + T_sum[k]           # noise + all private streams
        W = V - T[k, k]                           # interference only
        ld = _logdet_ratio(V, W)
        disp = _dispersion_trace(T[k, k], V)      # full sum over j, as modelled
        out[k] = ld - q * np.sqrt(2.0 * disp / cfg.n_p)
    return out


def common_rate_fbl(
    cfg: ScenarioConfig, drop: ChannelDrop, ris: RisPhase, beams: BeamformerSet, k: int
) -> float:
    """Common-message rate for user k (nats/use)."""
    return float(common_rates_all(cfg, drop, ris, beams)[k])


def private_rate_fbl(
    cfg: ScenarioConfig, drop: ChannelDrop, ris: RisPhase, beams: BeamformerSet, k: int
) -> float:
    """Private-message rate for user k (nats/use)."""
    return float(private_rates_all(cfg, drop, ris, beams)[k])


def powers_all(cfg: ScenarioConfig, beams: BeamformerSet) -> np.ndarray:
    """Per-user consumed power: P_s + eta Tr(U_k U_k^H) + (eta/K) Tr(U U^H)."""
    return cfg.P_s + cfg.eta * beams.private_powers() + (cfg.eta / cfg.K) * beams.common_power()


def power_consumption(cfg: ScenarioConfig, beams: BeamformerSet, k: int) -> float:
    """Power consumed to serve user k, watts (strictly >= P_s)."""
    return float(powers_all(cfg, beams)[k])


@dataclass(frozen=True)
class MetricsReport:
    """All per-user performance quantities plus the scalar objective."""

    r_c_per_user: np.ndarray   # common rates r_ck, raw (may be negative)
    r_p: np.ndarray            # private rates r_pk, raw
    r_total: np.ndarray        # r_k = z_k + r_pk, raw
    p: np.ndarray              # consumed powers, watts
    ee: np.ndarray             # max(r_k, 0) / p_k, nats/use/watt
    delay: np.ndarray          # l_k / r_k when r_k > 0, else +inf
    objective: float           # alpha * max delay - (1 - alpha) * min EE


def true_objective(cfg: ScenarioConfig, delay: np.ndarray, ee: np.ndarray) -> float:
    """Weighted worst-case-latency / worst-case-EE objective (to minimize)."""
    term_d = cfg.alpha * float(np.max(delay)) if cfg.alpha > 0 else 0.0
    term_e = (1.0 - cfg.alpha) * float(np.min(ee)) if cfg.alpha < 1 else 0.0
    return term_d - term_e


def metrics_report(cfg: ScenarioConfig, drop: ChannelDrop, dp: DesignPoint) -> MetricsReport:
    """Evaluate all physical metrics at a design point.

    Negative total rates are clamped to zero before computing EE and delay;
    a zero total rate yields an infinite-delay sentinel which propagates to
    the objective whenever latency has positive weight.
    """
    r_c = common_rates_all(cfg, drop, dp.ris, dp.beams)
    r_p = private_rates_all(cfg, drop, dp.ris, dp.beams)
    r_total = dp.z + r_p
    p = powers_all(cfg, dp.beams)
    clamped = np.maximum(r_total, 0.0)
    ee = clamped / p
    with np.errstate(divide="ignore"):
        delay = np.where(clamped > 0.0, cfg.l / np.where(clamped > 0, clamped, 1.0), np.inf)
    return MetricsReport(
        r_c_per_user=r_c,
        r_p=r_p,
        r_total=r_total,
        p=p,
        ee=ee,
        delay=delay,
        objective=true_objective(cfg, delay, ee),
    )
