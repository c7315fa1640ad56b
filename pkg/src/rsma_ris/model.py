"""Physical system model: scenario constants, channel realizations, RIS state,
beamformers, and the composed effective channel.

All container types are frozen dataclasses holding read-only numpy arrays, so
instances can be shared freely across Monte Carlo workers.

Conventions: powers in watts (linear), message lengths in nats, rates in
nats per channel use. A RIS with M = 0 elements encodes the no-RIS variant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

__all__ = [
    "ModelError",
    "ScenarioConfig",
    "ChannelDrop",
    "RisPhase",
    "BeamformerSet",
    "DesignPoint",
    "FeasibilityReport",
    "effective_channel",
    "effective_channels_all",
    "validate_design",
    "POWER_REL_TOL",
    "RIS_ABS_TOL",
    "CAP_ABS_TOL",
]

# Feasibility tolerances (relative for power, absolute for RIS magnitude and
# the common-rate cap), consistent with interior-point solver accuracy.
POWER_REL_TOL = 1e-6
RIS_ABS_TOL = 1e-9
CAP_ABS_TOL = 1e-6


class ModelError(ValueError):
    """Inconsistent shapes or invalid model parameters."""


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a)
    out.flags.writeable = False
    return out


def _check_finite(a: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ModelError(f"{name} contains non-finite entries")


@dataclass(frozen=True)
class ScenarioConfig:
    """System constants for one scenario."""

    K: int                 # number of users
    N_bs: int              # BS antennas
    N_u: int               # antennas per user
    M: int                 # RIS elements (0 = no RIS)
    P: float               # BS power budget, watts
    sigma2: float          # noise variance, watts
    n_p: int               # private codeword length, channel uses
    n_c: int               # common codeword length, channel uses
    eps_p: float           # private decoding error target, in (0, 0.5)
    eps_c: float           # common decoding error target, in (0, 0.5)
    l: np.ndarray          # per-user message lengths, nats
    alpha: float           # latency priority weight, in [0, 1]
    eta: float = 3.0       # inverse power-amplifier efficiency (>= 1)
    P_s: float = 1.0       # static power per user, watts

    def __post_init__(self) -> None:
        if self.K < 1 or self.N_bs < 1 or self.N_u < 1 or self.M < 0:
            raise ModelError("K, N_bs, N_u must be >= 1 and M >= 0")
        if not (0.0 < self.eps_p < 0.5 and 0.0 < self.eps_c < 0.5):
            raise ModelError("error targets must lie in (0, 0.5)")
        if self.P <= 0 or self.sigma2 <= 0:
            raise ModelError("P and sigma2 must be positive")
        if self.n_p < 1 or self.n_c < 1:
            raise ModelError("codeword lengths must be >= 1")
        if not (0.0 <= self.alpha <= 1.0):
            raise ModelError("alpha must lie in [0, 1]")
        if self.eta < 1.0 or self.P_s <= 0:
            raise ModelError("eta must be >= 1 and P_s > 0")
        l = np.asarray(self.l, dtype=float).reshape(-1)
        if l.shape != (self.K,):
            raise ModelError(f"l must have length K={self.K}, got {l.shape}")
        if np.any(l <= 0):
            raise ModelError("message lengths must be positive")
        object.__setattr__(self, "l", _frozen(l))

    @property
    def N(self) -> int:
        """Streams per user: min(N_bs, N_u)."""
        return min(self.N_bs, self.N_u)


@dataclass(frozen=True)
class ChannelDrop:
    """One channel realization.

    F[k]      : direct BS->user k channel, N_u x N_bs
    G_list[k] : RIS->user k channel,       N_u x M
    G         : BS->RIS channel,           M x N_bs
    """

    F: np.ndarray        # (K, N_u, N_bs) complex
    G_list: np.ndarray   # (K, N_u, M) complex
    G: np.ndarray        # (M, N_bs) complex
    seed: int | None = None

    def __post_init__(self) -> None:
        F = np.asarray(self.F, dtype=complex)
        G_list = np.asarray(self.G_list, dtype=complex)
        G = np.asarray(self.G, dtype=complex)
        if F.ndim != 3 or G_list.ndim != 3 or G.ndim != 2:
            raise ModelError("F must be (K,N_u,N_bs), G_list (K,N_u,M), G (M,N_bs)")
        K, N_u, N_bs = F.shape
        M = G.shape[0]
        if G_list.shape != (K, N_u, M) or G.shape != (M, N_bs):
            raise ModelError(
                f"inconsistent channel shapes: F{F.shape} G_list{G_list.shape} G{G.shape}"
            )
        for name, a in (("F", F), ("G_list", G_list), ("G", G)):
            _check_finite(a, name)
        object.__setattr__(self, "F", _frozen(F))
        object.__setattr__(self, "G_list", _frozen(G_list))
        object.__setattr__(self, "G", _frozen(G))

    @property
    def K(self) -> int:
        return self.F.shape[0]

    @property
    def M(self) -> int:
        return self.G.shape[0]


@dataclass(frozen=True)
class RisPhase:
    """Per-element RIS coefficients (diagonal of the scattering matrix)."""

    psi: np.ndarray   # (M,) complex, |psi_m| <= 1

    def __post_init__(self) -> None:
        psi = np.asarray(self.psi, dtype=complex).reshape(-1)
        _check_finite(psi, "psi")
        object.__setattr__(self, "psi", _frozen(psi))

    @property
    def M(self) -> int:
        return self.psi.shape[0]

    @staticmethod
    def zeros(M: int) -> "RisPhase":
        return RisPhase(np.zeros(M, dtype=complex))

    @staticmethod
    def random_unit(M: int, rng: np.random.Generator) -> "RisPhase":
        """Unit-modulus coefficients with i.i.d. uniform phases."""
        return RisPhase(np.exp(2j * np.pi * rng.random(M)))


@dataclass(frozen=True)
class BeamformerSet:
    """Common and private transmit beamformers.

    The SDMA variant is encoded by U_common identically zero.
    """

    U_common: np.ndarray    # (N_bs, N) complex
    U_private: np.ndarray   # (K, N_bs, N) complex

    def __post_init__(self) -> None:
        Uc = np.asarray(self.U_common, dtype=complex)
        Up = np.asarray(self.U_private, dtype=complex)
        if Uc.ndim != 2 or Up.ndim != 3 or Up.shape[1:] != Uc.shape:
            raise ModelError(
                f"beamformer shapes inconsistent: common {Uc.shape}, private {Up.shape}"
            )
        _check_finite(Uc, "U_common")
        _check_finite(Up, "U_private")
        object.__setattr__(self, "U_common", _frozen(Uc))
        object.__setattr__(self, "U_private", _frozen(Up))

    @property
    def K(self) -> int:
        return self.U_private.shape[0]

    def common_power(self) -> float:
        return float(np.sum(np.abs(self.U_common) ** 2))

    def private_powers(self) -> np.ndarray:
        return np.sum(np.abs(self.U_private) ** 2, axis=(1, 2)).astype(float)

    def total_power(self) -> float:
        return self.common_power() + float(self.private_powers().sum())

    @staticmethod
    def zeros(K: int, N_bs: int, N: int) -> "BeamformerSet":
        return BeamformerSet(
            np.zeros((N_bs, N), dtype=complex), np.zeros((K, N_bs, N), dtype=complex)
        )


@dataclass(frozen=True)
class DesignPoint:
    """Full decision-variable tuple: beamformers, RIS coefficients, common-rate shares."""

    beams: BeamformerSet
    ris: RisPhase
    z: np.ndarray   # (K,) nonnegative common-rate shares, nats/use

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=float).reshape(-1)
        if z.shape[0] != self.beams.K:
            raise ModelError(f"z must have length K={self.beams.K}")
        _check_finite(z, "z")
        object.__setattr__(self, "z", _frozen(z))


def effective_channel(drop: ChannelDrop, ris: RisPhase, k: int) -> np.ndarray:
    """Composed BS->user-k channel G_k diag(psi) G + F_k.

    With M = 0 the direct channel is returned unchanged.
    """
    if not 0 <= k < drop.K:
        raise ModelError(f"user index {k} out of range for K={drop.K}")
    if ris.M != drop.M:
        raise ModelError(f"RIS size mismatch: drop M={drop.M}, psi M={ris.M}")
    if drop.M == 0:
        return drop.F[k]
    return drop.G_list[k] @ (ris.psi[:, None] * drop.G) + drop.F[k]


def effective_channels_all(drop: ChannelDrop, ris: RisPhase) -> np.ndarray:
    """Stacked effective channels for all users, shape (K, N_u, N_bs)."""
    if ris.M != drop.M:
        raise ModelError(f"RIS size mismatch: drop M={drop.M}, psi M={ris.M}")
    if drop.M == 0:
        return drop.F
    return drop.G_list @ (ris.psi[:, None] * drop.G) + drop.F


@dataclass(frozen=True)
class FeasibilityReport:
    """Pass/fail verdict with signed slacks for every constraint family.

    Positive slack = margin; negative slack = violation beyond tolerance is
    reported through the corresponding flag and `feasible`.
    """

    power_slack: float       # P - total transmit power
    z_slack: float           # min_k z_k
    cap_slack: float         # min_k r_ck - sum(z)
    ris_slack: float         # 1 - max_m |psi_m|
    power_ok: bool = field(default=True)
    z_ok: bool = field(default=True)
    cap_ok: bool = field(default=True)
    ris_ok: bool = field(default=True)

    @property
    def feasible(self) -> bool:
        return self.power_ok and self.z_ok and self.cap_ok and self.ris_ok


def validate_design(cfg: ScenarioConfig, drop: ChannelDrop, dp: DesignPoint) -> FeasibilityReport:
    """Check a design point against the power budget, share nonnegativity,
    the common-rate cap (against true rates, not surrogates), and the RIS
    magnitude cap. Always returns a report, never raises on infeasibility.
    """
    from .metrics import common_rates_all  # local import: metrics builds on model

    power_slack = cfg.P - dp.beams.total_power()
    z_slack = float(dp.z.min()) if cfg.K else 0.0
    r_c = common_rates_all(cfg, drop, dp.ris, dp.beams)
    cap_slack = float(r_c.min() - dp.z.sum())
    ris_slack = 1.0 - (float(np.abs(dp.ris.psi).max()) if dp.ris.M else 0.0)
    return FeasibilityReport(
        power_slack=power_slack,
        z_slack=z_slack,
        cap_slack=cap_slack,
        ris_slack=ris_slack,
        power_ok=power_slack >= -POWER_REL_TOL * cfg.P,
        z_ok=z_slack >= -1e-12,
        cap_ok=cap_slack >= -CAP_ABS_TOL,
        ris_ok=ris_slack >= -RIS_ABS_TOL,
    )
