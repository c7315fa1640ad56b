"""Concave quadratic lower bounds on the short-packet rates, anchored at an
expansion point, for the two alternating updates: beamformers with the RIS
frozen, and RIS coefficients with the beamformers frozen.

Each bound has the form

    r >= a + 2 Re Tr(A_own X_own^H) + sum_j 2 Re Tr(A_j X_j^H)
         - Tr(B (s2 I + sum of received covariances)),

linear in the varying quantity (beamformer blocks, or the effective channel,
which is affine in the RIS coefficients) with a Hermitian PSD quadratic
kernel B. Construction:

* log-det part: tangent of the MSE-matrix reformulation at the expansion
  point (exact and gradient-consistent);
* dispersion part: tangent of the concave square root at the anchor value g,
  followed by the sum-of-squares inequality
      Tr(W V^{-1}) >= 2 Re Tr(Vb^{-1} Yb Y^H) - Tr(Vb^{-1} Wb Vb^{-1} V)
  for W = Y Y^H with Y stacking the noise and interfering-stream blocks.

Both steps hold globally and are tight (value and gradient) at the expansion
point, so the bounds satisfy the standard majorization-minimization
requirements. The construction degenerates when a message's dispersion
anchor underflows (e.g. a zero beamformer); this is reported so the driver
can re-seed the stream.
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .model import (
    BeamformerSet,
    ChannelDrop,
    RisPhase,
    ScenarioConfig,
    effective_channels_all,
)
from .metrics import inverse_q

__all__ = [
    "G_FLOOR",
    "DegenerateExpansionError",
    "MessageSurrogate",
    "SurrogateCoefficients",
    "beam_surrogate_coefficients",
    "ris_surrogate_coefficients",
    "eval_beam_surrogate",
    "eval_ris_surrogate",
]

# Dispersion anchors below this floor make the bound coefficients diverge.
G_FLOOR = 1e-12

# Hermitian solves fall back to a jittered factorization above this condition.
_COND_LIMIT = 1e12
_JITTER_REL = 1e-12


class DegenerateExpansionError(RuntimeError):
    """The expansion point has (nearly) zero-energy streams.

    `streams` lists ("private", k) / ("common", k) entries whose dispersion
    anchor fell below the floor.
    """

    def __init__(self, streams: list[tuple[str, int]]):
        self.streams = streams
        super().__init__(f"degenerate surrogate expansion for streams {streams}")


def _hinv(A: np.ndarray, sigma2: float) -> np.ndarray:
    """Inverse of a Hermitian PD matrix with diagonal jitter on bad conditioning."""
    A = (A + A.conj().T) / 2.0
    w = np.linalg.eigvalsh(A)
    if w[0] <= 0 or w[-1] / max(w[0], 1e-300) > _COND_LIMIT:
        A = A + (_JITTER_REL * sigma2) * np.eye(A.shape[0])
    return np.linalg.inv(A)


@dataclass(frozen=True)
class MessageSurrogate:
    """Bound data for one message (the private or common stream of user k)."""

    a: float                # constant term
    A_own: np.ndarray       # (N_u, N) linear coefficient of the message's own block
    A_cross: np.ndarray     # (K, N_u, N) dispersion linear coefficients, row j
    cross_mask: np.ndarray  # (K,) bool: which j carry a cross term
    B: np.ndarray           # (N_u, N_u) Hermitian PSD quadratic kernel
    g: float                # dispersion anchor 2 Tr(signal @ total^{-1})
    include_own_cov: bool   # True if the quadratic covariance includes the own block


@dataclass(frozen=True)
class SurrogateCoefficients:
    """All per-user bound coefficients anchored at one (beams, ris) pair."""

    private: tuple[MessageSurrogate, ...]          # length K
    common: tuple[MessageSurrogate, ...] | None    # None when the common side is excluded
    H_bar: np.ndarray                              # (K, N_u, N_bs) channels at the anchor
    beams_bar: BeamformerSet
    ris_bar: RisPhase
    r_p_bar: np.ndarray                            # true private rates at the anchor
    r_c_bar: np.ndarray | None                     # true common rates at the anchor


def _build(
    cfg: ScenarioConfig,
    drop: ChannelDrop,
    ris: RisPhase,
    beams: BeamformerSet,
    include_common: bool,
) -> SurrogateCoefficients:
    K, N_u = cfg.K, cfg.N_u
    s2 = cfg.sigma2
    eye = np.eye(N_u)
    H = effective_channels_all(drop, ris)
    Xp = np.einsum("kub,jbn->kjun", H, beams.U_private)
    T = np.einsum("kjun,kjvn->kjuv", Xp, Xp.conj())
    T_sum = T.sum(axis=1)
    Xc = H @ beams.U_common
    S_c = np.einsum("kun,kvn->kuv", Xc, Xc.conj())

    q_p = inverse_q(cfg.eps_p)
    q_c = inverse_q(cfg.eps_c)

    degenerate: list[tuple[str, int]] = []
    g_p = np.empty(K)
    g_c = np.empty(K)
    Vinv_p: list[np.ndarray] = []
    Vinv_c: list[np.ndarray] = []
    Winv_p: list[np.ndarray] = []
    for k in range(K):
        V = s2 * eye + T_sum[k]
        W = V - T[k, k]
        Vi = _hinv(V, s2)
        Vinv_p.append(Vi)
        Winv_p.append(_hinv(W, s2))
        g_p[k] = max(2.0 * float(np.real(np.trace(Vi @ T[k, k]))), 0.0)
        if g_p[k] < G_FLOOR:
            degenerate.append(("private", k))
        if include_common:
            Vc = V + S_c[k]
            Vci = _hinv(Vc, s2)
            Vinv_c.append(Vci)
            g_c[k] = max(2.0 * float(np.real(np.trace(Vci @ S_c[k]))), 0.0)
            if g_c[k] < G_FLOOR:
                degenerate.append(("common", k))
    if degenerate:
        raise DegenerateExpansionError(degenerate)

    priv: list[MessageSurrogate] = []
    comm: list[MessageSurrogate] = []
    r_p_bar = np.empty(K)
    r_c_bar = np.empty(K) if include_common else None
    all_mask = np.ones(K, dtype=bool)
    for k in range(K):
        Vi, Wi = Vinv_p[k], Winv_p[k]
        V = s2 * eye + T_sum[k]
        W = V - T[k, k]
        # private message
        C = Wi @ T[k, k]
        logdet = float(np.linalg.slogdet(eye + C)[1])
        D = q_p / np.sqrt(cfg.n_p * g_p[k])
        a = (
            logdet
            - float(np.real(np.trace(C)))
            - q_p / (2.0 * np.sqrt(cfg.n_p)) * np.sqrt(g_p[k])
            - D * (N_u - 2.0 * s2 * float(np.real(np.trace(Vi))))
        )
        A_own = Wi @ H[k] @ beams.U_private[k]
        A_cross = D * np.einsum("uv,jvn->jun", Vi, Xp[k])
        mask = all_mask.copy()
        mask[k] = False
        B = Wi - Vi + D * (Vi @ W @ Vi)
        B = (B + B.conj().T) / 2.0
        priv.append(
            MessageSurrogate(
                a=a, A_own=A_own, A_cross=A_cross, cross_mask=mask, B=B,
                g=float(g_p[k]), include_own_cov=False,
            )
        )
        r_p_bar[k] = logdet - q_p * np.sqrt(g_p[k] / cfg.n_p)

        if include_common:
            Vci = Vinv_c[k]
            Cc = Vi @ S_c[k]   # the common message sees all private streams as interference
            logdet_c = float(np.linalg.slogdet(eye + Cc)[1])
            Dc = q_c / np.sqrt(cfg.n_c * g_c[k])
            a_c = (
                logdet_c
                - float(np.real(np.trace(Cc)))
                - q_c / (2.0 * np.sqrt(cfg.n_c)) * np.sqrt(g_c[k])
                - Dc * (N_u - 2.0 * s2 * float(np.real(np.trace(Vci))))
            )
            A_c_own = Vi @ H[k] @ beams.U_common
            A_c_cross = Dc * np.einsum("uv,jvn->jun", Vci, Xp[k])
            B_c = Vi - Vci + Dc * (Vci @ V @ Vci)
            B_c = (B_c + B_c.conj().T) / 2.0
            comm.append(
                MessageSurrogate(
                    a=a_c, A_own=A_c_own, A_cross=A_c_cross, cross_mask=all_mask, B=B_c,
                    g=float(g_c[k]), include_own_cov=True,
                )
            )
            r_c_bar[k] = logdet_c - q_c * np.sqrt(g_c[k] / cfg.n_c)

    return SurrogateCoefficients(
        private=tuple(priv),
        common=tuple(comm) if include_common else None,
        H_bar=H,
        beams_bar=beams,
        ris_bar=ris,
        r_p_bar=r_p_bar,
        r_c_bar=r_c_bar,
    )


def beam_surrogate_coefficients(
    cfg: ScenarioConfig,
    drop: ChannelDrop,
    ris_fixed: RisPhase,
    beams_prev: BeamformerSet,
    include_common: bool = True,
) -> SurrogateCoefficients:
    """Bound coefficients for the beamformer update, RIS frozen at `ris_fixed`."""
    return _build(cfg, drop, ris_fixed, beams_prev, include_common)


def ris_surrogate_coefficients(
    cfg: ScenarioConfig,
    drop: ChannelDrop,
    beams_fixed: BeamformerSet,
    ris_prev: RisPhase,
    include_common: bool = True,
) -> SurrogateCoefficients:
    """Bound coefficients for the RIS update, beamformers frozen at `beams_fixed`.

    Same coefficient algebra as the beamformer side; the bounds are then
    functions of the RIS coefficients through the effective channel.
    """
    return _build(cfg, drop, ris_prev, beams_fixed, include_common)


def _select(co: SurrogateCoefficients, kind: str, k: int) -> MessageSurrogate:
    if kind == "private":
        return co.private[k]
    if kind == "common":
        if co.common is None:
            raise ValueError("common-message surrogate was not built")
        return co.common[k]
    raise ValueError(f"kind must be 'private' or 'common', got {kind!r}")


def _eval_at(
    ms: MessageSurrogate,
    sigma2: float,
    H: np.ndarray,
    own_block: np.ndarray,
    private_blocks: np.ndarray,
) -> float:
    """Evaluate one bound for given channel/beamformer values."""
    val = ms.a + 2.0 * float(np.real(np.trace(ms.A_own @ own_block.conj().T @ H.conj().T)))
    for j in np.flatnonzero(ms.cross_mask):
        val += 2.0 * float(
            np.real(np.trace(ms.A_cross[j] @ private_blocks[j].conj().T @ H.conj().T))
        )
    cov = sigma2 * np.eye(H.shape[0]) + np.einsum(
        "jun,jvn->uv", H @ private_blocks, (H @ private_blocks).conj()
    )
    if ms.include_own_cov:
        Xo = H @ own_block
        cov = cov + Xo @ Xo.conj().T
    val -= float(np.real(np.trace(ms.B @ cov)))
    return val


def eval_beam_surrogate(
    co: SurrogateCoefficients,
    ris_fixed: RisPhase,
    beams: BeamformerSet,
    kind: str,
    k: int,
    sigma2: float,
) -> float:
    """Bound value at `beams` with the RIS frozen at the anchor.

    Equals the true rate when `beams` is the expansion point.
    """
    ms = _select(co, kind, k)
    own = beams.U_common if kind == "common" else beams.U_private[k]
    return _eval_at(ms, sigma2, co.H_bar[k], own, beams.U_private)


def eval_ris_surrogate(
    co: SurrogateCoefficients,
    beams_fixed: BeamformerSet,
    ris: RisPhase,
    kind: str,
    k: int,
    sigma2: float,
    drop: ChannelDrop,
) -> float:
    """Bound value at RIS coefficients `ris` with beamformers frozen at the anchor."""
    from .model import effective_channel

    ms = _select(co, kind, k)
    H = effective_channel(drop, ris, k)
    own = beams_fixed.U_common if kind == "common" else beams_fixed.U_private[k]
    return _eval_at(ms, sigma2, H, own, beams_fixed.U_private)
