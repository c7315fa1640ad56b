"""Second-order-cone reformulations of the two alternating updates and a
pluggable interior-point solver adapter.

The beamformer update minimizes alpha*d - (1-alpha)*e over beamformers and
common-rate shares z subject to the power budget, the surrogate common-rate
cap, per-user epigraph rate floors, delay hyperbolic constraints
l_k <= d*t_k, and the quadratic-transform energy-efficiency constraints
2*lam_k*u_k - lam_k^2*p_k >= e. The RIS update does the same over the RIS
coefficients with |psi_m| <= 1 per element and e entering linearly (powers
are constants there).

Surrogate quadratic terms Tr(B(s2 I + sum_b cov_b)) are encoded as stacked
Frobenius norms ||L^H H U_b||_F^2 with B = L L^H (Cholesky with jitter
escalation), each inside a rotated second-order cone.

Programs are expressed in a small intermediate form (`ConicProgram`):
variable blocks, a linear objective, and constraints tagged nonneg / zero /
soc / rsoc over rows E = A x + b. `solve_conic` lowers that canonical form
to any conforming conic solver; the bundled adapter targets Clarabel
(rotated cones are rotated into plain SOCs). Clarabel's Python API has no
warm start, so the program's warm-start hint is currently ignored.

Complex variables are realified as stacked real/imaginary column-major
blocks; Hermitian quadratic forms become real quadratic forms of doubled
dimension.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
import numpy as np
from scipy import sparse

from .model import BeamformerSet, ChannelDrop, RisPhase, ScenarioConfig
from .metrics import powers_all
from .surrogates import MessageSurrogate, SurrogateCoefficients

__all__ = [
    "T_MIN",
    "ConicProgram",
    "Constraint",
    "SubproblemSolution",
    "build_beam_subproblem",
    "build_ris_subproblem",
    "solve_conic",
    "constraint_values",
    "constraint_violation",
]

# Rate floor keeping l_k / t_k <= d representable; drops where no feasible
# rate reaches it are flagged infeasible.
T_MIN = 1e-9

_SOLVER_TOL_GAP_REL = 1e-8
_SOLVER_TOL_FEAS = 1e-7


@dataclass(frozen=True)
class Constraint:
    """Rows E = A x + b belonging to one cone.

    kind: "zero" (E == 0), "nonneg" (E >= 0 elementwise),
    "soc" (E[0] >= ||E[1:]||), "rsoc" (2 E[0] E[1] >= ||E[2:]||^2, E[0,1] >= 0).
    """

    kind: str
    A: np.ndarray
    b: np.ndarray
    name: str = ""

    @property
    def dim(self) -> int:
        return self.b.shape[0]


@dataclass
class ConicProgram:
    """Canonical conic form: minimize c@x subject to tagged cone constraints."""

    n: int
    blocks: dict[str, tuple[int, int]]       # name -> (offset, size)
    c: np.ndarray
    constraints: list[Constraint]
    meta: dict = field(default_factory=dict)
    warm_start: np.ndarray | None = None

    def block_slice(self, name: str) -> slice:
        off, size = self.blocks[name]
        return slice(off, off + size)

    def validate(self) -> None:
        for con in self.constraints:
            if con.dim < 1:
                raise ValueError(f"constraint {con.name!r} has empty cone")
            if con.A.shape != (con.dim, self.n):
                raise ValueError(f"constraint {con.name!r} width mismatch")
            if con.kind not in ("zero", "nonneg", "soc", "rsoc"):
                raise ValueError(f"unknown cone kind {con.kind!r}")
            if con.kind == "rsoc" and con.dim < 3:
                raise ValueError(f"rotated cone {con.name!r} needs dim >= 3")


@dataclass(frozen=True)
class SubproblemSolution:
    """Solver output mapped back to model quantities."""

    status: str                      # optimal | near-optimal | infeasible | numerical-failure
    objective: float
    beams: BeamformerSet | None
    ris: RisPhase | None
    z: np.ndarray | None
    t: np.ndarray | None
    u: np.ndarray | None
    d: float | None
    e: float | None
    x: np.ndarray | None
    iterations: int = 0
    solve_time: float = 0.0

    @property
    def usable(self) -> bool:
        return self.status in ("optimal", "near-optimal")


# ---------------------------------------------------------------------------
# realification helpers

def _cvec(M: np.ndarray) -> np.ndarray:
    """Column-major [Re; Im] stacking of a complex matrix."""
    v = np.asarray(M).ravel(order="F")
    return np.concatenate([v.real, v.imag])


def _lmul_rows(P: np.ndarray, ncols: int) -> np.ndarray:
    """Realified matrix of the map U -> P @ U on a realified block.

    Rows are [Re vec(PU); Im vec(PU)], columns [Re vec(U); Im vec(U)].
    """
    Kr = np.kron(np.eye(ncols), P.real)
    Ki = np.kron(np.eye(ncols), P.imag)
    return np.block([[Kr, -Ki], [Ki, Kr]])


def _inner_coeff(G: np.ndarray) -> np.ndarray:
    """Coefficient row of U -> 2 Re Tr(U^H G) on a realified block."""
    v = np.asarray(G).ravel(order="F")
    return np.concatenate([2.0 * v.real, 2.0 * v.imag])


def _psd_cholesky(B: np.ndarray) -> np.ndarray:
    """Cholesky factor of a PSD-up-to-roundoff Hermitian matrix.

    Jitter escalates from 1e-12 to 1e-9 relative to the trace scale.
    """
    n = B.shape[0]
    scale = max(float(np.real(np.trace(B))) / n, 1e-300)
    for jit in (0.0, 1e-12 * scale, 1e-10 * scale, 1e-9 * scale):
        try:
            return np.linalg.cholesky(B + jit * np.eye(n))
        except np.linalg.LinAlgError:
            continue
    w, Q = np.linalg.eigh((B + B.conj().T) / 2.0)
    return Q @ np.diag(np.sqrt(np.clip(w, 0.0, None)))


# ---------------------------------------------------------------------------
# program builders

class _Layout:
    """Variable-block bookkeeping during program construction."""

    def __init__(self) -> None:
        self.blocks: dict[str, tuple[int, int]] = {}
        self.n = 0

    def add(self, name: str, size: int) -> None:
        self.blocks[name] = (self.n, size)
        self.n += size

    def sl(self, name: str) -> slice:
        off, size = self.blocks[name]
        return slice(off, off + size)

    def __contains__(self, name: str) -> bool:
        return name in self.blocks


def _lin_row_beam(
    lay: _Layout, ms: MessageSurrogate, H: np.ndarray, own_block: str, K: int
) -> np.ndarray:
    """Row of the bound's linear beamformer terms (2 Re Tr(A . U^H H^H))."""
    row = np.zeros(lay.n)
    row[lay.sl(own_block)] += _inner_coeff(H.conj().T @ ms.A_own)
    for j in np.flatnonzero(ms.cross_mask):
        row[lay.sl(f"U{j}")] += _inner_coeff(H.conj().T @ ms.A_cross[j])
    return row


def build_beam_subproblem(
    cfg: ScenarioConfig,
    drop: ChannelDrop,
    ris_fixed: RisPhase,
    co: SurrogateCoefficients,
    lam: np.ndarray,
    t_min: float = T_MIN,
) -> ConicProgram:
    """Conic program for the beamformer / rate-share update.

    SDMA (no common surrogate in `co`) omits the common block and pins all z
    to zero. If the anchor's worst common rate is negative the cap cannot be
    met by any z > 0, so the common stream is silenced for this iteration
    (z pinned to zero, cap dropped).
    """
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.shape != (cfg.K,) or np.any(lam < 0):
        raise ValueError("lam must be a nonnegative vector of length K")
    K, N_bs, N = cfg.K, cfg.N_bs, cfg.N
    sdma = co.common is None
    silence = (not sdma) and bool(np.min(co.r_c_bar) < 0)
    z_active = (not sdma) and (not silence)
    include_d = cfg.alpha > 0
    include_e = cfg.alpha < 1
    bsize = 2 * N_bs * N

    lay = _Layout()
    if not sdma:
        lay.add("Uc", bsize)
    for k in range(K):
        lay.add(f"U{k}", bsize)
    if z_active:
        lay.add("z", K)
    lay.add("t", K)
    if include_e:
        lay.add("u", K)
    if include_d:
        lay.add("d", 1)
    if include_e:
        lay.add("e", 1)
    lay.add("qp", K)
    if z_active:
        lay.add("qc", K)

    n = lay.n
    c = np.zeros(n)
    if include_d:
        c[lay.sl("d")] = cfg.alpha
    if include_e:
        c[lay.sl("e")] = -(1.0 - cfg.alpha)

    cons: list[Constraint] = []
    beam_blocks = ([] if sdma else ["Uc"]) + [f"U{k}" for k in range(K)]

    # power budget: ||all beamformer entries||^2 <= P
    dim = 2 + bsize * len(beam_blocks)
    A = np.zeros((dim, n))
    b = np.zeros(dim)
    b[0] = cfg.P / 2.0
    b[1] = 1.0
    r = 2
    for name in beam_blocks:
        A[r : r + bsize, lay.sl(name)] = np.eye(bsize)
        r += bsize
    cons.append(Constraint("rsoc", A, b, "power"))

    # nonnegativity / floors
    if z_active:
        A = np.zeros((K, n))
        A[:, lay.sl("z")] = np.eye(K)
        cons.append(Constraint("nonneg", A, np.zeros(K), "z>=0"))
    A = np.zeros((K, n))
    A[:, lay.sl("t")] = np.eye(K)
    cons.append(Constraint("nonneg", A, -t_min * np.ones(K), "t>=t_min"))
    if include_e:
        A = np.zeros((K, n))
        A[:, lay.sl("u")] = np.eye(K)
        cons.append(Constraint("nonneg", A, np.zeros(K), "u>=0"))

    rows_cap = np.zeros((K, n)) if z_active else None
    b_cap = np.zeros(K)
    rows_floor = np.zeros((K, n))
    b_floor = np.zeros(K)

    for k in range(K):
        H = co.H_bar[k]
        ms_p = co.private[k]
        L_p = _psd_cholesky(ms_p.B)
        PH = L_p.conj().T @ H

        # q_pk >= sum_j ||L_p^H H U_j||_F^2
        stack = 2 * cfg.N_u * N
        dim = 2 + K * stack
        A = np.zeros((dim, n))
        b = np.zeros(dim)
        A[0, lay.sl("qp").start + k] = 1.0
        b[1] = 0.5
        r = 2
        for j in range(K):
            A[r : r + stack, lay.sl(f"U{j}")] = _lmul_rows(PH, N)
            r += stack
        cons.append(Constraint("rsoc", A, b, f"qp{k}"))

        # private-rate epigraph: a + lin + z_k - s2 TrB - q_pk - t_k >= 0
        row = _lin_row_beam(lay, ms_p, H, f"U{k}", K)
        row[lay.sl("qp").start + k] = -1.0
        row[lay.sl("t").start + k] = -1.0
        if z_active:
            row[lay.sl("z").start + k] = 1.0
        rows_floor[k] = row
        b_floor[k] = ms_p.a - cfg.sigma2 * float(np.real(np.trace(ms_p.B)))

        if z_active:
            ms_c = co.common[k]
            L_c = _psd_cholesky(ms_c.B)
            PHc = L_c.conj().T @ H
            dim = 2 + (K + 1) * stack
            A = np.zeros((dim, n))
            b = np.zeros(dim)
            A[0, lay.sl("qc").start + k] = 1.0
            b[1] = 0.5
            r = 2
            A[r : r + stack, lay.sl("Uc")] = _lmul_rows(PHc, N)
            r += stack
            for j in range(K):
                A[r : r + stack, lay.sl(f"U{j}")] = _lmul_rows(PHc, N)
                r += stack
            cons.append(Constraint("rsoc", A, b, f"qc{k}"))

            # common cap: a_c + lin_c - s2 TrB_c - q_ck - sum(z) >= 0
            row = _lin_row_beam(lay, ms_c, H, "Uc", K)
            row[lay.sl("qc").start + k] = -1.0
            row[lay.sl("z")] -= 1.0
            rows_cap[k] = row
            b_cap[k] = ms_c.a - cfg.sigma2 * float(np.real(np.trace(ms_c.B)))

        # u_k^2 <= surrogate rate (+ share): rotated cone on the same affine expr
        if include_e:
            s_row = rows_floor[k].copy()
            s_row[lay.sl("t").start + k] = 0.0   # without the -t_k term
            A = np.zeros((3, n))
            b = np.zeros(3)
            A[0] = s_row
            b[0] = b_floor[k]
            b[1] = 0.5
            A[2, lay.sl("u").start + k] = 1.0
            cons.append(Constraint("rsoc", A, b, f"u{k}"))

        if include_d:
            A = np.zeros((3, n))
            b = np.zeros(3)
            A[0, lay.sl("d")] = 0.5
            A[1, lay.sl("t").start + k] = 1.0
            b[2] = np.sqrt(cfg.l[k])
            cons.append(Constraint("rsoc", A, b, f"delay{k}"))

        if include_e:
            # e <= 2 lam u_k - lam^2 p_k(U), p_k = P_s + eta||U_k||^2 + (eta/K)||Uc||^2
            lk = lam[k]
            dim = 2 + bsize * (1 if sdma else 2)
            A = np.zeros((dim, n))
            b = np.zeros(dim)
            A[0, lay.sl("u").start + k] = 2.0 * lk
            A[0, lay.sl("e")] = -1.0
            b[0] = -(lk ** 2) * cfg.P_s
            b[1] = 0.5
            r = 2
            A[r : r + bsize, lay.sl(f"U{k}")] = lk * np.sqrt(cfg.eta) * np.eye(bsize)
            r += bsize
            if not sdma:
                A[r : r + bsize, lay.sl("Uc")] = lk * np.sqrt(cfg.eta / K) * np.eye(bsize)
            cons.append(Constraint("rsoc", A, b, f"ee{k}"))

    cons.append(Constraint("nonneg", rows_floor, b_floor, "rate_floor"))
    if z_active:
        cons.append(Constraint("nonneg", rows_cap, b_cap, "common_cap"))

    prog = ConicProgram(
        n=n,
        blocks=dict(lay.blocks),
        c=c,
        constraints=cons,
        meta={
            "kind": "beam",
            "K": K,
            "N_bs": N_bs,
            "N": N,
            "M": drop.M,
            "sdma": sdma,
            "silenced": silence,
            "z_active": z_active,
            "include_d": include_d,
            "include_e": include_e,
        },
    )
    prog.validate()
    return prog


def _psi_affine_rows(
    lay: _Layout,
    P: np.ndarray,
    G_k: np.ndarray,
    G: np.ndarray,
    F_k: np.ndarray,
    U: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Realified rows of psi -> vec(P (G_k diag(psi) G + F_k) U)."""
    M = G.shape[0]
    left = P @ G_k          # (rows, M)
    right = G @ U           # (M, N)
    off = _cvec(P @ F_k @ U)
    rows = np.zeros((off.shape[0], lay.n))
    if M:
        cols = np.empty((left.shape[0] * right.shape[1], M), dtype=complex)
        for m in range(M):
            cols[:, m] = np.kron(right[m, :], left[:, m])
        sl = lay.sl("psi")
        half = off.shape[0] // 2
        rows[:half, sl.start : sl.start + M] = cols.real
        rows[:half, sl.start + M : sl.stop] = -cols.imag
        rows[half:, sl.start : sl.start + M] = cols.imag
        rows[half:, sl.start + M : sl.stop] = cols.real
    return rows, off


def _psi_lin_row(
    lay: _Layout,
    A_coeff: np.ndarray,
    U: np.ndarray,
    G_k: np.ndarray,
    G: np.ndarray,
    F_k: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Row and constant of psi -> 2 Re Tr(A_coeff U^H H(psi)^H)."""
    const = 2.0 * float(np.real(np.trace(A_coeff @ U.conj().T @ F_k.conj().T)))
    row = np.zeros(lay.n)
    M = G.shape[0]
    if M:
        cvec = np.einsum("mu,un,nm->m", G_k.conj().T, A_coeff @ U.conj().T, G.conj().T)
        sl = lay.sl("psi")
        row[sl.start : sl.start + M] = 2.0 * cvec.real
        row[sl.start + M : sl.stop] = 2.0 * cvec.imag
    return row, const


def build_ris_subproblem(
    cfg: ScenarioConfig,
    drop: ChannelDrop,
    beams_fixed: BeamformerSet,
    co: SurrogateCoefficients,
    t_min: float = T_MIN,
) -> ConicProgram:
    """Conic program for the RIS-coefficient / rate-share update.

    Per-user powers are constants here, so the EE constraint is linear.
    With M = 0 the program has no psi variables and re-optimizes shares only.
    """
    K, M = cfg.K, drop.M
    sdma = co.common is None
    silence = (not sdma) and bool(np.min(co.r_c_bar) < 0)
    z_active = (not sdma) and (not silence)
    include_d = cfg.alpha > 0
    include_e = cfg.alpha < 1

    lay = _Layout()
    if M:
        lay.add("psi", 2 * M)
    if z_active:
        lay.add("z", K)
    lay.add("t", K)
    if include_d:
        lay.add("d", 1)
    if include_e:
        lay.add("e", 1)
    lay.add("qp", K)
    if z_active:
        lay.add("qc", K)

    n = lay.n
    c = np.zeros(n)
    if include_d:
        c[lay.sl("d")] = cfg.alpha
    if include_e:
        c[lay.sl("e")] = -(1.0 - cfg.alpha)

    p_bar = powers_all(cfg, beams_fixed)
    cons: list[Constraint] = []

    if M:
        sl = lay.sl("psi")
        for m in range(M):
            A = np.zeros((3, n))
            b = np.zeros(3)
            b[0] = 1.0
            A[1, sl.start + m] = 1.0
            A[2, sl.start + M + m] = 1.0
            cons.append(Constraint("soc", A, b, f"psi{m}"))

    if z_active:
        A = np.zeros((K, n))
        A[:, lay.sl("z")] = np.eye(K)
        cons.append(Constraint("nonneg", A, np.zeros(K), "z>=0"))
    A = np.zeros((K, n))
    A[:, lay.sl("t")] = np.eye(K)
    cons.append(Constraint("nonneg", A, -t_min * np.ones(K), "t>=t_min"))

    rows_cap = np.zeros((K, n)) if z_active else None
    b_cap = np.zeros(K)
    rows_floor = np.zeros((K, n))
    b_floor = np.zeros(K)
    rows_ee = np.zeros((K, n)) if include_e else None
    b_ee = np.zeros(K)

    for k in range(K):
        G_k, F_k = drop.G_list[k], drop.F[k]
        ms_p = co.private[k]
        L_p = _psd_cholesky(ms_p.B)
        P_p = L_p.conj().T

        blocks = [beams_fixed.U_private[j] for j in range(K)]
        stack = 2 * cfg.N_u * cfg.N
        dim = 2 + K * stack
        A = np.zeros((dim, n))
        b = np.zeros(dim)
        A[0, lay.sl("qp").start + k] = 1.0
        b[1] = 0.5
        r = 2
        for U in blocks:
            rows, off = _psi_affine_rows(lay, P_p, G_k, drop.G, F_k, U)
            A[r : r + stack] = rows
            b[r : r + stack] = off
            r += stack
        cons.append(Constraint("rsoc", A, b, f"qp{k}"))

        row, const = _psi_lin_row(
            lay, ms_p.A_own, beams_fixed.U_private[k], G_k, drop.G, F_k
        )
        total_const = ms_p.a + const - cfg.sigma2 * float(np.real(np.trace(ms_p.B)))
        for j in np.flatnonzero(ms_p.cross_mask):
            rj, cj = _psi_lin_row(
                lay, ms_p.A_cross[j], beams_fixed.U_private[j], G_k, drop.G, F_k
            )
            row += rj
            total_const += cj
        row[lay.sl("qp").start + k] = -1.0
        if z_active:
            row[lay.sl("z").start + k] = 1.0
        s_row, s_const = row.copy(), total_const
        row = row.copy()
        row[lay.sl("t").start + k] = -1.0
        rows_floor[k] = row
        b_floor[k] = total_const

        if include_e:
            ee_row = s_row.copy()
            ee_row[lay.sl("e")] = -p_bar[k]
            rows_ee[k] = ee_row
            b_ee[k] = s_const

        if z_active:
            ms_c = co.common[k]
            L_c = _psd_cholesky(ms_c.B)
            P_c = L_c.conj().T
            dim = 2 + (K + 1) * stack
            A = np.zeros((dim, n))
            b = np.zeros(dim)
            A[0, lay.sl("qc").start + k] = 1.0
            b[1] = 0.5
            r = 2
            for U in [beams_fixed.U_common] + blocks:
                rows, off = _psi_affine_rows(lay, P_c, G_k, drop.G, F_k, U)
                A[r : r + stack] = rows
                b[r : r + stack] = off
                r += stack
            cons.append(Constraint("rsoc", A, b, f"qc{k}"))

            row, const = _psi_lin_row(
                lay, ms_c.A_own, beams_fixed.U_common, G_k, drop.G, F_k
            )
            cap_const = ms_c.a + const - cfg.sigma2 * float(np.real(np.trace(ms_c.B)))
            for j in range(K):
                rj, cj = _psi_lin_row(
                    lay, ms_c.A_cross[j], beams_fixed.U_private[j], G_k, drop.G, F_k
                )
                row += rj
                cap_const += cj
            row[lay.sl("qc").start + k] = -1.0
            row[lay.sl("z")] -= 1.0
            rows_cap[k] = row
            b_cap[k] = cap_const

        if include_d:
            A = np.zeros((3, n))
            b = np.zeros(3)
            A[0, lay.sl("d")] = 0.5
            A[1, lay.sl("t").start + k] = 1.0
            b[2] = np.sqrt(cfg.l[k])
            cons.append(Constraint("rsoc", A, b, f"delay{k}"))

    cons.append(Constraint("nonneg", rows_floor, b_floor, "rate_floor"))
    if include_e:
        cons.append(Constraint("nonneg", rows_ee, b_ee, "ee"))
    if z_active:
        cons.append(Constraint("nonneg", rows_cap, b_cap, "common_cap"))

    prog = ConicProgram(
        n=n,
        blocks=dict(lay.blocks),
        c=c,
        constraints=cons,
        meta={
            "kind": "ris",
            "K": K,
            "N_bs": cfg.N_bs,
            "N": cfg.N,
            "M": M,
            "sdma": sdma,
            "silenced": silence,
            "z_active": z_active,
            "include_d": include_d,
            "include_e": include_e,
        },
    )
    prog.validate()
    return prog


# ---------------------------------------------------------------------------
# solver adapter

def constraint_values(prog: ConicProgram, x: np.ndarray) -> list[np.ndarray]:
    """Cone expressions E = A x + b for each constraint."""
    return [con.A @ x + con.b for con in prog.constraints]


def constraint_violation(prog: ConicProgram, x: np.ndarray) -> float:
    """Worst violation across all cones (0 when feasible)."""
    worst = 0.0
    for con, E in zip(prog.constraints, constraint_values(prog, x)):
        if con.kind == "zero":
            v = float(np.max(np.abs(E)))
        elif con.kind == "nonneg":
            v = float(np.max(-E, initial=0.0))
        elif con.kind == "soc":
            v = float(np.linalg.norm(E[1:]) - E[0])
        else:
            v = max(
                float(np.sum(E[2:] ** 2) - 2.0 * E[0] * E[1]),
                float(-min(E[0], E[1])),
            )
        worst = max(worst, v)
    return worst


def _lower_rows(con: Constraint) -> tuple[np.ndarray, np.ndarray]:
    """Rows for the solver's (A, b) with rsoc rotated into a plain SOC."""
    if con.kind != "rsoc":
        return con.A, con.b
    A = con.A.copy()
    b = con.b.copy()
    s = 1.0 / np.sqrt(2.0)
    A0, A1 = con.A[0].copy(), con.A[1].copy()
    b0, b1 = con.b[0], con.b[1]
    A[0], b[0] = s * (A0 + A1), s * (b0 + b1)
    A[1], b[1] = s * (A0 - A1), s * (b0 - b1)
    return A, b


def solve_conic(prog: ConicProgram, max_iter: int = 200) -> SubproblemSolution:
    """Solve a program with the Clarabel interior-point backend.

    Never raises on solver breakdown; failures surface through the status.
    """
    import clarabel

    order = {"zero": 0, "nonneg": 1, "soc": 2, "rsoc": 2}
    cons = sorted(range(len(prog.constraints)), key=lambda i: order[prog.constraints[i].kind])
    A_rows, b_rows, cones = [], [], []
    for i in cons:
        con = prog.constraints[i]
        A, b = _lower_rows(con)
        A_rows.append(-A)
        b_rows.append(b)
        if con.kind == "zero":
            cones.append(clarabel.ZeroConeT(con.dim))
        elif con.kind == "nonneg":
            cones.append(clarabel.NonnegativeConeT(con.dim))
        else:
            cones.append(clarabel.SecondOrderConeT(con.dim))

    A_cl = sparse.csc_matrix(np.vstack(A_rows))
    b_cl = np.concatenate(b_rows)
    P = sparse.csc_matrix((prog.n, prog.n))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.tol_gap_rel = _SOLVER_TOL_GAP_REL
    settings.tol_gap_abs = 1e-10
    settings.tol_feas = _SOLVER_TOL_FEAS

    t0 = time.perf_counter()
    try:
        solver = clarabel.DefaultSolver(P, prog.c, A_cl, b_cl, cones, settings)
        sol = solver.solve()
        status_raw = str(sol.status)
        iters = int(getattr(sol, "iterations", 0))
        x = np.asarray(sol.x, dtype=float)
    except Exception:
        return SubproblemSolution(
            status="numerical-failure", objective=np.nan, beams=None, ris=None,
            z=None, t=None, u=None, d=None, e=None, x=None,
            solve_time=time.perf_counter() - t0,
        )
    elapsed = time.perf_counter() - t0

    if status_raw == "Solved":
        status = "optimal"
    elif status_raw in ("AlmostSolved", "MaxIterations", "MaxTime", "InsufficientProgress"):
        status = "near-optimal" if status_raw == "AlmostSolved" else "numerical-failure"
    elif "Infeasible" in status_raw:
        status = "infeasible"
    else:
        status = "numerical-failure"

    if status not in ("optimal", "near-optimal"):
        return SubproblemSolution(
            status=status, objective=np.nan, beams=None, ris=None, z=None, t=None,
            u=None, d=None, e=None, x=None, iterations=iters, solve_time=elapsed,
        )
    return _extract(prog, x, status, float(prog.c @ x), iters, elapsed)


def _complex_block(x: np.ndarray, prog: ConicProgram, name: str, rows: int, cols: int) -> np.ndarray:
    v = x[prog.block_slice(name)]
    half = v.shape[0] // 2
    return (v[:half] + 1j * v[half:]).reshape((rows, cols), order="F")


def _extract(
    prog: ConicProgram, x: np.ndarray, status: str, objective: float,
    iters: int, elapsed: float,
) -> SubproblemSolution:
    m = prog.meta
    K, N_bs, N, M = m["K"], m["N_bs"], m["N"], m["M"]
    beams = ris = None
    if m["kind"] == "beam":
        Uc = (
            _complex_block(x, prog, "Uc", N_bs, N)
            if "Uc" in prog.blocks
            else np.zeros((N_bs, N), dtype=complex)
        )
        Up = np.stack([_complex_block(x, prog, f"U{k}", N_bs, N) for k in range(K)])
        beams = BeamformerSet(Uc, Up)
    else:
        psi = (
            _complex_block(x, prog, "psi", M, 1).ravel()
            if "psi" in prog.blocks
            else np.zeros(M, dtype=complex)
        )
        ris = RisPhase(psi)
    z = (
        np.maximum(x[prog.block_slice("z")], 0.0)
        if m["z_active"]
        else np.zeros(K)
    )
    t = x[prog.block_slice("t")].copy() if "t" in prog.blocks else None
    u = x[prog.block_slice("u")].copy() if "u" in prog.blocks else None
    d = float(x[prog.block_slice("d")][0]) if "d" in prog.blocks else None
    e = float(x[prog.block_slice("e")][0]) if "e" in prog.blocks else None
    return SubproblemSolution(
        status=status, objective=objective, beams=beams, ris=ris, z=z, t=t, u=u,
        d=d, e=e, x=x, iterations=iters, solve_time=elapsed,
    )
