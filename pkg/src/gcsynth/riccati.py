"""Multiplier-scaled game Riccati equation, gain and guaranteed cost.

For the loop-shifted system, the outputs and disturbance inputs are stacked
as

    C_tau = [R^{1/2}; 0; sqrt(tau_j) C1_j ...; C2check_i ...]
    D_tau = [0; G^{1/2}; sqrt(tau_j) D1_j ...; D2check_i ...]
    B_tau = [B1_j / sqrt(tau_j) ..., B2check_i ...]

and the stabilizing solution ``X`` of

    Ac' X + X Ac + X (B_tau B_tau' - B2 G_tau^{-1} B2') X + C_tau' (I - D_tau G_tau^{-1} D_tau') C_tau = 0,
    Ac = Acheck - B2 G_tau^{-1} D_tau' C_tau,  G_tau = D_tau' D_tau

gives ``K = -G_tau^{-1} (B2' X + D_tau' C_tau)`` and the bound
``x0' X x0 + sum_j tau_j x0' S_j x0 + sum_i x0' S_i(lambda_i) x0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .augment import MultiplierPoint
from .errors import GtauSingular, NoStabilizingSolution, XNotPSD
from .linalg import frozen, min_eig, solve_game_are, sym_power
from .loopshift import CheckSystem

__all__ = ["TauSystem", "Diagnostics", "SynthesisResult", "assemble", "synthesize", "cost_bound"]

PSD_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TauSystem:
    Ctau: np.ndarray
    Dtau: np.ndarray
    Gtau: np.ndarray
    B2tau: np.ndarray
    point: Optional[MultiplierPoint] = None


@dataclass(frozen=True, eq=False)
class Diagnostics:
    pi_counts: tuple = ()
    detU11s: tuple = ()
    d11_margins: tuple = ()
    are_residual: float = float("nan")
    closed_loop_spectrum: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    K: np.ndarray
    X: np.ndarray
    Vtau: Optional[float]
    diagnostics: Diagnostics
    point: Optional[MultiplierPoint] = None


def assemble(check: CheckSystem, point: MultiplierPoint, R, G) -> TauSystem:
    """Stack the scaled outputs and disturbance inputs."""
    tau = point.tau
    if len(tau) != len(check.B1til):
        raise ValueError(f"expected {len(check.B1til)} tau values, got {len(tau)}")
    nx, nu = check.B2ucheck.shape
    R = np.asarray(R, dtype=float)
    G = np.asarray(G, dtype=float)
    C_rows = [sym_power(R, 0.5), np.zeros((nu, nx))]
    D_rows = [np.zeros((nx, nu)), sym_power(G, 0.5)]
    B_cols = []
    for t, B1, C1, D1 in zip(tau, check.B1til, check.C1til, check.D1til):
        s = np.sqrt(t)
        C_rows.append(s * C1)
        D_rows.append(s * D1)
        B_cols.append(B1 / s)
    C_rows.extend(check.C2check)
    D_rows.extend(check.D2check)
    B_cols.extend(check.B2check)

    Ctau = np.vstack(C_rows)
    Dtau = np.vstack(D_rows)
    B2tau = np.hstack(B_cols) if B_cols else np.zeros((nx, 0))
    Gtau = Dtau.T @ Dtau
    Gtau = 0.5 * (Gtau + Gtau.T)
    if not min_eig(Gtau) > 1e-12 * max(1.0, np.linalg.norm(Gtau)):
        raise GtauSingular("D_tau has rank-deficient columns")
    return TauSystem(frozen(Ctau), frozen(Dtau), frozen(Gtau), frozen(B2tau), point)


def synthesize(tausys: TauSystem, check: CheckSystem) -> SynthesisResult:
    """Solve the game Riccati equation and form the state-feedback gain.

    ``Vtau`` is left as ``None``; :func:`cost_bound` supplies it.

    Raises
    ------
    NoStabilizingSolution
        No stabilizing solution, or ``Acheck + B2check K`` not Hurwitz.
    XNotPSD
        The stabilizing solution has a negative eigenvalue.
    """
    A = np.asarray(check.Acheck)
    B = np.asarray(check.B2ucheck)
    C, D, Gt, Bw = tausys.Ctau, tausys.Dtau, tausys.Gtau, tausys.B2tau
    Gi_DC = np.linalg.solve(Gt, D.T @ C)
    Gi_B = np.linalg.solve(Gt, B.T)
    Ac = A - B @ Gi_DC
    Q = C.T @ C - C.T @ D @ Gi_DC
    Rq = Bw @ Bw.T - B @ Gi_B
    Q = 0.5 * (Q + Q.T)
    Rq = 0.5 * (Rq + Rq.T)

    sol = solve_game_are(Ac, Rq, Q)
    X = np.asarray(sol.X)
    if min_eig(X) < -PSD_TOL * max(1.0, np.linalg.norm(X)):
        raise XNotPSD(f"min eig(X) = {min_eig(X):.3g}")
    K = -np.linalg.solve(Gt, B.T @ X + D.T @ C)
    cl = np.linalg.eigvals(A + B @ K)
    if np.any(cl.real >= 0):
        raise NoStabilizingSolution("Acheck + B2check K is not Hurwitz")
    cl = cl[np.lexsort((cl.imag, cl.real))]
    cl.flags.writeable = False

    diag = Diagnostics(
        d11_margins=tuple(check.d11_margins),
        are_residual=sol.residual,
        closed_loop_spectrum=cl,
    )
    return SynthesisResult(frozen(K), sol.X, None, diag, tausys.point)


def cost_bound(X, tau, S1, Scomb, x0aug) -> float:
    """Guaranteed cost for initial augmented state ``x0aug``.

    ``S1`` are the n x n uncertainty-channel matrices and ``Scomb`` the
    combined channel matrices (n x n or (n+g) x (n+g)); both are padded with
    zeros on the copy coordinates.
    """
    x = np.asarray(x0aug, dtype=float)
    nx = x.shape[0]

    def pad(S):
        S = np.asarray(S, dtype=float)
        out = np.zeros((nx, nx))
        out[: S.shape[0], : S.shape[1]] = S
        return out

    v = float(x @ np.asarray(X) @ x)
    for t, S in zip(tau, S1):
        v += float(t) * float(x @ pad(S) @ x)
    for S in Scomb:
        v += float(x @ pad(S) @ x)
    return v
