"""Dense symmetric eigen, Riccati and Lyapunov kernels.

Nothing here knows about plants or multipliers. Every routine takes plain
``numpy`` arrays and returns read-only results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NonSquare, NotHurwitz, NotSymmetric, NoStabilizingSolution

__all__ = [
    "SymEig",
    "AreSolution",
    "sym_eig",
    "inertia",
    "is_pos_def",
    "min_eig",
    "sym_power",
    "solve_game_are",
    "solve_lyapunov",
    "frozen",
]


def frozen(a) -> np.ndarray:
    """Return a read-only float copy of ``a``."""
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SymEig:
    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class AreSolution:
    X: np.ndarray
    residual: float
    closed_loop_spectrum: np.ndarray


def _as_symmetric(S, tol=1e-9) -> np.ndarray:
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {S.shape}")
    asym = np.linalg.norm(S - S.T)
    if asym > tol * np.linalg.norm(S):
        raise NotSymmetric(f"||S - S^T||_F = {asym:.3g}")
    return 0.5 * (S + S.T)


def sym_eig(S) -> SymEig:
    """Eigendecomposition of a symmetric matrix with a fixed sign convention.

    Eigenvalues come back in ascending order. Each eigenvector is flipped so
    that its largest-magnitude component is positive, which makes the output
    a deterministic function of the input bits.
    """
    S = _as_symmetric(S)
    w, V = np.linalg.eigh(S)
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return SymEig(frozen(w), frozen(V * signs))


def inertia(S, zero_tol: float = 1e-9) -> tuple[int, int, int]:
    """Return ``(n_neg, n_zero, n_pos)`` eigenvalue counts."""
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    w = sym_eig(S).values
    n_neg = int(np.sum(w < -zero_tol))
    n_pos = int(np.sum(w > zero_tol))
    return n_neg, len(w) - n_neg - n_pos, n_pos


def min_eig(S) -> float:
    return float(sym_eig(S).values[0])


def is_pos_def(S, margin: float = 0.0) -> bool:
    return min_eig(S) > margin


def sym_power(S, p: float) -> np.ndarray:
    """``S**p`` for a symmetric positive definite ``S`` via its eigenbasis.

    Gives the unique PSD square root for ``p = 0.5``; negative powers need
    ``S > 0``.
    """
    e = sym_eig(S)
    if e.values[0] < 0 or (p < 0 and e.values[0] == 0):
        raise ValueError("matrix power needs a positive definite argument")
    w = np.clip(e.values, 0.0, None)
    out = (e.vectors * w**p) @ e.vectors.T
    return 0.5 * (out + out.T)


def _are_residual(Ac, Rq, Q, X):
    return Ac.T @ X + X @ Ac + X @ Rq @ X + Q


def solve_game_are(Ac, Rq, Q) -> AreSolution:
    """Stabilizing solution of ``Ac' X + X Ac + X Rq X + Q = 0``.

    ``Rq`` is indefinite in general (a disturbance term minus a control
    term), so this covers both LQR (``Rq = -B G^{-1} B'``) and the
    minimax/H-infinity game. The solution is read off the stable invariant
    subspace of the Hamiltonian ``[[Ac, Rq], [-Q, -Ac']]`` from an ordered
    real Schur form.

    Parameters
    ----------
    Ac : (n, n) array_like
    Rq, Q : (n, n) array_like
        Symmetric.

    Returns
    -------
    AreSolution
        ``closed_loop_spectrum`` is the spectrum of ``Ac + Rq X``.

    Raises
    ------
    NoStabilizingSolution
        If the Hamiltonian has eigenvalues on the imaginary axis, the stable
        subspace is not a graph, or the result fails the residual or
        stability checks.
    """
    Ac = np.atleast_2d(np.asarray(Ac, dtype=float))
    n = Ac.shape[0]
    if Ac.shape != (n, n):
        raise NonSquare(f"Ac must be square, got {Ac.shape}")
    Rq = _as_symmetric(Rq) if np.any(Rq) else np.zeros((n, n))
    Q = _as_symmetric(Q) if np.any(Q) else np.zeros((n, n))
    if Rq.shape != (n, n) or Q.shape != (n, n):
        raise NonSquare("Rq and Q must match Ac")

    H = np.block([[Ac, Rq], [-Q, -Ac.T]])
    scale = max(1.0, np.linalg.norm(H, 1))
    axis_tol = 1e-10 * scale
    ev = np.linalg.eigvals(H)
    if np.any(np.abs(ev.real) <= axis_tol):
        raise NoStabilizingSolution("Hamiltonian has eigenvalues on the imaginary axis")

    _, Z, sdim = sla.schur(H, output="real", sort="lhp")
    if sdim != n:
        raise NoStabilizingSolution(f"stable subspace has dimension {sdim}, expected {n}")
    U1, U2 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(U1) > 1e12:
        raise NoStabilizingSolution("stable subspace basis has a singular upper block")
    X = np.linalg.solve(U1.T, U2.T).T
    X = 0.5 * (X + X.T)

    tol = 1e-8 * (1.0 + np.linalg.norm(X))
    res = _are_residual(Ac, Rq, Q, X)
    if np.linalg.norm(res) > tol:
        # one Newton correction: (Ac + Rq X)' D + D (Ac + Rq X) = -res
        F = Ac + Rq @ X
        try:
            D = sla.solve_continuous_lyapunov(F.T, -res)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NoStabilizingSolution(f"residual correction failed: {exc}") from exc
        X = X + 0.5 * (D + D.T)
        res = _are_residual(Ac, Rq, Q, X)
        tol = 1e-8 * (1.0 + np.linalg.norm(X))
    residual = float(np.linalg.norm(res))
    if not np.isfinite(residual) or residual > tol:
        raise NoStabilizingSolution(f"ARE residual {residual:.3g} exceeds {tol:.3g}")

    spectrum = np.linalg.eigvals(Ac + Rq @ X)
    if np.any(spectrum.real >= 0):
        raise NoStabilizingSolution("Ac + Rq X is not Hurwitz")
    order = np.lexsort((spectrum.imag, spectrum.real))
    out_spec = spectrum[order]
    out_spec.flags.writeable = False
    return AreSolution(frozen(X), residual, out_spec)


def solve_lyapunov(Acl, Q) -> np.ndarray:
    """Solve ``Acl' P + P Acl + Q = 0`` for Hurwitz ``Acl``."""
    Acl = np.atleast_2d(np.asarray(Acl, dtype=float))
    if Acl.ndim != 2 or Acl.shape[0] != Acl.shape[1]:
        raise NonSquare(f"Acl must be square, got {Acl.shape}")
    Q = _as_symmetric(Q) if np.any(Q) else np.zeros_like(Acl)
    if np.any(np.linalg.eigvals(Acl).real >= 0):
        raise NotHurwitz("Acl has eigenvalues with nonnegative real part")
    P = sla.solve_continuous_lyapunov(Acl.T, -Q)
    return frozen(0.5 * (P + P.T))
