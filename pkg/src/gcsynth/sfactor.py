"""Congruence normalization of the combined channel multiplier.

A combined multiplier ``M`` with exactly two negative and two positive
eigenvalues admits ``T`` with ``T' M T = diag(-1, -1, 1, 1)``. Writing
``[xi_tilde; zeta_tilde] = T [xi_bar; zeta_bar]`` turns the channel
constraint into ``int |xi_bar|^2 <= int |zeta_bar|^2 + const``, a plain
norm bound, at the cost of a feedthrough ``D11 = T~21 T~11^{-1}`` where the
``T~`` blocks belong to ``T^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .augment import AugmentedPlant
from .errors import SingularT11, SingularU11, WrongInertia
from .linalg import frozen, inertia, sym_eig

__all__ = [
    "ConditionCheck",
    "Congruence",
    "BarSystem",
    "check_conditions",
    "build_congruence",
    "transform_system",
    "inv2",
]

ZERO_TOL = 1e-9
DET_U11_TOL = 1e-9
SIGNATURE = np.diag([-1.0, -1.0, 1.0, 1.0])


class ConditionCheck(NamedTuple):
    pi_count: int
    detU11: float
    feasible: bool


@dataclass(frozen=True, eq=False)
class Congruence:
    T: np.ndarray
    Tinv: np.ndarray
    eigenvalues: np.ndarray
    pi_count: int
    detU11: float

    # blocks of T^{-1}, mapping (xi_tilde, zeta_tilde) -> (xi_bar, zeta_bar)
    @property
    def T11(self):
        return self.Tinv[:2, :2]

    @property
    def T12(self):
        return self.Tinv[:2, 2:]

    @property
    def T21(self):
        return self.Tinv[2:, :2]

    @property
    def T22(self):
        return self.Tinv[2:, 2:]


@dataclass(frozen=True, eq=False)
class BarSystem:
    aug: AugmentedPlant
    Abar: np.ndarray
    B2bar: tuple
    B2ubar: np.ndarray
    C2bar: tuple
    D2bar: tuple
    D11bar: tuple

    @property
    def B1til(self):
        return self.aug.B1til

    @property
    def C1til(self):
        return self.aug.C1til

    @property
    def D1til(self):
        return self.aug.D1til


def inv2(A, rel_tol: float = 1e-12) -> np.ndarray:
    """Inverse of a 2x2 matrix by its adjugate, refusing near-singular input."""
    A = np.asarray(A, dtype=float)
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if not abs(det) > rel_tol * np.sum(A * A):
        raise SingularT11(f"2x2 block is singular (det = {det:.3g})")
    return np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det


def check_conditions(Mcomb) -> ConditionCheck:
    """Inertia and eigenvector-block conditions on a combined 4x4 multiplier.

    ``U11`` is the top 2x2 block (the ``xi_tilde`` rows) of the eigenvectors
    belonging to the two negative eigenvalues.
    """
    e = sym_eig(Mcomb)
    n_neg, n_zero, _ = inertia(Mcomb, ZERO_TOL)
    detU11 = float(np.linalg.det(e.vectors[:2, :2])) if n_neg >= 2 else 0.0
    feasible = n_neg == 2 and n_zero == 0 and abs(detU11) > DET_U11_TOL
    return ConditionCheck(n_neg, detU11, feasible)


def build_congruence(Mcomb) -> Congruence:
    """``T = U diag(|sigma|^{-1/2})`` with the negative pair first.

    Raises
    ------
    WrongInertia
        Not exactly two negative eigenvalues, or a (near) zero eigenvalue.
    SingularU11
        The negative eigenvectors have a singular top block, so the
        ``xi_bar`` coordinates cannot be solved for ``xi_tilde``.
    """
    M = np.asarray(Mcomb, dtype=float)
    if M.shape != (4, 4):
        raise ValueError(f"channel multiplier must be 4x4, got {M.shape}")
    chk = check_conditions(M)
    if not chk.feasible:
        if chk.pi_count != 2 or inertia(M, ZERO_TOL)[1] != 0:
            raise WrongInertia(f"inertia {inertia(M, ZERO_TOL)}; need (2, 0, 2)")
        raise SingularU11(f"det U11 = {chk.detU11:.3g}")
    e = sym_eig(M)
    scale = np.abs(e.values) ** -0.5
    T = e.vectors * scale
    Tinv = (e.vectors * np.abs(e.values) ** 0.5).T
    return Congruence(frozen(T), frozen(Tinv), e.values, chk.pi_count, chk.detU11)


def transform_system(aug: AugmentedPlant, congs) -> BarSystem:
    """Substitute the normalized channel coordinates into the augmented plant."""
    congs = tuple(congs)
    if len(congs) != len(aug.B2til):
        raise ValueError(f"need one congruence per nonlinear channel, got {len(congs)}")
    Abar = np.array(aug.Atil)
    B2ubar = np.array(aug.B2u)
    B2bar, C2bar, D2bar, D11bar = [], [], [], []
    for Bt, Ct, Dt, cg in zip(aug.B2til, aug.C2til, aug.D2til, congs):
        T11i = inv2(cg.T11)
        BT = Bt @ T11i
        Abar -= BT @ cg.T12 @ Ct
        B2ubar -= BT @ cg.T12 @ Dt
        schur = cg.T22 - cg.T21 @ T11i @ cg.T12
        B2bar.append(frozen(BT))
        C2bar.append(frozen(schur @ Ct))
        D2bar.append(frozen(schur @ Dt))
        D11bar.append(frozen(cg.T21 @ T11i))
    return BarSystem(aug, frozen(Abar), tuple(B2bar), frozen(B2ubar),
                     tuple(C2bar), tuple(D2bar), tuple(D11bar))

