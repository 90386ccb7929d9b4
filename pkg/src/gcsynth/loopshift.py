"""Removal of the direct feedthrough ``D11`` from the normalized channels.

With ``zeta_bar = w + D11 xi_bar`` (``w`` the part driven by state and
control) and ``|D11| < 1``, the substitution

    xi_check   = Phi^{1/2} xi_bar - Phi^{-1/2} D11' w
    zeta_check = Phibar^{-1/2} w

with ``Phi = I - D11' D11`` and ``Phibar = I - D11 D11'`` preserves
``|xi|^2 - |zeta|^2`` pointwise and leaves a system without feedthrough.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import D11TooLarge
from .linalg import frozen, min_eig, sym_power
from .sfactor import BarSystem

__all__ = ["CheckSystem", "d11_margin", "check_d11", "shift"]

D11_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class CheckSystem:
    bar: BarSystem
    Acheck: np.ndarray
    B2check: tuple
    B2ucheck: np.ndarray
    C2check: tuple
    D2check: tuple
    PhiHalfInv: tuple
    PhiBarHalfInv: tuple
    d11_margins: tuple

    @property
    def B1til(self):
        return self.bar.B1til

    @property
    def C1til(self):
        return self.bar.C1til

    @property
    def D1til(self):
        return self.bar.D1til


def d11_margin(D11) -> float:
    """Smallest eigenvalue of ``I - D11' D11`` (positive iff ``|D11| < 1``)."""
    D11 = np.asarray(D11, dtype=float)
    return min_eig(np.eye(D11.shape[1]) - D11.T @ D11)


def check_d11(bar: BarSystem) -> list:
    return [d11_margin(D) > D11_MARGIN for D in bar.D11bar]


def shift(bar: BarSystem) -> CheckSystem:
    """Loop-shift every channel of ``bar``.

    Raises
    ------
    D11TooLarge
        If ``I - D11' D11`` has an eigenvalue at or below ``1e-9``.
    """
    Acheck = np.array(bar.Abar)
    B2ucheck = np.array(bar.B2ubar)
    B2c, C2c, D2c, phi_hi, phibar_hi, margins = [], [], [], [], [], []
    for i, (B, C, D, D11) in enumerate(zip(bar.B2bar, bar.C2bar, bar.D2bar, bar.D11bar)):
        margin = d11_margin(D11)
        if not margin > D11_MARGIN:
            raise D11TooLarge(f"channel {i}: min eig(I - D11'D11) = {margin:.3g}")
        eye = np.eye(D11.shape[0])
        Phi = np.eye(D11.shape[1]) - D11.T @ D11
        Phibar = eye - D11 @ D11.T
        # Phi^{-1} D11' == D11' Phibar^{-1}
        gain = np.linalg.solve(Phi, D11.T)
        Acheck += B @ gain @ C
        B2ucheck += B @ gain @ D
        Phi_hi = sym_power(Phi, -0.5)
        Phibar_hi = sym_power(Phibar, -0.5)
        B2c.append(frozen(B @ Phi_hi))
        C2c.append(frozen(Phibar_hi @ C))
        D2c.append(frozen(Phibar_hi @ D))
        phi_hi.append(frozen(Phi_hi))
        phibar_hi.append(frozen(Phibar_hi))
        margins.append(margin)
    return CheckSystem(bar, frozen(Acheck), tuple(B2c), frozen(B2ucheck), tuple(C2c),
                       tuple(D2c), tuple(phi_hi), tuple(phibar_hi), tuple(margins))
