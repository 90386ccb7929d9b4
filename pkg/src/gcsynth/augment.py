"""Plant augmented with the controller's nonlinearity copies.

The controller keeps one integrator per nonlinear channel,
``mu_tilde_i' = psi_i(nu_tilde_i) + zbar_i``, and applies the linear gain
``u_tilde = K x_tilde`` with

    x_tilde = [x; mu_tilde_1..g]
    u_tilde = [u; nu_tilde_1..g; zbar_1..g]

Moving ``mubar_i = psi_i(nu_tilde_i)`` into the plant leaves a linear system
driven by ``xi_tilde_i = [mu_i; mubar_i]`` with outputs
``zeta_tilde_i = [nu_i; nu_tilde_i]``. Each channel then carries three
quadratic constraints on ``(mu, mubar, nu, nu_tilde)``: plant-vs-copy
difference, plant alone, copy alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllZeroMultiplier, NotSymmetric
from .linalg import frozen
from .model import ValidatedPlant, validate

__all__ = [
    "AugmentedPlant",
    "MultiplierPoint",
    "build_augmented",
    "lift_iqcs",
    "combine_multipliers",
]

# rows pick (mu - mubar, nu - nu_tilde) out of (mu, mubar, nu, nu_tilde)
_DIFF = np.array([[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]])
_PLANT = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
_COPY = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class AugmentedPlant:
    plant: ValidatedPlant
    Atil: np.ndarray
    B1til: tuple
    C1til: tuple
    D1til: tuple
    B2til: tuple
    C2til: tuple
    D2til: tuple
    B2u: np.ndarray
    Mlift: tuple  # per channel: three 4x4
    Slift: tuple  # per channel: three (n+g)x(n+g)

    @property
    def nx(self) -> int:
        return self.Atil.shape[0]

    @property
    def nu(self) -> int:
        return self.B2u.shape[1]


@dataclass(frozen=True)
class MultiplierPoint:
    """``tau`` per uncertainty channel and a ``lambda`` triple per nonlinear channel."""

    tau: tuple
    lam: tuple

    def __post_init__(self):
        tau = tuple(float(t) for t in self.tau)
        lam = tuple(tuple(float(v) for v in trip) for trip in self.lam)
        if any(not t > 0 for t in tau):
            raise ValueError(f"tau must be positive, got {tau}")
        for trip in lam:
            if len(trip) != 3:
                raise ValueError(f"lambda must be a triple, got {trip}")
            if any(not v >= 0 for v in trip):
                raise ValueError(f"lambda components must be nonnegative, got {trip}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "lam", lam)


def lift_iqcs(N, Sbase):
    """Lift a channel's 2x2 multiplier to the three 4x4 copy constraints.

    Coordinates are ``(mu, mubar, nu, nu_tilde)``. Returns
    ``((M_diff, M_plant, M_copy), (Sbase, Sbase, Sbase))``.
    """
    N = np.asarray(N, dtype=float)
    if N.shape != (2, 2):
        raise ValueError(f"N must be 2x2, got {N.shape}")
    if np.linalg.norm(N - N.T) > 1e-12 * max(1.0, np.linalg.norm(N)):
        raise NotSymmetric("N is not symmetric")
    N = 0.5 * (N + N.T)
    M = tuple(frozen(E.T @ N @ E) for E in (_DIFF, _PLANT, _COPY))
    S = frozen(Sbase)
    return M, (S, S, S)


def combine_multipliers(Mlift, Slift, lam):
    """``(sum_p lam_p M_p, sum_p lam_p S_p)``."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (3,) or np.any(lam < 0):
        raise ValueError(f"lambda must be a nonnegative triple, got {lam}")
    if not np.any(lam > 0):
        raise AllZeroMultiplier("all multiplier components are zero")
    M = sum(l * Mp for l, Mp in zip(lam, Mlift))
    S = sum(l * Sp for l, Sp in zip(lam, Slift))
    return frozen(0.5 * (M + M.T)), frozen(S)


def build_augmented(plant) -> AugmentedPlant:
    """Assemble the linear system seen by the gain ``K``."""
    vp = validate(plant)
    n, m, g = vp.n, vp.m, vp.g
    nx, nu = n + g, m + 2 * g

    Atil = np.zeros((nx, nx))
    Atil[:n, :n] = vp.A
    B2u = np.zeros((nx, nu))
    B2u[:n, :m] = vp.B2
    B2u[n:, m + g:] = np.eye(g)  # zbar drives the copy integrators

    B1til, C1til, D1til = [], [], []
    for ch in vp.uncertainty_channels:
        B1til.append(frozen(np.vstack([ch.B1, np.zeros((g, ch.p))])))
        C1til.append(frozen(np.hstack([ch.C1, np.zeros((ch.q, g))])))
        D1til.append(frozen(np.hstack([ch.D1, np.zeros((ch.q, 2 * g))])))

    B2til, C2til, D2til, Mlift, Slift = [], [], [], [], []
    Sbase = vp.eps_S * np.eye(nx)
    for i, ch in enumerate(vp.nonlinear_channels):
        B = np.zeros((nx, 2))
        B[:n, 0] = ch.B1bar[:, 0]
        B[n + i, 1] = 1.0  # mubar_i feeds copy state i
        C = np.zeros((2, nx))
        C[0, :n] = ch.C1bar[0]
        D = np.zeros((2, nu))
        D[0, :m] = ch.D1bar[0]
        D[1, m + i] = 1.0  # nu_tilde_i is a control channel
        B2til.append(frozen(B))
        C2til.append(frozen(C))
        D2til.append(frozen(D))
        Ml, Sl = lift_iqcs(ch.N, Sbase)
        Mlift.append(Ml)
        Slift.append(Sl)

    return AugmentedPlant(
        vp, frozen(Atil), tuple(B1til), tuple(C1til), tuple(D1til),
        tuple(B2til), tuple(C2til), tuple(D2til), frozen(B2u),
        tuple(Mlift), tuple(Slift),
    )
