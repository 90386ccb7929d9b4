"""Closed-loop simulation of the plant with the nonlinear copy controller.

The controller applies ``[u; nu_tilde; zbar] = K [x; mu_tilde]`` and
integrates ``mu_tilde' = psi(nu_tilde) + zbar``. Integration is fixed-step
classical RK4 with the running cost carried as an extra state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from .errors import NonFiniteState
from .model import eval_psi, validate

__all__ = [
    "Realization",
    "Trajectory",
    "IQCReport",
    "ConvergenceWarning",
    "simulate",
    "realized_cost",
    "check_trajectory_iqcs",
]

BLOWUP = 1e12
CONVERGED_NORM = 1e-8


class ConvergenceWarning(UserWarning):
    """The loop state has not decayed by the final time."""


@dataclass(frozen=True)
class Realization:
    """How the uncertainty input ``xi`` is generated during simulation.

    ``zero``: ``xi = 0``. ``scaled``: ``xi_j = delta * zeta_j``, which meets
    ``int |xi|^2 <= int |zeta|^2`` whenever ``|delta| <= 1``. ``hook``:
    ``hook(t, j, zeta_j) -> xi_j``.
    """

    kind: str = "zero"
    delta: float = 0.0
    hook: Optional[Callable] = None

    @classmethod
    def parse(cls, text: str) -> "Realization":
        text = text.strip()
        if text == "zero":
            return cls("zero")
        if text.startswith("scaled:"):
            return cls("scaled", float(text.split(":", 1)[1]))
        raise ValueError(f"unknown realization {text!r}; use 'zero' or 'scaled:<delta>'")

    def __str__(self):
        return "zero" if self.kind == "zero" else f"{self.kind}:{self.delta!r}"


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    mu_tilde: np.ndarray
    u: np.ndarray
    nu: np.ndarray
    nu_tilde: np.ndarray
    zbar: np.ndarray
    xi1: np.ndarray
    zeta1: np.ndarray
    running_cost: np.ndarray
    converged: bool = True
    diverged: bool = False

    @property
    def x_aug(self) -> np.ndarray:
        return np.hstack([self.x, self.mu_tilde])

    @property
    def u_aug(self) -> np.ndarray:
        return np.hstack([self.u, self.nu_tilde, self.zbar])


class _Loop:
    """Closed-loop vector field with the linear part folded into one matrix.

    With ``xa = [x; mu_tilde]`` the loop is
    ``xa' = L xa + Bpsi psi(Cpsi xa) (+ B1 xi_hook)`` and the cost rate is
    ``xa' W xa`` with ``W = R + K' G K``.
    """

    def __init__(self, vp, K, realization: Realization):
        n, m, g = vp.n, vp.m, vp.g
        self.n, self.m, self.g = n, m, g
        nx, nu = n + g, m + 2 * g
        K = np.asarray(K, dtype=float)
        if K.shape != (nu, nx):
            raise ValueError(f"K must be {(nu, nx)}, got {K.shape}")
        if realization.kind not in ("zero", "scaled", "hook"):
            raise ValueError(f"unknown realization kind {realization.kind!r}")
        unc = vp.uncertainty_channels
        if realization.kind == "scaled" and any(c.p != c.q for c in unc):
            raise ValueError("scaled realization needs square uncertainty channels (p == q)")
        if realization.kind == "hook" and realization.hook is None:
            raise ValueError("hook realization needs a callable")
        self.K = K
        self.real = realization
        chans = vp.nonlinear_channels
        self.chans = chans

        Px = np.hstack([np.eye(n), np.zeros((n, g))])
        Ku = K[:m]
        Bnl = np.hstack([c.B1bar for c in chans]) if chans else np.zeros((n, 0))
        Cnl = np.vstack([c.C1bar for c in chans]) if chans else np.zeros((0, n))
        Dnl = np.vstack([c.D1bar for c in chans]) if chans else np.zeros((0, m))
        self.B1 = np.hstack([c.B1 for c in unc]) if unc else np.zeros((n, 0))
        C1 = np.vstack([c.C1 for c in unc]) if unc else np.zeros((0, n))
        D1 = np.vstack([c.D1 for c in unc]) if unc else np.zeros((0, m))
        self.unc_q = [c.q for c in unc]

        self.Czeta = C1 @ Px + D1 @ Ku
        self.Cnu = Cnl @ Px + Dnl @ Ku
        Ldx = np.asarray(vp.A) @ Px + np.asarray(vp.B2) @ Ku
        if realization.kind == "scaled":
            Ldx = Ldx + realization.delta * self.B1 @ self.Czeta
        self.L = np.vstack([Ldx, K[m + g:]])
        self.Cpsi = np.vstack([self.Cnu, K[m: m + g]])
        self.Bpsi = np.zeros((nx, 2 * g))
        self.Bpsi[:n, :g] = Bnl
        self.Bpsi[n:, g:] = np.eye(g)
        self.B1aug = np.vstack([self.B1, np.zeros((g, self.B1.shape[1]))])
        self.W = np.asarray(vp.R) + K.T @ np.asarray(vp.G) @ K
        self.psis = [c.psi for c in chans] * 2
        # one product yields [L xa; Cpsi xa; W xa]
        self.stack = np.vstack([self.L, self.Cpsi, self.W])
        self.nx = nx

    def xi_hook(self, t, zeta):
        out, off = [], 0
        for j, q in enumerate(self.unc_q):
            out.append(np.ravel(self.real.hook(t, j, zeta[off: off + q])))
            off += q
        return np.concatenate(out) if out else np.zeros(0)

    def rhs(self, t, s):
        nx = self.nx
        xa = s[:-1]
        y = self.stack @ xa
        out = np.empty(s.size)
        out[:-1] = y[:nx]
        if self.psis:
            v = y[nx:-nx].tolist()
            out[:-1] += self.Bpsi @ np.array([f(a) for f, a in zip(self.psis, v)])
        if self.real.kind == "hook":
            out[:-1] += self.B1aug @ self.xi_hook(t, self.Czeta @ xa)
        out[-1] = xa @ y[-nx:]
        return out


def simulate(plant, K, x0=None, realization: Optional[Realization] = None,
             dt: float = 1e-3, t_final: float = 20.0) -> Trajectory:
    """Integrate the closed loop from ``[x0; 0]`` on a uniform grid.

    Parameters
    ----------
    plant : PlantModel or ValidatedPlant
    K : (m+2g, n+g) array_like
    x0 : (n,) array_like, optional
        Defaults to the plant's ``x0``.
    realization : Realization, optional
        Defaults to ``xi = 0``.
    dt, t_final : float
        Step and horizon; ``round(t_final / dt)`` steps are taken.

    Raises
    ------
    NonFiniteState
        If any state component exceeds ``1e12`` in magnitude; the partial
        trajectory is attached to the exception.
    """
    vp = validate(plant)
    if not dt > 0 or not t_final >= dt:
        raise ValueError("need dt > 0 and t_final >= dt")
    loop = _Loop(vp, K, realization or Realization())
    n, g = vp.n, vp.g
    steps = int(round(t_final / dt))
    x0 = vp.x0 if x0 is None else np.ravel(np.asarray(x0, dtype=float))
    s = np.concatenate([x0, np.zeros(g), [0.0]])

    states = np.empty((steps + 1, s.size))
    states[0] = s
    diverged = False
    last = steps
    # overflow on the blowup step is expected and handled below
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            t = k * dt
            k1 = loop.rhs(t, s)
            k2 = loop.rhs(t + 0.5 * dt, s + 0.5 * dt * k1)
            k3 = loop.rhs(t + 0.5 * dt, s + 0.5 * dt * k2)
            k4 = loop.rhs(t + dt, s + dt * k3)
            s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            states[k + 1] = s
            if not np.abs(s[:-1]).max() <= BLOWUP:  # also catches nan
                diverged = True
                last = k + 1
                break
        states = states[: last + 1]
        traj = _collect(loop, states, dt, n, g, diverged)
    if diverged:
        raise NonFiniteState(f"state left the 1e12 box at t = {traj.t[-1]:.6g}", traj)
    if not traj.converged:
        warnings.warn(
            f"|x_aug(t_final)| = {np.linalg.norm(traj.x_aug[-1]):.3g} > {CONVERGED_NORM:g}; "
            "truncated cost may underestimate the infinite-horizon cost",
            ConvergenceWarning,
            stacklevel=2,
        )
    return traj


def _collect(loop, states, dt, n, g, diverged):
    m = loop.m
    t = np.arange(len(states)) * dt
    xa = states[:, : n + g]
    ut = xa @ loop.K.T
    zeta = xa @ loop.Czeta.T
    if loop.real.kind == "scaled":
        xi = loop.real.delta * zeta
    elif loop.real.kind == "hook":
        xi = np.array([loop.xi_hook(tk, z) for tk, z in zip(t, zeta)]).reshape(len(t), -1)
    else:
        xi = np.zeros((len(t), loop.B1.shape[1]))
    converged = (not diverged) and np.linalg.norm(xa[-1]) <= CONVERGED_NORM
    return Trajectory(
        t=t,
        x=states[:, :n],
        mu_tilde=states[:, n: n + g],
        u=ut[:, :m],
        nu=xa @ loop.Cnu.T,
        nu_tilde=ut[:, m: m + g],
        zbar=ut[:, m + g:],
        xi1=xi,
        zeta1=zeta,
        running_cost=states[:, -1],
        converged=bool(converged),
        diverged=diverged,
    )


def realized_cost(traj: Trajectory, R=None, G=None) -> float:
    """Cost of a simulated run.

    Without weights this is the RK4-integrated running cost at the final
    time. With ``R`` and ``G`` the integrand is rebuilt from the stored
    ``[x; mu_tilde]`` and ``[u; nu_tilde; zbar]`` series and integrated by
    Simpson's rule.
    """
    if R is None and G is None:
        return float(traj.running_cost[-1])
    xa, ua = traj.x_aug, traj.u_aug
    R = np.eye(xa.shape[1]) if R is None else np.asarray(R, dtype=float)
    G = np.eye(ua.shape[1]) if G is None else np.asarray(G, dtype=float)
    integrand = np.einsum("ti,ij,tj->t", xa, R, xa) + np.einsum("ti,ij,tj->t", ua, G, ua)
    if len(traj.t) < 2:
        return 0.0
    return float(simpson(integrand, x=traj.t))


@dataclass(frozen=True)
class IQCReport:
    """Worst values of each constraint along a trajectory.

    ``monotonicity`` holds the most negative sampled incremental form per
    nonlinear channel. The other fields hold, per channel, the minimum over
    horizons ``T`` of ``int_0^T (integrand) dt + x0' S x0``.
    """

    monotonicity: tuple
    uncertainty: tuple
    copy_difference: tuple
    copy_plant: tuple
    copy_controller: tuple

    def worst(self) -> float:
        vals = [v for grp in (self.monotonicity, self.uncertainty, self.copy_difference,
                              self.copy_plant, self.copy_controller) for v in grp]
        return min(vals) if vals else 0.0


def _quad(N, a, b):
    return N[0, 0] * a * a + 2.0 * N[0, 1] * a * b + N[1, 1] * b * b


def _worst_accumulated(integrand, t, offset):
    if len(t) < 2:
        return float(offset)
    acc = cumulative_trapezoid(integrand, t, initial=0.0)
    return float(np.min(acc) + offset)


def check_trajectory_iqcs(traj: Trajectory, plant, pairs: int = 2000, seed: int = 0) -> IQCReport:
    """Evaluate every quadratic constraint along a simulated run."""
    vp = validate(plant)
    x0 = traj.x[0]
    rng = np.random.default_rng(seed)
    mono, copy_d, copy_p, copy_c = [], [], [], []
    s0 = vp.eps_S * float(x0 @ x0)
    for i, ch in enumerate(vp.nonlinear_channels):
        N = ch.N
        nu, nut = traj.nu[:, i], traj.nu_tilde[:, i]
        psi = np.vectorize(lambda v, c=ch: eval_psi(c, float(v)))
        mu, mubar = psi(nu), psi(nut)

        pool = np.concatenate([nu, nut, [0.0]])
        pool_mu = np.concatenate([mu, mubar, [0.0]])
        a = rng.integers(0, pool.size, size=pairs)
        b = rng.integers(0, pool.size, size=pairs)
        vals = _quad(N, pool_mu[a] - pool_mu[b], pool[a] - pool[b])
        mono.append(float(np.min(vals)) if vals.size else 0.0)

        copy_d.append(_worst_accumulated(_quad(N, mu - mubar, nu - nut), traj.t, s0))
        copy_p.append(_worst_accumulated(_quad(N, mu, nu), traj.t, s0))
        copy_c.append(_worst_accumulated(_quad(N, mubar, nut), traj.t, s0))

    unc = []
    off_p = off_q = 0
    for ch in vp.uncertainty_channels:
        xi = traj.xi1[:, off_p: off_p + ch.p]
        zeta = traj.zeta1[:, off_q: off_q + ch.q]
        off_p += ch.p
        off_q += ch.q
        v = np.hstack([xi, zeta])
        integrand = np.einsum("ti,ij,tj->t", v, np.asarray(ch.M), v)
        unc.append(_worst_accumulated(integrand, traj.t, float(x0 @ ch.S @ x0)))

    return IQCReport(tuple(mono), tuple(unc), tuple(copy_d), tuple(copy_p), tuple(copy_c))
