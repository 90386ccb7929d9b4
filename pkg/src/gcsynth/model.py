"""Uncertain plant with scalar monotone nonlinearity channels.

The plant is

    x' = A x + sum_j B1_j xi_j + sum_i B1bar_i mu_i + B2 u
    zeta_j = C1_j x + D1_j u
    nu_i   = C1bar_i x + D1bar_i u
    mu_i   = psi_i(nu_i)

where each ``psi_i`` satisfies the incremental quadratic condition
``[dpsi, dnu] N_i [dpsi, dnu]' >= 0`` and each uncertainty ``xi_j``
satisfies an integral quadratic constraint with matrices ``M_j``, ``S_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    ConstantTermInPsi,
    DimensionMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    UnsupportedIQC,
)
from .linalg import frozen, min_eig

MONOTONE_N = ((0.0, 1.0), (1.0, 0.0))
DEFAULT_EPS_S = 1e-6


def sector_N(slope_max: float) -> np.ndarray:
    """Multiplier matrix for an incremental slope in ``[0, slope_max]``.

    ``[dpsi, dnu] N [dpsi, dnu]' = dpsi * (slope_max * dnu - dpsi)``.
    """
    k = float(slope_max)
    return np.array([[-1.0, 0.5 * k], [0.5 * k, 0.0]])


def _row(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim <= 1:
        a = a.reshape(1, -1)
    return a


def _col(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim <= 1:
        a = a.reshape(-1, 1)
    return a


@dataclass(frozen=True, eq=False)
class NonlinearChannel:
    """One scalar nonlinearity ``mu = psi(nu)``.

    ``psi_coeffs`` are ``c_1 .. c_d`` of ``psi(nu) = sum_k c_k nu**k``; there
    is no constant slot. Use :meth:`from_poly` to build from a full ascending
    coefficient list. ``psi_fn`` optionally overrides the polynomial for
    simulation only.
    """

    B1bar: np.ndarray
    C1bar: np.ndarray
    psi_coeffs: tuple
    N: np.ndarray = field(default_factory=lambda: np.array(MONOTONE_N))
    D1bar: Optional[np.ndarray] = None
    psi_fn: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        object.__setattr__(self, "B1bar", frozen(_col(self.B1bar)))
        object.__setattr__(self, "C1bar", frozen(_row(self.C1bar)))
        object.__setattr__(self, "N", frozen(np.atleast_2d(self.N)))
        object.__setattr__(self, "psi_coeffs", tuple(float(c) for c in self.psi_coeffs))
        if self.D1bar is not None:
            object.__setattr__(self, "D1bar", frozen(_row(self.D1bar)))

    @classmethod
    def from_poly(cls, poly: Sequence[float], **kw) -> "NonlinearChannel":
        """Build from ascending coefficients ``[c_0, c_1, ..., c_d]``.

        ``c_0`` must be zero since ``psi(0) = 0``.
        """
        poly = [float(c) for c in poly]
        if poly and poly[0] != 0.0:
            raise ConstantTermInPsi(f"psi has constant term {poly[0]!r}; psi(0) must be 0")
        return cls(psi_coeffs=tuple(poly[1:]), **kw)

    def psi(self, nu: float) -> float:
        return eval_psi(self, nu)


@dataclass(frozen=True, eq=False)
class UncertaintyChannel:
    """One uncertainty ``xi = phi(zeta)`` with IQC matrices ``M`` and ``S``.

    ``S`` defaults to ``eps_S * I`` at validation time when left as ``None``.
    """

    B1: np.ndarray
    C1: np.ndarray
    M: Optional[np.ndarray] = None
    S: Optional[np.ndarray] = None
    D1: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "B1", frozen(_col(self.B1)))
        object.__setattr__(self, "C1", frozen(_row(self.C1)))
        p, q = self.B1.shape[1], self.C1.shape[0]
        if self.M is None:
            object.__setattr__(self, "M", np.diag([-1.0] * p + [1.0] * q))
        object.__setattr__(self, "M", frozen(np.atleast_2d(self.M)))
        for name in ("S", "D1"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, frozen(np.atleast_2d(val)))

    @property
    def p(self) -> int:
        return self.B1.shape[1]

    @property
    def q(self) -> int:
        return self.C1.shape[0]


@dataclass(frozen=True, eq=False)
class PlantModel:
    A: np.ndarray
    B2: np.ndarray
    nonlinear_channels: tuple = ()
    uncertainty_channels: tuple = ()
    R: Optional[np.ndarray] = None
    G: Optional[np.ndarray] = None
    x0: Optional[np.ndarray] = None
    eps_S: float = DEFAULT_EPS_S

    def __post_init__(self):
        object.__setattr__(self, "A", frozen(np.atleast_2d(self.A)))
        object.__setattr__(self, "B2", frozen(_col(self.B2)))
        object.__setattr__(self, "nonlinear_channels", tuple(self.nonlinear_channels))
        object.__setattr__(self, "uncertainty_channels", tuple(self.uncertainty_channels))
        for name in ("R", "G"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, frozen(np.atleast_2d(val)))
        if self.x0 is not None:
            object.__setattr__(self, "x0", frozen(np.ravel(self.x0)))


@dataclass(frozen=True, eq=False)
class ValidatedPlant:
    """A :class:`PlantModel` whose defaults are filled in and invariants checked.

    Every optional matrix is concrete here: ``D1bar``/``D1`` are zero rows
    when absent, ``S`` is ``eps_S * I``, ``R`` and ``G`` are identities and
    ``x0`` is zero.
    """

    plant: PlantModel
    n: int
    m: int
    g: int
    k: int

    @property
    def A(self):
        return self.plant.A

    @property
    def B2(self):
        return self.plant.B2

    @property
    def nonlinear_channels(self):
        return self.plant.nonlinear_channels

    @property
    def uncertainty_channels(self):
        return self.plant.uncertainty_channels

    @property
    def R(self):
        return self.plant.R

    @property
    def G(self):
        return self.plant.G

    @property
    def x0(self):
        return self.plant.x0

    @property
    def eps_S(self):
        return self.plant.eps_S

    def x0_aug(self, x0=None) -> np.ndarray:
        """Initial augmented state ``[x0; 0]`` (controller copies start at zero)."""
        x0 = self.x0 if x0 is None else np.ravel(np.asarray(x0, dtype=float))
        return np.concatenate([x0, np.zeros(self.g)])


def _check_shape(field_name, arr, expected):
    if arr.shape != expected:
        raise DimensionMismatch(field_name, expected, arr.shape)


def _check_symmetric(field_name, arr, tol=1e-9):
    if np.linalg.norm(arr - arr.T) > tol * max(1.0, np.linalg.norm(arr)):
        raise NotSymmetric(f"{field_name} is not symmetric")


def _check_pd(field_name, arr):
    _check_symmetric(field_name, arr)
    if min_eig(arr) <= 0:
        raise NotPositiveDefinite(field_name)


def validate(model) -> ValidatedPlant:
    """Check dimensions, symmetry and definiteness; fill in defaults.

    Idempotent: passing a :class:`ValidatedPlant` re-checks its plant and
    returns an equivalent object.

    Raises
    ------
    DimensionMismatch, NotSymmetric, NotPositiveDefinite, ConstantTermInPsi,
    UnsupportedIQC
    """
    if isinstance(model, ValidatedPlant):
        model = model.plant
    A, B2 = model.A, model.B2
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("A", "(n, n)", A.shape)
    n = A.shape[0]
    if B2.shape[0] != n:
        raise DimensionMismatch("B2", (n, "m"), B2.shape)
    m = B2.shape[1]
    eps = float(model.eps_S)
    if eps <= 0:
        raise NotPositiveDefinite("eps_S")

    nl = []
    for i, ch in enumerate(model.nonlinear_channels):
        tag = f"nonlinear_channels[{i}]"
        _check_shape(f"{tag}.B1bar", ch.B1bar, (n, 1))
        _check_shape(f"{tag}.C1bar", ch.C1bar, (1, n))
        D1bar = np.zeros((1, m)) if ch.D1bar is None else ch.D1bar
        _check_shape(f"{tag}.D1bar", D1bar, (1, m))
        _check_shape(f"{tag}.N", ch.N, (2, 2))
        _check_symmetric(f"{tag}.N", ch.N)
        if not np.all(np.isfinite(ch.psi_coeffs)):
            raise ValueError(f"{tag}: non-finite psi coefficient")
        nl.append(NonlinearChannel(ch.B1bar, ch.C1bar, ch.psi_coeffs, ch.N, D1bar, ch.psi_fn))
    g = len(nl)

    unc = []
    for j, ch in enumerate(model.uncertainty_channels):
        tag = f"uncertainty_channels[{j}]"
        p, q = ch.p, ch.q
        _check_shape(f"{tag}.B1", ch.B1, (n, p))
        _check_shape(f"{tag}.C1", ch.C1, (q, n))
        D1 = np.zeros((q, m)) if ch.D1 is None else ch.D1
        _check_shape(f"{tag}.D1", D1, (q, m))
        _check_shape(f"{tag}.M", ch.M, (p + q, p + q))
        _check_symmetric(f"{tag}.M", ch.M)
        if not np.allclose(ch.M, np.diag([-1.0] * p + [1.0] * q), rtol=0, atol=1e-12):
            raise UnsupportedIQC(
                f"{tag}.M must be diag(-I_p, I_q) (norm-bounded form); "
                "rescale the channel so that int |xi|^2 <= int |zeta|^2"
            )
        S = eps * np.eye(n) if ch.S is None else ch.S
        _check_shape(f"{tag}.S", S, (n, n))
        _check_pd(f"{tag}.S", S)
        unc.append(UncertaintyChannel(ch.B1, ch.C1, ch.M, S, D1))
    k = len(unc)

    R = np.eye(n + g) if model.R is None else model.R
    G = np.eye(m + 2 * g) if model.G is None else model.G
    _check_shape("R", R, (n + g, n + g))
    _check_pd("R", R)
    _check_shape("G", G, (m + 2 * g, m + 2 * g))
    _check_pd("G", G)
    x0 = np.zeros(n) if model.x0 is None else model.x0
    _check_shape("x0", x0, (n,))

    plant = PlantModel(A, B2, tuple(nl), tuple(unc), R, G, x0, eps)
    return ValidatedPlant(plant, n, m, g, k)


def eval_psi(channel: NonlinearChannel, nu: float) -> float:
    """Evaluate ``psi(nu)`` by Horner's rule (or the override ``psi_fn``)."""
    if channel.psi_fn is not None:
        return channel.psi_fn(nu)
    acc = 0.0
    for c in reversed(channel.psi_coeffs):
        acc = acc * nu + c
    return acc * nu


@dataclass(frozen=True)
class MonotonicityReport:
    samples: int
    violations: list  # (nu1, nu2, value)
    worst: float

    @property
    def ok(self) -> bool:
        return not self.violations


def check_monotonicity(channel: NonlinearChannel, samples: int = 10_000,
                       interval=(-5.0, 5.0), seed: int = 0,
                       tol: float = 1e-12) -> MonotonicityReport:
    """Sample pairs ``(nu1, nu2)`` and evaluate the incremental condition.

    Pairs whose quadratic form falls below ``-tol`` are reported.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = interval
    pairs = rng.uniform(lo, hi, size=(samples, 2))
    N = channel.N
    violations = []
    worst = np.inf
    for nu1, nu2 in pairs:
        dpsi = eval_psi(channel, nu1) - eval_psi(channel, nu2)
        dnu = nu1 - nu2
        val = N[0, 0] * dpsi * dpsi + 2 * N[0, 1] * dpsi * dnu + N[1, 1] * dnu * dnu
        worst = min(worst, val)
        if val < -tol:
            violations.append((float(nu1), float(nu2), float(val)))
    return MonotonicityReport(samples, violations, float(worst))
