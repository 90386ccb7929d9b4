"""Multiplier search: evaluate the pipeline at ``(tau, lambda)`` points.

A point either yields a :class:`~gcsynth.riccati.SynthesisResult` or an
:class:`InfeasiblePoint` naming the failed condition. :func:`search` scans
a grid and optionally polishes the best grid point with Nelder-Mead
restarts.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from collections import Counter
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize

from .augment import AugmentedPlant, MultiplierPoint, build_augmented, combine_multipliers
from .errors import EmptySearchSpace, Infeasible
from .loopshift import shift
from .model import validate
from .riccati import SynthesisResult, assemble, cost_bound, synthesize
from .sfactor import build_congruence, check_conditions, transform_system

__all__ = [
    "InfeasiblePoint",
    "SearchSpec",
    "TraceEntry",
    "SearchReport",
    "evaluate_point",
    "search",
]

TAU_FLOOR = 1e-8


@dataclass(frozen=True)
class InfeasiblePoint:
    reason: str
    detail: str = ""
    point: Optional[MultiplierPoint] = None
    pi_counts: tuple = ()
    detU11s: tuple = ()


@dataclass(frozen=True)
class SearchSpec:
    tau_grid: tuple  # per uncertainty channel: sequence of tau
    lambda_grid: tuple  # per nonlinear channel: sequence of triples
    refine: bool = False
    refine_iters: int = 3
    refine_shrink: float = 0.5
    refine_maxfev: int = 200
    seed: Optional[int] = None

    def __post_init__(self):
        tau = tuple(tuple(float(t) for t in ch) for ch in self.tau_grid)
        lam = tuple(tuple(tuple(float(v) for v in trip) for trip in ch) for ch in self.lambda_grid)
        if any(len(ch) == 0 for ch in tau + lam):
            raise EmptySearchSpace("every channel needs at least one grid value")
        if any(t <= 0 for ch in tau for t in ch):
            raise ValueError("tau grid values must be positive")
        if any(len(trip) != 3 or min(trip) < 0 for ch in lam for trip in ch):
            raise ValueError("lambda grid entries must be nonnegative triples")
        if not 0 < self.refine_shrink < 1:
            raise ValueError("refine_shrink must lie in (0, 1)")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "lambda_grid", lam)

    def points(self):
        """Grid points in scan order (last channel varies fastest)."""
        k = len(self.tau_grid)
        for combo in itertools.product(*self.tau_grid, *self.lambda_grid):
            yield MultiplierPoint(combo[:k], combo[k:])


@dataclass(frozen=True)
class TraceEntry:
    point: MultiplierPoint
    Vtau: Optional[float]
    reason: Optional[str]
    stage: str = "grid"

    @property
    def feasible(self) -> bool:
        return self.Vtau is not None


@dataclass(frozen=True)
class SearchReport:
    best: Optional[SynthesisResult]
    evaluated: int
    feasible: int
    infeasible_reasons: dict
    trace: tuple = field(repr=False)


def evaluate_point(plant, point: MultiplierPoint, aug: Optional[AugmentedPlant] = None
                   ) -> Union[SynthesisResult, InfeasiblePoint]:
    """Run the whole synthesis pipeline at one multiplier point.

    Infeasibility is returned, not raised. Plant validation errors and
    malformed points still raise.
    """
    if aug is None:
        aug = build_augmented(plant)
    vp = aug.plant
    if len(point.tau) != vp.k or len(point.lam) != vp.g:
        raise ValueError(
            f"point has {len(point.tau)} tau / {len(point.lam)} lambda entries; "
            f"plant needs {vp.k} / {vp.g}"
        )
    pis, dets = [], []
    try:
        congs, Scombs = [], []
        for Ml, Sl, lam in zip(aug.Mlift, aug.Slift, point.lam):
            M, S = combine_multipliers(Ml, Sl, lam)
            chk = check_conditions(M)
            pis.append(chk.pi_count)
            dets.append(chk.detU11)
            congs.append(build_congruence(M))
            Scombs.append(S)
        bar = transform_system(aug, congs)
        check = shift(bar)
        tausys = assemble(check, point, vp.R, vp.G)
        res = synthesize(tausys, check)
    except Infeasible as exc:
        return InfeasiblePoint(exc.reason, str(exc), point, tuple(pis), tuple(dets))
    V = cost_bound(
        res.X, point.tau, [ch.S for ch in vp.uncertainty_channels], Scombs, vp.x0_aug()
    )
    diag = replace(res.diagnostics, pi_counts=tuple(pis), detU11s=tuple(dets))
    return replace(res, Vtau=V, diagnostics=diag, point=point)


def _to_vector(point: MultiplierPoint) -> np.ndarray:
    lam = [v for trip in point.lam for v in trip]
    return np.array([math.log(t) for t in point.tau] + lam)


def _from_vector(v, k: int, g: int) -> MultiplierPoint:
    tau = tuple(max(math.exp(min(x, 700.0)), TAU_FLOOR) for x in v[:k])
    lam = np.clip(np.asarray(v[k:], dtype=float), 0.0, None).reshape(g, 3)
    return MultiplierPoint(tau, tuple(tuple(r) for r in lam))


def search(plant, spec: SearchSpec, workers: int = 1) -> SearchReport:
    """Grid scan with optional Nelder-Mead refinement from the best grid point.

    Refinement works on ``(log tau, lambda)``, clamps ``lambda`` at zero,
    treats infeasible points as ``+inf`` and runs ``refine_iters`` restarts,
    each with the initial simplex shrunk by ``refine_shrink``. Every point
    evaluated during refinement is appended to the trace with stage
    ``"refine"``; the report's ``best`` is the minimum over the whole trace.
    """
    aug = build_augmented(validate(plant))
    vp = aug.plant
    if len(spec.tau_grid) != vp.k or len(spec.lambda_grid) != vp.g:
        raise ValueError(
            f"search grid covers {len(spec.tau_grid)} tau / {len(spec.lambda_grid)} lambda "
            f"channels; plant has {vp.k} / {vp.g}"
        )
    points = list(spec.points())
    if not points:
        raise EmptySearchSpace("no grid points")

    def run(pt):
        return evaluate_point(vp, pt, aug)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, points))
    else:
        outcomes = [run(pt) for pt in points]

    trace = []
    best = None

    def record(pt, out, stage):
        nonlocal best
        if isinstance(out, InfeasiblePoint):
            trace.append(TraceEntry(pt, None, out.reason, stage))
            return math.inf
        trace.append(TraceEntry(pt, out.Vtau, None, stage))
        if best is None or out.Vtau < best.Vtau:
            best = out
        return out.Vtau

    for pt, out in zip(points, outcomes):
        record(pt, out, "grid")

    if spec.refine and best is not None:
        _refine(best.point, vp, aug, spec, record)

    reasons = Counter(e.reason for e in trace if e.reason is not None)
    n_feas = sum(e.feasible for e in trace)
    return SearchReport(best, len(trace), n_feas, dict(sorted(reasons.items())), tuple(trace))


def _refine(start: MultiplierPoint, vp, aug, spec: SearchSpec, record):
    k, g = vp.k, vp.g
    x_best = _to_vector(start)
    rng = np.random.default_rng(spec.seed) if spec.seed is not None else None
    cache = {}

    def f(v):
        key = tuple(np.round(v, 15))
        if key not in cache:
            pt = _from_vector(v, k, g)
            cache[key] = record(pt, evaluate_point(vp, pt, aug), "refine")
        return cache[key]

    f_best = f(x_best)
    step = 0.25
    dim = x_best.size
    for _ in range(spec.refine_iters):
        simplex = [x_best.copy()]
        for d in range(dim):
            v = x_best.copy()
            v[d] += step * (abs(v[d]) if d >= k and v[d] != 0 else 1.0)
            if rng is not None:
                v[d] += 0.01 * step * rng.standard_normal()
            simplex.append(v)
        res = minimize(f, x_best, method="Nelder-Mead",
                       options={"initial_simplex": np.array(simplex), "maxfev": spec.refine_maxfev,
                                "xatol": 1e-6, "fatol": 1e-10})
        if res.fun < f_best:
            x_best, f_best = np.asarray(res.x), float(res.fun)
        step *= spec.refine_shrink
