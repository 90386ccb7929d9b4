"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line, printed in the terminal summary by
``conftest.py``. Running this file directly prints the same lines.

Compressor runs use the shipped config (slope-limited nonlinearity
multiplier, cost weights 0.01 I), where the reference multipliers are
feasible. The unit-weight config is exercised through its own multiplier
search.
"""

from __future__ import annotations

import json
import sys
import time
import warnings

import numpy as np

from gcsynth import cli
from gcsynth.augment import MultiplierPoint, build_augmented, combine_multipliers, lift_iqcs
from gcsynth.config import example_config_path, load_config
from gcsynth.linalg import inertia, solve_lyapunov
from gcsynth.model import MONOTONE_N, PlantModel, validate
from gcsynth.riccati import assemble, synthesize
from gcsynth.loopshift import shift
from gcsynth.sfactor import SIGNATURE, build_congruence, check_conditions, transform_system
from gcsynth.sim import ConvergenceWarning, Realization, simulate
from gcsynth.synthesis import InfeasiblePoint, evaluate_point, search

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from oracles import charpoly, controllability_cond, inertia_oracle, newton_kleinman, real_roots  # noqa: E402

RESULTS: dict = {}

REF_POINT = MultiplierPoint((0.15,), ((1.0, 0.1, 0.12),))
REPORTED_V = 0.5772
# regression pins from the first verified build
PINNED_V_SHIPPED = 0.6573242622705139
PINNED_V_UNIT_SEARCH = 37.92750317634245
REALIZATIONS = [Realization("zero")] + [Realization("scaled", d) for d in (-1.0, -0.5, 0.5, 1.0)]


def record(key, ok, detail):
    RESULTS[key] = (bool(ok), detail)
    assert ok, f"{key}: {detail}"


def _shipped():
    return load_config(example_config_path("compressor"))


def _unit():
    return load_config(example_config_path("compressor_unit_weights"))


def _runs(plant, K):
    out = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        for r in REALIZATIONS:
            out.append((r, simulate(plant, K, realization=r, dt=1e-3, t_final=20.0)))
    return out, [str(w.message) for w in caught]


def test_c01_reference_point_feasibility():
    plant = _shipped().plant
    t0 = time.perf_counter()
    res = evaluate_point(plant, REF_POINT)
    dt = time.perf_counter() - t0
    ok = not isinstance(res, InfeasiblePoint)
    detail = f"runtime {dt:.3f} s"
    if ok:
        d = res.diagnostics
        X = np.asarray(res.X)
        checks = [
            d.pi_counts == (2,),
            abs(d.detU11s[0]) > 1e-9,
            d.d11_margins[0] > 1e-9,
            np.min(np.linalg.eigvalsh(X)) >= -1e-9,
            d.are_residual <= 1e-8 * (1 + np.linalg.norm(X)),
            bool(np.all(d.closed_loop_spectrum.real < 0)),
            dt < 1.0,
        ]
        ok = all(checks)
        detail = (f"pi={d.pi_counts[0]} detU11={d.detU11s[0]:.4f} d11_margin={d.d11_margins[0]:.4f} "
                  f"residual={d.are_residual:.2e} " + detail)
    else:
        detail = f"{res.reason} " + detail
    record("C1 reference-point feasibility", ok, detail)


def _c2(label, plant, K, V):
    t0 = time.perf_counter()
    runs, warns = _runs(plant, K)
    dt = time.perf_counter() - t0
    Js = [float(tr.running_cost[-1]) for _, tr in runs]
    ok = all(J <= V for J in Js) and dt < 10.0
    detail = (f"V={V:.6g} max J={max(Js):.6g} over {len(Js)} realizations, runtime {dt:.2f} s"
              + (f", {len(warns)} convergence warnings" if warns else ""))
    record(label, ok, detail)


def test_c02_cost_bound_shipped_reference_point():
    plant = _shipped().plant
    res = evaluate_point(plant, REF_POINT)
    _c2("C2 cost bound J <= V (shipped weights, reference multipliers)", plant, res.K, res.Vtau)


def test_c02_cost_bound_unit_weights_searched():
    cfg = _unit()
    best = search(cfg.plant, cfg.search).best
    _c2("C2 cost bound J <= V (unit weights, searched multipliers)", cfg.plant, best.K, best.Vtau)


def test_c03_logged_regression_target():
    plant = _shipped().plant
    V_ref = evaluate_point(plant, REF_POINT).Vtau
    cfg = _unit()
    unit_at_ref = evaluate_point(cfg.plant, REF_POINT)
    V_unit = search(cfg.plant, cfg.search).best.Vtau
    ok = (abs(V_ref - PINNED_V_SHIPPED) <= 1e-9 * PINNED_V_SHIPPED
          and abs(V_unit - PINNED_V_UNIT_SEARCH) <= 1e-9 * PINNED_V_UNIT_SEARCH)
    unit_ref = unit_at_ref.reason if isinstance(unit_at_ref, InfeasiblePoint) else f"{unit_at_ref.Vtau:.6g}"
    detail = (f"V(shipped, reference point)={V_ref!r} V(unit weights, searched)={V_unit!r} "
              f"V(unit weights, reference point)={unit_ref}; reported {REPORTED_V} "
              f"(ratio {V_ref / REPORTED_V:.4f})")
    record("C3 pinned V_tau (reported value logged)", ok, detail)


def test_c04_qualitative_decay():
    plant = _shipped().plant
    res = evaluate_point(plant, REF_POINT)
    tr = simulate(plant, res.K, dt=1e-3, t_final=20.0)
    xn = float(np.linalg.norm(tr.x[-1]))
    peak = float(np.max(np.abs(tr.x_aug)))
    record("C4 decay of the zero-uncertainty run", xn <= 1e-2 and peak <= 10,
           f"|x(20)|={xn:.3e} peak |state|={peak:.4f}")


def test_c05_congruence_suite():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst_diag = worst_iqc = 0.0
    count = 0
    while count < 1000:
        Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        d = np.concatenate([-rng.uniform(0.05, 5, 2), rng.uniform(0.05, 5, 2)])
        M = Q @ np.diag(d) @ Q.T
        M = 0.5 * (M + M.T)
        if not check_conditions(M).feasible:
            continue
        count += 1
        T = build_congruence(M).T
        worst_diag = max(worst_diag, float(np.linalg.norm(T.T @ M @ T - SIGNATURE)))
        bar = rng.standard_normal(4)
        til = T @ bar
        gap = abs(til @ M @ til - (bar[2:] @ bar[2:] - bar[:2] @ bar[:2])) / (1 + bar @ bar)
        worst_iqc = max(worst_iqc, float(gap))
    dt = time.perf_counter() - t0
    ok = worst_diag <= 1e-8 and worst_iqc <= 1e-9 and dt < 5.0
    record("C5 congruence and IQC sign identity", ok,
           f"1000 multipliers: max diag err {worst_diag:.2e}, max IQC err {worst_iqc:.2e}, runtime {dt:.2f} s")


def test_c06_inertia_oracle():
    rng = np.random.default_rng(6)
    mismatches = 0
    for _ in range(1000):
        X = rng.standard_normal((4, 4))
        S = X + X.T
        if inertia(S, 1e-9) != inertia_oracle(S, 1e-9):
            mismatches += 1
    Ml, Sl = lift_iqcs(np.array(MONOTONE_N), np.eye(2))
    M = combine_multipliers(Ml, Sl, (1.0, 0.1, 0.12))[0]
    roots = real_roots(charpoly(M))
    ok = mismatches == 0 and inertia(M) == (2, 0, 2)
    record("C6 inertia vs characteristic-polynomial bisection", ok,
           f"{mismatches} mismatches in 1000; reference multiplier roots "
           + ", ".join(f"{r:.4f}" for r in roots))


def _lqr_gain(A, B, Q, R):
    vp = validate(PlantModel(A, B, (), (), Q, R, np.ones(A.shape[0])))
    aug = build_augmented(vp)
    chk = shift(transform_system(aug, []))
    pt = MultiplierPoint((), ())
    return synthesize(assemble(chk, pt, vp.R, vp.G), chk)


def test_c07_riccati_oracles():
    res = _lqr_gain(np.array([[1.0]]), np.array([[1.0]]), np.array([[1.0]]), np.array([[1.0]]))
    scalar_err = abs(res.X[0, 0] - (1 + np.sqrt(2)))
    rng = np.random.default_rng(7)
    worst = 0.0
    done = 0
    while done < 100:
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        A, B = rng.standard_normal((n, n)), rng.standard_normal((n, m))
        if controllability_cond(A, B) > 1e8:
            continue
        done += 1
        Qh, Rh = rng.standard_normal((n, n)), rng.standard_normal((m, m))
        Q, R = Qh @ Qh.T + 0.1 * np.eye(n), Rh @ Rh.T + 0.1 * np.eye(m)
        K = _lqr_gain(A, B, Q, R).K
        _, F = newton_kleinman(A, B, Q, R)
        worst = max(worst, float(np.linalg.norm(K + F) / np.linalg.norm(F)))
    record("C7 Riccati vs scalar formula and Newton-Kleinman", scalar_err <= 1e-10 and worst <= 1e-9,
           f"scalar err {scalar_err:.2e}, max relative gain err {worst:.2e} over 100 systems")


def test_c08_loop_shift_identity():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        D = rng.standard_normal((2, 2))
        D *= rng.uniform(0.01, 0.99) / np.linalg.norm(D, 2)
        lhs = np.linalg.solve(np.eye(2) - D.T @ D, D.T)
        rhs = D.T @ np.linalg.inv(np.eye(2) - D @ D.T)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(lhs)))))
    record("C8 loop-shift identity", worst <= 1e-12, f"max err {worst:.2e} over 1000 draws")


def test_c09_simulator_order_and_linear_cost():
    plant = _shipped().plant
    res = evaluate_point(plant, REF_POINT)

    def final(dt):
        tr = simulate(plant, res.K, dt=dt, t_final=2.0)
        return np.concatenate([tr.x_aug[-1], tr.running_cost[-1:]])

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        ref = final(0.02 / 8)
        ratio = float(np.linalg.norm(final(0.04) - ref) / np.linalg.norm(final(0.02) - ref))

    # linear loop: zero nonlinearity, zero uncertainty
    p = plant.plant
    ch = p.nonlinear_channels[0]
    lin_ch = type(ch)(ch.B1bar, ch.C1bar, (0.0,), ch.N, ch.D1bar)
    lin = validate(PlantModel(p.A, p.B2, (lin_ch,), p.uncertainty_channels, p.R, p.G, p.x0, p.eps_S))
    aug = build_augmented(lin)
    K = res.K
    P = solve_lyapunov(aug.Atil + aug.B2u @ K, lin.R + K.T @ lin.G @ K)
    x = lin.x0_aug()
    tr = simulate(lin, K, dt=1e-3, t_final=20.0)
    rel = abs(float(tr.running_cost[-1]) - x @ P @ x) / (x @ P @ x)
    record("C9 RK4 order and linear-loop cost", ratio >= 12 and rel <= 1e-4 and tr.converged,
           f"error ratio {ratio:.2f}, linear cost rel err {rel:.2e}")


def test_c10_search_property_and_determinism(tmp_path):
    cfg = example_config_path("compressor")
    outs = []
    for i in range(2):
        s, r = tmp_path / f"s{i}.csv", tmp_path / f"r{i}.json"
        codes = (cli.main(["sweep", "-c", cfg, "-o", str(s)]), cli.main(["synth", "-c", cfg, "-o", str(r)]))
        outs.append((codes, s.read_bytes(), r.read_bytes()))
    rows = [line.split(",") for line in outs[0][1].decode().splitlines()[1:]]
    V = [float(row[5]) for row in rows if row[5]]
    best = json.loads(outs[0][2])["V_tau"]
    ok = (outs[0][0] == outs[1][0] == (0, 0) and outs[0][1:] == outs[1][1:]
          and all(best <= v for v in V) and best == min(V))
    record("C10 search minimum and byte-identical outputs", ok,
           f"best V={best!r} over {len(V)} feasible of {len(rows)} rows; identical bytes: {outs[0][1:] == outs[1][1:]}")


def summary_lines():
    lines = []
    for key, (ok, detail) in sorted(RESULTS.items(), key=lambda kv: int(kv[0].split()[0][1:])):
        lines.append(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
    return lines


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                pass
    print("\n".join(summary_lines()))
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
