"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines appear in the
terminal summary) or ``python3 tests/test_acceptance.py``.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dgflow import bench  # noqa: E402
from dgflow.catalog import builtin_scheme  # noqa: E402
from dgflow.core import fd_hessian, get_problem  # noqa: E402
from dgflow.dg import dg_eval, dg_jacobian2, dg_q, discrete_gradient  # noqa: E402
from dgflow.integrator import SolverConfig, integrate, integrate_reference, step  # noqa: E402
from dgflow.sbar import SchemeBuilder  # noqa: E402
from dgflow.trees import brute_force_trees, check_order, enumerate_trees, from_word, tree_gamma, tree_sigma  # noqa: E402
from helpers import ep_check, random_system  # noqa: E402
from test_sbar import sbar_skewness_samples  # noqa: E402
from test_trees import BI_TABLE, MONO_TABLE  # noqa: E402

RESULTS: dict[int, str] = {}
SEED = 20240611


def record(n, ok, detail, started):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - started:.1f} s)"
    RESULTS[n] = line
    print(line)
    assert ok, line


def _plain_scheme(name):
    """``S-bar = S(x)``: the bare discrete gradient method."""
    b = SchemeBuilder(name, 1)
    b.term(1, ["S@x"])
    return b.build(requires_constant_S=True)


def test_criterion_01_discrete_gradient_axioms():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 1)
    worst_secant = worst_consistency = 0.0
    for kind in ("avf", "itoh-abe", "sia", "furihata"):
        dg = discrete_gradient(kind)
        for _ in range(1000):
            d = int(rng.integers(2, 5))
            sysm = random_system(rng, d, max_degree=int(rng.integers(1, 5)))
            x, y = rng.normal(size=d), rng.normal(size=d)
            Hx, Hy = sysm.energy(x), sysm.energy(y)
            g = dg_eval(dg, sysm, x, y)
            worst_secant = max(worst_secant, abs(g @ (y - x) - (Hy - Hx)) / (1 + abs(Hx) + abs(Hy)))
            gx = sysm.grad(x)
            worst_consistency = max(worst_consistency,
                                    np.max(np.abs(dg_eval(dg, sysm, x, x) - gx)) / (1 + np.max(np.abs(gx))))
    ok = worst_secant <= 1e-10 and worst_consistency <= 1e-12
    record(1, ok, f"secant {worst_secant:.1e} <= 1e-10, consistency {worst_consistency:.1e} <= 1e-12", t0)


def test_criterion_02_q_and_jacobian_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 2)
    ddh = fd_cross = avf_q = half_hess = 0.0
    for kind in ("avf", "itoh-abe", "sia", "furihata"):
        dg = discrete_gradient(kind)
        for _ in range(50):
            d = int(rng.integers(2, 5))
            sysm = random_system(rng, d)
            x, y = rng.normal(size=d), rng.normal(size=d)
            hess = sysm.hessian(x)
            scale = 1 + np.max(np.abs(hess))
            J = dg_jacobian2(dg, sysm, x, x)
            ddh = max(ddh, np.max(np.abs(J + J.T - hess)) / scale)
            fd_cross = max(fd_cross, np.max(np.abs(fd_hessian(sysm.grad, x) - hess)) / scale)
            if dg.symmetric:
                half_hess = max(half_hess, np.max(np.abs(J - hess / 2)) / scale)
            if kind == "avf":
                Jxy = dg_jacobian2(dg, sysm, x, y)
                avf_q = max(avf_q, np.max(np.abs(dg_q(dg, sysm, x, y))) / (1 + np.max(np.abs(Jxy))))
    ok = ddh <= 1e-8 and fd_cross <= 1e-6 and avf_q <= 1e-12 and half_hess <= 1e-10
    record(2, ok, f"DDH {ddh:.1e} (FD Hessian {fd_cross:.1e}), AVF Q {avf_q:.1e}, "
                  f"symmetric D2 {half_hess:.1e}", t0)


def test_criterion_03_sbar_skew():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 3)
    worst, count = 0.0, 0
    for _, S in sbar_skewness_samples(rng, 200):
        worst = max(worst, np.max(np.abs(S + S.T)) / (1 + np.max(np.abs(S))))
        count += 1
    record(3, worst <= 1e-12, f"max |S+S^T|/(1+|S|) {worst:.1e} <= 1e-12 over {count} samples", t0)


def test_criterion_04_energy_exactness():
    t0 = time.perf_counter()
    p = get_problem("henon-heiles")
    cfg = SolverConfig(tol=1e-12)
    runs = [("dgm2", "avf"), ("dgm4-const", "itoh-abe"), ("avf4", "avf"), ("avf5", "avf"),
            ("avf6-exp", "avf"), ("sym4-const", "sia")]
    drifts = {}
    for name, kind in runs:
        traj = integrate(p, discrete_gradient(kind), builtin_scheme(name), 0.1, 1000.0, cfg)
        drifts[f"{name}/{kind}"] = traj.max_energy_drift
    rk4 = integrate_reference("rk4", p, 0.1, 1000.0).max_energy_drift
    worst = max(drifts.values())
    ok = worst <= 1e-9 and rk4 > 1e-6
    record(4, ok, f"worst DG drift {worst:.1e} <= 1e-9, RK4 drift {rk4:.1e} > 1e-6", t0)


HH_ORDERS = [
    ("dgm2", "avf", 2), ("dgm3-const", "avf", 3), ("dgm4-const", "itoh-abe", 4), ("avf4", "avf", 4),
    ("avf5", "avf", 5), ("avf6-exp", "avf", 6), ("sym4-const", "sia", 4), ("sym4-const", "furihata", 4),
    ("plain", "itoh-abe", 1), ("plain", "sia", 2),
]


def test_criterion_05_convergence_henon_heiles():
    t0 = time.perf_counter()
    p = get_problem("henon-heiles")
    parts, ok = [], True
    for name, kind, nominal in HH_ORDERS:
        scheme = _plain_scheme(f"plain-{kind}") if name == "plain" else builtin_scheme(name)
        h_list = bench.HIGH_ORDER_H if name in ("avf5", "avf6-exp") else bench.DEFAULT_H
        slope = bench.run_convergence(p, scheme, discrete_gradient(kind), h_list).fitted_slope
        good = slope is not None and abs(slope - nominal) <= 0.3
        ok &= good
        parts.append(f"{name}/{kind} {slope:.2f}" if slope is not None else f"{name}/{kind} n/a")
    record(5, ok, "slopes within 0.3 of nominal: " + ", ".join(parts), t0)


LV_ORDERS = [
    ("dgm2", "avf", 2), ("avf3-S", "avf", 3), ("avf4-S-exp", "avf", 4), ("avf4-S-imp", "avf", 4),
    ("gen3-S", "itoh-abe", 3), ("gen4-S", "itoh-abe", 4), ("sym4-S", "sia", 4),
]


def test_criterion_06_convergence_lotka_volterra():
    t0 = time.perf_counter()
    p = get_problem("lotka-volterra")
    parts, ok = [], True
    for name, kind, nominal in LV_ORDERS:
        slope = bench.run_convergence(p, builtin_scheme(name), discrete_gradient(kind), bench.STIFF_H).fitted_slope
        good = slope is not None and abs(slope - nominal) <= 0.3
        ok &= good
        parts.append(f"{name}/{kind} {slope:.2f}" if slope is not None else f"{name}/{kind} n/a")
    record(6, ok, "slopes within 0.3 of nominal: " + ", ".join(parts), t0)


def test_criterion_07_order_conditions():
    t0 = time.perf_counter()
    passes = [("avf5", 5, "b"), ("avf6-exp", 6, "b"), ("avf6-sym", 6, "b"), ("avf3-S", 3, "p"),
              ("avf4-S-exp", 4, "p"), ("sym3-const", 3, "g"), ("dgm4-const", 4, "g")]
    worst, failed = 0.0, []
    for name, p, series in passes:
        report = check_order(builtin_scheme(name), p, series)
        worst = max(worst, report.max_residual)
        if not report.passed:
            failed.append(name)
    avf4 = check_order(builtin_scheme("avf4"), 5, "b")
    avf4_miss = max(r.residual for r in avf4.rows if len(r.tree) == 5)
    ok = not failed and worst <= 1e-12 and avf4_miss >= 1e-3
    record(7, ok, f"max residual {worst:.1e} <= 1e-12 over {len(passes)} checks, "
                  f"avf4 order-5 miss {avf4_miss:.2e} >= 1e-3", t0)


def test_criterion_08_tree_combinatorics():
    t0 = time.perf_counter()
    mono = [len(enumerate_trees(n, "mono")) for n in range(1, 7)]
    brute = [len(brute_force_trees(n, "mono")) for n in range(1, 7)]
    bi = [len(enumerate_trees(n, "bicolored")) for n in (4, 5)]
    bi_brute = [len(brute_force_trees(n, "bicolored")) for n in (4, 5)]
    rows = [(w, s, g) for w, s, g in MONO_TABLE + BI_TABLE]
    bad_rows = [w for w, s, g in rows if (tree_sigma(from_word(w)), tree_gamma(from_word(w))) != (s, g)]
    ok = mono == brute == [1, 1, 2, 4, 9, 20] and bi == bi_brute == [26, 107] and not bad_rows
    record(8, ok, f"mono {mono}, bicolored {bi}, gamma/sigma rows {len(rows) - len(bad_rows)}/{len(rows)}", t0)


def test_criterion_09_energy_preserving_combinations():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 9)
    worst = {}
    for kind in ("mono", "bicolored", "shaped"):
        worst[kind] = max(ep_check(kind, n, rng, points=20) for n in range(1, 5))
    # the order-5 bi-coloured pair whose members cancel only together
    a, b = from_word("aaabaAbbBb"), from_word("aABabaabbb")
    from dgflow.trees.elementary import elementary_differential

    pair = 0.0
    for _ in range(20):
        sysm = random_system(rng, 3, constant_S=False)
        x = rng.uniform(-1, 1, size=3)
        g = sysm.grad(x)
        Fa, Fb = elementary_differential(a, sysm, x), elementary_differential(b, sysm, x)
        scale = (np.linalg.norm(Fa) + np.linalg.norm(Fb)) * (1 + np.linalg.norm(g))
        pair = max(pair, abs((Fa + Fb) @ g) / scale)
    ok = max(worst.values()) <= 1e-6 and pair <= 1e-6
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record(9, ok, f"worst |F.gradH|/scale {detail}, order-5 pair {pair:.1e} (all <= 1e-6)", t0)


def test_criterion_10_time_symmetry():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 10)
    cfg = SolverConfig(tol=1e-14)
    dg = discrete_gradient("avf")
    worst = {}
    for name, pname in (("avf6-sym", "henon-heiles"), ("avf4-S-imp", "lotka-volterra")):
        p = get_problem(pname)
        scheme = builtin_scheme(name)
        err = 0.0
        for _ in range(100):
            x = p.initial_state * rng.uniform(0.8, 1.2, size=p.system.dim)
            h = float(rng.uniform(0.01, 0.2))
            y = step(p.system, dg, scheme, x, h, cfg)
            err = max(err, np.max(np.abs(step(p.system, dg, scheme, y, -h, cfg) - x)))
        worst[name] = err
    ok = max(worst.values()) <= 1e-9
    record(10, ok, "forward-backward " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " <= 1e-9", t0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
