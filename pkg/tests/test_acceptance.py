"""Acceptance gate: one PASS/FAIL line per criterion, printed even without ``-s``.

Run with ``pytest tests/test_acceptance.py -v``.  The full file takes a few
minutes, dominated by the six long growth runs.
"""

import time

import numpy as np
import pytest

from nlsform.cli import main
from nlsform.fourier_field import MultiplierSpec, apply_multiplier, mass, project_high, random_field, sobolev_norm
from nlsform.algebra import (
    Tag,
    evaluate,
    free_weights,
    hh_terms,
    homological_solve,
    make_nls_nonlinearity,
    mass_tensor,
    poisson_bracket,
    quadratic_tensor,
    random_tensor,
    split_into_sum,
    split_resonant,
)
from nlsform.cubic_explicit import CubicContext, as_generator, build_F1
from nlsform.lie_flow import FlowConfig, lie_transform
from nlsform.normal_form import ReductionConfig, lie_series, reduce
from nlsform.nls_simulator import (
    InitialCondition,
    SimulationConfig,
    ds_exhaustive,
    ds_lemma_scan,
    final_field,
    growth_fit,
    initial_field,
    run,
    step,
)

DS_BASELINE = 1.890625  # degree-4 exhaustive max at s=2, K=1, range 8


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def unit_h1(M, seed):
    q = random_field(M, np.random.default_rng(seed), decay=1.0)
    return q * (1.0 / sobolev_norm(q, 1))


def test_01_homological_exactness(report):
    M = 6
    H0 = quadratic_tensor(free_weights(M), M)
    start = time.perf_counter()
    worst = 0.0
    for seed in range(1, 21):
        degree = 4 if seed % 2 else 6
        H = random_tensor(M, degree, 60, np.random.default_rng(seed), nonresonant=True)
        out = poisson_bracket(H0, homological_solve(H), prune=False) + H
        worst = max(worst, out.max_abs() / H.max_abs())
    took = time.perf_counter() - start
    ok = worst <= 1e-12 and took <= 10
    assert report(1, ok, f"max relative residual {worst:.2e}, {took:.2f} s")


def test_02_cubic_identities(report, tmp_path):
    import json

    start = time.perf_counter()
    code = main(["verify-cubic", "--M", "6", "--N", "8", "--beta", "0.25", "--out", str(tmp_path / "v.json")])
    took = time.perf_counter() - start
    res = {r["name"]: r for r in json.loads((tmp_path / "v.json").read_text())["identities"]}
    key = ["R1_F1_bracket_vanishes", "H0_F1_equals_minus_N", "R2_F1_equals_I0_combination"]
    worst = max(res[k]["max_residual"] for k in key)
    bad = main(["verify-cubic", "--M", "6", "--corrupt", "--out", str(tmp_path / "c.json")])
    ok = code == 0 and worst <= 1e-12 and bad == 1 and took <= 30
    assert report(2, ok, f"key residual {worst:.2e}, clean exit {code}, corrupted exit {bad}, {took:.2f} s")


def test_03_bracket_algebra(report):
    anti = jac = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        A, B, C = (random_tensor(4, 4, 20, rng) for _ in range(3))
        AB = poisson_bracket(A, B, prune=False)
        anti = max(anti, (AB + poisson_bracket(B, A, prune=False)).max_abs() / AB.max_abs())
        t = [
            poisson_bracket(A, poisson_bracket(B, C, prune=False), prune=False),
            poisson_bracket(B, poisson_bracket(C, A, prune=False), prune=False),
            poisson_bracket(C, poisson_bracket(A, B, prune=False), prune=False),
        ]
        jac = max(jac, (t[0] + t[1] + t[2]).max_abs() / max(x.max_abs() for x in t))
    gauge = 0.0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        h = random_tensor(4, int(rng.choice([2, 4, 6])), 20, rng)
        gauge = max(gauge, poisson_bracket(mass_tensor(4), h, prune=False).max_abs())
    ok = anti <= 1e-13 and jac <= 1e-10 and gauge == 0.0
    assert report(3, ok, f"antisymmetry {anti:.1e}, Jacobi {jac:.1e}, gauge {gauge:.1e}")


def test_04_lie_flow_conservation(report):
    M = 8
    F = as_generator(build_F1(CubicContext(M=M)))
    q = unit_h1(M, 4)
    cfg = FlowConfig(dt=1e-3)
    g = lie_transform(q, F, cfg)
    back = lie_transform(g, F, cfg, inverse=True)
    drift = abs(mass(g) / mass(q) - 1)
    inv = float(np.linalg.norm((back - q).coeffs))
    ratio = sobolev_norm(g, 1) / sobolev_norm(q, 1)
    ok = drift <= 1e-10 and inv <= 1e-8 and 0.25 <= ratio <= 4
    assert report(4, ok, f"mass drift {drift:.1e}, inverse error {inv:.1e}, H1 ratio {ratio:.3f}")


def test_05_conjugacy_cross_check(report):
    M, order = 4, 3
    N = make_nls_nonlinearity(1, M)
    _, non = split_resonant(N, 0)
    F = homological_solve(non)
    Q = quadratic_tensor(free_weights(M), M)
    terms = lie_series(Q, F, order).terms + lie_series(N, F, order).terms
    q = unit_h1(M, 0)
    lams = np.array([1.0, 0.5, 0.25, 0.125])
    errs = []
    for lam in lams:
        x = q * lam
        g = lie_transform(x, F, FlowConfig(dt=1e-3))
        exact = evaluate(Q, g) + evaluate(N, g)
        errs.append(abs(exact - sum(evaluate(h, x) for h in terms)))
    slope = np.polyfit(np.log(lams), np.log(errs), 1)[0]
    # first omitted term is {H0, F}^(4) / 4!, of degree 2 + 4 * 2
    expected = 2 + (order + 1) * (F.degree - 2)
    ok = slope >= expected - 0.5
    assert report(5, ok, f"slope {slope:.2f} vs expected order {expected}")


def test_06_simulator(report):
    phase = 0.0
    for p in (1, 2, 3):
        a, n = 0.8, 2
        cfg = SimulationConfig(p=p, M=4, dt=1e-3, T=1.0, ic=InitialCondition("plane_wave", a, n))
        phase = max(phase, abs(final_field(cfg)[n] - a * np.exp(1j * (n * n + a ** (2 * p)))))

    q = random_field(8, np.random.default_rng(3), decay=1.5) * 2.0
    ref = final_field(SimulationConfig(M=8, T=0.5, dt=1e-4), q)
    errs = [np.linalg.norm((final_field(SimulationConfig(M=8, T=0.5, dt=dt), q) - ref).coeffs) for dt in (0.02, 0.01)]
    rate = float(np.log2(errs[0] / errs[1]))

    ts = run(SimulationConfig(p=1, M=64, dt=1e-3, T=10.0, record_every=1000))
    m, h = ts.column("mass"), ts.column("hamiltonian")
    dm = float(np.abs(m / m[0] - 1).max())
    dh = float(np.abs(h / h[0] - 1).max())
    ok = phase <= 1e-8 and rate >= 3.5 and dm <= 1e-10 and dh <= 1e-8
    assert report(6, ok, f"phase error {phase:.1e}, order {rate:.2f}, mass drift {dm:.1e}, hamiltonian drift {dh:.1e}")


def test_07_hh_cancellation(report):
    M = N = 16
    K = 4
    H = split_into_sum(free_weights(M), [make_nls_nonlinearity(1, M)], K)
    reduced, _ = reduce(H, ReductionConfig(K=K, steps=1, taylor_order=2, max_degree=6))
    R = reduced.tagged(Tag.RESONANT)
    cfg = SimulationConfig(p=1, M=M, N=N, s=1.5, dt=1e-3, T=1.0, record_every=100)
    ts = run(cfg, reduced)
    # replay the trajectory to get the scale of each record
    q = initial_field(cfg)
    worst12 = worst3 = 0.0
    for k, row in enumerate(ts.rows):
        if k:
            for _ in range(cfg.record_every):
                q = step(q, cfg.dt, cfg)
        t = hh_terms(R, q, cfg.spec, reduced.quadratic_weights)
        assert t.v1 == row["hh1"] and t.v3 == row["hh3"]
        worst12 = max(worst12, abs(t.v1 + t.v2) / t.scale)
        worst3 = max(worst3, abs(t.v3) / t.scale)
    ok = worst12 <= 1e-10 and worst3 <= 1e-10
    assert report(7, ok, f"|hh1+hh2|/scale {worst12:.1e}, |hh3|/scale {worst3:.1e} over {len(ts.rows)} records")


def test_08_multiplier_inequalities(report):
    rng = np.random.default_rng(2024)
    M = 128
    violations = checked = 0
    for _ in range(10_000):
        q = random_field(M, rng, decay=float(rng.uniform(0.3, 2.5)), scale=float(rng.uniform(0.1, 10)))
        for s in (1.25, 1.5, 2.0, 3.0):
            hs = sobolev_norm(q, s)
            for N in (4, 16, 64):
                Dq = apply_multiplier(q, MultiplierSpec(N, s))
                h1 = sobolev_norm(Dq, 1)
                high = np.sqrt(mass(project_high(Dq, N)))
                checked += 1
                violations += high > h1 / N * (1 + 1e-12)
                violations += h1 > hs * (1 + 1e-12)
                violations += hs > 2 ** (s - 1) * N ** (s - 1) * h1 * (1 + 1e-12)
    ok = violations == 0
    assert report(8, ok, f"{violations} violations over {checked} (field, s, N) cases")


def test_09_reduction_decay(report):
    M = 6
    ratios, strict = {}, {}
    for K in (4, 8, 16):
        H = split_into_sum(free_weights(M), [make_nls_nonlinearity(1, M)], K)
        _, rep = reduce(H, ReductionConfig(K=K, steps=3))
        ratios[K] = rep.steps[0].nonres_norm_upper / rep.steps[0].nonres_norm_upper_before
        strict[K] = all(s.nonres_norm_upper < s.nonres_norm_upper_before for s in rep.steps)
    monotone = ratios[4] > ratios[8] > ratios[16]
    ok = monotone and strict[8] and strict[16]
    detail = ", ".join(f"K={K}: ratio {ratios[K]:.3f} strict {strict[K]}" for K in ratios)
    assert report(9, ok, detail)


GROWTH_EXPONENT = {2: 0.5 * (1.5 - 1) + 0.1, 1: 4 / 9 * (1.5 - 1) + 0.1}


@pytest.mark.parametrize("p", [2, 1])
def test_10_growth_consistency(report, p):
    T, bound = 50.0, GROWTH_EXPONENT[p]
    lines, ok = [], True
    for seed in (1, 2, 3):
        start = time.perf_counter()
        ts = run(SimulationConfig(p=p, M=64, N=16, s=1.5, dt=1e-3, T=T, seed=seed, record_every=500))
        took = time.perf_counter() - start
        fit = growth_fit(ts)
        hs = ts.column("hs_norm")
        sup_ok = hs.max() <= 2 * hs[0] * (1 + T) ** bound
        ok &= fit.alpha <= bound and sup_ok and took <= 300
        lines.append(f"seed {seed}: alpha {fit.alpha:+.4f}, sup ratio {hs.max() / hs[0]:.3f}, {took:.0f} s")
    assert report(10, ok, f"p={p} (alpha bound {bound:.3f}): " + "; ".join(lines))


def test_11_ds_scan(report):
    base = ds_exhaustive(2.0, 1.0, 8)
    rep = ds_lemma_scan(2.0, 1.0, 64, 100_000, seed=0)
    ok = np.isfinite(base) and base == pytest.approx(DS_BASELINE, rel=1e-12) and rep["max_ratio"] <= 4 * base
    assert report(11, ok, f"baseline {base:.6f}, random max {rep['max_ratio']:.4f} (limit {4 * base:.4f})")
