"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Expected values come from independent oracles (scipy incomplete gamma,
quadrature, hand-derived step functions), never from the code under test.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate, special, stats

from conftest import ACCEPTANCE_LINES
from levytrim import diagnostics as dg
from levytrim.diagnostics import ExperimentConfig, convergence_experiment, ks_two_sample
from levytrim.jump_sampler import (choose_epsilon, quadratic_variation, sample_ordered_jumps,
                                   sample_path, sample_path_batch)
from levytrim.levy_measure import (CompositeTail, LevyMeasureSpec, PowerLaw, PowerLawCapped,
                                   StepAtoms, U_fn, ZERO_TAIL, combine, power_measure)
from levytrim.representation import (kappa, rho, sample_tie_G, sample_trimmed_asym_rep,
                                     sample_trimmed_mod_rep)
from levytrim.smoother import SmoothedTail, smooth_path, smooth_tail
from levytrim.stable_limits import norming
from levytrim.streams import stream
from levytrim.trimmer import (trim_asymmetric, trim_batch_asymmetric, trim_batch_modulus,
                              trim_modulus)

N = 100_000
SEED = 2024
C3_MEASURES = {
    "sym a=0.8": power_measure(0.8, 0.5, 0.5, cap=1.0),
    "sym a=1.2": power_measure(1.2, 0.5, 0.5, cap=1.0),
    "asym(2,1) a=1.2": power_measure(1.2, 2.0, 1.0, cap=1.0),
}
C3_MODES = [("asymmetric", r, s) for r, s in ((0, 0), (1, 0), (0, 1), (1, 1), (2, 1), (2, 2))]
C3_MODES += [("modulus", 1, 0), ("modulus", 2, 0)]
SMOOTHED_ATOMIC = LevyMeasureSpec(
    0.0, 0.0, combine([PowerLawCapped(0.5, 1.2, 1.0), StepAtoms(((0.05, 2.0),))]),
    PowerLawCapped(0.5, 1.2, 1.0))


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def _c3_reports(threads: int) -> dict:
    dg._REFERENCE_CACHE.clear()
    out = {}
    for name, m in C3_MEASURES.items():
        for mode, r, s in C3_MODES:
            cfg = ExperimentConfig(m, mode, r, s, n=N, seed=SEED)
            out[(name, mode, r, s)] = convergence_experiment(cfg, threads=threads)
    return out


@pytest.fixture(scope="module")
def c3_single_thread():
    t0 = time.perf_counter()
    reps = _c3_reports(threads=1)
    return reps, time.perf_counter() - t0


def test_criterion_1_order_statistics():
    t, c = 0.01, 0.5
    worst, slowest, ok = 0.0, 0.0, True
    for alpha in (0.8, 1.2, 1.7):
        m = power_measure(alpha, c, c)
        for r in (0, 1, 2):
            t0 = time.perf_counter()
            jumps = sample_ordered_jumps(m, t, r + 1, "plus", stream(SEED, "c1", alpha, r), n=N)
            # P(J_(r+1) <= y) = P(Poisson(t c y^-a) <= r)
            cdf = lambda y: special.gammaincc(r + 1, t * c * np.asarray(y) ** -alpha)
            d = stats.kstest(jumps[:, r], cdf).statistic
            elapsed = time.perf_counter() - t0
            worst, slowest = max(worst, d), max(slowest, elapsed)
            ok &= d < 0.01 and elapsed < 30
    report(1, ok, f"max KS {worst:.4f} < 0.01, slowest cell {slowest:.1f}s")
    assert ok


def test_criterion_2_representation_equivalence():
    m, t = power_measure(1.2, 0.5, 0.5), 0.01
    t0 = time.perf_counter()
    ds = {}
    for r, s in ((1, 0), (0, 1), (2, 1)):
        rep, _, _ = sample_trimmed_asym_rep(m, t, r, s, stream(SEED, "c2rep", r, s), N)
        batch = sample_path_batch(m, t, N, stream(SEED, "c2path", r, s), r=r, s=s)
        ds[f"({r},{s})"] = ks_two_sample(rep, trim_batch_asymmetric(batch, r, s)[0])[0]
    for r in (1, 2):
        rep, _ = sample_trimmed_mod_rep(m, t, r, stream(SEED, "c2rep_mod", r), N)
        batch = sample_path_batch(m, t, N, stream(SEED, "c2path_mod", r), r=r, modulus=True)
        ds[f"mod{r}"] = ks_two_sample(rep, trim_batch_modulus(batch, r)[0])[0]
    elapsed = time.perf_counter() - t0
    ok = max(ds.values()) < 0.02 and elapsed < 300
    detail = " ".join(f"{k}={v:.4f}" for k, v in ds.items())
    report(2, ok, f"KS {detail} (< 0.02), {elapsed:.0f}s")
    assert ok


def _c3_summary(reps: dict) -> tuple[bool, str]:
    failed = [k for k, rep in reps.items() if not rep.passed]
    worst = max(rep.rows[-1].ks_distance for rep in reps.values())
    return not failed, f"{len(reps) - len(failed)}/{len(reps)} configs pass, worst final KS {worst:.4f}" + (
        f", failing {failed}" if failed else "")


def test_criterion_3_forward_convergence(c3_single_thread):
    reps, elapsed = c3_single_thread
    ok, detail = _c3_summary(reps)
    ok &= elapsed < 1200
    report(3, ok, f"{detail}, {elapsed:.0f}s")
    assert ok


def test_criterion_4_tie_machinery():
    plus = StepAtoms(((1.0, 2.0), (2.0, 1.0)))
    one = LevyMeasureSpec(0.0, 0.0, plus, ZERO_TAIL)
    sym = LevyMeasureSpec(0.0, 0.0, plus, StepAtoms(((1.0, 2.0),)))
    # plus tail: 3 on (0,1), 1 on [1,2), 0 from 2 on
    exact = [rho(one, "plus", 1.5) == 1.5, rho(one, "plus", 0.5) == 0.5,
             rho(one, "plus", 1.0) == 2.0, rho(one, "plus", 2.5) == 0.5,
             # two-sided tail 5 on (0,1), 1 on [1,2): overshoot 3 at v = 2, split by atom mass
             kappa(sym, "plus", 2.0) == 1.5, kappa(sym, "minus", 2.0) == 1.5,
             kappa(one, "plus", 0.5) == 0.5, kappa(one, "minus", 0.5) == 0.0]
    probs, within = [], []
    for t in (1.0, 0.1, 0.01):
        g = sample_tie_G(one, "plus", t, 1.5, stream(SEED, "c4", t), n=N)
        p = 1 - math.exp(-t * 1.5)
        within.append(abs((g != 0).mean() - p) < 3 * math.sqrt(p * (1 - p) / N))
        probs.append(p)
    monotone = probs[0] > probs[1] > probs[2]
    ok = all(exact) and all(within) and monotone
    report(4, ok, f"rho/kappa exact {sum(exact)}/{len(exact)}, P(G!=0) within 3 SE "
                  f"{sum(within)}/3, tie probabilities {['%.4f' % p for p in probs]}")
    assert ok


def test_criterion_5_smoothing():
    unit = LevyMeasureSpec(0.0, 0.0, StepAtoms(((1.0, 1.0),)), ZERO_TAIL)
    xs = np.linspace(0.01, 3.0, 300)
    got = np.array([smooth_tail(unit, "plus", x) for x in xs])
    err = float(np.max(np.abs(got - np.clip(2.0 - xs, 0.0, 1.0))))

    # the step-atom test measure, then a power law with atoms: there the gap at
    # delta = 1e-4 is slope * 2 delta, so continuity shows as linear decay in delta
    steps = SmoothedTail(StepAtoms(((1.0, 2.0), (2.0, 1.0))))
    jump = max(abs(F(a - 1e-4) - F(a + 1e-4))
               for F in (SmoothedTail(unit.plus), steps) for a in (1.0, 2.0))
    mixed = SmoothedTail(combine([PowerLaw(1.0, 1.2), StepAtoms(((0.3, 2.0), (1.0, 1.0)))]))
    gaps = [[abs(mixed(a - d) - mixed(a + d)) for d in (1e-4, 1e-5, 1e-6)] for a in (0.3, 1.0)]
    linear = all(g[1] < 0.11 * g[0] and g[2] < 0.11 * g[1] for g in gaps)

    base = LevyMeasureSpec(0.0, 0.0, combine([PowerLaw(1.0, 1.2), StepAtoms(((0.3, 2.0),))]),
                           PowerLaw(0.5, 1.2))
    t = 0.5
    eps = choose_epsilon(base, t, expected_jumps=64, r=2, s=2, modulus=True)
    violations, mod_violations = 0, 0
    for i in range(10_000):
        p = sample_path(base, t, epsilon=eps, rng=stream(SEED, "c5path", i))
        q = smooth_path(p, stream(SEED, "c5mark", i))
        qv = quadratic_variation(p) * (1 + 1e-12)
        violations += abs(q.value - p.value) > qv
        for r, s in ((1, 0), (0, 1), (2, 1), (2, 2)):
            violations += abs(trim_asymmetric(q, r, s).trimmed_value
                              - trim_asymmetric(p, r, s).trimmed_value) > qv
        mod_violations += abs(trim_modulus(q, 2).trimmed_value - trim_modulus(p, 2).trimmed_value) > qv

    reps = {}
    dg._REFERENCE_CACHE.clear()
    for mode, r, s in C3_MODES:
        cfg = ExperimentConfig(SMOOTHED_ATOMIC, mode, r, s, n=N, seed=SEED, smooth=True)
        reps[(mode, r, s)] = convergence_experiment(cfg, threads=1)
    c3_ok, c3_detail = _c3_summary(reps)

    ok = err < 1e-6 and jump < 1e-3 and linear and violations == 0 and c3_ok
    report(5, ok, f"unit-atom max error {err:.1e}, atom gap {jump:.1e} at delta 1e-4 "
                  f"(power law plus atoms: linear decay {linear}), QV bound violations "
                  f"{violations}/50000 untrimmed and asymmetric [modulus(2), not a per-path "
                  f"bound: {mod_violations}/10000], smoothed atomic measure: {c3_detail}")
    assert ok


def _u_oracle(m, z):
    pts = [a for a, _ in m.both.atoms() if a < z] or None
    val, _ = integrate.quad(lambda y: y * float(m.both(y)), 0.0, z, points=pts,
                            epsabs=1e-14, epsrel=1e-12, limit=500)
    return m.sigma2 + 2.0 * val


def test_criterion_6_analytic_toolkit():
    atoms = StepAtoms(((1.0, 2.0), (2.0, 1.0)))
    families = {
        "power": LevyMeasureSpec(0.0, 0.0, PowerLaw(0.7, 1.2), PowerLaw(0.4, 1.2)),
        "capped": power_measure(0.8, 1.0, 0.5, cap=1.5),
        "atoms": LevyMeasureSpec(0.0, 0.0, atoms, StepAtoms(((0.5, 1.0),))),
        "composite": LevyMeasureSpec(
            0.0, 0.0, CompositeTail((PowerLaw(1.0, 1.2), PowerLaw(1.0, 0.2))),
            CompositeTail((PowerLawCapped(1.0, 0.9, 2.0), atoms))),
    }
    u_err = 0.0
    galois_bad = 0
    rng = np.random.default_rng(SEED)
    for m in families.values():
        for z in np.logspace(-4, 0.5, 12):
            u = float(U_fn(m, z))
            u_err = max(u_err, abs(u - _u_oracle(m, z)) / u)
        for side in ("plus", "minus", "both"):
            F = m.side(side)
            v = np.exp(rng.uniform(-3, 4, 10_000))
            y = np.exp(rng.uniform(-4, 1.5, 10_000))
            galois_bad += int(np.sum((np.asarray(F.inverse(v)) > y) != (np.asarray(F(y)) > v)))

    z = np.logspace(-4, -6, 5)
    perturbed = {  # c x^-a (1 + x) and a power law with atoms and a cap
        "x^-1.2(1+x)": (LevyMeasureSpec(0.0, 0.0, CompositeTail((PowerLaw(1.0, 1.2),
                                                                 PowerLaw(1.0, 0.2))), ZERO_TAIL), 1.2),
        "capped 0.8 + atom": (LevyMeasureSpec(0.0, 0.0, combine([PowerLawCapped(1.0, 0.8, 1.0),
                                                                StepAtoms(((0.5, 3.0),))]),
                                              PowerLawCapped(2.0, 0.8, 1.0)), 0.8),
    }
    rv_err = max(abs(dg.rv_index_estimate(m, z, 2.0).alpha / a - 1) for m, a in perturbed.values())
    sign_err = 0.0
    for cp, cm in ((1.0, 1.0), (2.0, 1.0), (0.3, 0.7)):
        est = dg.sign_ratio_estimate(power_measure(1.2, cp, cm), np.logspace(-2, -6, 9))
        sign_err = max(sign_err, float(np.max(np.abs(est.ratios - cp / (cp + cm)))))

    ok = u_err < 1e-8 and galois_bad == 0 and rv_err < 0.02 and sign_err < 1e-12
    report(6, ok, f"U identity rel err {u_err:.1e}, Galois violations {galois_bad}/120000, "
                  f"rv rel err {rv_err:.2e}, sign ratio err {sign_err:.1e}")
    assert ok


C7_MEASURES = [power_measure(a, 0.5, 0.5) for a in (0.8, 1.2, 1.7)]
C7_MEASURES += list(C3_MEASURES.values()) + [SMOOTHED_ATOMIC]
C7_N = (100, 101, 125, 250, 1000, 10_000, 100_000)


def _norming_ratio(m, n):
    return norming(m, 1 / n)[1] / norming(m, 1 / (n + 1))[1]


def _scaling_error():
    err = 0.0
    rng = np.random.default_rng(SEED)
    for alpha in (0.5, 0.8, 1.2, 1.7):
        m = power_measure(alpha, 0.3, 0.7)
        for t, lam in zip(10 ** rng.uniform(-6, 0, 50), 10 ** rng.uniform(-2, 2, 50)):
            got = norming(m, lam * t)[1] / norming(m, t)[1]
            err = max(err, abs(got / lam ** (1 / alpha) - 1))
    return err


@pytest.mark.xfail(strict=True, reason=(
    "for a pure power law of index a < 1 the ratio is exactly (1 + 1/n)^(1/a), which exceeds "
    "1.01 for n < 1/(1.01^a - 1), e.g. 1.0125 at a = 0.8, n = 100"))
def test_criterion_7_norming():
    ratios = [_norming_ratio(m, n) for m in C7_MEASURES for n in C7_N]
    in_band = all(0.99 <= q <= 1.01 for q in ratios)
    rv_err = _scaling_error()
    ok = in_band and rv_err < 1e-12
    report(7, ok, f"b ratios in [{min(ratios):.5f}, {max(ratios):.5f}] over n >= 100 "
                  f"(band [0.99, 1.01]), power-law scaling rel err {rv_err:.1e}")
    assert ok


def test_criterion_7_band_violation_is_exact_and_confined():
    """The only band exits are where the closed-form ratio itself exits the band."""
    for alpha in (0.8, 1.2, 1.7):
        m = power_measure(alpha, 0.5, 0.5)
        for n in C7_N:
            exact = (1 + 1 / n) ** (1 / alpha)
            assert _norming_ratio(m, n) == pytest.approx(exact, rel=1e-12)
    for m in C7_MEASURES:
        alpha = dg.rv_index_estimate(m, np.logspace(-4, -6, 5), 2.0).alpha
        n_min = 1 / (1.01 ** alpha - 1)
        for n in C7_N:
            if n >= n_min:
                assert 0.99 <= _norming_ratio(m, n) <= 1.01
    assert _scaling_error() < 1e-12


def test_criterion_8_thread_reproducibility(c3_single_thread):
    first, _ = c3_single_thread
    second = _c3_reports(threads=3)
    same = [first[k].to_csv() == second[k].to_csv() and first[k].to_json() == second[k].to_json()
            for k in first]
    ok = all(same)
    report(8, ok, f"{sum(same)}/{len(same)} criterion-3 reports identical for threads 1 vs 3")
    assert ok
