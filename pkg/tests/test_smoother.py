import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from levytrim.jump_sampler import PathSample, quadratic_variation, sample_path, sample_path_batch
from levytrim.levy_measure import (DomainError, LevyMeasureSpec, PowerLaw, PowerLawCapped,
                                   StepAtoms, ZERO_TAIL, combine, nu, power_measure)
from levytrim.smoother import (SmoothedTail, is_diffuse, preimage, smooth_batch, smooth_measure,
                               smooth_path, smooth_tail)
from levytrim.streams import stream
from levytrim.trimmer import trim_asymmetric, trim_modulus

UNIT = LevyMeasureSpec(0.0, 0.0, StepAtoms(((1.0, 1.0),)), ZERO_TAIL)


def unit_oracle(x):
    return np.clip(2.0 - x, 0.0, 1.0)


def test_unit_atom_piecewise_form():
    xs = np.linspace(0.01, 3.0, 300)
    got = np.array([smooth_tail(UNIT, "plus", x) for x in xs])
    assert np.max(np.abs(got - unit_oracle(xs))) < 1e-6
    assert smooth_tail(UNIT, "plus", 1.25) == pytest.approx(0.75, abs=1e-9)


def test_continuity_at_atom():
    F = SmoothedTail(UNIT.plus)
    for a in (1.0, 2.0):
        assert abs(F(a - 1e-4) - F(a + 1e-4)) < 1e-3


def test_preimage_solves_quadratic():
    u = np.array([0.0, 1e-12, 0.3, 1.0])
    y = preimage(u, 2.5)
    assert np.allclose(y + u * y * y, 2.5)


def test_power_law_sandwich_and_blowup():
    base = power_measure(1.2, 1.0, 1.0)
    F = SmoothedTail(base.plus)
    for x in (1e-3, 0.1, 1.0, 5.0):
        val = F(x)
        assert base.plus(x) <= val <= base.plus(float(preimage(1.0, x)))
    assert F(1e-8) > 0.9 * base.plus(1e-8)
    assert F(1e-8) > 1e9


def test_power_law_spot_values_monte_carlo():
    base = PowerLaw(1.0, 1.2)
    F = SmoothedTail(base)
    u = stream(1).random(1_000_000)
    for x in (0.05, 0.5, 2.0):
        vals = base(preimage(u, x))
        se = vals.std() / math.sqrt(u.size)
        assert abs(vals.mean() - F(x)) < 3 * se


def test_marked_jump_counts_match_smoothed_tail():
    m = power_measure(1.2, 1.0, 1.0, cap=2.0)
    t, n = 1.0, 20_000
    batch = sample_path_batch(m, t, n, stream(2))
    sm = smooth_batch(batch, m, stream(3))
    F = SmoothedTail(m.plus)
    for x in (0.2, 0.8, 1.5, 2.5):
        counts = (sm.pos > x).sum(axis=1)
        expect = t * F(x)
        assert abs(counts.mean() - expect) < 3 * math.sqrt(max(expect, 1e-3) / n)


def test_smooth_path_bounds():
    m = LevyMeasureSpec(0.0, 0.0, combine([PowerLaw(1.0, 1.2), StepAtoms(((0.3, 2.0),))]),
                        PowerLaw(0.5, 1.2))
    for i in range(20):
        p = sample_path(m, 0.5, rng=stream(4, i))
        q = smooth_path(p, stream(5, i))
        assert np.all(np.sign(q.sizes) == np.sign(p.sizes))
        grow = np.abs(q.sizes) - np.abs(p.sizes)
        assert np.all(grow >= 0) and np.all(grow <= p.sizes ** 2 * (1 + 1e-12))
        assert abs(q.value - p.value) <= quadratic_variation(p)
        assert q.small_component == p.small_component


def test_is_diffuse():
    assert is_diffuse(power_measure(1.2))
    rep = is_diffuse(UNIT)
    assert not rep and rep.atoms_plus == [(1.0, 1.0)]
    sm = is_diffuse(smooth_measure(UNIT))
    assert sm.diffuse and sm.max_jump < 1e-3


def _nu_star_oracle(alpha, cap, atoms, gamma, b):
    """``nu(b) + E int_{(0,b]} [x* 1{x* <= b} - x] Pi(dx)`` with the mark integrated out."""
    def g(x):
        q = min(1.0, (b - x) / (x * x))
        return x * q + 0.5 * x * x * q * q - x
    dens = lambda x: alpha * x ** (-alpha - 1)
    val = integrate.quad(lambda x: g(x) * dens(x), 0, min(b, cap), epsabs=1e-13, limit=200)[0]
    val += sum(m * g(a) for a, m in atoms if a <= b)
    base_nu = gamma - integrate.quad(lambda x: x * dens(x), b, 1)[0] - sum(
        m * a for a, m in atoms if b < a <= 1)
    return base_nu + val


@pytest.mark.parametrize("b", [0.05, 0.3, 0.8])
def test_smoothed_drift_against_truncated_mean(b):
    atoms = ((0.2, 1.5), (0.6, 0.5))
    F = combine([PowerLawCapped(1.0, 1.2, 2.0), StepAtoms(atoms)])
    m = LevyMeasureSpec(0.25, 0.0, F, ZERO_TAIL)
    sm = smooth_measure(m)
    assert float(nu(sm, b)) == pytest.approx(_nu_star_oracle(1.2, 2.0, atoms, 0.25, b), abs=1e-6)


@given(st.floats(0.05, 3.0))
@settings(max_examples=30, deadline=None)
def test_smoothed_tail_monotone(x):
    F = SmoothedTail(combine([PowerLaw(1.0, 0.8), StepAtoms(((0.5, 1.0), (1.5, 2.0)))]))
    assert F(x) >= F(x * 1.01) - 1e-9


def test_smooth_tail_domain():
    with pytest.raises(DomainError):
        smooth_tail(UNIT, "plus", 0.0)


def test_modulus_trim_can_flip_sign_under_smoothing():
    # |-0.45| > 0.44 before smoothing; a full mark makes 0.44 -> 0.6336 the larger one
    p = PathSample(t=1.0, epsilon=0.1, times=np.array([0.2, 0.6]), sizes=np.array([0.44, -0.45]),
                   drift_component=0.0, small_component=0.0, gaussian_component=0.0,
                   small_variance=0.0)
    q = replace(p, sizes=np.array([0.44 + 0.44 ** 2, -0.45]), value=p.value + 0.44 ** 2)
    raw, smoothed = trim_modulus(p, 1), trim_modulus(q, 1)
    assert np.sign(raw.removed_modulus[0]) != np.sign(smoothed.removed_modulus[0])
    assert abs(smoothed.trimmed_value - raw.trimmed_value) > quadratic_variation(p)
    for r, s in ((1, 0), (0, 1), (1, 1)):
        gap = trim_asymmetric(q, r, s).trimmed_value - trim_asymmetric(p, r, s).trimmed_value
        assert abs(gap) <= quadratic_variation(p)
