"""Jump structure of a Lévy process on ``(0, t]``.

Two samplers live here.  ``sample_ordered_jumps`` uses the Gamma/inverse-tail
representation of the largest jumps.  The path sampler draws the jumps above a
cutoff ``epsilon`` as a Poisson point process, i.i.d. sizes by inverse-tail
transform of uniforms, and substitutes a matched-variance Gaussian for the
compensated jumps below the cutoff.

Positive and negative jumps are sampled as independent Poisson processes
driven by ``Pi^+`` and ``Pi^-``; this has the same joint law as drawing
magnitudes from the two-sided tail and thinning signs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .levy_measure import (DomainError, LevyMeasureSpec, TailFunction, V_fn,
                           signed_first_moment)
from .streams import as_generator

DEFAULT_EXPECTED_JUMPS = 10_000
BATCH_EXPECTED_JUMPS = 64
COVERAGE = 1.0 - 1e-6


@dataclass(frozen=True)
class JumpRecord:
    time: float
    size: float


@dataclass
class PathSample:
    """Terminal value of one simulated path together with its recorded jumps."""

    t: float
    epsilon: float
    times: np.ndarray
    sizes: np.ndarray
    small_component: float
    drift_component: float
    gaussian_component: float
    small_variance: float = 0.0
    value: float = field(default=math.nan)

    def __post_init__(self):
        if math.isnan(self.value):
            self.value = (self.drift_component + self.gaussian_component
                          + self.small_component + float(np.sum(self.sizes)))

    @property
    def jumps(self) -> list[JumpRecord]:
        return [JumpRecord(float(a), float(b)) for a, b in zip(self.times, self.sizes)]

    def summary(self) -> dict:
        return {"t": self.t, "epsilon": self.epsilon, "n_jumps": int(self.sizes.size),
                "value": self.value, "drift_component": self.drift_component,
                "small_component": self.small_component,
                "gaussian_component": self.gaussian_component,
                "small_variance": self.small_variance,
                "quadratic_variation": quadratic_variation(self)}


@dataclass
class PathBatch:
    """``n`` independent paths in padded form.

    ``pos`` and ``neg`` hold jump magnitudes above the cutoff, sorted
    descending along each row and padded with zeros.
    """

    t: float
    epsilon: float
    pos: np.ndarray
    neg: np.ndarray
    small_component: np.ndarray
    drift_component: float
    gaussian_component: np.ndarray
    small_variance: float

    @property
    def n(self) -> int:
        return self.pos.shape[0]

    @property
    def values(self) -> np.ndarray:
        return (self.drift_component + self.gaussian_component + self.small_component
                + self.pos.sum(axis=1) - self.neg.sum(axis=1))

    def quadratic_variation(self) -> np.ndarray:
        return (self.pos ** 2).sum(axis=1) + (self.neg ** 2).sum(axis=1) + self.small_variance

    def path(self, i: int, rng=None) -> PathSample:
        """Row ``i`` as a :class:`PathSample` with uniform jump times."""
        rng = as_generator(rng)
        p = self.pos[i][self.pos[i] > 0]
        q = self.neg[i][self.neg[i] > 0]
        sizes = np.concatenate([p, -q])
        times = self.t * (1.0 - rng.random(sizes.size))
        order = np.argsort(times, kind="stable")
        return PathSample(self.t, self.epsilon, times[order], sizes[order],
                          float(self.small_component[i]), self.drift_component,
                          float(self.gaussian_component[i]), self.small_variance,
                          float(self.values[i]))


# -- Poisson point process machinery -----------------------------------------------

def level_window_jumps(F: TailFunction, t: float, top_level, bottom_level, rng):
    """Jumps whose tail level lies in ``(top_level, bottom_level]``, one window per sample.

    For sample ``i`` this is the Poisson process of jumps with sizes in
    ``(F^<-(bottom_i), F^<-(top_i))``: counts are Poisson with mean
    ``t (bottom_i - top_i)`` and sizes are ``F^<-`` of uniform levels.
    Returns ``(counts, sizes)`` with ``sizes`` grouped by sample.
    """
    top = np.asarray(top_level, dtype=float)
    bottom = np.asarray(bottom_level, dtype=float)
    width = np.maximum(bottom - top, 0.0)
    counts = rng.poisson(t * width)
    total = int(counts.sum())
    if total == 0:
        return counts, np.zeros(0)
    idx = np.repeat(np.arange(counts.size), counts)
    levels = bottom[idx] - rng.random(total) * width[idx]
    return counts, F.inverse(levels)


def padded(counts: np.ndarray, sizes: np.ndarray, width: int = 0) -> np.ndarray:
    """Ragged per-sample sizes as an ``(n, K)`` array sorted descending, zero-padded."""
    n = counts.size
    k = max(int(counts.max(initial=0)), width)
    out = np.zeros((n, k))
    if sizes.size:
        rows = np.repeat(np.arange(n), counts)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        cols = np.arange(sizes.size) - np.repeat(starts, counts)
        out[rows, cols] = sizes
        out = -np.sort(-out, axis=1)
    return out


def choose_epsilon(measure: LevyMeasureSpec, t: float,
                   expected_jumps: float = DEFAULT_EXPECTED_JUMPS,
                   r: int = 0, s: int = 0, modulus: bool = False) -> float:
    """Cutoff with ``t Pi(eps) <= expected_jumps``, lowered until trimming is covered.

    Coverage means the ``r`` (``s``, or modulus ``r``) largest jumps exceed the
    cutoff with probability at least ``1 - 1e-6``, using the incomplete-gamma
    law of the ordered jumps.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    F = measure.both
    m = float(expected_jumps)
    for _ in range(200):
        eps = float(F.inverse(m / t))
        if eps == 0.0:
            atoms = F.atoms()
            if not atoms:
                raise DomainError("cannot place a cutoff below a measure without atoms")
            eps = 0.5 * atoms[0][0]
        eps = min(eps, 1.0)
        need = [(r, measure.plus), (s, measure.minus)] if not modulus else [(r, F)]
        if all(k == 0 or special.gammainc(k, t * float(G(eps))) >= COVERAGE for k, G in need):
            return eps
        if all(k == 0 or not G.infinite_activity for k, G in need):
            return eps
        m *= 2.0
    raise DomainError("could not find a cutoff covering the trimmed jumps")


def small_jump_terms(measure: LevyMeasureSpec, t: float, eps_plus, eps_minus):
    """Mean and variance of the jumps at or below the per-side cutoffs.

    Jumps in ``(1, eps]`` are uncompensated and contribute their mean; the
    rest is compensated.  Returns ``(mean, variance)`` arrays.
    """
    ep = np.asarray(eps_plus, dtype=float)
    em = np.asarray(eps_minus, dtype=float)
    var = t * (measure.plus.m2(ep) + measure.minus.m2(em))
    mean = t * (measure.plus.m1(1.0, np.maximum(ep, 1.0))
                - measure.minus.m1(1.0, np.maximum(em, 1.0)))
    return np.asarray(mean, dtype=float), np.asarray(var, dtype=float)


def sample_path_batch(measure: LevyMeasureSpec, t: float, n: int, rng,
                      epsilon: float | None = None,
                      expected_jumps: float = BATCH_EXPECTED_JUMPS,
                      r: int = 0, s: int = 0, modulus: bool = False) -> PathBatch:
    """``n`` independent paths at horizon ``t`` with a common cutoff."""
    if t <= 0:
        raise DomainError("t must be positive")
    rng = as_generator(rng)
    if epsilon is None:
        epsilon = choose_epsilon(measure, t, expected_jumps, r, s, modulus)
    if not 0 < epsilon <= 1:
        raise DomainError(f"cutoff must lie in (0, 1], got {epsilon}")
    zeros = np.zeros(n)
    cp, sp = level_window_jumps(measure.plus, t, zeros, np.full(n, measure.plus(epsilon)), rng)
    cm, sm = level_window_jumps(measure.minus, t, zeros, np.full(n, measure.minus(epsilon)), rng)
    small_var = t * (float(V_fn(measure, epsilon)) - measure.sigma2)
    small = math.sqrt(max(small_var, 0.0)) * rng.standard_normal(n)
    gauss = math.sqrt(measure.sigma2 * t) * rng.standard_normal(n) if measure.sigma2 else zeros
    drift = t * measure.gamma - t * float(signed_first_moment(measure, epsilon, 1.0))
    return PathBatch(t, epsilon, padded(cp, sp, max(r, 1)), padded(cm, sm, max(s, 1)),
                     small, drift, gauss, small_var)


def sample_path(measure: LevyMeasureSpec, t: float, epsilon: float | None = None,
                rng=None) -> PathSample:
    """One path: recorded jumps above ``epsilon``, Gaussian remainder, drift.

    ``epsilon`` defaults to the smallest cutoff with ``t Pi(eps) <= 1e4``.
    """
    rng = as_generator(rng)
    if epsilon is None:
        epsilon = choose_epsilon(measure, t)
    batch = sample_path_batch(measure, t, 1, rng, epsilon=epsilon)
    return batch.path(0, rng)


def quadratic_variation(path: PathSample) -> float:
    """Sum of squared recorded jumps plus the expected sub-cutoff contribution."""
    return float(np.sum(np.square(path.sizes))) + path.small_variance


def sample_ordered_jumps(measure: LevyMeasureSpec, t: float, k: int, side: str, rng=None,
                         n: int | None = None, gammas=None) -> np.ndarray:
    """The ``k`` largest jump magnitudes ``F^<-(Gamma_j / t)`` on one side.

    ``Gamma_j`` are cumulative unit exponentials; pass ``gammas`` to force
    them.  Returns shape ``(k,)`` or ``(n, k)``.
    """
    if k < 1:
        raise DomainError("k must be at least 1")
    if t <= 0:
        raise DomainError("t must be positive")
    F = measure.side(side)
    if not F.infinite_activity:
        raise DomainError(
            f"side {side!r} has finite activity; the {k} largest jumps need not exist, "
            "use the path sampler instead")
    if gammas is None:
        rng = as_generator(rng)
        shape = (k,) if n is None else (n, k)
        gammas = np.cumsum(rng.standard_exponential(shape), axis=-1)
    gammas = np.asarray(gammas, dtype=float)
    return F.inverse(gammas / t)


def dump_path_csv(path: PathSample, fh) -> None:
    """Write ``time,size`` rows for a path's recorded jumps."""
    w = csv.writer(fh)
    w.writerow(["time", "size"])
    for tm, sz in zip(path.times, path.sizes):
        w.writerow([repr(float(tm)), repr(float(sz))])
