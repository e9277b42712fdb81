"""Distributional representations of trimmed Lévy processes at a fixed time.

Given the Gamma levels ``v = Gamma_r / t`` and ``u = Gamma~_s / t``, the
asymmetrically trimmed value is the process with jumps outside
``(-Pi^-<-(u), Pi^+<-(v))`` removed, plus Poisson tie corrections carried by
the atoms sitting exactly at the boundaries.  The modulus version truncates
``|x| < Pi<-(v)`` and splits the tie correction between the two signs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .jump_sampler import BATCH_EXPECTED_JUMPS, level_window_jumps, small_jump_terms
from .levy_measure import DomainError, LevyMeasureSpec, TailFunction
from .streams import as_generator


def rho(measure: LevyMeasureSpec, side: str, w):
    """Tie overshoot ``F(F<-(w)-) - w`` for ``F`` the ``side`` tail, floored at 0."""
    w_arr = np.asarray(w, dtype=float)
    if np.any(~(w_arr > 0)):
        raise DomainError("rho needs w > 0")
    F = measure.side(side)
    loc = np.asarray(F.inverse(w_arr))
    over = np.where(loc > 0, F.left_limit(np.where(loc > 0, loc, 1.0)) - w_arr, 0.0)
    out = np.maximum(over, 0.0)
    return float(out) if w_arr.ndim == 0 else out


def kappa(measure: LevyMeasureSpec, sign: str, v):
    """Signed share of the modulus tie overshoot at level ``v``.

    ``(Pi(L-) - v) * Pi{+-L} / Pi^{|.|}{L}`` with ``L = Pi<-(v)``, and 0 when
    there is no modulus atom at ``L``.
    """
    if sign not in ("plus", "minus"):
        raise DomainError(f"sign must be 'plus' or 'minus', got {sign!r}")
    v_arr = np.asarray(v, dtype=float)
    if np.any(~(v_arr > 0)):
        raise DomainError("kappa needs v > 0")
    F = measure.both
    loc = np.asarray(F.inverse(v_arr))
    safe = np.where(loc > 0, loc, 1.0)
    a_plus = measure.plus.left_limit(safe) - measure.plus(safe)
    a_minus = measure.minus.left_limit(safe) - measure.minus(safe)
    a_all = a_plus + a_minus
    over = np.maximum(F.left_limit(safe) - v_arr, 0.0)
    share = a_plus if sign == "plus" else a_minus
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where((a_all > 0) & (loc > 0), over * share / np.where(a_all > 0, a_all, 1.0), 0.0)
    return float(out) if v_arr.ndim == 0 else out


def kappa_is_literal(measure: LevyMeasureSpec) -> bool:
    """True when some magnitude carries signed atoms of unequal mass on both sides.

    The sign split of the modulus tie term is then taken from the formula as
    written; such measures are flagged in experiment reports.
    """
    plus = dict(measure.plus.atoms())
    minus = dict(measure.minus.atoms())
    return any(a in minus and not math.isclose(m, minus[a]) for a, m in plus.items())


def order_statistic_cdf(measure: LevyMeasureSpec, t: float, r: int, side: str, y):
    """``P(r+1-th largest jump on side > y) = P(Gamma_{r+1} <= t F(y))``."""
    if t <= 0:
        raise DomainError("t must be positive")
    y_arr = np.asarray(y, dtype=float)
    if np.any(~(y_arr > 0)):
        raise DomainError("y must be positive")
    m = t * np.asarray(measure.side(side)(y_arr), dtype=float)
    out = special.gammainc(r + 1, m)
    return float(out) if y_arr.ndim == 0 else out


def sample_tie_G(measure: LevyMeasureSpec, side: str, t: float, w, rng=None, n=None):
    """``F<-(w) * Poisson(t rho(w))``; identically 0 for diffuse tails."""
    rng = as_generator(rng)
    w_arr = np.asarray(w, dtype=float) if n is None else np.broadcast_to(w, (n,)).astype(float)
    F = measure.side(side)
    loc = np.asarray(F.inverse(w_arr))
    lam = t * np.asarray(rho(measure, side, w_arr))
    out = loc * rng.poisson(lam)
    return float(out) if out.ndim == 0 else out


# -- truncated triplets ------------------------------------------------------------

def truncated_drift(measure: LevyMeasureSpec, upper_plus, upper_minus):
    """Drift of the process with jumps ``>= upper_plus`` and ``<= -upper_minus`` removed.

    ``gamma - 1{L+ <= 1} int_{[L+, 1]} x Pi(dx) + 1{L- <= 1} int_{[L-, 1]} x Pi^-(dx)``,
    closed at the boundary so atoms at ``L+-`` leave the compensator too.
    ``inf`` means no truncation on that side.
    """
    Lp = np.asarray(upper_plus, dtype=float)
    Lm = np.asarray(upper_minus, dtype=float)
    out = np.full(np.broadcast(Lp, Lm).shape, float(measure.gamma))
    for L, F, sgn in ((Lp, measure.plus, -1.0), (Lm, measure.minus, 1.0)):
        on = L <= 1.0
        if np.any(on):
            Lc = np.where(on, L, 1.0)
            closed = F.m1(Lc, 1.0) + Lc * (F.left_limit(Lc) - F(Lc))
            out = out + sgn * np.where(on, closed, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TruncatedTriplet:
    """Triplet of the truncated variable ``X_t^{u/t, v/t}``.

    The Lévy measure is ``Pi`` restricted to ``(-lower, upper)`` where
    ``upper = Pi^+<-(v/t)`` and ``lower = Pi^-<-(u/t)``; a level of ``None``
    leaves that side untruncated.
    """

    measure: LevyMeasureSpec
    t: float
    u: float | None
    v: float | None
    upper: float
    lower: float
    beta: float
    tau2: float

    @property
    def lambda_spec(self) -> LevyMeasureSpec:
        return LevyMeasureSpec(self.beta, 0.0, Restricted(self.measure.plus, self.upper),
                               Restricted(self.measure.minus, self.lower))


@dataclass(frozen=True)
class Restricted(TailFunction):
    """``F`` restricted to ``(0, cap)``, open at the cap."""

    base: TailFunction
    cap: float

    def atoms(self):
        return [(a, m) for a, m in self.base.atoms() if a < self.cap]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        cut = self.base.left_limit(self.cap) if math.isfinite(self.cap) else 0.0
        out = np.where(x < self.cap, self.base(x) - cut, 0.0)
        return float(out) if out.ndim == 0 else out

    def left_limit(self, x):
        x = np.asarray(x, dtype=float)
        cut = self.base.left_limit(self.cap) if math.isfinite(self.cap) else 0.0
        out = np.where(x <= self.cap, self.base.left_limit(x) - cut, 0.0)
        return float(out) if out.ndim == 0 else out

    def _cap_atom(self) -> float:
        if not math.isfinite(self.cap):
            return 0.0
        return float(self.base.left_limit(self.cap) - self.base(self.cap))

    def m1(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        full = self.base.m1(a, np.minimum(b, self.cap))
        drop = (b >= self.cap) & (a < self.cap)
        return full - np.where(drop, self.cap * self._cap_atom(), 0.0)

    def integrate(self, g, a, b):
        hi = min(b, self.cap)
        out = self.base.integrate(g, a, hi)
        if math.isfinite(self.cap) and a < self.cap <= b:
            out -= g(self.cap) * self._cap_atom()
        return out

    def m2(self, x):
        full = self.base.m2(np.minimum(x, self.cap))
        if not math.isfinite(self.cap):
            return full
        return full - np.where(np.asarray(x) >= self.cap, self.cap ** 2 * self._cap_atom(), 0.0)


def truncated_triplet(measure: LevyMeasureSpec, t: float, u: float | None,
                      v: float | None) -> TruncatedTriplet:
    """Triplet for levels ``u`` (negative side) and ``v`` (positive side), per unit time."""
    upper = float(measure.plus.inverse(v / t)) if v is not None else math.inf
    lower = float(measure.minus.inverse(u / t)) if u is not None else math.inf
    beta = float(truncated_drift(measure, upper, lower))
    return TruncatedTriplet(measure, t, u, v, upper, lower, beta, measure.sigma2)


# -- samplers ------------------------------------------------------------------

def _side_window(F: TailFunction, t: float, upper: np.ndarray, m: float, rng):
    """Jumps of one side below ``upper`` (exclusive) and above a per-sample cutoff.

    The cutoff sits ``m / t`` levels below the window top, so the window
    carries about ``m`` expected jumps.  Returns ``(sum of window jumps, cutoff)``.
    """
    eps = np.asarray(F.inverse(F.left_limit(upper) + m / t), dtype=float)
    sums, _ = _fixed_cut_window(F, t, upper, eps, rng)
    return sums, eps


def _truncated_values(measure: LevyMeasureSpec, t: float, upper_plus, upper_minus, rng,
                      expected_jumps: float = BATCH_EXPECTED_JUMPS):
    """Draws of the truncated variable for per-sample windows ``(-upper_minus, upper_plus)``.

    Drift is the truncated-triplet drift times ``t`` minus the compensator of the
    simulated window jumps that are at most 1; the remainder below the cutoff
    is Gaussian with the matched variance.
    """
    Lp = np.asarray(upper_plus, dtype=float)
    Lm = np.asarray(upper_minus, dtype=float)
    n = Lp.size
    sp, ep = _side_window(measure.plus, t, Lp, expected_jumps, rng)
    sm, em = _side_window(measure.minus, t, Lm, expected_jumps, rng)
    beta = np.asarray(truncated_drift(measure, Lp, Lm))
    comp = _window_compensator(measure.plus, ep, Lp) - _window_compensator(measure.minus, em, Lm)
    mean, var = small_jump_terms(measure, t, ep, em)
    small = mean + np.sqrt(var) * rng.standard_normal(n)
    gauss = math.sqrt(measure.sigma2 * t) * rng.standard_normal(n) if measure.sigma2 else 0.0
    return beta * t - t * comp + sp - sm + small + gauss


def _window_compensator(F: TailFunction, eps: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """``int_{(eps, min(1, upper))} x F(dx)`` with the interval open at ``upper``."""
    lo = np.minimum(eps, 1.0)
    hi = np.minimum(upper, 1.0)
    val = np.asarray(F.m1(lo, hi), dtype=float)
    at = upper <= 1.0
    if np.any(at):
        Lc = np.where(at, upper, 1.0)
        atom = Lc * (F.left_limit(Lc) - F(Lc))
        val = val - np.where(at & (lo < Lc), atom, 0.0)
    return val


def sample_truncated_ID(triplet: TruncatedTriplet, rng=None, n: int = 1,
                        expected_jumps: float = BATCH_EXPECTED_JUMPS):
    """Draws of ``X_t^{u/t, v/t}`` for a fixed triplet."""
    rng = as_generator(rng)
    out = _truncated_values(triplet.measure, triplet.t, np.full(n, triplet.upper),
                            np.full(n, triplet.lower), rng, expected_jumps)
    return out


def _gamma(k: int, n: int, rng) -> np.ndarray:
    return rng.standard_exponential((n, k)).sum(axis=1) if k else np.zeros(n)


def sample_trimmed_asym_rep(measure: LevyMeasureSpec, t: float, r: int, s: int, rng=None,
                            n: int = 1, expected_jumps: float = BATCH_EXPECTED_JUMPS):
    """Joint draws of (``(r,s)``-trimmed value, ``r``-th positive jump, ``s``-th negative magnitude).

    ``r = s = 0`` returns untrimmed draws with ``nan`` boundary statistics.
    """
    if t <= 0 or r < 0 or s < 0:
        raise DomainError("need t > 0 and r, s >= 0")
    if r and not measure.plus.infinite_activity or s and not measure.minus.infinite_activity:
        raise DomainError("the trimmed side needs infinite activity")
    rng = as_generator(rng)
    g_r = _gamma(r, n, rng)
    g_s = _gamma(s, n, rng)
    if r:
        v = g_r / t
        Lp = np.asarray(measure.plus.inverse(v))
        G_plus = Lp * rng.poisson(t * np.asarray(rho(measure, "plus", v)))
    else:
        Lp, G_plus = np.full(n, np.inf), 0.0
    if s:
        u = g_s / t
        Lm = np.asarray(measure.minus.inverse(u))
        G_minus = Lm * rng.poisson(t * np.asarray(rho(measure, "minus", u)))
    else:
        Lm, G_minus = np.full(n, np.inf), 0.0
    x = _truncated_values(measure, t, Lp, Lm, rng, expected_jumps)
    rth = Lp if r else np.full(n, np.nan)
    sth = Lm if s else np.full(n, np.nan)
    return x + G_plus - G_minus, rth, sth


def _modulus_truncated(measure: LevyMeasureSpec, t: float, L: np.ndarray, rng,
                       expected_jumps: float):
    F = measure.both
    n = L.size
    eps = np.asarray(F.inverse(F.left_limit(L) + expected_jumps / t), dtype=float)
    sp, _ = _fixed_cut_window(measure.plus, t, L, eps, rng)
    sm, _ = _fixed_cut_window(measure.minus, t, L, eps, rng)
    beta = np.asarray(truncated_drift(measure, L, L))
    comp = _window_compensator(measure.plus, eps, L) - _window_compensator(measure.minus, eps, L)
    mean, var = small_jump_terms(measure, t, eps, eps)
    small = mean + np.sqrt(var) * rng.standard_normal(n)
    gauss = math.sqrt(measure.sigma2 * t) * rng.standard_normal(n) if measure.sigma2 else 0.0
    return beta * t - t * comp + sp - sm + small + gauss


def _fixed_cut_window(F: TailFunction, t: float, upper: np.ndarray, eps: np.ndarray, rng):
    """Jumps with sizes in ``(eps, upper)``; ``eps = 0`` takes every jump below ``upper``."""
    n = upper.size
    top = F.left_limit(upper)
    bottom = np.where(eps > 0, F(np.where(eps > 0, eps, 1.0)), F.total_mass)
    counts, sizes = level_window_jumps(F, t, top, bottom, rng)
    if not sizes.size:
        return np.zeros(n), counts
    return np.bincount(np.repeat(np.arange(n), counts), weights=sizes, minlength=n), counts


def sample_trimmed_mod_rep(measure: LevyMeasureSpec, t: float, r: int, rng=None, n: int = 1,
                           expected_jumps: float = BATCH_EXPECTED_JUMPS):
    """Joint draws of (modulus ``r``-trimmed value, ``r``-th largest modulus)."""
    if t <= 0 or r < 0:
        raise DomainError("need t > 0 and r >= 0")
    if r == 0:
        x, _, _ = sample_trimmed_asym_rep(measure, t, 0, 0, rng, n, expected_jumps)
        return x, np.full(n, np.nan)
    if not measure.both.infinite_activity:
        raise DomainError("modulus trimming representation needs infinite activity")
    rng = as_generator(rng)
    v = _gamma(r, n, rng) / t
    L = np.asarray(measure.both.inverse(v))
    k_plus = np.asarray(kappa(measure, "plus", v))
    k_minus = np.asarray(kappa(measure, "minus", v))
    G = L * (rng.poisson(t * k_plus) - rng.poisson(t * k_minus))
    x = _modulus_truncated(measure, t, L, rng, expected_jumps)
    return x + G, L


def tie_probability(measure: LevyMeasureSpec, t: float, v: float, u: float) -> float:
    """``1 - exp(-t (rho_+(v/t) + rho_-(u/t)))``, bound on a nonzero tie correction."""
    rp = rho(measure, "plus", v / t) if measure.plus.total_mass > 0 else 0.0
    rm = rho(measure, "minus", u / t) if measure.minus.total_mass > 0 else 0.0
    return 1.0 - math.exp(-t * (rp + rm))
