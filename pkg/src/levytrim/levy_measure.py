"""Lévy measures given through their one-sided tail functions.

A measure is a triplet ``(gamma, sigma2, Pi)`` where ``Pi`` is described by
two nonincreasing, right-continuous tails ``plus(x) = Pi((x, inf))`` and
``minus(x) = Pi((-inf, -x))``.  Every tail family supports vectorized
evaluation, left limits, the right-continuous inverse
``inf{y > 0 : F(y) <= v}`` and the truncated first/second moments that the
samplers and the norming functions need.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8
QUAD_LIMIT = 2000

BISECT_MAX_ITER = 200
BISECT_RTOL = 1e-13


class DomainError(ValueError):
    """Argument outside the domain of a tail-function operation."""


class NumericalError(RuntimeError):
    """Quadrature or root finding failed to reach its tolerance."""


def quad(f: Callable[[float], float], a: float, b: float, points=None, **kw) -> float:
    """``scipy.integrate.quad`` with the package tolerances; warnings become errors."""
    if not b > a:
        return 0.0
    if points is not None:
        points = sorted(p for p in points if a < p < b)
        if not points or math.isinf(b):
            points = None
    opts = dict(epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    opts.update(kw)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, points=points, **opts)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"quadrature on ({a}, {b}) did not converge: {exc}") from exc
    return val


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _out(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


class TailFunction:
    """Base class for a one-sided tail ``F(x) = Pi((x, inf))`` on ``(0, inf)``.

    Subclasses override the closed forms they have; the defaults fall back to
    bisection for the inverse and integration by parts for the moments.
    """

    #: locations and masses of atoms, ascending
    def atoms(self) -> list[tuple[float, float]]:
        return []

    def __call__(self, x):
        raise NotImplementedError

    def left_limit(self, x):
        return self(x)

    @property
    def total_mass(self) -> float:
        """``F(0+)``; ``inf`` for infinite activity."""
        return float(self(np.array(0.0)))

    @property
    def infinite_activity(self) -> bool:
        return math.isinf(self.total_mass)

    def inverse(self, v):
        v, scalar = _as_array(v)
        return _out(bisect_inverse(self, v), scalar)

    def m1(self, a, b):
        """``int_{(a, b]} y Pi(dy)`` by parts: ``aF(a) - bF(b) + int_a^b F``."""
        a, sa = _as_array(a)
        b, sb = _as_array(b)
        a, b = np.broadcast_arrays(a, b)
        out = np.zeros(a.shape)
        for idx in np.ndindex(a.shape):
            lo, hi = float(a[idx]), float(b[idx])
            if hi <= lo:
                continue
            out[idx] = lo * float(self(lo)) - hi * float(self(hi)) + quad(
                lambda y: float(self(y)), lo, hi, points=self.breakpoints())
        return _out(out, sa and sb)

    def m2(self, x):
        """``int_{(0, x]} y^2 Pi(dy) = -x^2 F(x) + 2 int_0^x y F(y) dy``."""
        x, scalar = _as_array(x)
        out = np.zeros(x.shape)
        for idx in np.ndindex(x.shape):
            xi = float(x[idx])
            out[idx] = -xi * xi * float(self(xi)) + 2.0 * quad(
                lambda y: y * float(self(y)), 0.0, xi, points=self.breakpoints())
        return _out(out, scalar)

    def integrate(self, g: Callable[[float], float], a: float, b: float) -> float:
        """``int_{(a, b]} g(y) Pi(dy)`` for a scalar integrand."""
        raise NotImplementedError(f"{type(self).__name__} has no integration rule")

    def breakpoints(self) -> list[float]:
        return [a for a, _ in self.atoms()]

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLaw(TailFunction):
    """``F(x) = c x^-alpha`` on ``(0, inf)``."""

    c: float
    alpha: float

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"power-law scale must be positive, got {self.c}")
        if not 0 < self.alpha < 2:
            raise DomainError(f"power-law index must lie in (0, 2), got {self.alpha}")

    def __call__(self, x):
        x, scalar = _as_array(x)
        with np.errstate(divide="ignore"):
            out = self.c * np.power(x, -self.alpha)
        return _out(out, scalar)

    def inverse(self, v):
        v, scalar = _as_array(v)
        with np.errstate(divide="ignore"):
            out = np.power(self.c / v, 1.0 / self.alpha)
        return _out(out, scalar)

    def density(self, x):
        return self.alpha * self.c * np.power(x, -self.alpha - 1.0)

    @property
    def cap(self) -> float:
        return math.inf

    def _m1_raw(self, a, b):
        al = self.alpha
        if al == 1.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                return self.c * np.log(b / a)
        return al * self.c / (1.0 - al) * (np.power(b, 1.0 - al) - np.power(a, 1.0 - al))

    def m1(self, a, b):
        a, sa = _as_array(a)
        b, sb = _as_array(b)
        lo = np.minimum(a, self.cap)
        hi = np.minimum(b, self.cap)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(hi > lo, self._m1_raw(lo, np.where(hi > lo, hi, lo + 1.0)), 0.0)
        return _out(out, sa and sb)

    def m2(self, x):
        x, scalar = _as_array(x)
        x = np.minimum(x, self.cap)
        out = self.alpha * self.c / (2.0 - self.alpha) * np.power(x, 2.0 - self.alpha)
        return _out(out, scalar)

    def integrate(self, g, a, b):
        b = min(b, self.cap)
        return quad(lambda y: g(y) * float(self.density(y)), a, b)

    def to_dict(self) -> dict:
        return {"family": "power", "c": self.c, "alpha": self.alpha}


@dataclass(frozen=True)
class PowerLawCapped(PowerLaw):
    """Power-law density ``alpha c y^(-alpha-1)`` restricted to ``(0, cap)``.

    The tail is ``c (x^-alpha - cap^-alpha)`` below the cap and 0 above, so
    the measure stays diffuse and the singularity at 0 is untouched.
    """

    support_cap: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not self.support_cap > 0:
            raise DomainError(f"support cap must be positive, got {self.support_cap}")

    @property
    def cap(self) -> float:
        return self.support_cap

    def __call__(self, x):
        x, scalar = _as_array(x)
        with np.errstate(divide="ignore"):
            out = self.c * (np.power(x, -self.alpha) - self.support_cap ** -self.alpha)
        out = np.where(x < self.support_cap, out, 0.0)
        return _out(out, scalar)

    def inverse(self, v):
        v, scalar = _as_array(v)
        out = np.power(v / self.c + self.support_cap ** -self.alpha, -1.0 / self.alpha)
        return _out(out, scalar)

    def to_dict(self) -> dict:
        return {"family": "power_capped", "c": self.c, "alpha": self.alpha,
                "cap": self.support_cap}


@dataclass(frozen=True)
class StepAtoms(TailFunction):
    """Finitely many atoms; the tail is a right-continuous step function."""

    points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        pts = tuple(sorted((float(a), float(m)) for a, m in self.points))
        for a, m in pts:
            if not (a > 0 and m > 0):
                raise DomainError(f"atoms need positive location and mass, got {(a, m)}")
        merged: dict[float, float] = {}
        for a, m in pts:
            merged[a] = merged.get(a, 0.0) + m
        object.__setattr__(self, "points", tuple(sorted(merged.items())))
        locs = np.array([a for a, _ in self.points], dtype=float)
        masses = np.array([m for _, m in self.points], dtype=float)
        object.__setattr__(self, "_locs", locs)
        object.__setattr__(self, "_masses", masses)
        # suffix[k] = mass strictly beyond locs[k-1]; suffix[0] = total
        suffix = np.concatenate([np.cumsum(masses[::-1])[::-1], [0.0]])
        object.__setattr__(self, "_suffix", suffix)

    def atoms(self):
        return list(self.points)

    def __call__(self, x):
        x, scalar = _as_array(x)
        k = np.searchsorted(self._locs, x, side="right")
        return _out(self._suffix[k], scalar)

    def left_limit(self, x):
        x, scalar = _as_array(x)
        k = np.searchsorted(self._locs, x, side="left")
        return _out(self._suffix[k], scalar)

    def inverse(self, v):
        v, scalar = _as_array(v)
        # F on [locs[k], locs[k+1]) is suffix[k+1]; want the first k with suffix[k+1] <= v
        tail_after = self._suffix[1:]
        k = np.searchsorted(-tail_after, -v, side="left")
        locs = np.concatenate([self._locs, [0.0]])
        out = np.where(self._suffix[0] <= v, 0.0, locs[np.minimum(k, len(self._locs))])
        return _out(out, scalar)

    def m1(self, a, b):
        a, sa = _as_array(a)
        b, sb = _as_array(b)
        w = self._locs * self._masses
        cw = np.concatenate([[0.0], np.cumsum(w)])
        ia = np.searchsorted(self._locs, a, side="right")
        ib = np.searchsorted(self._locs, b, side="right")
        out = np.where(ib > ia, cw[ib] - cw[np.minimum(ia, ib)], 0.0)
        return _out(out, sa and sb)

    def m2(self, x):
        x, scalar = _as_array(x)
        cw = np.concatenate([[0.0], np.cumsum(self._locs ** 2 * self._masses)])
        out = cw[np.searchsorted(self._locs, x, side="right")]
        return _out(out, scalar)

    def integrate(self, g, a, b):
        return float(sum(m * g(loc) for loc, m in self.points if a < loc <= b))

    def to_dict(self) -> dict:
        return {"family": "atoms", "atoms": [list(p) for p in self.points]}


@dataclass(frozen=True)
class CompositeTail(TailFunction):
    """Sum of tail functions (superposition of the underlying measures)."""

    parts: tuple[TailFunction, ...] = ()

    def atoms(self):
        merged: dict[float, float] = {}
        for p in self.parts:
            for a, m in p.atoms():
                merged[a] = merged.get(a, 0.0) + m
        return sorted(merged.items())

    def __call__(self, x):
        x, scalar = _as_array(x)
        out = np.zeros(x.shape)
        for p in self.parts:
            out = out + p(x)
        return _out(out, scalar)

    def left_limit(self, x):
        x, scalar = _as_array(x)
        out = np.zeros(x.shape)
        for p in self.parts:
            out = out + p.left_limit(x)
        return _out(out, scalar)

    def m1(self, a, b):
        return sum((p.m1(a, b) for p in self.parts), 0.0)

    def m2(self, x):
        return sum((p.m2(x) for p in self.parts), 0.0)

    def integrate(self, g, a, b):
        return sum(p.integrate(g, a, b) for p in self.parts)

    def to_dict(self) -> dict:
        return {"family": "composite", "parts": [p.to_dict() for p in self.parts]}


ZERO_TAIL = StepAtoms(())


def combine(parts: Iterable[TailFunction]) -> TailFunction:
    """Sum tails, collapsing to a closed-form family where one exists."""
    flat: list[TailFunction] = []
    for p in parts:
        if isinstance(p, CompositeTail):
            flat.extend(p.parts)
        elif isinstance(p, StepAtoms) and not p.points:
            continue
        else:
            flat.append(p)
    if not flat:
        return ZERO_TAIL
    if len(flat) == 1:
        return flat[0]
    if all(type(p) is PowerLaw for p in flat) and len({p.alpha for p in flat}) == 1:
        return PowerLaw(sum(p.c for p in flat), flat[0].alpha)
    if (all(type(p) is PowerLawCapped for p in flat)
            and len({(p.alpha, p.support_cap) for p in flat}) == 1):
        return PowerLawCapped(sum(p.c for p in flat), flat[0].alpha, flat[0].support_cap)
    if all(isinstance(p, StepAtoms) for p in flat):
        return StepAtoms(tuple(pt for p in flat for pt in p.points))
    return CompositeTail(tuple(flat))


def bisect_inverse(F: TailFunction, v: np.ndarray) -> np.ndarray:
    """Right-continuous inverse ``inf{y > 0 : F(y) <= v}`` by log-scale bisection.

    The bracket is found by geometric expansion.  Results within the final
    bracket of an atom location are snapped onto it, so left limits taken at
    the returned point see the atom.
    """
    v = np.asarray(v, dtype=float)
    if np.any(~(v > 0)):
        raise DomainError("inverse tail needs v > 0")
    out = np.zeros(v.shape)
    total = F.total_mass
    live = v < total
    if not np.any(live):
        return out
    vv = v[live]
    hi = np.ones(vv.shape)
    for _ in range(BISECT_MAX_ITER):
        m = F(hi) > vv
        if not m.any():
            break
        hi[m] *= 4.0
    lo = hi.copy()
    for _ in range(BISECT_MAX_ITER):
        m = F(lo) <= vv
        if not m.any():
            break
        lo[m] /= 4.0
    lo = np.minimum(lo, hi / 4.0)
    for _ in range(BISECT_MAX_ITER):
        mid = np.sqrt(lo * hi)
        above = F(mid) > vv
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi / lo - 1.0 <= BISECT_RTOL):
            break
    else:
        raise NumericalError("tail inversion did not reach its tolerance")
    atoms = F.atoms()
    if atoms:
        locs = np.array([a for a, _ in atoms])
        k = np.clip(np.searchsorted(locs, lo, side="left"), 0, len(locs) - 1)
        cand = locs[k]
        near = (cand >= lo * (1 - 1e-9)) & (cand <= hi * (1 + 1e-9))
        if near.any():
            ok = near & (F(cand) <= vv) & (F.left_limit(cand) > vv)
            hi = np.where(ok, cand, hi)
    out[live] = hi
    return out


SIDES = ("plus", "minus", "both")


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Lévy triplet ``(gamma, sigma2, Pi)`` with ``Pi`` given by its two tails."""

    gamma: float = 0.0
    sigma2: float = 0.0
    plus: TailFunction = ZERO_TAIL
    minus: TailFunction = ZERO_TAIL
    both: TailFunction = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.sigma2 < 0:
            raise DomainError(f"sigma2 must be nonnegative, got {self.sigma2}")
        object.__setattr__(self, "both", combine([self.plus, self.minus]))
        u1 = U_fn(self, 1.0)
        if not math.isfinite(u1):
            raise DomainError("measure is not a Lévy measure: U(1) is infinite")

    def side(self, side: str) -> TailFunction:
        if side == "plus":
            return self.plus
        if side == "minus":
            return self.minus
        if side in ("both", "modulus"):
            return self.both
        raise DomainError(f"unknown side {side!r}")

    @property
    def infinite_activity(self) -> bool:
        return self.both.infinite_activity

    @property
    def two_sided_infinite(self) -> bool:
        return self.plus.infinite_activity and self.minus.infinite_activity

    def atoms(self, side: str = "both") -> list[tuple[float, float]]:
        return self.side(side).atoms()

    def with_gamma(self, gamma: float) -> "LevyMeasureSpec":
        return LevyMeasureSpec(gamma, self.sigma2, self.plus, self.minus)

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "sigma2": self.sigma2,
                "plus": self.plus.to_dict(), "minus": self.minus.to_dict()}


def _check_positive(x, what="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{what} must be positive")


def tail(measure: LevyMeasureSpec, side: str, x):
    """``Pi^+(x)``, ``Pi^-(x)`` or their sum; ``x = 0`` gives ``F(0+)``."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("tail needs x >= 0")
    return measure.side(side)(x)


def left_limit_tail(measure: LevyMeasureSpec, side: str, x):
    _check_positive(x)
    return measure.side(side).left_limit(x)


def atom_mass(measure: LevyMeasureSpec, side: str, x):
    _check_positive(x)
    F = measure.side(side)
    return F.left_limit(x) - F(x)


def inverse_tail(measure: LevyMeasureSpec, side: str, v):
    _check_positive(v, "v")
    return measure.side(side).inverse(v)


def signed_first_moment(measure: LevyMeasureSpec, a, b):
    """``int_{a < |y| <= b} y Pi(dy)``."""
    return measure.plus.m1(a, b) - measure.minus.m1(a, b)


def nu(measure: LevyMeasureSpec, x):
    """Truncated mean ``gamma - int_{x < |y| <= 1} y Pi(dy)``."""
    _check_positive(x)
    x, scalar = _as_array(x)
    out = measure.gamma - signed_first_moment(measure, np.minimum(x, 1.0), 1.0)
    return _out(np.asarray(out, dtype=float), scalar)


def V_fn(measure: LevyMeasureSpec, x):
    """Truncated second moment ``sigma2 + int_{|y| <= x} y^2 Pi(dy)``."""
    _check_positive(x)
    return measure.sigma2 + measure.plus.m2(x) + measure.minus.m2(x)


def U_fn(measure: LevyMeasureSpec, x):
    """``V(x) + x^2 Pi(x)``; equals ``sigma2 + 2 int_0^x y Pi(y) dy``."""
    _check_positive(x)
    return V_fn(measure, x) + np.square(x) * measure.both(x)


# -- JSON schema ----------------------------------------------------------------

MEASURE_KEYS = frozenset({"gamma", "sigma2", "plus", "minus", "atoms_plus", "atoms_minus"})


def tail_from_dict(doc) -> TailFunction:
    if doc is None:
        return ZERO_TAIL
    if isinstance(doc, list):
        return combine(tail_from_dict(d) for d in doc)
    if not isinstance(doc, dict) or "family" not in doc:
        raise DomainError(f"tail spec must be an object with a 'family' key: {doc!r}")
    fam = doc["family"]
    allowed = {"power": {"c", "alpha"}, "power_capped": {"c", "alpha", "cap"},
               "atoms": {"atoms"}, "composite": {"parts"}, "zero": set()}
    if fam not in allowed:
        raise DomainError(f"unknown tail family {fam!r}")
    extra = set(doc) - allowed[fam] - {"family"}
    missing = allowed[fam] - set(doc)
    if extra or missing:
        raise DomainError(f"family {fam!r}: unexpected {sorted(extra)} missing {sorted(missing)}")
    if fam == "power":
        return PowerLaw(float(doc["c"]), float(doc["alpha"]))
    if fam == "power_capped":
        return PowerLawCapped(float(doc["c"]), float(doc["alpha"]), float(doc["cap"]))
    if fam == "atoms":
        return StepAtoms(tuple((float(a), float(m)) for a, m in doc["atoms"]))
    if fam == "composite":
        return combine(tail_from_dict(p) for p in doc["parts"])
    return ZERO_TAIL


def measure_from_dict(doc: dict) -> LevyMeasureSpec:
    """Build a measure from ``{"gamma", "sigma2", "plus", "minus", "atoms_plus", "atoms_minus"}``."""
    unknown = set(doc) - MEASURE_KEYS
    if unknown:
        raise DomainError(f"unknown measure keys: {sorted(unknown)}")
    plus = tail_from_dict(doc.get("plus"))
    minus = tail_from_dict(doc.get("minus"))
    if doc.get("atoms_plus"):
        plus = combine([plus, StepAtoms(tuple(map(tuple, doc["atoms_plus"])))])
    if doc.get("atoms_minus"):
        minus = combine([minus, StepAtoms(tuple(map(tuple, doc["atoms_minus"])))])
    return LevyMeasureSpec(float(doc.get("gamma", 0.0)), float(doc.get("sigma2", 0.0)),
                           plus, minus)


def power_measure(alpha: float, c_plus: float = 1.0, c_minus: float = 1.0,
                  gamma: float = 0.0, cap: float | None = None) -> LevyMeasureSpec:
    """Convenience constructor for (optionally capped) power-law measures."""
    def one(c):
        if c == 0:
            return ZERO_TAIL
        return PowerLaw(c, alpha) if cap is None else PowerLawCapped(c, alpha, cap)
    return LevyMeasureSpec(gamma, 0.0, one(c_plus), one(c_minus))


def grid_is_sorted(values: Sequence[float], decreasing: bool = False) -> bool:
    arr = np.asarray(values, dtype=float)
    d = np.diff(arr)
    return bool(np.all(d < 0) if decreasing else np.all(d > 0))
