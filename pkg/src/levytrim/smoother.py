"""Removing atoms from a Lévy measure by random quadratic inflation of jumps.

Every jump ``x`` becomes ``x + sign(x) u x^2`` with an independent
``u ~ Uniform(0, 1)``.  Magnitudes move by at most ``x^2``, signs never
change, and the smoothed measure has continuous tails

    F*(x) = int_0^1 F(h(u, x)) du,    h(u, x) = 2x / (sqrt(1 + 4ux) + 1),

where ``h(u, x)`` solves ``y + u y^2 = x``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace

import numpy as np

from .jump_sampler import PathBatch, PathSample
from .levy_measure import (DomainError, LevyMeasureSpec, TailFunction, ZERO_TAIL, _as_array,
                           _out, quad)
from .streams import as_generator


def preimage(u, x):
    """Solution ``y`` of ``y + u y^2 = x`` (written to stay accurate as ``u -> 0``)."""
    return 2.0 * x / (np.sqrt(1.0 + 4.0 * u * x) + 1.0)


@dataclass(frozen=True, eq=False)
class SmoothedTail(TailFunction):
    """Tail of the smoothed version of ``base``, evaluated by adaptive quadrature.

    Results are memoized per ``x``; the cache is guarded by a lock and is
    read-mostly after warm-up.
    """

    base: TailFunction
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _one(self, x: float) -> float:
        if x <= 0.0:
            return self.base.total_mass
        hit = self._cache.get(x)
        if hit is not None:
            return hit
        # the integrand u -> F(h(u, x)) steps where h(u, x) crosses an atom
        cuts = [(x - a) / (a * a) for a, _ in self.base.atoms() if a < x]
        cuts = [c for c in cuts if 0.0 < c < 1.0]
        base = self.base
        val = quad(lambda u: float(base(preimage(u, x))), 0.0, 1.0, points=cuts or None)
        with self._lock:
            self._cache[x] = val
        return val

    def __call__(self, x):
        x, scalar = _as_array(x)
        if np.any(x < 0):
            raise DomainError("tail argument must be nonnegative")
        out = np.array([self._one(float(v)) for v in x.ravel()]).reshape(x.shape)
        return _out(out, scalar)

    @property
    def total_mass(self) -> float:
        return self.base.total_mass

    def breakpoints(self) -> list[float]:
        return sorted({p for a, _ in self.base.atoms() for p in (a, a + a * a)})

    def integrate(self, g, a, b):
        """``int_{(a, b]} g(y) F*(dy)`` as ``int_0^1 int g(y + u y^2) 1{a < y + u y^2 <= b} F(dy) du``."""
        base = self.base

        def inner(u):
            lo = float(preimage(u, a)) if a > 0 else 0.0
            hi = float(preimage(u, b)) if math.isfinite(b) else math.inf
            return base.integrate(lambda y: g(y + u * y * y), lo, hi)

        return quad(inner, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"family": "smoothed", "base": self.base.to_dict()}


def _smooth_side(F: TailFunction) -> TailFunction:
    if F is ZERO_TAIL or F.total_mass == 0:
        return ZERO_TAIL
    return SmoothedTail(F)


def drift_correction(F: TailFunction) -> float:
    """``E int_{(0,1]} [x* 1{x* <= 1} - x] F(dx)`` for ``x* = x + u x^2``.

    With ``q(x) = min(1, (1 - x)/x^2)`` the mark keeps ``x*`` below 1 with
    probability ``q``, giving the integrand ``x^2 q^2 / 2 - x (1 - q)``.
    """
    if F.total_mass == 0:
        return 0.0

    def g(x):
        q = min(1.0, (1.0 - x) / (x * x))
        return 0.5 * x * x * q * q - x * (1.0 - q)

    return F.integrate(g, 0.0, 1.0)


def smooth_measure(measure: LevyMeasureSpec) -> LevyMeasureSpec:
    """Triplet of ``X + Y`` where ``Y`` sums the signed marked squared jumps."""
    gamma = measure.gamma + drift_correction(measure.plus) - drift_correction(measure.minus)
    return LevyMeasureSpec(gamma, measure.sigma2, _smooth_side(measure.plus),
                           _smooth_side(measure.minus))


def smooth_tail(base: LevyMeasureSpec, side: str, x):
    """Smoothed tail of ``base`` on ``side`` at ``x > 0``."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("x must be positive")
    F = base.side(side)
    if side in ("both", "modulus"):
        return _smooth_side(base.plus)(x) + _smooth_side(base.minus)(x)
    return _smooth_side(F)(x)


def smooth_path(path: PathSample, rng=None) -> PathSample:
    """Inflate each recorded jump by ``sign * u * size^2``; the value moves by the same amount."""
    rng = as_generator(rng)
    sizes = np.asarray(path.sizes, dtype=float)
    inc = np.sign(sizes) * rng.random(sizes.size) * sizes * sizes
    return replace(path, sizes=sizes + inc, times=np.array(path.times, copy=True),
                   value=path.value + float(inc.sum()))


def smooth_batch(batch: PathBatch, measure: LevyMeasureSpec, rng=None) -> PathBatch:
    """Smoothed counterpart of a batch, as a draw of the smoothed process.

    Recorded jumps are marked; jumps below the cutoff are replaced by the
    mean of their marked squares, ``t (m2^+(eps) - m2^-(eps)) / 2``, whose
    variance is of order ``eps^4`` and is dropped.
    """
    rng = as_generator(rng)
    pos = batch.pos + rng.random(batch.pos.shape) * batch.pos ** 2
    neg = batch.neg + rng.random(batch.neg.shape) * batch.neg ** 2
    pos = -np.sort(-pos, axis=1)
    neg = -np.sort(-neg, axis=1)
    eps = batch.epsilon
    small = 0.5 * batch.t * float(measure.plus.m2(eps) - measure.minus.m2(eps))
    return replace(batch, pos=pos, neg=neg, drift_component=batch.drift_component + small)


@dataclass
class DiffuseReport:
    diffuse: bool
    atoms_plus: list = field(default_factory=list)
    atoms_minus: list = field(default_factory=list)
    max_jump: float = 0.0

    def __bool__(self) -> bool:
        return self.diffuse


def is_diffuse(measure: LevyMeasureSpec, delta: float = 1e-4, tol: float = 1e-3) -> DiffuseReport:
    """Whether both tails are continuous on ``(0, inf)``.

    Closed-form families report their atoms directly.  Smoothed tails are
    scanned for jumps at the base atom locations and their images ``a + a^2``.
    """
    rep = DiffuseReport(True, measure.plus.atoms(), measure.minus.atoms())
    if rep.atoms_plus or rep.atoms_minus:
        rep.diffuse = False
        return rep
    for F in (measure.plus, measure.minus):
        parts = getattr(F, "parts", (F,))
        for p in parts:
            if isinstance(p, SmoothedTail):
                for x in p.breakpoints():
                    jump = abs(float(p(x * (1 - delta))) - float(p(x * (1 + delta))))
                    rep.max_jump = max(rep.max_jump, jump)
    rep.diffuse = rep.max_jump < tol
    return rep
