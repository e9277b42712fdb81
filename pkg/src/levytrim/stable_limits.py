"""Limit objects: stable and trimmed-stable laws, characteristic exponents, norming.

Stable laws are parameterized by their Lévy tails ``c_plus x^-alpha`` and
``c_minus x^-alpha`` with triplet ``(0, 0, Lambda)`` relative to the
truncation ``1{|x| <= 1}``.  For ``alpha != 1`` this is the classical
``S(alpha, beta, sigma, mu)`` law with

    sigma^alpha = Gamma(1 - alpha) cos(pi alpha / 2) (c_plus + c_minus)
    beta        = (c_plus - c_minus) / (c_plus + c_minus)
    mu          = (c_plus - c_minus) alpha / (alpha - 1)

and for ``alpha = 1``: ``sigma = pi (c_plus + c_minus) / 2`` and
``mu = (c_plus - c_minus)(1 - euler_gamma)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .jump_sampler import BATCH_EXPECTED_JUMPS
from .levy_measure import (CompositeTail, DomainError, LevyMeasureSpec, NumericalError,
                           PowerLaw, StepAtoms, TailFunction, inverse_tail, nu,
                           power_measure, quad)
from .representation import sample_trimmed_asym_rep, sample_trimmed_mod_rep
from .streams import as_generator


@dataclass(frozen=True)
class StableParams:
    alpha: float
    c_plus: float = 0.5
    c_minus: float = 0.5

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise DomainError(f"stable index must lie in (0, 2), got {self.alpha}")
        if self.c_plus < 0 or self.c_minus < 0 or self.c_plus + self.c_minus == 0:
            raise DomainError("tail scales must be nonnegative and not both zero")

    @property
    def c(self) -> float:
        return self.c_plus + self.c_minus

    @property
    def skew(self) -> float:
        return (self.c_plus - self.c_minus) / self.c

    def measure(self) -> LevyMeasureSpec:
        return power_measure(self.alpha, self.c_plus, self.c_minus)

    def classical(self) -> tuple[float, float, float]:
        """``(sigma, beta, mu)`` of the 1-parameterization."""
        a = self.alpha
        if a == 1.0:
            return math.pi * self.c / 2.0, self.skew, (self.c_plus - self.c_minus) * (1.0 - np.euler_gamma)
        sig_a = special.gamma(1.0 - a) * math.cos(math.pi * a / 2.0) * self.c
        return sig_a ** (1.0 / a), self.skew, (self.c_plus - self.c_minus) * a / (a - 1.0)

    def strict_shift(self) -> float:
        """Shift turning the ``(0, 0, Lambda)`` law into the uncompensated jump sum (``alpha < 1``)."""
        if self.alpha >= 1:
            raise DomainError("jump sums converge without compensation only for alpha < 1")
        return (self.c_plus - self.c_minus) * self.alpha / (1.0 - self.alpha)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "c_plus": self.c_plus, "c_minus": self.c_minus}


@dataclass(frozen=True)
class IDTriplet:
    """Infinitely divisible law ``(beta, tau2, Lambda)``; ``Lambda`` is taken from ``lam``."""

    beta: float
    tau2: float
    lam: LevyMeasureSpec

    @classmethod
    def from_measure(cls, measure: LevyMeasureSpec) -> "IDTriplet":
        return cls(measure.gamma, measure.sigma2, measure)


def _cos_m1(x: float) -> float:
    s = math.sin(0.5 * x)
    return -2.0 * s * s


def _sin_m_lin(x: float) -> float:
    if abs(x) < 1e-3:
        x2 = x * x
        return -x * x2 / 6.0 * (1.0 - x2 / 20.0)
    return math.sin(x) - x


def _side_integral(F: TailFunction, theta: float) -> complex:
    """``int_(0, inf) (e^{i theta x} - 1 - i theta x 1{x <= 1}) F(dx)`` for ``theta > 0``."""
    if isinstance(F, CompositeTail):
        return sum((_side_integral(p, theta) for p in F.parts), 0j)
    if isinstance(F, StepAtoms):
        return sum(m * (complex(math.cos(theta * a) - 1.0, math.sin(theta * a) - theta * a * (a <= 1.0)))
                   for a, m in F.points)
    if isinstance(F, PowerLaw):
        cap = F.cap
        dens = lambda x: float(F.density(x))
        one = min(1.0, cap)
        re = quad(lambda x: _cos_m1(theta * x) * dens(x), 0.0, one)
        im = quad(lambda x: _sin_m_lin(theta * x) * dens(x), 0.0, one)
        if cap > 1.0:
            hi = math.inf if math.isinf(cap) else cap
            re += _oscillatory(dens, theta, hi, "cos") - float(F(1.0))
            im += _oscillatory(dens, theta, hi, "sin")
        return complex(re, im)
    re = F.integrate(lambda x: _cos_m1(theta * x), 0.0, math.inf)
    im = (F.integrate(lambda x: _sin_m_lin(theta * x), 0.0, 1.0)
          + F.integrate(lambda x: math.sin(theta * x), 1.0, math.inf))
    return complex(re, im)


def _oscillatory(f, theta: float, hi: float, kind: str) -> float:
    from scipy import integrate
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if math.isinf(hi):
                val, _ = integrate.quad(f, 1.0, np.inf, weight=kind, wvar=theta, limlst=200)
            else:
                val, _ = integrate.quad(f, 1.0, hi, weight=kind, wvar=theta, limit=2000)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"oscillatory quadrature failed at theta={theta}: {exc}") from exc
    return val


def char_exponent(triplet: IDTriplet, theta: float) -> complex:
    """``Psi(theta)`` by quadrature, with ``E exp(i theta X_t) = exp(t Psi(theta))``."""
    theta = float(theta)
    if theta == 0.0:
        return 0j
    th = abs(theta)
    jumps = _side_integral(triplet.lam.plus, th) + _side_integral(triplet.lam.minus, th).conjugate()
    psi = complex(-0.5 * triplet.tau2 * th * th, triplet.beta * th) + jumps
    return psi if theta > 0 else psi.conjugate()


def stable_char_exponent(params: StableParams, theta):
    """Closed-form ``Psi`` of the ``(0, 0, Lambda)`` stable law."""
    theta = np.asarray(theta, dtype=float)
    sigma, beta, mu = params.classical()
    a = params.alpha
    ath = np.abs(theta)
    sgn = np.sign(theta)
    if a == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            logt = np.where(ath > 0, np.log(np.where(ath > 0, ath, 1.0)), 0.0)
        psi = -sigma * ath * (1.0 + 1j * beta * (2.0 / math.pi) * sgn * logt) + 1j * mu * theta
    else:
        psi = -(sigma * ath) ** a * (1.0 - 1j * beta * sgn * math.tan(math.pi * a / 2.0)) + 1j * mu * theta
    return complex(psi) if psi.ndim == 0 else psi


def sample_stable(params: StableParams, rng=None, n: int | None = None):
    """Chambers–Mallows–Stuck draws from the ``(0, 0, Lambda)`` stable law."""
    rng = as_generator(rng)
    size = 1 if n is None else n
    a = params.alpha
    sigma, beta, mu = params.classical()
    V = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size)
    W = rng.standard_exponential(size)
    if a == 1.0:
        h = math.pi / 2.0 + beta * V
        X = (2.0 / math.pi) * (h * np.tan(V) - beta * np.log((math.pi / 2.0) * W * np.cos(V) / h))
        out = sigma * X + (2.0 / math.pi) * beta * sigma * math.log(sigma) + mu
    else:
        tan = math.tan(math.pi * a / 2.0)
        B = math.atan(beta * tan) / a
        S = (1.0 + beta * beta * tan * tan) ** (1.0 / (2.0 * a))
        X = (S * np.sin(a * (V + B)) / np.cos(V) ** (1.0 / a)
             * (np.cos(V - a * (V + B)) / W) ** ((1.0 - a) / a))
        out = sigma * X + mu
    return float(out[0]) if n is None else out


def sample_trimmed_stable(params: StableParams, r: int = 0, s: int = 0, rng=None,
                          n: int = 1, modulus: bool = False,
                          expected_jumps: float = BATCH_EXPECTED_JUMPS):
    """Draws of the trimmed stable variable ``(r,s)Z_1`` (or modulus ``r``).

    Runs the trimmed representation on the stable measure at ``t = 1``; the
    power-law tails are diffuse so the tie terms vanish.
    """
    measure = params.measure()
    if modulus:
        x, _ = sample_trimmed_mod_rep(measure, 1.0, r, rng, n, expected_jumps)
    else:
        x, _, _ = sample_trimmed_asym_rep(measure, 1.0, r, s, rng, n, expected_jumps)
    return x


def norming(measure: LevyMeasureSpec, t: float) -> tuple[float, float]:
    """``(a_t, b_t)`` with ``b_t = Pi<-(1/t)`` and ``a_t = t nu(b_t)``."""
    if t <= 0:
        raise DomainError("t must be positive")
    if not measure.infinite_activity:
        raise DomainError("norming needs an infinite-activity measure")
    b = float(inverse_tail(measure, "both", 1.0 / t))
    if not (b > 0 and math.isfinite(b)):
        raise DomainError(f"degenerate norming b_t={b} at t={t}")
    return t * float(nu(measure, b)), b


def limit_params(measure: LevyMeasureSpec, alpha: float | None = None,
                 p_plus: float | None = None) -> StableParams:
    """Stable law attracting ``(X_t - a_t)/b_t`` under the canonical norming.

    With ``t Pi(b_t) = 1`` the limit tails are ``p x^-alpha`` and ``(1 - p) x^-alpha``
    where ``p = lim Pi^+/Pi``.  Missing values are read from the tails near 0.
    """
    from .diagnostics import rv_index_estimate, sign_ratio_estimate
    z = np.logspace(-4, -9, 11)
    if alpha is None:
        alpha = rv_index_estimate(measure, z, 2.0).alpha
    if p_plus is None:
        p_plus = float(sign_ratio_estimate(measure, z).ratios[-1])
    return StableParams(float(alpha), float(p_plus), float(1.0 - p_plus))
