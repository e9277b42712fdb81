"""Statistical checks: KS comparisons, tail estimators and the small-time convergence harness."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .jump_sampler import (BATCH_EXPECTED_JUMPS, choose_epsilon, sample_ordered_jumps,
                           sample_path_batch)
from .levy_measure import DomainError, LevyMeasureSpec, V_fn, grid_is_sorted
from .representation import (kappa_is_literal, sample_trimmed_asym_rep, sample_trimmed_mod_rep,
                             tie_probability)
from .smoother import smooth_batch, smooth_measure
from .stable_limits import StableParams, norming, sample_trimmed_stable
from .streams import as_generator, stream
from .trimmer import trim_batch_asymmetric, trim_batch_modulus

KS_COEF = 1.63
STANDING_ASSUMPTION = ("the small-time theory assumes no Gaussian part and infinite activity "
                       "(Pi(0+) = inf) throughout")
CONVERSE_SCOPE = ("only the canonical norming t Pi(b_t) = 1, a_t = t nu(b_t) is exercised; "
                  "the converse over all norming functions is not tested")


# -- empirical distributions and KS ------------------------------------------------

@dataclass(frozen=True)
class EmpiricalDistribution:
    sorted_samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.sorted_samples, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise DomainError("empirical distribution needs a nonempty 1-d sample")
        if np.isnan(arr).any():
            raise DomainError("samples contain NaN")
        object.__setattr__(self, "sorted_samples", np.sort(arr))

    @property
    def n(self) -> int:
        return self.sorted_samples.size

    def cdf(self, x):
        return np.searchsorted(self.sorted_samples, x, side="right") / self.n

    def median(self) -> float:
        return float(np.median(self.sorted_samples))

    def shifted(self, delta: float) -> "EmpiricalDistribution":
        return EmpiricalDistribution(self.sorted_samples + delta)


def _empirical(x) -> EmpiricalDistribution:
    return x if isinstance(x, EmpiricalDistribution) else EmpiricalDistribution(x)


def ks_threshold(na: int, nb: int) -> float:
    """Two-sample KS critical value at the 1% level (asymptotic)."""
    return KS_COEF * math.sqrt((na + nb) / (na * nb))


def ks_two_sample(a, b) -> tuple[float, float]:
    """``(sup |F_a - F_b|, 1% threshold)``."""
    a, b = _empirical(a), _empirical(b)
    grid = np.concatenate([a.sorted_samples, b.sorted_samples])
    d = float(np.max(np.abs(a.cdf(grid) - b.cdf(grid))))
    return d, ks_threshold(a.n, b.n)


# -- tail estimators ---------------------------------------------------------------

@dataclass
class RVIndexEstimate:
    alpha: float
    per_point: np.ndarray
    ok: bool = True
    message: str = ""


def rv_index_estimate(measure: LevyMeasureSpec, z_grid, y: float = 2.0) -> RVIndexEstimate:
    """Index of regular variation at 0 from ``log(Pi(z)/Pi(zy)) / log y``.

    The estimate averages the smaller half of the grid.  Vanishing tails give
    ``nan`` with a message instead of raising.
    """
    if not y > 1:
        raise DomainError("y must exceed 1")
    z = np.asarray(z_grid, dtype=float)
    if z.size == 0 or np.any(z <= 0):
        raise DomainError("z grid must be nonempty and positive")
    F = measure.both
    lo, hi = np.asarray(F(z), dtype=float), np.asarray(F(z * y), dtype=float)
    bad = (lo <= 0) | (hi <= 0)
    if bad.any():
        return RVIndexEstimate(math.nan, np.full(z.size, np.nan), False,
                               f"tail vanishes at z={z[bad].tolist()}; no regular variation to estimate")
    per = np.log(lo / hi) / math.log(y)
    order = np.argsort(z)
    keep = order[: max(1, (z.size + 1) // 2)]
    return RVIndexEstimate(float(np.mean(per[keep])), per)


@dataclass
class SignRatioEstimate:
    ratios: np.ndarray
    converged: bool
    oscillation: float


def sign_ratio_estimate(measure: LevyMeasureSpec, z_grid) -> SignRatioEstimate:
    """Ratios ``Pi^+(z) / Pi(z)`` along the grid with a convergence flag.

    Converged means the spread over the last half of the grid is below 0.01.
    """
    z = np.asarray(z_grid, dtype=float)
    if z.size == 0 or np.any(z <= 0):
        raise DomainError("z grid must be nonempty and positive")
    both = np.asarray(measure.both(z), dtype=float)
    if np.any(both <= 0):
        raise DomainError("two-sided tail vanishes on the grid")
    ratios = np.asarray(measure.plus(z), dtype=float) / both
    tail = ratios[z.size // 2:]
    osc = float(tail.max() - tail.min())
    return SignRatioEstimate(ratios, osc < 0.01, osc)


# -- order statistic sandwich ------------------------------------------------------

@dataclass
class BoundCell:
    t: float
    x: float
    m: float
    prob: float
    ratio: float
    se: float
    lower: float
    upper: float
    ok: bool
    skipped: bool = False


def order_stat_bound_check(measure: LevyMeasureSpec, t_grid, x_grid, r: int, n: int = 100_000,
                           rng=None, max_mass: float = 0.1) -> list[BoundCell]:
    """Monte Carlo ``P(r+1-th largest positive jump > x b_t)`` against ``m^{r+1}/(r+1)!``.

    ``m = t Pi^+(x b_t)``; the ratio must lie in ``[e^{-0.1} - 3SE, 1 + 3SE]``.
    Cells with ``m > max_mass`` are skipped.
    """
    rng = as_generator(rng)
    cells = []
    for t in t_grid:
        _, b = norming(measure, t)
        jumps = sample_ordered_jumps(measure, t, r + 1, "plus", rng, n=n)[:, r]
        for x in x_grid:
            y = x * b
            m = t * float(measure.plus(y))
            scale = m ** (r + 1) / math.factorial(r + 1)
            if m > max_mass or scale == 0:
                cells.append(BoundCell(t, x, m, math.nan, math.nan, math.nan,
                                       math.nan, math.nan, True, True))
                continue
            hit = jumps > y
            p = float(hit.mean())
            se = math.sqrt(max(p * (1 - p), 1.0 / n) / n) / scale
            ratio = p / scale
            lower, upper = math.exp(-max_mass) - 3 * se, 1.0 + 3 * se
            cells.append(BoundCell(t, x, m, p, ratio, se, lower, upper, lower <= ratio <= upper))
    return cells


def exact_order_ratio(m: float, r: int) -> float:
    """``P(Gamma_{r+1} <= m) / (m^{r+1}/(r+1)!)``; at ``r = 0`` this is ``(1 - e^{-m})/m``."""
    return float(special.gammainc(r + 1, m) * math.factorial(r + 1) / m ** (r + 1))


# -- convergence experiment -----------------------------------------------------------

SAMPLERS = ("path", "representation", "both")
MODES = ("asymmetric", "modulus")


@dataclass
class ExperimentConfig:
    measure: LevyMeasureSpec
    mode: str = "asymmetric"
    r: int = 0
    s: int = 0
    t_grid: tuple = (1e-2, 1e-3, 1e-4)
    n: int = 100_000
    seed: int = 0
    sampler: str = "path"
    reference: str = "trimmed_stable"
    alpha: float | None = None
    p_plus: float | None = None
    reference_n: int = 1_000_000
    smooth: bool = False
    tolerance: float = 0.02
    block_size: int = 10_000
    expected_jumps: float = BATCH_EXPECTED_JUMPS

    def __post_init__(self):
        self.t_grid = tuple(float(t) for t in self.t_grid)
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")
        if self.sampler not in SAMPLERS:
            raise DomainError(f"sampler must be one of {SAMPLERS}")
        if self.reference not in ("trimmed_stable", "empirical"):
            raise DomainError("reference must be 'trimmed_stable' or 'empirical'")
        if self.r < 0 or self.s < 0 or (self.mode == "modulus" and self.s):
            raise DomainError("need r, s >= 0 and s = 0 in modulus mode")
        if not self.t_grid or any(t <= 0 for t in self.t_grid) or (
                len(self.t_grid) > 1 and not grid_is_sorted(self.t_grid, decreasing=True)):
            raise DomainError("t grid must be positive and strictly decreasing")
        if self.n < 1000:
            raise DomainError("need at least 1000 samples per t")
        if self.block_size < 1:
            raise DomainError("block_size must be positive")
        if self.measure.sigma2 > 0:
            raise DomainError(f"Gaussian part present; {STANDING_ASSUMPTION}")
        if not self.measure.infinite_activity:
            raise DomainError(f"finite-activity measure; {STANDING_ASSUMPTION}")
        if self.r and not self.measure.plus.infinite_activity and self.mode == "asymmetric":
            raise DomainError("trimming positive jumps needs infinite positive activity")
        if self.s and not self.measure.minus.infinite_activity:
            raise DomainError("trimming negative jumps needs infinite negative activity")

    @property
    def modulus(self) -> bool:
        return self.mode == "modulus"

    @property
    def label(self) -> str:
        return f"modulus({self.r})" if self.modulus else f"asymmetric({self.r},{self.s})"

    def echo(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "measure"}
        d["t_grid"] = list(self.t_grid)
        d["measure"] = self.measure.to_dict()
        return d


@dataclass
class ReportRow:
    t: float
    mode: str
    r: int
    s: int
    n: int
    ks_distance: float
    ks_threshold: float
    location_shift: float
    alpha_est: float
    sign_ratio_est: float
    passed: bool
    sampler: str = "path"
    a_t: float = 0.0
    b_t: float = 0.0
    tie_probability: float = 0.0
    epsilon: float = math.nan
    small_variance: float = math.nan


CSV_COLUMNS = ["t", "mode", "r", "s", "n", "ks_distance", "ks_threshold", "location_shift",
               "alpha_est", "sign_ratio_est", "pass"]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[ReportRow]
    reference: dict
    passed: bool
    checks: dict = field(default_factory=dict)
    scope: str = CONVERSE_SCOPE

    def to_csv(self) -> str:
        both = self.config.sampler == "both"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS + (["sampler"] if both else []))
        for row in self.rows:
            vals = [repr(row.t), row.mode, row.r, row.s, row.n, f"{row.ks_distance:.6f}",
                    f"{row.ks_threshold:.6f}", f"{row.location_shift:.6f}",
                    f"{row.alpha_est:.6f}", f"{row.sign_ratio_est:.6f}",
                    "true" if row.passed else "false"]
            w.writerow(vals + ([row.sampler] if both else []))
        return buf.getvalue()

    def to_json(self) -> str:
        rows = []
        for row in self.rows:
            d = asdict(row)
            d["pass"] = d.pop("passed")
            rows.append(d)
        doc = {"config": self.config.echo(), "seed": self.config.seed, "rows": rows,
               "reference": self.reference, "checks": self.checks, "pass": self.passed,
               "scope": self.scope}
        return json.dumps(_finite(doc), indent=2, sort_keys=True, default=_jsonable,
                          allow_nan=False) + "\n"


def _finite(o):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, (float, np.floating)) and not math.isfinite(o):
        return None
    return o


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _blocks(n: int, size: int) -> list[tuple[int, int]]:
    return [(j, min(size, n - j * size)) for j in range((n + size - 1) // size)]


def _map_blocks(fn, blocks, threads: int | None) -> np.ndarray:
    """Run ``fn(index, count)`` per block and concatenate in block order."""
    if threads == 1 or len(blocks) == 1:
        parts = [fn(j, k) for j, k in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda jk: fn(*jk), blocks))
    return np.concatenate(parts)


_REFERENCE_CACHE: dict = {}


def reference_samples(params: StableParams, mode: str, r: int, s: int, m: int, seed: int,
                      block_size: int = 10_000, expected_jumps: float = BATCH_EXPECTED_JUMPS,
                      threads: int | None = None) -> np.ndarray:
    """Trimmed-stable reference draws, cached per parameter set and seed."""
    key = (params, mode, r, s, m, seed, block_size, expected_jumps)
    hit = _REFERENCE_CACHE.get(key)
    if hit is not None:
        return hit
    modulus = mode == "modulus"

    def block(j, k):
        rng = stream(seed, "reference", params.alpha, j)
        return sample_trimmed_stable(params, r, s, rng, k, modulus, expected_jumps)

    out = np.sort(_map_blocks(block, _blocks(m, block_size), threads))
    out.setflags(write=False)
    _REFERENCE_CACHE[key] = out
    return out


def _studentized_block(config: ExperimentConfig, measure: LevyMeasureSpec, t: float, a: float,
                       b: float, sampler: str, j: int, k: int) -> np.ndarray:
    rng = stream(config.seed, "sample", sampler, repr(t), j)
    cfg = config
    if sampler == "path":
        batch = sample_path_batch(cfg.measure, t, k, rng, expected_jumps=cfg.expected_jumps,
                                  r=cfg.r, s=cfg.s, modulus=cfg.modulus)
        if cfg.smooth:
            batch = smooth_batch(batch, cfg.measure, rng)
        if cfg.modulus:
            vals, _ = trim_batch_modulus(batch, cfg.r)
        else:
            vals, _, _ = trim_batch_asymmetric(batch, cfg.r, cfg.s)
    else:
        if cfg.modulus:
            vals, _ = sample_trimmed_mod_rep(measure, t, cfg.r, rng, k, cfg.expected_jumps)
        else:
            vals, _, _ = sample_trimmed_asym_rep(measure, t, cfg.r, cfg.s, rng, k,
                                                 cfg.expected_jumps)
    return (vals - a) / b


def convergence_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """KS distance of studentized trimmed values to the trimmed-stable limit along ``t_grid``.

    Each row aligns medians before computing KS.  A row fails if its distance
    exceeds the previous row's by more than two thresholds; the last row must
    also be below ``config.tolerance``.  With ``smooth`` the path sampler marks
    the jumps and the norming uses the smoothed measure.
    """
    from .stable_limits import limit_params

    measure = smooth_measure(config.measure) if config.smooth else config.measure
    params = limit_params(measure, config.alpha, config.p_plus)
    samplers = ("path", "representation") if config.sampler == "both" else (config.sampler,)
    if config.smooth and "representation" in samplers:
        raise DomainError("the smoothed experiment uses the path sampler only")

    ref_doc = {"kind": config.reference, "params": params.to_dict()}
    ref = None
    if config.reference == "trimmed_stable":
        ref = EmpiricalDistribution(reference_samples(
            params, config.mode, config.r, config.s, config.reference_n, config.seed,
            config.block_size, config.expected_jumps, threads))
        ref_doc["m"] = config.reference_n

    blocks = _blocks(config.n, config.block_size)
    norms = {t: norming(measure, t) for t in config.t_grid}
    draws = {}
    for sampler in samplers:
        for t in config.t_grid:
            a, b = norms[t]
            fn = lambda j, k, t=t, a=a, b=b, sm=sampler: _studentized_block(
                config, measure, t, a, b, sm, j, k)
            draws[sampler, t] = EmpiricalDistribution(_map_blocks(fn, blocks, threads))
    if ref is None:
        ref = draws[samplers[0], config.t_grid[-1]]
        ref_doc["m"] = ref.n

    rows: list[ReportRow] = []
    for sampler in samplers:
        prev = None
        for i, t in enumerate(config.t_grid):
            a, b = norms[t]
            sample = draws[sampler, t]
            shift = ref.median() - sample.median()
            d, thr = ks_two_sample(sample.shifted(shift), ref)
            ok = prev is None or d <= prev + 2 * thr
            if i == len(config.t_grid) - 1:
                ok = ok and d < config.tolerance
            prev = d
            z = np.array([b])
            alpha_est = rv_index_estimate(measure, z, 2.0).alpha
            p_est = float(sign_ratio_estimate(measure, z).ratios[0])
            tie = _tie_trace(config, t)
            eps = var = math.nan
            if sampler == "path":
                eps = choose_epsilon(config.measure, t, config.expected_jumps, config.r,
                                     config.s, config.modulus)
                var = t * (float(V_fn(config.measure, eps)) - config.measure.sigma2)
            rows.append(ReportRow(t, config.label, config.r, config.s, config.n, d, thr, shift,
                                  alpha_est, p_est, bool(ok), sampler, a, b, tie, eps, var))
    passed = all(row.passed for row in rows)
    checks = {"monotone_within_noise": all(r.passed for r in rows[:-1]) if rows else True,
              "final_below_tolerance": all(
                  r.ks_distance < config.tolerance for r in rows if r.t == config.t_grid[-1]),
              "flag_one_sided_activity": not config.measure.two_sided_infinite,
              "flag_kappa_literal": kappa_is_literal(config.measure)}
    return ExperimentReport(config, rows, ref_doc, passed, checks)


def _tie_trace(config: ExperimentConfig, t: float) -> float:
    """Tie probability at the typical trimming levels ``v = r``, ``u = s`` (0 if untrimmed)."""
    if config.modulus or not (config.r or config.s):
        return 0.0
    m = config.measure
    v = max(config.r, 1) * 1.0
    u = max(config.s, 1) * 1.0
    try:
        return tie_probability(m, t, v, u)
    except DomainError:
        return math.nan
