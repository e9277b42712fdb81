"""Asymmetric, one-sided and modulus trimming of recorded jumps.

Tie-breaking for equal magnitudes: larger magnitude first, then the positive
jump, then the earlier jump time.  For diffuse measures ties have probability
zero and the rule does not affect any law.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jump_sampler import PathBatch, PathSample
from .levy_measure import DomainError


class TrimShortfall(DomainError):
    """Fewer recorded jumps than the trimming asks for (cutoff too high)."""


@dataclass
class TrimResult:
    trimmed_value: float
    mode: str
    r: int = 0
    s: int = 0
    removed_positive: list[float] = field(default_factory=list)
    removed_negative: list[float] = field(default_factory=list)
    removed_modulus: list[float] = field(default_factory=list)


def _check_counts(r: int, s: int = 0):
    if r < 0 or s < 0:
        raise DomainError("trim counts must be nonnegative")


def trim_asymmetric(path: PathSample, r: int, s: int) -> TrimResult:
    """Remove the ``r`` largest positive and ``s`` most negative jumps.

    Negative jumps enter with a plus sign: ``X - sum(top r positive) + sum(top s |negative|)``.
    """
    _check_counts(r, s)
    sizes, times = np.asarray(path.sizes), np.asarray(path.times)
    pos = sizes > 0
    neg = sizes < 0
    if pos.sum() < r or neg.sum() < s:
        raise TrimShortfall(
            f"asymmetric({r},{s}) needs {r} positive and {s} negative jumps above "
            f"eps={path.epsilon:g}; recorded {int(pos.sum())} and {int(neg.sum())}")
    p_sizes, p_times = sizes[pos], times[pos]
    order = np.lexsort((p_times, -p_sizes))[:r]
    removed_pos = p_sizes[order]
    n_mags, n_times = -sizes[neg], times[neg]
    order = np.lexsort((n_times, -n_mags))[:s]
    removed_neg = n_mags[order]
    value = path.value - removed_pos.sum() + removed_neg.sum()
    if r and not s:
        mode = f"one_sided_pos({r})"
    elif s and not r:
        mode = f"one_sided_neg({s})"
    else:
        mode = f"asymmetric({r},{s})"
    return TrimResult(float(value), mode, r, s, removed_pos.tolist(), removed_neg.tolist())


def trim_modulus(path: PathSample, r: int) -> TrimResult:
    """Remove the ``r`` largest jumps in absolute value, keeping their signs."""
    _check_counts(r)
    sizes, times = np.asarray(path.sizes), np.asarray(path.times)
    if sizes.size < r:
        raise TrimShortfall(f"modulus({r}) needs {r} jumps above eps={path.epsilon:g}; "
                            f"recorded {sizes.size}")
    order = np.lexsort((times, sizes < 0, -np.abs(sizes)))[:r]
    removed = sizes[order]
    return TrimResult(float(path.value - removed.sum()), f"modulus({r})", r, 0,
                      removed_modulus=removed.tolist())


def studentize(value, t: float, a_t: float, b_t: float):
    """``(value - a_t) / b_t``."""
    if not b_t > 0:
        raise DomainError(f"norming constant must be positive, got {b_t}")
    if np.ndim(value):
        return (np.asarray(value, dtype=float) - a_t) / b_t
    return (value - a_t) / b_t


# -- batched trimming --------------------------------------------------------------

def trim_batch_asymmetric(batch: PathBatch, r: int, s: int):
    """Trimmed values plus the ``r``-th positive and ``s``-th negative order statistics.

    Boundary statistics are ``nan`` when the corresponding count is zero.
    """
    _check_counts(r, s)
    vals = batch.values
    n = batch.n
    rth = np.full(n, np.nan)
    sth = np.full(n, np.nan)
    if r:
        if np.any(batch.pos[:, r - 1] <= 0):
            raise TrimShortfall(f"some paths have fewer than {r} positive jumps above "
                                f"eps={batch.epsilon:g}")
        vals = vals - batch.pos[:, :r].sum(axis=1)
        rth = batch.pos[:, r - 1].copy()
    if s:
        if np.any(batch.neg[:, s - 1] <= 0):
            raise TrimShortfall(f"some paths have fewer than {s} negative jumps above "
                                f"eps={batch.epsilon:g}")
        vals = vals + batch.neg[:, :s].sum(axis=1)
        sth = batch.neg[:, s - 1].copy()
    return vals, rth, sth


def trim_batch_modulus(batch: PathBatch, r: int):
    """Modulus-trimmed values and the ``r``-th largest modulus (``nan`` for ``r = 0``)."""
    _check_counts(r)
    vals = batch.values
    if r == 0:
        return vals, np.full(batch.n, np.nan)
    cand = np.concatenate([batch.pos[:, :r], -batch.neg[:, :r]], axis=1)
    mags = np.abs(cand)
    order = np.lexsort((cand < 0, -mags), axis=1)[:, :r]
    removed = np.take_along_axis(cand, order, axis=1)
    if np.any(removed[:, -1] == 0):
        raise TrimShortfall(f"some paths have fewer than {r} jumps above eps={batch.epsilon:g}")
    return vals - removed.sum(axis=1), np.abs(removed[:, -1])
