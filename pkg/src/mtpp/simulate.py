"""Exact MTPP sampling via Ogata's modified thinning, plus forecasting.

The sampler works against any *intensity provider*: an object with a
``mark_count`` attribute that can evaluate per-mark conditional intensities
and produce a dominating bound over a lookahead window.  :class:`HawkesModel`
is handled natively (with an incremental-state fast path for exponential /
zero kernels); other providers supply a ``cursor(times, marks)`` method
returning an object with ``total_and_rates(t)``, ``bound(t, lookahead)`` and
``push(t, mark)``.

Thinning proceeds window by window: a bound B dominating the mark-summed
intensity on (t, t + L] is computed, candidate gaps are drawn Exponential(B),
candidates beyond the window advance time to the window end, and candidates
inside are accepted with probability lambda(t_cand)/B, the mark drawn from the
per-mark intensity ratios.  Rejection storms (bound far above the realized
intensity) trigger window halving; sustained zero/idle windows under a
count stop rule raise :class:`StarvationError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .core import (
    ConstantBase,
    DimensionError,
    EventSequence,
    ExpDecayKernel,
    HawkesModel,
    OrderingError,
    ValidationError,
    ZeroKernel,
)
from .rng import Stream, split

__all__ = [
    "SimConfig",
    "DivergenceError",
    "StarvationError",
    "IntensityProvider",
    "simulate",
    "forecast",
    "predict_next",
]

_WINDOW_REJECT_LIMIT = 50
_MIN_LOOKAHEAD = 1e-12
_GROWTH_CAP = 1024.0


class DivergenceError(RuntimeError):
    """Rejection cap exceeded; the bound/intensity pair looks pathological."""


class StarvationError(RuntimeError):
    """The process produced (effectively) no intensity before meeting a count rule."""


@runtime_checkable
class IntensityProvider(Protocol):
    """Anything simulate/forecast can sample from."""

    mark_count: int

    def intensity_at(self, history_times, history_marks, times) -> np.ndarray:
        """Per-mark intensities, shape (len(times), mark_count)."""
        ...


@dataclass(frozen=True)
class SimConfig:
    """Stop rule, thinning window, safety caps and seed for one simulation run.

    Exactly one of ``event_count`` (emit that many new events) and ``horizon``
    (simulate on [0, horizon]) must be set.  ``max_rejections`` caps thinning
    rejections per emitted event; ``max_idle_windows`` caps consecutive
    candidate-free windows under a count rule.
    """

    event_count: int | None = None
    horizon: float | None = None
    lookahead: float = 1.0
    max_rejections: int = 1_000_000
    seed: int = 0
    max_idle_windows: int = 100_000

    def __post_init__(self):
        if (self.event_count is None) == (self.horizon is None):
            raise ValidationError("exactly one of event_count and horizon must be set")
        if self.event_count is not None and self.event_count < 1:
            raise ValidationError("event_count must be a positive integer")
        if self.horizon is not None and not self.horizon > 0:
            raise ValidationError("horizon must be positive")
        if not self.lookahead > 0:
            raise ValidationError("lookahead_window must be positive")
        if self.max_rejections < 1:
            raise ValidationError("max_rejections must be positive")


# ---------------------------------------------------------------------------
# Cursors: incremental intensity evaluation along nondecreasing query times
# ---------------------------------------------------------------------------


def _is_exp_model(model: HawkesModel) -> bool:
    return all(
        isinstance(k, (ExpDecayKernel, ZeroKernel))
        for row in model.kernels
        for k in row
    )


class _ExpCursorScalar:
    """K = 1, exponential/zero kernel: O(1) state, pure-float arithmetic."""

    __slots__ = ("_base", "_c0", "_alpha_s", "_alpha_p", "_beta", "_s", "_p", "_t")

    def __init__(self, model: HawkesModel, times, marks):
        base = model.bases[0]
        self._base = base
        self._c0 = max(0.0, base.c0) if isinstance(base, ConstantBase) else None
        kern = model.kernels[0][0]
        z = int(model.prefactors[0, 0])
        if isinstance(kern, ExpDecayKernel) and z != 0:
            self._alpha_s = z * kern.alpha
            self._alpha_p = kern.alpha if z == 1 else 0.0
            self._beta = kern.beta
        else:
            self._alpha_s = 0.0
            self._alpha_p = 0.0
            self._beta = 1.0
        self._s = 0.0
        self._p = 0.0
        self._t = 0.0
        for t in np.asarray(times, dtype=float):
            self.push(float(t), 0)

    def _advance(self, t: float):
        if t > self._t:
            f = math.exp(-self._beta * (t - self._t))
            self._s *= f
            self._p *= f
            self._t = t

    def total_and_rates(self, t: float):
        self._advance(t)
        if self._c0 is not None:
            raw = self._base.c0 + self._s
        else:
            raw = float(self._base.raw_value(t)) + self._s
        return (raw if raw > 0.0 else 0.0), None

    def bound(self, t: float, lookahead: float) -> float:
        self._advance(t)
        if self._c0 is not None:
            return self._c0 + self._p
        return self._base.sup_on(t, t + lookahead) + self._p

    def push(self, t: float, mark: int):
        self._advance(t)
        self._s += self._alpha_s
        self._p += self._alpha_p


class _ExpCursor:
    """K > 1, exponential/zero kernels: O(K^2) state matrices."""

    __slots__ = ("_bases", "_c0_vec", "_c0_sup", "_A_s", "_A_p", "_B", "_S", "_P", "_t")

    def __init__(self, model: HawkesModel, times, marks):
        K = model.mark_count
        self._bases = model.bases
        if all(isinstance(b, ConstantBase) for b in model.bases):
            self._c0_vec = np.array([b.c0 for b in model.bases])
            self._c0_sup = float(np.maximum(0.0, self._c0_vec).sum())
        else:
            self._c0_vec = None
            self._c0_sup = 0.0
        A_s = np.zeros((K, K))
        A_p = np.zeros((K, K))
        B = np.ones((K, K))
        for rec in range(K):
            for src in range(K):
                kern = model.kernels[rec][src]
                z = int(model.prefactors[rec, src])
                if isinstance(kern, ExpDecayKernel) and z != 0:
                    A_s[rec, src] = z * kern.alpha
                    A_p[rec, src] = kern.alpha if z == 1 else 0.0
                    B[rec, src] = kern.beta
        self._A_s, self._A_p, self._B = A_s, A_p, B
        self._S = np.zeros((K, K))
        self._P = np.zeros((K, K))
        self._t = 0.0
        for t, k in zip(np.asarray(times, dtype=float), np.asarray(marks)):
            self.push(float(t), int(k))

    def _advance(self, t: float):
        if t > self._t:
            f = np.exp(-self._B * (t - self._t))
            self._S *= f
            self._P *= f
            self._t = t

    def _base_raw(self, t: float) -> np.ndarray:
        if self._c0_vec is not None:
            return self._c0_vec.copy()
        return np.array([float(b.raw_value(t)) for b in self._bases])

    def total_and_rates(self, t: float):
        self._advance(t)
        rates = np.maximum(0.0, self._base_raw(t) + self._S.sum(axis=1))
        return float(rates.sum()), rates

    def bound(self, t: float, lookahead: float) -> float:
        self._advance(t)
        if self._c0_vec is not None:
            base_sup = self._c0_sup
        else:
            base_sup = sum(b.sup_on(t, t + lookahead) for b in self._bases)
        return float(base_sup + self._P.sum())

    def push(self, t: float, mark: int):
        self._advance(t)
        self._S[:, mark] += self._A_s[:, mark]
        self._P[:, mark] += self._A_p[:, mark]


class _HistoryCursor:
    """Any HawkesModel (non-Markovian kernels): rescans the stored history."""

    __slots__ = ("_model", "_times", "_marks", "_n")

    def __init__(self, model: HawkesModel, times, marks):
        self._model = model
        cap = max(64, 2 * len(times))
        self._times = np.empty(cap)
        self._marks = np.empty(cap, dtype=np.int64)
        self._n = len(times)
        self._times[: self._n] = times
        self._marks[: self._n] = marks

    def _grow(self):
        self._times = np.concatenate([self._times, np.empty_like(self._times)])
        self._marks = np.concatenate([self._marks, np.empty_like(self._marks)])

    def total_and_rates(self, t: float):
        m = self._model
        times = self._times[: self._n]
        marks = self._marks[: self._n]
        raw = np.array([float(b.raw_value(t)) for b in m.bases])
        if self._n:
            dts = t - times
            for src in range(m.mark_count):
                d = dts[marks == src]
                if not d.size:
                    continue
                for rec in range(m.mark_count):
                    z = m.prefactors[rec, src]
                    if z:
                        raw[rec] += z * float(np.sum(m.kernels[rec][src].value(d)))
        rates = np.maximum(0.0, raw)
        return float(rates.sum()), rates

    def bound(self, t: float, lookahead: float) -> float:
        m = self._model
        total = sum(b.sup_on(t, t + lookahead) for b in m.bases)
        if self._n:
            d_lo = t - self._times[: self._n]
            d_hi = d_lo + lookahead
            marks = self._marks[: self._n]
            for src in range(m.mark_count):
                sel = marks == src
                if not sel.any():
                    continue
                lo, hi = d_lo[sel], d_hi[sel]
                for rec in range(m.mark_count):
                    if m.prefactors[rec, src] == 1:
                        total += float(np.sum(m.kernels[rec][src].sup_on(lo, hi)))
        return float(total)

    def push(self, t: float, mark: int):
        if self._n == self._times.size:
            self._grow()
        self._times[self._n] = t
        self._marks[self._n] = mark
        self._n += 1


def _make_cursor(provider, times, marks):
    if isinstance(provider, HawkesModel):
        if _is_exp_model(provider):
            if provider.mark_count == 1:
                return _ExpCursorScalar(provider, times, marks)
            return _ExpCursor(provider, times, marks)
        return _HistoryCursor(provider, times, marks)
    cursor = getattr(provider, "cursor", None)
    if cursor is None:
        raise TypeError(f"{type(provider).__name__} is not an intensity provider")
    return cursor(times, marks)


# ---------------------------------------------------------------------------
# Thinning
# ---------------------------------------------------------------------------


def _pick_mark(rates: np.ndarray, total: float, u: float) -> int:
    target = u * total
    acc = 0.0
    last_positive = 0
    for k, r in enumerate(rates):
        if r > 0.0:
            last_positive = k
            acc += r
            if target < acc:
                return k
    return last_positive


def simulate(provider, config: SimConfig,
             initial_history: EventSequence | None = None) -> EventSequence:
    """Sample a sequence from the provider's law, extending ``initial_history``.

    Returns the initial history plus the newly sampled events, strictly
    time-increasing.  Under a horizon rule the returned window is
    ``[0, config.horizon]``; under a count rule it ends at the last sampled
    event.

    Raises
    ------
    DivergenceError
        More than ``config.max_rejections`` rejections for a single event.
    StarvationError
        Count rule with a process whose intensity is (effectively) zero.
    """
    K = provider.mark_count
    if initial_history is None:
        initial_history = EventSequence.empty(config.horizon or 1.0, K)
    if initial_history.mark_count != K:
        raise DimensionError("initial history mark_count does not match the provider")
    if config.horizon is not None and initial_history.last_time >= config.horizon:
        raise OrderingError("initial history extends past the requested horizon")

    stream = Stream(config.seed)
    cursor = _make_cursor(provider, initial_history.times, initial_history.marks)
    t = initial_history.last_time
    last_event = t if len(initial_history) else -math.inf
    horizon = config.horizon
    target = config.event_count

    new_times: list[float] = []
    new_marks: list[int] = []
    lookahead = config.lookahead
    max_lookahead = config.lookahead * _GROWTH_CAP
    rejections = 0
    idle_windows = 0

    while True:
        if target is not None and len(new_times) >= target:
            break
        if horizon is not None and t >= horizon:
            break
        w_end = t + lookahead
        if horizon is not None and w_end > horizon:
            w_end = horizon
        B = cursor.bound(t, w_end - t)
        accepted = False
        window_rejects = 0
        if B <= 0.0:
            t = w_end
        while B > 0.0 and t < w_end:
            gap = stream.exponential(B)
            if t + gap >= w_end:
                t = w_end
                break
            t_cand = t + gap
            total, rates = cursor.total_and_rates(t_cand)
            if total > 0.0 and stream.uniform() * B < total:
                mark = 0 if rates is None else _pick_mark(rates, total, stream.uniform())
                if t_cand <= last_event:
                    t_cand = math.nextafter(last_event, math.inf)
                cursor.push(t_cand, mark)
                new_times.append(t_cand)
                new_marks.append(mark)
                last_event = t_cand
                t = t_cand
                rejections = 0
                accepted = True
                lookahead = config.lookahead
                break
            rejections += 1
            window_rejects += 1
            t = t_cand
            if rejections > config.max_rejections:
                raise DivergenceError(
                    f"{rejections} rejections while sampling event "
                    f"{len(new_times) + 1} (bound {B:.6g}, intensity {total:.6g} "
                    f"at t={t:.6g}); bound far above the realized intensity")
            if window_rejects >= _WINDOW_REJECT_LIMIT:
                # Loose window bound (time-varying base): shrink and re-bound.
                lookahead = max(lookahead * 0.5, _MIN_LOOKAHEAD)
                break
        if accepted or window_rejects:
            idle_windows = 0
        else:
            idle_windows += 1
            if horizon is None and idle_windows >= config.max_idle_windows:
                raise StarvationError(
                    f"{idle_windows} consecutive candidate-free windows before "
                    f"event {len(new_times) + 1}; the intensity is zero or far "
                    "below the lookahead scale (raise lookahead_window or "
                    "max_idle_windows if the process is just slow)")
            if lookahead < max_lookahead:
                # Candidate-free window: stretch to track slow processes.
                lookahead = min(lookahead * 2.0, max_lookahead)

    times = np.concatenate([initial_history.times, np.asarray(new_times)])
    marks = np.concatenate([initial_history.marks, np.asarray(new_marks, dtype=np.int64)])
    if horizon is not None:
        out_horizon = horizon
    else:
        out_horizon = times[-1] if times.size else initial_history.horizon
    return EventSequence(times, marks, out_horizon, K)


def forecast(provider, history: EventSequence, n_events: int, n_trials: int,
             seed: int, *, lookahead: float = 1.0,
             max_rejections: int = 1_000_000) -> list[EventSequence]:
    """``n_trials`` independent autoregressive continuations of ``history``.

    Each trial extends the history by exactly ``n_events`` sampled events,
    feeding every accepted event back into the conditioning history.  Trial r
    draws from the child stream ``split(seed, r)``, so trials are independent
    and the full result is reproducible from ``seed``.
    """
    if n_events < 1:
        raise ValidationError("n_events must be a positive integer")
    if n_trials < 1:
        raise ValidationError("n_trials must be a positive integer")
    out = []
    for r in range(n_trials):
        cfg = SimConfig(event_count=n_events, seed=split(seed, r),
                        lookahead=lookahead, max_rejections=max_rejections)
        out.append(simulate(provider, cfg, history))
    return out


def predict_next(provider, history: EventSequence, n_trials: int,
                 seed: int, *, lookahead: float = 1.0) -> tuple[float, int]:
    """Point prediction of the next event as (mean sampled time, modal mark).

    Mark ties resolve to the lowest index.
    """
    sims = forecast(provider, history, 1, n_trials, seed, lookahead=lookahead)
    times = np.array([s.times[-1] for s in sims])
    marks = np.array([s.marks[-1] for s in sims])
    counts = np.bincount(marks, minlength=provider.mark_count)
    return float(times.mean()), int(counts.argmax())
