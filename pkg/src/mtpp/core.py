"""Intensity algebra for marked temporal point processes.

Events, sequences, parametric base-intensity and interaction-kernel families,
and the Hawkes conditional intensity

    lambda(t, k | H_t) = max(0, mu_k(t) + sum_{(t', k') in H_t} z[k][k'] * gamma[k][k'](t - t'))

with mark-summed totals and analytic dominating bounds for thinning.  The
kernel matrix is indexed ``kernels[k][k']`` = influence *of* mark k' *on* mark
k (row = receiver).  All types are immutable after construction and every
operation is a pure function, so values can be shared freely across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "DimensionError",
    "OrderingError",
    "ValidationError",
    "ParseError",
    "MarkedEvent",
    "EventSequence",
    "ConstantBase",
    "SinusoidalBase",
    "GammaBase",
    "ExpDecayKernel",
    "RayleighKernel",
    "ZeroKernel",
    "HawkesModel",
    "eval_base",
    "eval_kernel",
    "kernel_sup",
    "conditional_intensity",
    "total_intensity",
    "intensity_upper_bound",
    "base_from_dict",
    "kernel_from_dict",
]


class DimensionError(ValueError):
    """Mark index or container dimension inconsistent with the model."""


class OrderingError(ValueError):
    """Evaluation time violates the strict-past ordering of the history."""


class ValidationError(ValueError):
    """Structurally well-formed data violating a domain invariant."""


class ParseError(ValueError):
    """Malformed serialized data."""


@dataclass(frozen=True)
class MarkedEvent:
    """A single event: occurrence time and categorical mark."""

    time: float
    mark: int


class EventSequence:
    """A time-ordered sequence of marked events on an observation window.

    Parameters
    ----------
    times : array-like of float
        Strictly increasing event times, all in [0, horizon].
    marks : array-like of int
        Mark indices in [0, mark_count), aligned with ``times``.
    horizon : float
        End of the observation window, > 0.
    mark_count : int
        Number of mark categories of the owning process.
    """

    __slots__ = ("times", "marks", "horizon", "mark_count")

    def __init__(self, times, marks, horizon: float, mark_count: int):
        times = np.ascontiguousarray(times, dtype=np.float64)
        marks = np.ascontiguousarray(marks, dtype=np.int64)
        if times.ndim != 1 or marks.ndim != 1 or times.shape != marks.shape:
            raise DimensionError("times and marks must be 1-D arrays of equal length")
        if mark_count < 1:
            raise ValidationError("mark_count must be >= 1")
        if not math.isfinite(horizon) or horizon <= 0:
            raise ValidationError("horizon must be a positive finite real")
        if times.size:
            if times[0] < 0:
                raise ValidationError("event times must be nonnegative")
            if np.any(np.diff(times) <= 0):
                raise ValidationError("event times must be strictly increasing")
            if times[-1] > horizon:
                raise ValidationError("event times must not exceed the horizon")
            if marks.min() < 0 or marks.max() >= mark_count:
                raise ValidationError("marks must lie in [0, mark_count)")
        times.setflags(write=False)
        marks.setflags(write=False)
        self.times = times
        self.marks = marks
        self.horizon = float(horizon)
        self.mark_count = int(mark_count)

    @classmethod
    def empty(cls, horizon: float, mark_count: int) -> "EventSequence":
        return cls(np.empty(0), np.empty(0, dtype=np.int64), horizon, mark_count)

    @classmethod
    def from_events(cls, events, horizon: float, mark_count: int) -> "EventSequence":
        times = [e.time for e in events]
        marks = [e.mark for e in events]
        return cls(times, marks, horizon, mark_count)

    def events(self) -> list[MarkedEvent]:
        return [MarkedEvent(float(t), int(k)) for t, k in zip(self.times, self.marks)]

    def __len__(self) -> int:
        return self.times.size

    @property
    def last_time(self) -> float:
        """Time of the most recent event, or 0.0 for an empty sequence."""
        return float(self.times[-1]) if self.times.size else 0.0

    def prefix(self, n: int) -> "EventSequence":
        """First ``n`` events on the same window."""
        return EventSequence(self.times[:n], self.marks[:n], self.horizon, self.mark_count)

    def tail(self, n: int) -> "EventSequence":
        """Last ``n`` events; horizon unchanged."""
        if n == 0:
            return EventSequence.empty(self.horizon, self.mark_count)
        return EventSequence(self.times[-n:], self.marks[-n:], self.horizon, self.mark_count)

    def scaled(self, s: float) -> "EventSequence":
        """All times and the horizon multiplied by ``s`` > 0."""
        if s <= 0:
            raise ValidationError("scale factor must be positive")
        return EventSequence(self.times * s, self.marks, self.horizon * s, self.mark_count)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventSequence):
            return NotImplemented
        return (
            self.mark_count == other.mark_count
            and self.horizon == other.horizon
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.marks, other.marks)
        )

    def __repr__(self) -> str:
        return (f"EventSequence(n={len(self)}, horizon={self.horizon}, "
                f"mark_count={self.mark_count})")


# ---------------------------------------------------------------------------
# Base intensities (Table of parametric families: constant, sinusoidal, gamma)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantBase:
    """mu(t) = c0."""

    c0: float
    tag = "constant"

    def raw_value(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.c0)

    def value(self, t):
        return np.maximum(0.0, self.raw_value(t))

    def sup_on(self, lo: float, hi: float) -> float:
        return max(0.0, self.c0)

    def to_dict(self) -> dict:
        return {"type": self.tag, "c0": self.c0}


@dataclass(frozen=True)
class SinusoidalBase:
    """mu(t) = amplitude * sin(omega * (t - phase)) + c0, clamped at 0.

    The raw formula goes negative for amplitude > c0; ``value`` clamps so the
    base is a valid standalone rate (the conditional intensity applies its own
    outer clamp to the raw sum).
    """

    amplitude: float
    omega: float
    phase: float
    c0: float
    tag = "sinusoidal"

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValidationError("sinusoidal amplitude must be nonnegative")
        if self.omega <= 0:
            raise ValidationError("sinusoidal omega must be positive")

    def raw_value(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.sin(self.omega * (t - self.phase)) + self.c0

    def value(self, t):
        return np.maximum(0.0, self.raw_value(t))

    def sup_on(self, lo: float, hi: float) -> float:
        # max of sin over [x0, x1] is 1 if a peak x = pi/2 + 2*pi*k lies inside,
        # else the larger endpoint value (no interior peak => no interior max).
        x0 = self.omega * (lo - self.phase)
        x1 = self.omega * (hi - self.phase)
        k = math.ceil((x0 - math.pi / 2) / (2 * math.pi))
        if math.pi / 2 + 2 * math.pi * k <= x1:
            peak = 1.0
        else:
            peak = max(math.sin(x0), math.sin(x1))
        return max(0.0, self.amplitude * peak + self.c0)

    def to_dict(self) -> dict:
        return {"type": self.tag, "amplitude": self.amplitude, "omega": self.omega,
                "phase": self.phase, "c0": self.c0}


@dataclass(frozen=True)
class GammaBase:
    """mu(t) = amplitude * t**power * exp(-decay * t) + c0.

    Unimodal bump peaking at t = power / decay on top of a constant floor.
    """

    amplitude: float
    power: float
    decay: float
    c0: float
    tag = "gamma_shape"

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValidationError("gamma amplitude must be nonnegative")
        if self.power < 1:
            raise ValidationError("gamma power must be >= 1")
        if self.decay <= 0:
            raise ValidationError("gamma decay must be positive")

    def raw_value(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * t**self.power * np.exp(-self.decay * t) + self.c0

    def value(self, t):
        return np.maximum(0.0, self.raw_value(t))

    def sup_on(self, lo: float, hi: float) -> float:
        mode = self.power / self.decay
        cand = self.raw_value(min(max(mode, lo), hi))
        return max(0.0, float(max(self.raw_value(lo), self.raw_value(hi), cand)))

    def to_dict(self) -> dict:
        return {"type": self.tag, "amplitude": self.amplitude, "power": self.power,
                "decay": self.decay, "c0": self.c0}


# ---------------------------------------------------------------------------
# Interaction kernels (exponential decay, Rayleigh, zero)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpDecayKernel:
    """gamma(dt) = alpha * exp(-beta * dt); decreasing, sup = alpha at dt = 0."""

    alpha: float
    beta: float
    tag = "exp_decay"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValidationError("exp-decay alpha must be nonnegative")
        if self.beta <= 0:
            raise ValidationError("exp-decay beta must be positive")

    def value(self, dt):
        dt = np.asarray(dt, dtype=float)
        return self.alpha * np.exp(-self.beta * dt)

    def sup(self) -> float:
        return self.alpha

    def sup_on(self, lo, hi):
        return self.value(lo)

    def to_dict(self) -> dict:
        return {"type": self.tag, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class RayleighKernel:
    """Shifted Rayleigh bump, zero on [0, t_shift].

    gamma(dt) = a0 * (dt - t_shift) / a1**2 * exp(-(dt - t_shift)**2 / (2 a1**2))
    for dt > t_shift, else 0.  Peaks at dt = t_shift + a1 with value
    a0 * exp(-1/2) / a1.
    """

    a0: float
    a1: float
    t_shift: float
    tag = "rayleigh"

    def __post_init__(self):
        if self.a0 < 0:
            raise ValidationError("rayleigh a0 must be nonnegative")
        if self.a1 <= 0:
            raise ValidationError("rayleigh a1 must be positive")
        if self.t_shift < 0:
            raise ValidationError("rayleigh t_shift must be nonnegative")

    def value(self, dt):
        dt = np.asarray(dt, dtype=float)
        u = dt - self.t_shift
        out = self.a0 * u / self.a1**2 * np.exp(-(u * u) / (2 * self.a1**2))
        return np.where(u > 0, out, 0.0)

    def sup(self) -> float:
        return self.a0 * math.exp(-0.5) / self.a1

    def sup_on(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        peak_dt = self.t_shift + self.a1
        ends = np.maximum(self.value(np.maximum(lo, 0.0)), self.value(np.maximum(hi, 0.0)))
        inside = (lo <= peak_dt) & (peak_dt <= hi)
        return np.where(inside, self.sup(), ends)

    def to_dict(self) -> dict:
        return {"type": self.tag, "a0": self.a0, "a1": self.a1, "t_shift": self.t_shift}


@dataclass(frozen=True)
class ZeroKernel:
    """gamma(dt) = 0 (no interaction)."""

    tag = "zero"

    def value(self, dt):
        return np.zeros_like(np.asarray(dt, dtype=float))

    def sup(self) -> float:
        return 0.0

    def sup_on(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        return np.zeros_like(lo)

    def to_dict(self) -> dict:
        return {"type": self.tag}


BaseSpec = Union[ConstantBase, SinusoidalBase, GammaBase]
KernelSpec = Union[ExpDecayKernel, RayleighKernel, ZeroKernel]

_BASE_TYPES = {cls.tag: cls for cls in (ConstantBase, SinusoidalBase, GammaBase)}
_KERNEL_TYPES = {cls.tag: cls for cls in (ExpDecayKernel, RayleighKernel, ZeroKernel)}


def _from_tagged(d: dict, table: dict, what: str):
    if not isinstance(d, dict) or "type" not in d:
        raise ParseError(f"{what} must be a tagged object with a 'type' field")
    tag = d["type"]
    cls = table.get(tag)
    if cls is None:
        raise ParseError(f"unknown {what} type {tag!r}")
    fields = {k: v for k, v in d.items() if k != "type"}
    try:
        return cls(**fields)
    except TypeError as exc:
        raise ParseError(f"bad fields for {what} type {tag!r}: {exc}") from None


def base_from_dict(d: dict) -> BaseSpec:
    return _from_tagged(d, _BASE_TYPES, "base intensity")


def kernel_from_dict(d: dict) -> KernelSpec:
    return _from_tagged(d, _KERNEL_TYPES, "kernel")


# ---------------------------------------------------------------------------
# Hawkes model
# ---------------------------------------------------------------------------


class HawkesModel:
    """A multivariate Hawkes process specification.

    Parameters
    ----------
    mark_count : int
        Number of marks K.
    bases : sequence of K base specs
        Base intensity mu_k per mark.
    kernels : K x K nested sequence of kernel specs
        ``kernels[k][k']`` is the influence of mark k' on mark k.
    prefactors : K x K array-like over {-1, 0, +1}
        Sign z[k][k'] selecting inhibitory / absent / excitatory influence.
    """

    __slots__ = ("mark_count", "bases", "kernels", "prefactors")

    def __init__(self, mark_count: int, bases, kernels, prefactors):
        K = int(mark_count)
        if K < 1:
            raise DimensionError("mark_count must be >= 1")
        bases = tuple(bases)
        kernels = tuple(tuple(row) for row in kernels)
        z = np.asarray(prefactors, dtype=np.int8)
        if len(bases) != K:
            raise DimensionError(f"expected {K} bases, got {len(bases)}")
        if len(kernels) != K or any(len(row) != K for row in kernels):
            raise DimensionError(f"kernels must be a {K}x{K} grid")
        if z.shape != (K, K):
            raise DimensionError(f"prefactors must have shape ({K}, {K})")
        if not np.isin(z, (-1, 0, 1)).all():
            raise ValidationError("prefactors must take values in {-1, 0, +1}")
        z.setflags(write=False)
        self.mark_count = K
        self.bases = bases
        self.kernels = kernels
        self.prefactors = z

    # -- evaluation ---------------------------------------------------------

    def _check_eval(self, history: EventSequence, t: float):
        if history.mark_count != self.mark_count:
            raise DimensionError("history mark_count does not match the model")
        if len(history) and t <= history.times[-1]:
            raise OrderingError("evaluation time must exceed every history time")

    def _kernel_sum_raw(self, history: EventSequence, t: float,
                        cutoff: float | None) -> np.ndarray:
        """Signed kernel sums per receiving mark (no base, no clamp)."""
        K = self.mark_count
        out = np.zeros(K)
        if not len(history):
            return out
        dts = t - history.times
        if cutoff is not None:
            keep = dts <= cutoff
            dts = dts[keep]
            marks = history.marks[keep]
        else:
            marks = history.marks
        for src in range(K):
            d = dts[marks == src]
            if not d.size:
                continue
            for rec in range(K):
                z = self.prefactors[rec, src]
                if z == 0:
                    continue
                out[rec] += z * float(np.sum(self.kernels[rec][src].value(d)))
        return out

    def intensity_vector(self, history: EventSequence, t: float,
                         cutoff: float | None = None) -> np.ndarray:
        """Per-mark conditional intensities at time t given the history."""
        self._check_eval(history, t)
        raw = np.array([float(b.raw_value(t)) for b in self.bases])
        raw += self._kernel_sum_raw(history, t, cutoff)
        return np.maximum(0.0, raw)

    def conditional_intensity(self, history: EventSequence, t: float, mark: int,
                              cutoff: float | None = None) -> float:
        if not 0 <= mark < self.mark_count:
            raise DimensionError(f"mark {mark} out of range for K={self.mark_count}")
        return float(self.intensity_vector(history, t, cutoff)[mark])

    def total_intensity(self, history: EventSequence, t: float,
                        cutoff: float | None = None) -> float:
        return float(self.intensity_vector(history, t, cutoff).sum())

    def intensity_at(self, history_times, history_marks, times) -> np.ndarray:
        """Vectorized per-mark intensities at many times sharing one history.

        Returns an array of shape ``(len(times), K)``.  All ``times`` must lie
        strictly after the last history time.
        """
        times = np.asarray(times, dtype=float)
        history_times = np.asarray(history_times, dtype=float)
        history_marks = np.asarray(history_marks, dtype=np.int64)
        if history_times.size and times.size and times.min() <= history_times[-1]:
            raise OrderingError("evaluation times must exceed every history time")
        K = self.mark_count
        raw = np.empty((times.size, K))
        for rec in range(K):
            raw[:, rec] = self.bases[rec].raw_value(times)
        if history_times.size:
            dts = times[:, None] - history_times[None, :]
            for src in range(K):
                cols = history_marks == src
                if not cols.any():
                    continue
                d = dts[:, cols]
                for rec in range(K):
                    z = self.prefactors[rec, src]
                    if z == 0:
                        continue
                    raw[:, rec] += z * self.kernels[rec][src].value(d).sum(axis=1)
        return np.maximum(0.0, raw)

    def upper_bound(self, history: EventSequence, t_from: float, lookahead: float,
                    cutoff: float | None = None) -> float:
        """Dominating rate for the mark-summed intensity on (t_from, t_from + lookahead].

        Sums, per mark, the windowed supremum of the (clamped) base plus the
        windowed suprema of all excitatory kernel contributions; inhibitory and
        absent interactions only reduce the intensity and are dropped.
        """
        self._check_eval(history, t_from)
        if lookahead <= 0:
            raise ValidationError("lookahead must be positive")
        hi = t_from + lookahead
        total = sum(b.sup_on(t_from, hi) for b in self.bases)
        if len(history):
            d_lo = t_from - history.times
            if cutoff is not None:
                keep = d_lo <= cutoff
                d_lo = d_lo[keep]
                marks = history.marks[keep]
            else:
                marks = history.marks
            d_hi = d_lo + lookahead
            for src in range(self.mark_count):
                sel = marks == src
                if not sel.any():
                    continue
                lo, hi_d = d_lo[sel], d_hi[sel]
                for rec in range(self.mark_count):
                    if self.prefactors[rec, src] == 1:
                        total += float(np.sum(self.kernels[rec][src].sup_on(lo, hi_d)))
        return float(total)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "mark_count": self.mark_count,
            "bases": [b.to_dict() for b in self.bases],
            "kernels": [[k.to_dict() for k in row] for row in self.kernels],
            "prefactors": self.prefactors.astype(int).tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "HawkesModel":
        try:
            K = d["mark_count"]
            bases = [base_from_dict(b) for b in d["bases"]]
            kernels = [[kernel_from_dict(k) for k in row] for row in d["kernels"]]
            z = d["prefactors"]
        except KeyError as exc:
            raise ParseError(f"model object missing field {exc}") from None
        return cls(K, bases, kernels, z)

    @classmethod
    def from_json(cls, text: str) -> "HawkesModel":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid model JSON: {exc}") from None
        return cls.from_dict(d)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HawkesModel):
            return NotImplemented
        return (
            self.mark_count == other.mark_count
            and self.bases == other.bases
            and self.kernels == other.kernels
            and np.array_equal(self.prefactors, other.prefactors)
        )

    def __repr__(self) -> str:
        kinds = {type(b).__name__ for b in self.bases}
        return f"HawkesModel(K={self.mark_count}, bases={sorted(kinds)})"


# ---------------------------------------------------------------------------
# Operation-style wrappers
# ---------------------------------------------------------------------------


def eval_base(spec: BaseSpec, t: float) -> float:
    """Base intensity at time t >= 0, clamped at zero."""
    if t < 0:
        raise ValidationError("base intensities are defined for t >= 0")
    return float(spec.value(t))


def eval_kernel(spec: KernelSpec, dt: float) -> float:
    """Kernel value at elapsed time dt >= 0."""
    if dt < 0:
        raise ValidationError("kernels are defined for elapsed time dt >= 0")
    return float(spec.value(dt))


def kernel_sup(spec: KernelSpec) -> float:
    """Supremum of the kernel over dt in [0, inf)."""
    return float(spec.sup())


def conditional_intensity(model: HawkesModel, history: EventSequence, t: float,
                          mark: int, cutoff: float | None = None) -> float:
    return model.conditional_intensity(history, t, mark, cutoff)


def total_intensity(model: HawkesModel, history: EventSequence, t: float,
                    cutoff: float | None = None) -> float:
    return model.total_intensity(history, t, cutoff)


def intensity_upper_bound(model: HawkesModel, history: EventSequence, t_from: float,
                          lookahead: float, cutoff: float | None = None) -> float:
    return model.upper_bound(history, t_from, lookahead, cutoff)
