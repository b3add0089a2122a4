"""Forecast evaluation metrics for marked event sequences.

Five measures: optimal-transport distance between sequences (monotone
alignment with same-mark matches costing |t - t_hat| and a flat cost per
unmatched event), RMSE on per-mark event counts, position-wise mark accuracy,
and RMSE / sMAPE on inter-arrival times.  Multi-trial runs aggregate each
metric as mean and sample standard deviation across trials.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import DimensionError, EventSequence, ValidationError

__all__ = [
    "OtdCosts",
    "otd",
    "rmse_events",
    "accuracy",
    "rmse_dt",
    "smape_dt",
    "inter_arrival_times",
    "MetricsReport",
    "evaluate_forecasts",
]


@dataclass(frozen=True)
class OtdCosts:
    """Alignment cost structure: one flat delete/insert cost.

    Matches are allowed only between events of the same mark, at cost
    |t - t_hat|; a cross-mark substitution is realized as delete + insert
    (cost 2 * delete_cost).
    """

    delete_cost: float = 1.0

    def __post_init__(self):
        if not self.delete_cost > 0:
            raise ValidationError("delete_cost must be positive")


def otd(pred: EventSequence, truth: EventSequence,
        costs: OtdCosts = OtdCosts()) -> float:
    """Minimum cost of a monotone partial matching between two sequences.

    Dynamic program over (len(pred) + 1) x (len(truth) + 1) states in
    O(n * m); every unmatched event on either side costs ``delete_cost``.
    """
    C = costs.delete_cost
    pt, pk = pred.times, pred.marks
    tt, tk = truth.times, truth.marks
    n, m = len(pt), len(tt)
    prev = np.arange(m + 1, dtype=float) * C
    for i in range(1, n + 1):
        cur = np.empty(m + 1)
        cur[0] = i * C
        for j in range(1, m + 1):
            best = min(prev[j] + C, cur[j - 1] + C)
            if pk[i - 1] == tk[j - 1]:
                best = min(best, prev[j - 1] + abs(pt[i - 1] - tt[j - 1]))
            cur[j] = best
        prev = cur
    return float(prev[m])


def _check_pairs(preds, truths):
    if len(preds) != len(truths):
        raise DimensionError("prediction and truth lists must have equal length")
    if not preds:
        raise DimensionError("at least one sequence pair required")


def rmse_events(preds: list[EventSequence], truths: list[EventSequence],
                mark_count: int) -> float:
    """Root mean squared error over per-mark event-count vectors."""
    _check_pairs(preds, truths)
    total = 0.0
    for p, t in zip(preds, truths):
        cp = np.bincount(p.marks, minlength=mark_count)
        ct = np.bincount(t.marks, minlength=mark_count)
        total += float(((ct - cp) ** 2).sum())
    return math.sqrt(total / len(preds))


def accuracy(preds: list[EventSequence], truths: list[EventSequence]) -> float:
    """Fraction of positions with correctly predicted marks, averaged over pairs."""
    _check_pairs(preds, truths)
    acc = 0.0
    for p, t in zip(preds, truths):
        if len(p) != len(t):
            raise DimensionError("accuracy needs equal-length sequences per pair")
        if len(t) == 0:
            raise DimensionError("accuracy is undefined for empty sequences")
        acc += float((p.marks == t.marks).mean())
    return acc / len(preds)


def inter_arrival_times(seq: EventSequence, t0: float) -> np.ndarray:
    """Gaps between consecutive events, the first measured from ``t0``."""
    return np.diff(seq.times, prepend=t0)


def rmse_dt(preds: list[EventSequence], truths: list[EventSequence],
            t0s: list[float]) -> float:
    """RMSE between inter-arrival vectors (anchored at the shared history end)."""
    _check_pairs(preds, truths)
    out = 0.0
    for p, t, t0 in zip(preds, truths, t0s):
        if len(p) != len(t) or len(t) == 0:
            raise DimensionError("rmse_dt needs equal, nonzero lengths per pair")
        dp = inter_arrival_times(p, t0)
        dt_ = inter_arrival_times(t, t0)
        out += float(((dt_ - dp) ** 2).mean())
    return math.sqrt(out / len(preds))


def smape_dt(preds: list[EventSequence], truths: list[EventSequence],
             t0s: list[float]) -> float:
    """Symmetric MAPE (in [0, 200]) between inter-arrival vectors.

    A term with both gaps zero contributes 0 (exact matches must score 0).
    """
    _check_pairs(preds, truths)
    out = 0.0
    for p, t, t0 in zip(preds, truths, t0s):
        if len(p) != len(t) or len(t) == 0:
            raise DimensionError("smape_dt needs equal, nonzero lengths per pair")
        dp = inter_arrival_times(p, t0)
        dt_ = inter_arrival_times(t, t0)
        denom = np.abs(dt_) + np.abs(dp)
        terms = np.divide(2.0 * np.abs(dt_ - dp), denom,
                          out=np.zeros_like(denom), where=denom > 0)
        out += float(terms.mean())
    return 100.0 * out / len(preds)


_METRIC_NAMES = ("otd", "rmse_e", "acc", "rmse_dt", "smape_dt")


@dataclass(frozen=True)
class MetricsReport:
    """Per-trial metric values with mean/std aggregates.

    ``trials[name]`` holds one value per trial; the scalar attributes are the
    trial means.  Serializes to a flat JSON object.
    """

    otd: float
    rmse_e: float
    acc: float
    rmse_dt: float
    smape_dt: float
    n_trials: int
    trials: dict[str, list[float]]

    def std(self, name: str) -> float:
        vals = self.trials[name]
        return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0

    def to_dict(self) -> dict:
        out = {"n_trials": self.n_trials}
        for name in _METRIC_NAMES:
            out[name] = getattr(self, name)
            out[name + "_std"] = self.std(name)
            out[name + "_trials"] = list(self.trials[name])
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_trials(cls, trials: dict[str, list[float]]) -> "MetricsReport":
        n = len(trials["otd"])
        means = {name: float(np.mean(trials[name])) for name in _METRIC_NAMES}
        return cls(n_trials=n, trials={k: list(v) for k, v in trials.items()}, **means)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        trials = {name: list(d[name + "_trials"]) for name in _METRIC_NAMES}
        return cls(n_trials=int(d["n_trials"]), trials=trials,
                   **{name: float(d[name]) for name in _METRIC_NAMES})


def evaluate_forecasts(pred_trials: list[list[EventSequence]],
                       truths: list[EventSequence], t0s: list[float],
                       mark_count: int,
                       costs: OtdCosts = OtdCosts()) -> MetricsReport:
    """All five metrics for multi-trial forecasts against shared truths.

    ``pred_trials[r][j]`` is trial r's continuation for truth ``truths[j]``;
    ``t0s[j]`` is the last shared history time anchoring inter-arrival
    vectors.  Metrics are computed per trial and aggregated as mean and
    sample standard deviation.
    """
    if not pred_trials:
        raise DimensionError("at least one trial required")
    trials = {name: [] for name in _METRIC_NAMES}
    for preds in pred_trials:
        _check_pairs(preds, truths)
        trials["otd"].append(
            float(np.mean([otd(p, t, costs) for p, t in zip(preds, truths)])))
        trials["rmse_e"].append(rmse_events(preds, truths, mark_count))
        trials["acc"].append(accuracy(preds, truths))
        trials["rmse_dt"].append(rmse_dt(preds, truths, t0s))
        trials["smape_dt"].append(smape_dt(preds, truths, t0s))
    return MetricsReport.from_trials(trials)
