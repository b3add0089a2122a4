"""Likelihood machinery: normalization, integrated intensity, NLL, MLE.

The MTPP negative log-likelihood of a sequence S = {(t_i, k_i)} on [0, T] is

    NLL = sum_k Lambda(T, k) - sum_i log lambda(t_i, k_i | H_{t_i}),

where Lambda(T, k) integrates the mark-k intensity over [0, T].  Integration
is either exact (closed form, constant-base exponential-kernel models only) or
Monte Carlo.  The MC estimator stratifies samples over the inter-event
partition of [0, T] (allocated proportionally to interval length, at least one
per interval) so every sample sees the correct history prefix; the total
sample budget matches the nominal ``n_mc``.

A ``--paper-literal-loss`` style toggle is available via ``event_term``: the
printed training objective some implementations use subtracts the raw
intensities instead of their logarithms; ``event_term="literal"`` reproduces
that form, while the default ``"log"`` is the proper log-likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

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
from .rng import Stream

__all__ = [
    "NormalizationState",
    "normalize",
    "denormalize_intensity",
    "scale_collection",
    "max_inter_event_gap",
    "PiecewiseIntensity",
    "eval_piecewise",
    "integrated_intensity_mc",
    "integrated_intensity_exact",
    "UnsupportedRegionError",
    "nll",
    "collection_nll",
    "FitError",
    "FitResult",
    "fit_exponential_hawkes",
    "exp_hawkes_nll_and_grad",
]


class UnsupportedRegionError(ValueError):
    """Closed-form integration invalid here (zero clamp active or wrong family)."""


class FitError(RuntimeError):
    """Optimization failed (non-finite objective or no admissible step)."""


# ---------------------------------------------------------------------------
# Instance normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalizationState:
    """The context's maximum inter-event time, the unit of normalized time."""

    dt_max: float

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValidationError("dt_max must be positive")


def max_inter_event_gap(collection: list[EventSequence]) -> float:
    """Largest inter-event time over the collection, with t_0 = 0 per sequence."""
    best = 0.0
    any_events = False
    for seq in collection:
        if len(seq):
            any_events = True
            gaps = np.diff(seq.times, prepend=0.0)
            best = max(best, float(gaps.max()))
    if not any_events:
        raise ValidationError("collection contains no events")
    return best


def normalize(collection: list[EventSequence]) -> tuple[list[EventSequence], NormalizationState]:
    """Rescale all times and horizons so the largest inter-event gap is 1."""
    dt_max = max_inter_event_gap(collection)
    state = NormalizationState(dt_max)
    out = [
        EventSequence(seq.times / dt_max, seq.marks, seq.horizon / dt_max, seq.mark_count)
        for seq in collection
    ]
    return out, state


def denormalize_intensity(rate_normalized, state: NormalizationState):
    """Map a normalized-domain rate back to the original time unit."""
    return rate_normalized / state.dt_max


def scale_collection(collection: list[EventSequence], s: float) -> list[EventSequence]:
    """All times and horizons multiplied by s > 0."""
    return [seq.scaled(s) for seq in collection]


# ---------------------------------------------------------------------------
# Piecewise (jump-decay) intensity family
# ---------------------------------------------------------------------------


class PiecewiseIntensity:
    """Per-mark intensity mu + (alpha - mu) * exp(-beta * (t - t_last)).

    Jumps to ``alpha`` at the anchor (the most recent history event) and
    relaxes monotonically towards ``mu`` at speed ``beta``.  When used as a
    simulation provider the anchor follows the growing history; standalone
    evaluation anchors at the stored ``t_last``.
    """

    __slots__ = ("mu", "alpha", "beta", "t_last", "mark_count")

    def __init__(self, mu, alpha, beta, t_last: float):
        mu = np.ascontiguousarray(mu, dtype=np.float64)
        alpha = np.ascontiguousarray(alpha, dtype=np.float64)
        beta = np.ascontiguousarray(beta, dtype=np.float64)
        if not (mu.ndim == 1 and mu.shape == alpha.shape == beta.shape):
            raise DimensionError("mu, alpha, beta must be 1-D arrays of equal length")
        if mu.size < 1:
            raise DimensionError("at least one mark required")
        if (mu < 0).any() or (alpha < 0).any() or (beta < 0).any():
            raise ValidationError("piecewise intensity parameters must be nonnegative")
        for a in (mu, alpha, beta):
            a.setflags(write=False)
        self.mu = mu
        self.alpha = alpha
        self.beta = beta
        self.t_last = float(t_last)
        self.mark_count = mu.size

    def values(self, t: float, anchor: float | None = None) -> np.ndarray:
        anchor = self.t_last if anchor is None else anchor
        if t < anchor:
            raise OrderingError("evaluation time precedes the anchor event")
        decay = np.exp(-self.beta * (t - anchor))
        return self.mu + (self.alpha - self.mu) * decay

    def value(self, t: float, mark: int) -> float:
        if not 0 <= mark < self.mark_count:
            raise DimensionError(f"mark {mark} out of range for K={self.mark_count}")
        return float(self.values(t)[mark])

    def intensity_at(self, history_times, history_marks, times) -> np.ndarray:
        history_times = np.asarray(history_times, dtype=float)
        times = np.asarray(times, dtype=float)
        anchor = float(history_times[-1]) if history_times.size else self.t_last
        if times.size and times.min() < anchor:
            raise OrderingError("evaluation times precede the anchor event")
        decay = np.exp(-np.outer(times - anchor, self.beta))
        return self.mu + (self.alpha - self.mu) * decay

    def cursor(self, times, marks):
        return _PiecewiseCursor(self, times)

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "alpha": self.alpha.tolist(),
                "beta": self.beta.tolist(), "t_last": self.t_last}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseIntensity":
        try:
            return cls(d["mu"], d["alpha"], d["beta"], d["t_last"])
        except KeyError as exc:
            raise ValidationError(f"piecewise record missing field {exc}") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseIntensity):
            return NotImplemented
        return (self.t_last == other.t_last
                and np.array_equal(self.mu, other.mu)
                and np.array_equal(self.alpha, other.alpha)
                and np.array_equal(self.beta, other.beta))

    def __repr__(self) -> str:
        return f"PiecewiseIntensity(K={self.mark_count}, t_last={self.t_last})"


class _PiecewiseCursor:
    __slots__ = ("_p", "_anchor")

    def __init__(self, p: PiecewiseIntensity, times):
        times = np.asarray(times, dtype=float)
        self._p = p
        self._anchor = float(times[-1]) if times.size else p.t_last

    def total_and_rates(self, t: float):
        rates = self._p.values(t, self._anchor)
        return float(rates.sum()), rates

    def bound(self, t: float, lookahead: float) -> float:
        lo = self._p.values(t, self._anchor)
        hi = self._p.values(t + lookahead, self._anchor)
        return float(np.maximum(lo, hi).sum())

    def push(self, t: float, mark: int):
        self._anchor = t


def eval_piecewise(p: PiecewiseIntensity, t: float, mark: int) -> float:
    """Piecewise intensity at t >= t_last for one mark (anchored at t_last)."""
    return p.value(t, mark)


# ---------------------------------------------------------------------------
# Integrated intensity
# ---------------------------------------------------------------------------


def _check_interval(history: EventSequence, t_start: float, t_end: float):
    if t_end <= t_start:
        raise ValidationError("t_end must exceed t_start")
    if len(history) and t_start < history.times[-1]:
        raise OrderingError("t_start must not precede the last history time")


def integrated_intensity_mc(provider, history: EventSequence, t_start: float,
                            t_end: float, mark: int, n_mc: int = 100,
                            rng: Stream | int | None = None,
                            return_se: bool = False):
    """Monte-Carlo estimate of the mark's integrated intensity on an interval.

    Uses ``n_mc`` uniform sample points on (t_start, t_end) against the fixed
    history.  With ``return_se`` also returns the standard error of the
    estimate (sample std of the integrand times the interval length over
    sqrt(n_mc)).
    """
    _check_interval(history, t_start, t_end)
    if n_mc < 1:
        raise ValidationError("n_mc must be >= 1")
    stream = rng if isinstance(rng, Stream) else Stream(rng or 0)
    length = t_end - t_start
    s = t_start + stream.uniforms(n_mc) * length
    vals = provider.intensity_at(history.times, history.marks, s)[:, mark]
    est = length * float(vals.mean())
    if not return_se:
        return est
    se = length * float(vals.std(ddof=1)) / math.sqrt(n_mc) if n_mc > 1 else math.nan
    return est, se


def _require_const_exp(model):
    if not isinstance(model, HawkesModel):
        raise UnsupportedRegionError("closed-form integration needs a HawkesModel")
    if not all(isinstance(b, ConstantBase) for b in model.bases):
        raise UnsupportedRegionError("closed-form integration needs constant bases")
    if not all(isinstance(k, (ExpDecayKernel, ZeroKernel)) for row in model.kernels for k in row):
        raise UnsupportedRegionError(
            "closed-form integration needs exponential or zero kernels")


def _exp_terms(model: HawkesModel, history: EventSequence, mark: int):
    """Signed (z*alpha, beta, t') triples feeding mark's intensity."""
    za, bb, tt = [], [], []
    for t, src in zip(history.times, history.marks):
        z = int(model.prefactors[mark, src])
        kern = model.kernels[mark][src]
        if z and isinstance(kern, ExpDecayKernel):
            za.append(z * kern.alpha)
            bb.append(kern.beta)
            tt.append(t)
    return np.asarray(za), np.asarray(bb), np.asarray(tt)


def integrated_intensity_exact(model: HawkesModel, history: EventSequence,
                               t_start: float, t_end: float, mark: int) -> float:
    """Closed-form integrated intensity for constant-base exp-kernel models.

    Valid only while the zero clamp is inactive on the interval; with
    inhibitory terms present this is verified by checking the unclamped
    integrand at the interval endpoints and at its interior extremum (located
    numerically).  Raises :class:`UnsupportedRegionError` when the clamp would
    bite, in which case callers fall back to Monte Carlo.
    """
    _require_const_exp(model)
    _check_interval(history, t_start, t_end)
    if not 0 <= mark < model.mark_count:
        raise DimensionError(f"mark {mark} out of range for K={model.mark_count}")
    c0 = model.bases[mark].c0
    za, bb, tt = _exp_terms(model, history, mark)
    if za.size == 0:
        if c0 < 0:
            raise UnsupportedRegionError("negative constant base is clamped everywhere")
        return c0 * (t_end - t_start)

    def integrand(s):
        return c0 + float(np.sum(za * np.exp(-bb * (s - tt))))

    if (za < 0).any() or c0 < 0:
        eps = -1e-12 * (1.0 + abs(c0))
        if integrand(t_start) < eps or integrand(t_end) < eps:
            raise UnsupportedRegionError("zero clamp active at an interval endpoint")
        grid = np.linspace(t_start, t_end, 129)
        g = c0 + (za * np.exp(-bb * (grid[:, None] - tt))).sum(axis=1)
        j = int(np.argmin(g))
        lo, hi = grid[max(0, j - 1)], grid[min(len(grid) - 1, j + 1)]
        res = minimize_scalar(integrand, bounds=(lo, hi), method="bounded")
        if min(float(g[j]), float(res.fun)) < eps:
            raise UnsupportedRegionError("zero clamp active inside the interval")
    contrib = (za / bb) * (np.exp(-bb * (t_start - tt)) - np.exp(-bb * (t_end - tt)))
    return float(c0 * (t_end - t_start) + contrib.sum())


# ---------------------------------------------------------------------------
# Negative log-likelihood
# ---------------------------------------------------------------------------


def _mc_allocation(lengths: np.ndarray, n_mc: int) -> np.ndarray:
    """Per-interval sample counts: proportional to length, at least one each."""
    total = lengths.sum()
    if total <= 0:
        return np.zeros(len(lengths), dtype=int)
    n = np.maximum(1, np.rint(n_mc * lengths / total).astype(int))
    n[lengths <= 0] = 0
    return n


def nll(provider, sequence: EventSequence, *, integration: str = "exact",
        n_mc: int = 100, rng: Stream | int | None = None,
        event_term: str = "log") -> float:
    """Negative log-likelihood of ``sequence`` under the provider's intensity.

    Returns +inf (degenerate) when an observed event has zero intensity under
    the model; fitting loops need a comparable objective, so this does not
    raise.
    """
    if provider.mark_count != sequence.mark_count:
        raise DimensionError("provider and sequence mark counts differ")
    if integration not in ("exact", "mc"):
        raise ValidationError("integration must be 'exact' or 'mc'")
    if event_term not in ("log", "literal"):
        raise ValidationError("event_term must be 'log' or 'literal'")
    times, marks = sequence.times, sequence.marks
    T = sequence.horizon
    edges = np.concatenate([[0.0], times, [T]])
    lengths = np.diff(edges)
    K = provider.mark_count

    comp = 0.0
    if integration == "exact":
        for i in range(len(edges) - 1):
            a, b = edges[i], edges[i + 1]
            if b <= a:
                continue
            hist = sequence.prefix(i)
            for k in range(K):
                comp += integrated_intensity_exact(provider, hist, a, b, k)
    else:
        stream = rng if isinstance(rng, Stream) else Stream(rng or 0)
        alloc = _mc_allocation(lengths, n_mc)
        for i in range(len(edges) - 1):
            if alloc[i] == 0:
                continue
            a, b = edges[i], edges[i + 1]
            s = a + stream.uniforms(alloc[i]) * (b - a)
            vals = provider.intensity_at(times[:i], marks[:i], s)
            comp += (b - a) * float(vals.sum()) / alloc[i]

    ev = 0.0
    for i in range(len(times)):
        lam = float(provider.intensity_at(times[:i], marks[:i],
                                          times[i : i + 1])[0, marks[i]])
        if event_term == "literal":
            ev += lam
        elif lam <= 0.0:
            return math.inf
        else:
            ev += math.log(lam)
    return comp - ev


def collection_nll(provider, collection: list[EventSequence], **kwargs) -> float:
    """Total NLL over a collection, reduced in sequence-index order."""
    return sum(nll(provider, seq, **kwargs) for seq in collection)


# ---------------------------------------------------------------------------
# Exponential-Hawkes maximum likelihood
# ---------------------------------------------------------------------------


class _ExpHawkesData:
    """Flattened pairwise structures for fast NLL/gradient evaluation.

    For all sequences jointly: event-term pairs (i, j < i) carry the elapsed
    time d = t_i - t_j and the receiver/source pair index k_i * K + k_j;
    compensator entries carry u = T - t_j and the pair index a * K + k_j for
    every receiver a.
    """

    def __init__(self, collection: list[EventSequence], K: int):
        d_list, pair_list, row_list = [], [], []
        cu_list, cpair_list = [], []
        marks_all = []
        T_total = 0.0
        offset = 0
        receivers = np.arange(K, dtype=np.int64)
        for seq in collection:
            if seq.mark_count != K:
                raise DimensionError("all sequences must share the fit's mark count")
            t, m = seq.times, seq.marks
            n = len(seq)
            T_total += seq.horizon
            marks_all.append(m)
            if n:
                j_idx, i_idx = np.triu_indices(n, k=1)  # j < i
                d_list.append(t[i_idx] - t[j_idx])
                pair_list.append(m[i_idx] * K + m[j_idx])
                row_list.append(offset + i_idx)
                u = seq.horizon - t
                cu_list.append(np.repeat(u, K))
                cpair_list.append(np.tile(receivers, n) * K + np.repeat(m, K))
            offset += n
        self.K = K
        self.n_events = offset
        self.T_total = T_total
        self.marks = np.concatenate(marks_all) if marks_all else np.empty(0, dtype=np.int64)
        self.d = np.concatenate(d_list) if d_list else np.empty(0)
        self.pair = np.concatenate(pair_list) if pair_list else np.empty(0, dtype=np.int64)
        self.row = np.concatenate(row_list) if row_list else np.empty(0, dtype=np.int64)
        self.cu = np.concatenate(cu_list) if cu_list else np.empty(0)
        self.cpair = np.concatenate(cpair_list) if cpair_list else np.empty(0, dtype=np.int64)

    def nll_and_grad(self, c0: np.ndarray, alpha: np.ndarray, beta: np.ndarray):
        K = self.K
        K2 = K * K
        af, bf = alpha.ravel(), beta.ravel()

        e = np.exp(-bf[self.pair] * self.d)
        lam = c0[self.marks] + np.bincount(self.row, weights=af[self.pair] * e,
                                           minlength=self.n_events)
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            return math.inf, None

        ecu = np.exp(-bf[self.cpair] * self.cu)
        w = 1.0 - ecu
        s_w = np.bincount(self.cpair, weights=w, minlength=K2)
        s_ue = np.bincount(self.cpair, weights=self.cu * ecu, minlength=K2)
        comp = float(c0.sum() * self.T_total + (af / bf * s_w).sum())
        value = comp - float(np.log(lam).sum())

        inv_lam = 1.0 / lam[self.row]
        g_c0 = np.full(K, self.T_total) - np.bincount(self.marks, weights=1.0 / lam,
                                                      minlength=K)
        g_alpha = s_w / bf - np.bincount(self.pair, weights=e * inv_lam, minlength=K2)
        g_beta = (af * (-s_w / bf**2 + s_ue / bf)
                  + af * np.bincount(self.pair, weights=self.d * e * inv_lam,
                                     minlength=K2))
        return value, (g_c0, g_alpha.reshape(K, K), g_beta.reshape(K, K))


def exp_hawkes_nll_and_grad(collection: list[EventSequence], c0, alpha, beta):
    """Exact NLL and analytic gradients of a constant-base exponential Hawkes
    model (all prefactors +1) on a collection.

    Returns ``(nll, (g_c0, g_alpha, g_beta))``; gradients are None when the
    objective is non-finite.
    """
    c0 = np.asarray(c0, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    K = c0.size
    if alpha.shape != (K, K) or beta.shape != (K, K):
        raise DimensionError("alpha and beta must be (K, K) for K = len(c0)")
    data = _ExpHawkesData(collection, K)
    return data.nll_and_grad(c0, alpha, beta)


@dataclass
class FitResult:
    model: HawkesModel
    nll: float
    iterations: int
    converged: bool
    nll_trace: list[float] = field(repr=False, default_factory=list)


def _excitatory_exp_model(c0: np.ndarray, alpha: np.ndarray, beta: np.ndarray) -> HawkesModel:
    K = c0.size
    bases = [ConstantBase(float(c)) for c in c0]
    kernels = [[ExpDecayKernel(float(alpha[a, b]), float(beta[a, b])) for b in range(K)]
               for a in range(K)]
    return HawkesModel(K, bases, kernels, np.ones((K, K), dtype=int))


def fit_exponential_hawkes(collection: list[EventSequence], mark_count: int,
                           init: HawkesModel | tuple | None = None,
                           max_iter: int = 500, step0: float = 1.0,
                           tol: float = 1e-10) -> FitResult:
    """Maximum-likelihood constant-base exponential-Hawkes fit (excitatory).

    Full-batch gradient descent with Armijo backtracking on log-parameters
    (positivity by construction), against the exact closed-form NLL.  The
    pre-factor matrix is fixed at +1.

    Raises :class:`FitError` if the objective turns non-finite or no
    admissible step exists.
    """
    if not collection:
        raise ValidationError("collection must be nonempty")
    K = mark_count
    data = _ExpHawkesData(collection, K)
    if data.n_events == 0:
        raise ValidationError("collection contains no events")

    if init is None:
        counts = np.bincount(data.marks, minlength=K).astype(float)
        rate = np.maximum(counts / data.T_total, 1e-4)
        c0 = 0.75 * rate
        alpha = np.full((K, K), 0.05)
        beta = np.ones((K, K))
    elif isinstance(init, HawkesModel):
        _require_const_exp(init)
        c0 = np.array([b.c0 for b in init.bases])
        alpha = np.array([[k.alpha for k in row] for row in init.kernels])
        beta = np.array([[k.beta for k in row] for row in init.kernels])
    else:
        c0, alpha, beta = (np.asarray(a, dtype=float).copy() for a in init)

    def unpack(theta):
        with np.errstate(over="ignore"):
            p = np.exp(theta)
        return p[:K], p[K : K + K * K].reshape(K, K), p[K + K * K :].reshape(K, K)

    def objective(theta):
        c, a, b = unpack(theta)
        val, grads = data.nll_and_grad(c, a, b)
        if grads is None:
            return val, None
        g = np.concatenate([grads[0] * c, (grads[1] * a).ravel(), (grads[2] * b).ravel()])
        return val, g

    theta = np.log(np.concatenate([c0, alpha.ravel(), beta.ravel()]))
    f, g = objective(theta)
    if not math.isfinite(f):
        raise FitError(f"non-finite objective at initialization (nll={f})")
    trace = [f]
    step = step0
    stall = 0
    converged = False
    it = 0
    theta_prev = g_prev = None
    for it in range(1, max_iter + 1):
        gnorm2 = float(g @ g)
        if math.sqrt(gnorm2) < 1e-9:
            converged = True
            break
        # Barzilai-Borwein spectral step seeds the backtracking search; it
        # adapts to curvature far better than plain doubling on the stiff
        # log-parameterized objective.
        s = step
        if theta_prev is not None:
            d_theta = theta - theta_prev
            d_g = g - g_prev
            denom = float(d_theta @ d_g)
            if denom > 0:
                s = float(d_theta @ d_theta) / denom
        s = min(max(s, 1e-12), 1e8)
        while True:
            f_new, g_new = objective(theta - s * g)
            if math.isfinite(f_new) and f_new <= f - 1e-4 * s * gnorm2:
                break
            s *= 0.5
            if s < 1e-20:
                raise FitError(
                    f"no admissible descent step at iteration {it} "
                    f"(nll={f:.6g}, |grad|={math.sqrt(gnorm2):.3g})")
        theta_prev, g_prev = theta, g
        theta = theta - s * g
        if abs(f - f_new) <= tol * (1.0 + abs(f)):
            stall += 1
        else:
            stall = 0
        f, g = f_new, g_new
        trace.append(f)
        step = min(s * 2.0, 1e6)
        if stall >= 3:
            converged = True
            break

    c, a, b = unpack(theta)
    return FitResult(model=_excitatory_exp_model(c, a, b), nll=f,
                     iterations=it, converged=converged, nll_trace=trace)
