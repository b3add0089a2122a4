"""Prior sampling over Hawkes models and dataset-bundle generation.

A prior configuration picks one parametric functional form for *all* base
intensities and interaction kernels of a model; parameters are drawn i.i.d.
uniform from fixed ranges per family.  Signed pre-factors come from one of two
categorical laws over {-1, 0, +1}:

    strong: (-1: 0.06, 0: 0.40, +1: 0.54)
    sparse: (-1: 0.01, 0: 0.90, +1: 0.09)

or are all +1 ("all-positive"; also used by the interaction-free families,
whose sampled matrix would be ignored anyway).

Seeding is hierarchical and documented: model ``mi`` of plan row ``ri`` under
config ``ci`` (resample ``attempt``) uses
``m_seed = split(master_seed, ci, ri, mi, attempt)``; its parameters are drawn
from ``Stream(split(m_seed, 0))`` (bases mark-major in each family's listed
parameter order, then kernels row-major, then pre-factors row-major), and
sequence ``s`` is simulated from ``Stream(split(m_seed, 1 + s))``.  The same
(plan, configs, master_seed) therefore always yields an identical bundle.

Bundles serialize as JSON Lines (``.mtpp.jsonl``): a header line
``{"version": "fimpp-bundle/1", "seed": ..., "plan": ..., "configs": ...}``,
then per model ``{"model": {...}, "meta": {...}}`` followed by its sequences
``{"seq": {"t": [...], "k": [...], "horizon": ...}}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import simulate as _sim
from .core import (
    ConstantBase,
    DimensionError,
    EventSequence,
    ExpDecayKernel,
    GammaBase,
    HawkesModel,
    ParseError,
    RayleighKernel,
    SinusoidalBase,
    ValidationError,
    ZeroKernel,
)
from .rng import Stream, split
from .simulate import DivergenceError, SimConfig

__all__ = [
    "BUNDLE_VERSION",
    "MAX_MARKS",
    "PriorConfig",
    "PRIOR_LIBRARY",
    "prior_config",
    "sample_prefactors",
    "sample_model",
    "PlanRow",
    "GenerationPlan",
    "paper_plan",
    "desk_plan",
    "paper_corpus_totals",
    "ModelEntry",
    "DatasetBundle",
    "PriorConfigError",
    "generate",
    "write_bundle",
    "read_bundle",
    "split_by_index",
]

BUNDLE_VERSION = "fimpp-bundle/1"
MAX_MARKS = 22

Z_PROBS = {
    "strong": (0.06, 0.40, 0.54),
    "sparse": (0.01, 0.90, 0.09),
}
_Z_VALUES = np.array([-1, 0, 1], dtype=np.int8)


class PriorConfigError(RuntimeError):
    """A prior configuration persistently produces divergent simulations."""


@dataclass(frozen=True)
class PriorConfig:
    """One functional-form family with its parameter ranges and pre-factor law.

    ``base_ranges`` / ``kernel_ranges`` are ordered (name, low, high) triples;
    the order fixes the sampling order.  ``cross_interactions=False`` zeroes
    all off-diagonal kernels; ``interacting=False`` pins pre-factors at +1.
    """

    name: str
    base_type: str
    base_ranges: tuple[tuple[str, float, float], ...]
    kernel_type: str
    kernel_ranges: tuple[tuple[str, float, float], ...]
    cross_interactions: bool
    interacting: bool
    prefactor_dist: str = "strong"

    def __post_init__(self):
        for pname, lo, hi in self.base_ranges + self.kernel_ranges:
            if not lo < hi:
                raise ValidationError(f"{self.name}: range for {pname} must have low < high")
        if self.prefactor_dist not in ("strong", "sparse", "all-positive"):
            raise ValidationError(f"unknown prefactor distribution {self.prefactor_dist!r}")


_CONST_C0 = (("c0", 0.01, 1.3),)
_EXP_WIDE = (("alpha", 0.005, 1.0), ("beta", 0.001, 10.0))

PRIOR_LIBRARY: dict[str, PriorConfig] = {
    cfg.name: cfg
    for cfg in (
        PriorConfig(
            name="const-exp-no-interaction",
            base_type="constant", base_ranges=_CONST_C0,
            kernel_type="exp_decay", kernel_ranges=_EXP_WIDE,
            cross_interactions=False, interacting=False,
            prefactor_dist="all-positive",
        ),
        PriorConfig(
            name="const-exp",
            base_type="constant", base_ranges=_CONST_C0,
            kernel_type="exp_decay", kernel_ranges=_EXP_WIDE,
            cross_interactions=True, interacting=True,
        ),
        PriorConfig(
            name="sin-exp",
            base_type="sinusoidal",
            base_ranges=(("c0", 0.05, 0.15), ("amplitude", 0.0, 10.0),
                         ("omega", 0.1, 15.0), ("phase", 0.0, 5.0)),
            kernel_type="exp_decay",
            kernel_ranges=(("alpha", 0.1, 0.6), ("beta", 0.8, 2.0)),
            cross_interactions=True, interacting=True,
        ),
        PriorConfig(
            name="gamma-exp",
            base_type="gamma_shape",
            base_ranges=(("c0", 0.1, 1.3), ("amplitude", 10.0, 50.0),
                         ("power", 1.0, 2.0), ("decay", 1.0, 10.1)),
            kernel_type="exp_decay", kernel_ranges=_EXP_WIDE,
            cross_interactions=True, interacting=True,
        ),
        PriorConfig(
            name="poisson",
            base_type="constant", base_ranges=_CONST_C0,
            kernel_type="zero", kernel_ranges=(),
            cross_interactions=False, interacting=False,
            prefactor_dist="all-positive",
        ),
        PriorConfig(
            name="const-rayleigh",
            base_type="constant", base_ranges=_CONST_C0,
            kernel_type="rayleigh",
            kernel_ranges=(("a0", 0.001, 1.0), ("a1", 0.05, 0.25),
                           ("t_shift", 0.0, 0.1)),
            cross_interactions=True, interacting=True,
        ),
    )
}

_BASE_CLASSES = {"constant": ConstantBase, "sinusoidal": SinusoidalBase,
                 "gamma_shape": GammaBase}
_KERNEL_CLASSES = {"exp_decay": ExpDecayKernel, "rayleigh": RayleighKernel,
                   "zero": ZeroKernel}


def prior_config(name: str, prefactor_dist: str | None = None) -> PriorConfig:
    """Look up a library config, optionally overriding its pre-factor law."""
    cfg = PRIOR_LIBRARY.get(name)
    if cfg is None:
        raise ValidationError(
            f"unknown prior config {name!r}; available: {sorted(PRIOR_LIBRARY)}")
    if prefactor_dist is None or prefactor_dist == cfg.prefactor_dist:
        return cfg
    if not cfg.interacting and prefactor_dist != "all-positive":
        raise ValidationError(
            f"{name} has no configurable interactions; pre-factors are fixed at +1")
    return PriorConfig(**{**cfg.__dict__, "prefactor_dist": prefactor_dist})


def sample_prefactors(dist: str, mark_count: int, rng: Stream) -> np.ndarray:
    """K x K signed pre-factor matrix, entries i.i.d. from the named law."""
    if mark_count < 1:
        raise DimensionError("mark_count must be >= 1")
    if dist == "all-positive":
        return np.ones((mark_count, mark_count), dtype=np.int8)
    probs = Z_PROBS.get(dist)
    if probs is None:
        raise ValidationError(f"unknown prefactor distribution {dist!r}")
    idx = rng.categorical(probs, mark_count * mark_count)
    return _Z_VALUES[idx].reshape(mark_count, mark_count)


def _draw_params(ranges, rng: Stream) -> dict:
    return {name: rng.uniform_range(lo, hi) for name, lo, hi in ranges}


def sample_model(config: PriorConfig, mark_count: int, rng: Stream) -> HawkesModel:
    """Draw one Hawkes model from the prior at the given mark count."""
    if not 1 <= mark_count <= MAX_MARKS:
        raise DimensionError(f"mark_count must lie in [1, {MAX_MARKS}]")
    base_cls = _BASE_CLASSES[config.base_type]
    kernel_cls = _KERNEL_CLASSES[config.kernel_type]
    bases = [base_cls(**_draw_params(config.base_ranges, rng))
             for _ in range(mark_count)]
    kernels = []
    for rec in range(mark_count):
        row = []
        for src in range(mark_count):
            if config.kernel_type == "zero" or (not config.cross_interactions and rec != src):
                row.append(ZeroKernel())
            else:
                row.append(kernel_cls(**_draw_params(config.kernel_ranges, rng)))
        kernels.append(row)
    if config.interacting:
        z = sample_prefactors(config.prefactor_dist, mark_count, rng)
    else:
        z = np.ones((mark_count, mark_count), dtype=np.int8)
    return HawkesModel(mark_count, bases, kernels, z)


# ---------------------------------------------------------------------------
# Generation plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanRow:
    mark_count: int
    n_models: int
    n_sequences: int
    events_per_sequence: int

    def __post_init__(self):
        for f in ("mark_count", "n_models", "n_sequences", "events_per_sequence"):
            if getattr(self, f) < 1:
                raise ValidationError(f"{f} must be positive")


@dataclass(frozen=True)
class GenerationPlan:
    rows: tuple[PlanRow, ...]

    def __post_init__(self):
        if not self.rows:
            raise ValidationError("plan must contain at least one row")

    @property
    def total_models(self) -> int:
        return sum(r.n_models for r in self.rows)

    @property
    def total_sequences(self) -> int:
        return sum(r.n_models * r.n_sequences for r in self.rows)

    @property
    def total_events(self) -> int:
        return sum(r.n_models * r.n_sequences * r.events_per_sequence for r in self.rows)

    def to_lists(self) -> list[list[int]]:
        return [[r.mark_count, r.n_models, r.n_sequences, r.events_per_sequence]
                for r in self.rows]

    @classmethod
    def from_lists(cls, rows) -> "GenerationPlan":
        return cls(tuple(PlanRow(*map(int, r)) for r in rows))


def paper_plan() -> GenerationPlan:
    """The full-scale plan: 9000 models per config across five mark counts."""
    rows = [(1, 1000), (5, 1000), (10, 1000), (15, 1000), (22, 5000)]
    return GenerationPlan(tuple(PlanRow(k, m, 2000, 100) for k, m in rows))


def desk_plan() -> GenerationPlan:
    """Seconds-scale default: 2 marks, 3 models, 10 sequences of 30 events."""
    return GenerationPlan((PlanRow(2, 3, 10, 30),))


PAPER_CONFIG_VARIANTS = 8


def paper_corpus_totals() -> dict[str, int]:
    """Headline corpus arithmetic for the full-scale generation campaign.

    The published corpus counts 72K processes: the paper plan's 9000 models
    per configuration across eight configuration variants (the four
    interacting kernel families, each under both pre-factor laws).  Its event
    total of 14.4M corresponds to 200 recorded events (two 100-event
    sequences) per process.
    """
    plan = paper_plan()
    processes = PAPER_CONFIG_VARIANTS * plan.total_models
    events = processes * 2 * plan.rows[0].events_per_sequence
    return {"processes": processes, "events": events}


# ---------------------------------------------------------------------------
# Bundles
# ---------------------------------------------------------------------------


@dataclass
class ModelEntry:
    """One intensity provider (HawkesModel or PiecewiseIntensity) with its sequences."""

    model: object
    sequences: list[EventSequence]
    meta: dict = field(default_factory=dict)


@dataclass
class DatasetBundle:
    seed: int
    plan: GenerationPlan | None
    config_names: list[str]
    entries: list[ModelEntry]
    discarded: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def version(self) -> str:
        return BUNDLE_VERSION

    def sequences(self) -> list[EventSequence]:
        return [s for e in self.entries for s in e.sequences]


def _build_entry(config: PriorConfig, row: PlanRow, master_seed: int,
                 ci: int, ri: int, mi: int, lookahead: float,
                 max_rejections: int, max_resamples: int) -> ModelEntry:
    attempt = 0
    while True:
        m_seed = split(master_seed, ci, ri, mi, attempt)
        model = sample_model(config, row.mark_count, Stream(split(m_seed, 0)))
        try:
            seqs = [
                _sim.simulate(model, SimConfig(
                    event_count=row.events_per_sequence,
                    seed=split(m_seed, 1 + s),
                    lookahead=lookahead,
                    max_rejections=max_rejections,
                ))
                for s in range(row.n_sequences)
            ]
        except DivergenceError:
            attempt += 1
            if attempt > max_resamples:
                raise PriorConfigError(
                    f"config {config.name!r} (row {ri}, model {mi}): "
                    f"{attempt} consecutive divergent models") from None
            continue
        meta = {"config": config.name, "plan_row": ri, "index": mi,
                "seed": m_seed, "resamples": attempt}
        return ModelEntry(model, seqs, meta)


def generate(plan: GenerationPlan, configs: list[PriorConfig], master_seed: int,
             *, lookahead: float = 1.0, max_rejections: int = 1_000_000,
             max_resamples: int = 100, workers: int = 1) -> DatasetBundle:
    """Sample models from the prior and simulate the plan's sequences.

    Models whose simulation diverges are discarded and resampled (the discard
    count lands in the bundle and per-entry metadata); more than
    ``max_resamples`` consecutive discards for one slot raises
    :class:`PriorConfigError`.  With ``workers > 1`` models are built in
    parallel processes; assembly order (and hence the bundle) is independent
    of scheduling.
    """
    if not configs:
        raise ValidationError("configs must be nonempty")
    tasks = [
        (config, row, master_seed, ci, ri, mi, lookahead, max_rejections, max_resamples)
        for ci, config in enumerate(configs)
        for ri, row in enumerate(plan.rows)
        for mi in range(row.n_models)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_build_entry_star, tasks, chunksize=4))
    else:
        entries = [_build_entry(*t) for t in tasks]
    discarded = sum(e.meta["resamples"] for e in entries)
    return DatasetBundle(seed=master_seed, plan=plan,
                         config_names=[c.name for c in configs],
                         entries=entries, discarded=discarded)


def _build_entry_star(args):
    return _build_entry(*args)


# ---------------------------------------------------------------------------
# JSONL serialization
# ---------------------------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_bundle(bundle: DatasetBundle, path) -> None:
    from .likelihood import PiecewiseIntensity

    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {"version": bundle.version, "seed": bundle.seed,
                  "configs": bundle.config_names, "discarded": bundle.discarded}
        if bundle.plan is not None:
            header["plan"] = bundle.plan.to_lists()
        if bundle.extra:
            header["extra"] = bundle.extra
        fh.write(_dumps(header) + "\n")
        for entry in bundle.entries:
            if isinstance(entry.model, PiecewiseIntensity):
                rec = {"piecewise": entry.model.to_dict(), "meta": entry.meta}
            else:
                rec = {"model": entry.model.to_dict(), "meta": entry.meta}
            fh.write(_dumps(rec) + "\n")
            for seq in entry.sequences:
                rec = {"seq": {"t": seq.times.tolist(), "k": seq.marks.tolist(),
                               "horizon": seq.horizon}}
                fh.write(_dumps(rec) + "\n")


def read_bundle(path) -> DatasetBundle:
    """Parse a JSONL bundle, validating every model and sequence.

    Raises :class:`ParseError` (naming the offending line) for malformed
    content and :class:`ValidationError` for well-formed records violating
    invariants (decreasing times, out-of-range marks, ...).
    """
    from .likelihood import PiecewiseIntensity

    path = Path(path)
    entries: list[ModelEntry] = []
    header = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path.name}:{lineno}: invalid JSON ({exc.msg})") from None
            if lineno == 1:
                if not isinstance(obj, dict) or obj.get("version") != BUNDLE_VERSION:
                    raise ParseError(
                        f"{path.name}:1: expected bundle header with version "
                        f"{BUNDLE_VERSION!r}")
                header = obj
                continue
            if "model" in obj:
                try:
                    model = HawkesModel.from_dict(obj["model"])
                except ParseError as exc:
                    raise ParseError(f"{path.name}:{lineno}: {exc}") from None
                except (ValidationError, DimensionError) as exc:
                    raise ValidationError(f"{path.name}:{lineno}: {exc}") from None
                entries.append(ModelEntry(model, [], obj.get("meta", {})))
            elif "piecewise" in obj:
                try:
                    prov = PiecewiseIntensity.from_dict(obj["piecewise"])
                except (ValidationError, DimensionError) as exc:
                    raise ValidationError(f"{path.name}:{lineno}: {exc}") from None
                entries.append(ModelEntry(prov, [], obj.get("meta", {})))
            elif "seq" in obj:
                if not entries:
                    raise ParseError(f"{path.name}:{lineno}: sequence before any model")
                rec = obj["seq"]
                try:
                    seq = EventSequence(rec["t"], rec["k"], rec["horizon"],
                                        entries[-1].model.mark_count)
                except KeyError as exc:
                    raise ParseError(
                        f"{path.name}:{lineno}: sequence record missing {exc}") from None
                except (ValidationError, DimensionError) as exc:
                    raise ValidationError(f"{path.name}:{lineno}: {exc}") from None
                entries[-1].sequences.append(seq)
            else:
                raise ParseError(
                    f"{path.name}:{lineno}: expected a 'model' or 'seq' record")
    if header is None:
        raise ParseError(f"{path.name}: empty file (missing header)")
    try:
        plan = (GenerationPlan.from_lists(header["plan"])
                if "plan" in header else None)
        return DatasetBundle(seed=int(header["seed"]), plan=plan,
                             config_names=list(header["configs"]), entries=entries,
                             discarded=int(header.get("discarded", 0)),
                             extra=header.get("extra", {}))
    except (KeyError, TypeError, ValidationError) as exc:
        raise ParseError(f"{path.name}:1: bad header ({exc})") from None


def split_by_index(items: list, fractions: tuple[float, ...]) -> list[list]:
    """Deterministic contiguous split of ``items`` by cumulative fractions."""
    if not np.isclose(sum(fractions), 1.0):
        raise ValidationError("fractions must sum to 1")
    n = len(items)
    cuts = [0] + [round(n * c) for c in np.cumsum(fractions)]
    cuts[-1] = n
    return [items[cuts[i]:cuts[i + 1]] for i in range(len(fractions))]
