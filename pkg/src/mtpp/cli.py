"""Command-line surface: reproducible generate / simulate / fit / forecast /
predict-next / nll / evaluate / normalize pipelines.

Every command takes long-form flags only, derives all randomness from
``--seed`` (falling back to the ``MTPP_SEED`` environment variable, then 0),
writes its primary output to ``--out``, and drops a run manifest alongside it
at ``<out>.manifest.json``.  Outputs are byte-deterministic given identical
flags; manifests differ only in wall-clock time.

Exit codes: 0 success, 1 validation/usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    DimensionError,
    EventSequence,
    HawkesModel,
    OrderingError,
    ParseError,
    ValidationError,
)
from .datagen import (
    DatasetBundle,
    GenerationPlan,
    ModelEntry,
    PlanRow,
    PRIOR_LIBRARY,
    desk_plan,
    paper_plan,
    prior_config,
    generate,
    read_bundle,
    write_bundle,
)
from .likelihood import fit_exponential_hawkes, nll as _nll, normalize
from .metrics import MetricsReport, OtdCosts, evaluate_forecasts
from .rng import split
from .simulate import SimConfig, forecast, simulate

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _write_json(path, obj) -> None:
    Path(path).write_text(_dumps(obj) + "\n", encoding="utf-8")


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MTPP_SEED")
    return int(env) if env else 0


def _manifest(args, seed: int, inputs: list[str], outputs: list[str], t0: float) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "seed")}
    doc = {
        "command": args.command,
        "config": config,
        "seed": seed,
        "inputs": sorted(inputs),
        "outputs": sorted(outputs),
        "wall_clock_s": time.perf_counter() - t0,
        "version": __version__,
    }
    _write_json(str(args.out) + ".manifest.json", doc)


def _load_provider(args):
    """Provider + owning bundle (if any) from --model / --bundle flags."""
    if getattr(args, "model", None):
        model = HawkesModel.from_json(Path(args.model).read_text(encoding="utf-8"))
        return model, None, [args.model]
    bundle = read_bundle(args.bundle)
    idx = args.model_index
    if not 0 <= idx < len(bundle.entries):
        raise ValidationError(
            f"model index {idx} out of range (bundle has {len(bundle.entries)} entries)")
    return bundle.entries[idx].model, bundle, [args.bundle]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_generate(args) -> None:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    config = prior_config(args.config, args.prefactors)
    row_flags = (args.marks, args.models, args.sequences, args.events)
    if any(v is not None for v in row_flags):
        desk = desk_plan().rows[0]
        defaults = (desk.mark_count, desk.n_models, desk.n_sequences,
                    desk.events_per_sequence)
        plan = GenerationPlan((PlanRow(*(v if v is not None else d
                                         for v, d in zip(row_flags, defaults))),))
    elif args.profile == "paper":
        plan = paper_plan()
    else:
        plan = desk_plan()
    bundle = generate(plan, [config], seed, lookahead=args.lookahead,
                      workers=args.workers)
    write_bundle(bundle, args.out)
    _manifest(args, seed, [], [args.out], t0)


def _cmd_simulate(args) -> None:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    provider, _, inputs = _load_provider(args)
    if (args.events is None) == (args.horizon is None):
        raise ValidationError("set exactly one of --events and --horizon")
    seqs = []
    for s in range(args.sequences):
        cfg = SimConfig(event_count=args.events, horizon=args.horizon,
                        lookahead=args.lookahead, seed=split(seed, s))
        seqs.append(simulate(provider, cfg))
    out = DatasetBundle(seed=seed, plan=None, config_names=["simulate"],
                        entries=[ModelEntry(provider, seqs, {"seed": seed})])
    write_bundle(out, args.out)
    _manifest(args, seed, inputs, [args.out], t0)


def _cmd_fit(args) -> None:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    bundle = read_bundle(args.bundle)
    entry = bundle.entries[args.model_index]
    result = fit_exponential_hawkes(entry.sequences, entry.model.mark_count,
                                    max_iter=args.iterations)
    _write_json(args.out, {"model": result.model.to_dict(), "nll": result.nll,
                           "iterations": result.iterations,
                           "converged": result.converged})
    _manifest(args, seed, [args.bundle], [args.out], t0)


def _forecast_histories(args, bundle) -> tuple[list, list[EventSequence], dict]:
    """(provider, history) pairs plus evaluate-facing metadata."""
    entry = bundle.entries[args.model_index]
    h = args.history_events
    pairs = []
    for seq in entry.sequences:
        if len(seq) < h:
            raise ValidationError(
                f"sequence has {len(seq)} events, fewer than --history-events={h}")
        pairs.append((entry.model, seq.prefix(h)))
    extra = {"trials": args.trials, "sources": len(entry.sequences),
             "history_events": h, "n_events": args.n,
             "model_index": args.model_index}
    return entry.model, pairs, extra


def _cmd_forecast(args) -> None:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    if (args.bundle is None) == (args.piecewise is None):
        raise ValidationError("set exactly one of --bundle and --piecewise")
    if args.piecewise:
        bundle = read_bundle(args.piecewise)
        inputs = [args.piecewise]
        entries_out = []
        for ei, entry in enumerate(bundle.entries):
            history = entry.sequences[0] if entry.sequences else None
            sims = forecast(entry.model, history, args.n, args.trials,
                            split(seed, ei), lookahead=args.lookahead)
            entries_out.append(ModelEntry(entry.model, sims, entry.meta))
        extra = {"forecast": {"trials": args.trials, "sources": len(bundle.entries),
                              "n_events": args.n, "per_entry": True}}
        out = DatasetBundle(seed=seed, plan=None, config_names=["forecast"],
                            entries=entries_out, extra=extra)
    else:
        bundle = read_bundle(args.bundle)
        inputs = [args.bundle]
        provider, pairs, meta = _forecast_histories(args, bundle)
        sims_by_source = [
            forecast(provider, hist, args.n, args.trials, split(seed, si),
                     lookahead=args.lookahead)
            for si, (_, hist) in enumerate(pairs)
        ]
        # trial-major sequence order: all sources for trial 0, then trial 1, ...
        seqs = [sims_by_source[s][r] for r in range(args.trials)
                for s in range(len(pairs))]
        out = DatasetBundle(seed=seed, plan=None, config_names=["forecast"],
                            entries=[ModelEntry(provider, seqs, {"seed": seed})],
                            extra={"forecast": meta})
    write_bundle(out, args.out)
    _manifest(args, seed, inputs, [args.out], t0)


def _cmd_predict_next(args) -> None:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    provider, bundle, inputs = _load_provider(args)
    entry = bundle.entries[args.model_index]
    seq = entry.sequences[args.sequence_index]
    if len(seq) < args.history_events:
        raise ValidationError("sequence shorter than --history-events")
    history = seq.prefix(args.history_events)
    from .simulate import predict_next

    pred_time, pred_mark = predict_next(provider, history, args.trials, seed,
                                        lookahead=args.lookahead)
    _write_json(args.out, {"predicted_time": pred_time, "predicted_mark": pred_mark,
                           "trials": args.trials})
    _manifest(args, seed, inputs, [args.out], t0)


def _cmd_nll(args) -> None:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    provider, bundle, inputs = _load_provider(args)
    entry = bundle.entries[args.model_index]
    event_term = "literal" if args.paper_literal_loss else "log"
    kwargs = dict(integration=args.integration, event_term=event_term)
    if args.integration == "mc":
        kwargs.update(n_mc=args.n_mc, rng=seed)
    per_seq = [_nll(provider, seq, **kwargs) for seq in entry.sequences]
    _write_json(args.out, {"total": sum(per_seq), "per_sequence": per_seq,
                           "integration": args.integration,
                           "event_term": event_term})
    _manifest(args, seed, inputs, [args.out], t0)


def _cmd_normalize(args) -> None:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    bundle = read_bundle(args.bundle)
    seqs = bundle.sequences()
    flat, state = normalize(seqs)
    it = iter(flat)
    entries = [ModelEntry(e.model, [next(it) for _ in e.sequences], e.meta)
               for e in bundle.entries]
    extra = dict(bundle.extra)
    extra["normalization"] = {"dt_max": state.dt_max}
    out = DatasetBundle(seed=bundle.seed, plan=bundle.plan,
                        config_names=bundle.config_names, entries=entries,
                        discarded=bundle.discarded, extra=extra)
    write_bundle(out, args.out)
    _manifest(args, seed, [args.bundle], [args.out], t0)


def _cmd_evaluate(args) -> None:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    pred = read_bundle(args.pred)
    truth = read_bundle(args.truth)
    report = _evaluate_bundles(pred, truth, args.horizon_events,
                               OtdCosts(args.otd_cost))
    _write_json(args.out, report.to_dict())
    _manifest(args, seed, [args.pred, args.truth], [args.out], t0)


def _evaluate_bundles(pred: DatasetBundle, truth: DatasetBundle, n: int,
                      costs: OtdCosts) -> MetricsReport:
    """Pair forecast output against ground truth and compute all metrics.

    Forecast bundles carry their (trials, sources, history_events) layout in
    the header; plain bundles are compared pairwise by position as a single
    trial, using the last ``n`` events of each sequence.
    """
    info = pred.extra.get("forecast")
    mark_count = max(e.model.mark_count for e in truth.entries)
    if info and not info.get("per_entry"):
        trials_n, sources = info["trials"], info["sources"]
        h = info["history_events"]
        t_entry = truth.entries[info.get("model_index", 0)]
        pred_seqs = pred.entries[0].sequences
        if len(pred_seqs) != trials_n * sources or len(t_entry.sequences) < sources:
            raise ValidationError("forecast layout does not match the truth bundle")
        truths, t0s = [], []
        for s in range(sources):
            ts = t_entry.sequences[s]
            if len(ts) < h + n:
                raise ValidationError(
                    f"truth sequence {s} has {len(ts)} events; needs {h + n}")
            truths.append(EventSequence(ts.times[h:h + n], ts.marks[h:h + n],
                                        ts.horizon, ts.mark_count))
            t0s.append(float(ts.times[h - 1]) if h > 0 else 0.0)
        pred_trials = [[pred_seqs[r * sources + s].tail(n) for s in range(sources)]
                       for r in range(trials_n)]
        return evaluate_forecasts(pred_trials, truths, t0s, mark_count, costs)
    pred_seqs = pred.sequences()
    truth_seqs = truth.sequences()
    if len(pred_seqs) != len(truth_seqs):
        raise ValidationError("bundles must carry equally many sequences")
    preds, truths, t0s = [], [], []
    for p, t in zip(pred_seqs, truth_seqs):
        if len(p) < n or len(t) < len(p):
            raise ValidationError(
                f"need {n} forecast events and a truth at least as long")
        hp = len(p) - n
        preds.append(p.tail(n))
        truths.append(EventSequence(t.times[hp:hp + n], t.marks[hp:hp + n],
                                    t.horizon, t.mark_count))
        t0s.append(float(t.times[hp - 1]) if hp > 0 else 0.0)
    return evaluate_forecasts([preds], truths, t0s, mark_count, costs)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="mtpp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mtpp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func, command=name)
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (default: $MTPP_SEED or 0)")
        p.add_argument("--out", required=True, help="output path")
        return p

    p = add("generate", _cmd_generate, "sample models from the prior and simulate a bundle")
    p.add_argument("--config", required=True, choices=sorted(PRIOR_LIBRARY),
                   help="prior configuration family")
    p.add_argument("--prefactors", choices=["strong", "sparse", "all-positive"],
                   default=None, help="override the pre-factor distribution")
    p.add_argument("--profile", choices=["desk", "paper"], default="desk",
                   help="generation plan scale")
    p.add_argument("--marks", type=int, default=None)
    p.add_argument("--models", type=int, default=None)
    p.add_argument("--sequences", type=int, default=None)
    p.add_argument("--events", type=int, default=None)
    p.add_argument("--lookahead", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)

    p = add("simulate", _cmd_simulate, "simulate sequences from a stored model")
    p.add_argument("--model", default=None, help="model JSON file")
    p.add_argument("--bundle", default=None, help="bundle holding the model")
    p.add_argument("--model-index", type=int, default=0)
    p.add_argument("--events", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--sequences", type=int, default=1)
    p.add_argument("--lookahead", type=float, default=1.0)

    p = add("fit", _cmd_fit, "fit an excitatory exponential Hawkes model by MLE")
    p.add_argument("--bundle", required=True)
    p.add_argument("--model-index", type=int, default=0)
    p.add_argument("--iterations", type=int, default=500)

    p = add("forecast", _cmd_forecast, "autoregressive multi-event forecasts")
    p.add_argument("--bundle", default=None, help="bundle with ground-truth models")
    p.add_argument("--piecewise", default=None,
                   help="bundle of piecewise-intensity records (with histories)")
    p.add_argument("--model-index", type=int, default=0)
    p.add_argument("--history-events", type=int, default=0)
    p.add_argument("--n", type=int, required=True, help="events per continuation")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--lookahead", type=float, default=1.0)

    p = add("predict-next", _cmd_predict_next, "aggregate next-event prediction")
    p.add_argument("--bundle", required=True)
    p.add_argument("--model-index", type=int, default=0)
    p.add_argument("--sequence-index", type=int, default=0)
    p.add_argument("--history-events", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--lookahead", type=float, default=1.0)

    p = add("nll", _cmd_nll, "negative log-likelihood of a bundle entry")
    p.add_argument("--bundle", required=True)
    p.add_argument("--model-index", type=int, default=0)
    p.add_argument("--integration", choices=["exact", "mc"], default="exact")
    p.add_argument("--n-mc", type=int, default=100)
    p.add_argument("--paper-literal-loss", action="store_true",
                   help="subtract raw intensities instead of their logs")

    p = add("evaluate", _cmd_evaluate, "score forecasts against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--horizon-events", type=int, required=True)
    p.add_argument("--otd-cost", type=float, default=1.0)

    p = add("normalize", _cmd_normalize, "instance-normalize a bundle's times")
    p.add_argument("--bundle", required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0
    try:
        args.func(args)
        return 0
    except (ValidationError, ParseError, DimensionError, OrderingError,
            FileNotFoundError) as exc:
        print(f"mtpp {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime errors: divergence, fit failures, ...
        print(f"mtpp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
