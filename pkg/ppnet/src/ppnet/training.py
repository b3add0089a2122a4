"""Training and finetuning loops.

Each step samples one process entry from a bundle, selects a single target
path, draws a randomized number of context paths from the remainder, and
(usually) truncates all sequences to a shared random length.  Times are
instance-normalized by the context's maximum inter-event gap; the loss is the
Monte-Carlo NLL of the target under the decoded per-prefix parameters.
Optimization uses decoupled weight decay (AdamW); the full-scale learning
rate is 5e-5, which toy runs raise (recorded in the checkpoint manifest).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import torch

from .bundles import ProcessEntry, Sequence, read_bundle
from .model import ModelConfig, RecognitionModel, save_checkpoint
from .objective import normalize_instance, piecewise_nll


@dataclass(frozen=True)
class BatchSpec:
    """Context/target selection and truncation rules for one training step."""

    context_min: int = 2
    context_max: int = 8
    truncate_prob: float = 0.9
    truncate_min: int = 15
    truncate_max: int = 100

    def __post_init__(self):
        if not 1 <= self.context_min <= self.context_max:
            raise ValueError("need 1 <= context_min <= context_max")
        if not 2 <= self.truncate_min <= self.truncate_max:
            raise ValueError("need 2 <= truncate_min <= truncate_max")


def _randint(g: torch.Generator, lo: int, hi: int) -> int:
    """Uniform integer on [lo, hi] (inclusive)."""
    return int(torch.randint(lo, hi + 1, (1,), generator=g).item())


def select_batch(entry: ProcessEntry, spec: BatchSpec, g: torch.Generator,
                 pool: list[int] | None = None):
    """(context sequences, target sequence) for one step.

    ``pool`` restricts selection to the given sequence indices (used by
    finetuning to draw from a train split).  Context size is clamped to
    ``spec.context_max``, the cap seen during training.
    """
    idx = pool if pool is not None else list(range(len(entry.sequences)))
    if len(idx) < 2:
        raise ValueError("need at least 2 sequences (one target, one context)")
    perm = torch.randperm(len(idx), generator=g).tolist()
    target_i = idx[perm[0]]
    rest = [idx[p] for p in perm[1:]]
    m = min(_randint(g, spec.context_min, spec.context_max), len(rest))
    context = [entry.sequences[i] for i in rest[:m]]
    target = entry.sequences[target_i]
    if torch.rand((), generator=g).item() < spec.truncate_prob:
        hi = min(spec.truncate_max, max(len(s) for s in context + [target]))
        lo = min(spec.truncate_min, hi)
        length = _randint(g, lo, hi)
        context = [s.truncated(length) for s in context]
        target = target.truncated(length)
    return context, target


def _step_loss(model: RecognitionModel, context: list[Sequence], target: Sequence,
               mark_count: int, g: torch.Generator, n_mc: int,
               event_term: str) -> torch.Tensor:
    ctx_n, tgt_n, _ = normalize_instance(context, target)
    ctx_matrix = model.encode_context(ctx_n)
    params = model.sequence_params(tgt_n, ctx_matrix, mark_count)
    return piecewise_nll(params, tgt_n, integration="mc", n_mc=n_mc,
                         generator=g, event_term=event_term)


def _write_trace(path: Path, rows, header) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def train(bundle_path, config: ModelConfig, spec: BatchSpec, steps: int,
          seed: int, *, lr: float = 5e-5, weight_decay: float = 1e-4,
          n_mc: int = 100, event_term: str = "log", lr_schedule: str = "constant",
          out_dir=None) -> tuple[RecognitionModel, list[float]]:
    """Train a fresh model on a bundle; returns (model, per-step loss trace).

    ``lr_schedule="cosine"`` anneals the learning rate to ~0 over ``steps``,
    which tightens convergence of short high-lr toy runs.  Aborts with
    diagnostics if the loss turns non-finite.  With ``out_dir`` set, writes a
    checkpoint (config.json + weights.pt + manifest.json) and the loss trace
    as CSV.
    """
    entries = read_bundle(bundle_path)
    if not entries:
        raise ValueError(f"{bundle_path}: bundle holds no process entries")
    for e in entries:
        if len(e.sequences) < 2:
            raise ValueError("every entry needs >= 2 sequences (target + context)")
    mark_count = max(e.mark_count for e in entries)
    if mark_count > config.max_marks:
        raise ValueError(
            f"bundle has {mark_count} marks, model supports {config.max_marks}")
    torch.manual_seed(seed)
    model = RecognitionModel(config)
    trace = _fit(model, entries, mark_count, spec, steps, seed, lr,
                 weight_decay, n_mc, event_term, lr_schedule=lr_schedule)
    if out_dir is not None:
        out_dir = Path(out_dir)
        save_checkpoint(model, out_dir,
                        extra={"lr": lr, "weight_decay": weight_decay,
                               "steps": steps, "seed": seed,
                               "lr_schedule": lr_schedule,
                               "context_max": spec.context_max,
                               "event_term": event_term})
        _write_trace(out_dir / "loss_trace.csv",
                     list(enumerate(trace)), ("step", "nll"))
    return model, trace


def _fit(model, entries, mark_count, spec, steps, seed, lr, weight_decay,
         n_mc, event_term, pools=None, lr_schedule="constant") -> list[float]:
    import math

    g = torch.Generator().manual_seed(seed)
    opt = torch.optim.AdamW(model.parameters(), lr=lr, weight_decay=weight_decay)
    trace: list[float] = []
    for step in range(steps):
        if lr_schedule == "cosine":
            scale = 0.5 * (1.0 + math.cos(math.pi * step / steps))
            for group in opt.param_groups:
                group["lr"] = lr * scale
        ei = _randint(g, 0, len(entries) - 1)
        pool = pools[ei] if pools is not None else None
        context, target = select_batch(entries[ei], spec, g, pool)
        loss = _step_loss(model, context, target, mark_count, g, n_mc, event_term)
        if not torch.isfinite(loss):
            raise RuntimeError(
                f"non-finite loss {loss.item()} at step {step} "
                f"(entry {ei}, target length {len(target)}); aborting")
        opt.zero_grad()
        loss.backward()
        opt.step()
        trace.append(float(loss.item()))
    return trace


def validation_nll(model: RecognitionModel, context: list[Sequence],
                   targets: list[Sequence], mark_count: int,
                   event_term: str = "log") -> float:
    """Deterministic (closed-form integral) NLL of targets given a context."""
    total = 0.0
    with torch.no_grad():
        for target in targets:
            ctx_n, tgt_n, _ = normalize_instance(context, target)
            ctx_matrix = model.encode_context(ctx_n)
            params = model.sequence_params(tgt_n, ctx_matrix, mark_count)
            total += float(piecewise_nll(params, tgt_n, integration="exact",
                                         event_term=event_term).item())
    return total


def finetune(checkpoint_dir, bundle_path, steps: int, seed: int, *,
             spec: BatchSpec | None = None, lr: float = 5e-5,
             weight_decay: float = 1e-4, n_mc: int = 100,
             event_term: str = "log", val_fraction: float = 0.2,
             out_dir=None):
    """Continue NLL training on a new bundle, monitoring a held-out split.

    Each step resamples target and context from the bundle's train split (the
    leading 1 - val_fraction of each entry's sequences, by index); validation
    NLL is computed on the held-out tail before and after.  Returns
    (model, loss trace, (val_before, val_after)).
    """
    from .model import load_checkpoint

    model = load_checkpoint(checkpoint_dir)
    entries = read_bundle(bundle_path)
    mark_count = max(e.mark_count for e in entries)
    if mark_count > model.cfg.max_marks:
        raise ValueError(
            f"bundle has {mark_count} marks, checkpoint supports "
            f"{model.cfg.max_marks}")
    spec = spec or BatchSpec()
    pools, val_sets = [], []
    for e in entries:
        n = len(e.sequences)
        cut = max(2, int(round(n * (1.0 - val_fraction))))
        pools.append(list(range(cut)))
        val_sets.append(list(range(cut, n)))

    def val_total():
        total = 0.0
        for e, pool, val in zip(entries, pools, val_sets):
            if not val:
                continue
            context = [e.sequences[i] for i in pool[: spec.context_max]]
            targets = [e.sequences[i] for i in val]
            total += validation_nll(model, context, targets, mark_count, event_term)
        return total

    val_before = val_total()
    trace = _fit(model, entries, mark_count, spec, steps, seed, lr,
                 weight_decay, n_mc, event_term, pools=pools)
    val_after = val_total()
    if out_dir is not None:
        out_dir = Path(out_dir)
        save_checkpoint(model, out_dir,
                        extra={"lr": lr, "steps": steps, "seed": seed,
                               "finetuned_from": str(checkpoint_dir),
                               "val_before": val_before, "val_after": val_after})
        _write_trace(out_dir / "loss_trace.csv",
                     list(enumerate(trace)), ("step", "nll"))
    return model, trace, (val_before, val_after)
