"""Emitting inferred intensity parameters for the point-process engine.

Inference happens in the normalized time domain; emitted parameters are mapped
back to raw time (all three parameters divide by the normalization constant:
if lambda'(t') = mu' + (alpha' - mu') exp(-beta' (t' - t'_last)) with
t' = t / dt_max, then lambda(t) = lambda'(t') / dt_max has parameters
mu'/dt_max, alpha'/dt_max, beta'/dt_max anchored at the raw t_last).
"""

from __future__ import annotations

import torch

from .bundles import Sequence, write_piecewise_bundle
from .model import RecognitionModel
from .objective import normalize_instance


def infer_piecewise(model: RecognitionModel, context: list[Sequence],
                    history: Sequence, mark_count: int) -> dict:
    """Raw-domain jump-decay parameters for one history given a context."""
    ctx_n, hist_n, dt_max = normalize_instance(context, history)
    with torch.no_grad():
        ctx_matrix = model.encode_context(ctx_n)
        params = model.sequence_params(hist_n, ctx_matrix, mark_count)[-1]  # (K, 3)
    mu, alpha, beta = (params[:, i] / dt_max for i in range(3))
    t_last = float(history.times[-1]) if len(history) else 0.0
    return {"mu": mu.tolist(), "alpha": alpha.tolist(), "beta": beta.tolist(),
            "t_last": t_last, "history": history}


def emit_forecast_bundle(model: RecognitionModel, context: list[Sequence],
                         histories: list[Sequence], mark_count: int,
                         out_path) -> None:
    """Write one piecewise record per history, consumable by the engine's
    ``forecast --piecewise`` command."""
    records = [infer_piecewise(model, context, h, mark_count) for h in histories]
    write_piecewise_bundle(records, out_path)
