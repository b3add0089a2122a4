"""The recognition network: context-conditioned jump-decay intensity inference.

Event tuples (t, mark, dt) embed as a sum of three projections, the time
projections carrying sinusoidal output activations (first feature linear, the
rest sines of learned affine maps).  Each context sequence is self-encoded and
pooled by a learnable fixed query; the pooled rows pass through a combiner
encoder with no positional encoding, so the context is a *set*.  A causally
masked transformer decoder reads the (BOS-prefixed) history as queries against
the combined context; the output at each position encodes the history prefix
ending there.  Per mark, the history encoding concatenated with a mark
embedding feeds three softplus-capped MLP heads emitting (mu, alpha, beta) of

    lambda(t, k | H) = mu_k + (alpha_k - mu_k) * exp(-beta_k * (t - t_last)).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

from .bundles import Sequence


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters.

    ``paper_config`` mirrors the full-scale setup (256-wide, 4/2/4 layers,
    4 heads); ``toy_config`` is the seconds-scale profile used in tests.
    """

    embed_dim: int = 256
    context_layers: int = 4
    combiner_layers: int = 2
    decoder_layers: int = 4
    attention_heads: int = 4
    head_hidden: int = 256
    max_marks: int = 22

    def __post_init__(self):
        if self.embed_dim % self.attention_heads:
            raise ValueError("embed_dim must be divisible by attention_heads")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        return cls(**json.loads(text))


def paper_config() -> ModelConfig:
    return ModelConfig()


def toy_config(max_marks: int = 22) -> ModelConfig:
    return ModelConfig(embed_dim=32, context_layers=1, combiner_layers=1,
                       decoder_layers=1, attention_heads=2, head_hidden=32,
                       max_marks=max_marks)


class SineTimeEmbedding(nn.Module):
    """Affine features with sinusoidal output activations (first one linear)."""

    def __init__(self, dim: int):
        super().__init__()
        self.lin = nn.Linear(1, dim)

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        h = self.lin(t.unsqueeze(-1))
        return torch.cat([h[..., :1], torch.sin(h[..., 1:])], dim=-1)


class EventEmbedder(nn.Module):
    """u_i = phi_t(t_i) + phi_mark(k_i) + phi_dt(dt_i), with dt_1 = t_1."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.phi_t = SineTimeEmbedding(cfg.embed_dim)
        self.phi_dt = SineTimeEmbedding(cfg.embed_dim)
        self.phi_mark = nn.Embedding(cfg.max_marks, cfg.embed_dim)
        self.max_marks = cfg.max_marks

    def forward(self, times: torch.Tensor, marks: torch.Tensor) -> torch.Tensor:
        if marks.numel() and int(marks.max()) >= self.max_marks:
            raise ValueError(
                f"mark {int(marks.max())} out of range (max_marks={self.max_marks})")
        dts = torch.diff(times, prepend=times.new_zeros(1))
        return self.phi_t(times) + self.phi_mark(marks) + self.phi_dt(dts)


def _encoder(cfg: ModelConfig, layers: int) -> nn.TransformerEncoder:
    layer = nn.TransformerEncoderLayer(
        d_model=cfg.embed_dim, nhead=cfg.attention_heads,
        dim_feedforward=4 * cfg.embed_dim, batch_first=True, dropout=0.0)
    return nn.TransformerEncoder(layer, num_layers=layers)


class ParamHeads(nn.Module):
    """Three two-hidden-layer MLPs with softplus outputs, one per parameter."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.mark_emb = nn.Embedding(cfg.max_marks, cfg.embed_dim)

        def mlp():
            return nn.Sequential(
                nn.Linear(2 * cfg.embed_dim, cfg.head_hidden), nn.ReLU(),
                nn.Linear(cfg.head_hidden, cfg.head_hidden), nn.ReLU(),
                nn.Linear(cfg.head_hidden, 1), nn.Softplus())

        self.head_mu = mlp()
        self.head_alpha = mlp()
        self.head_beta = mlp()

    def forward(self, h: torch.Tensor, mark_count: int) -> torch.Tensor:
        """(.., E) history encodings -> (.., K, 3) nonnegative parameters."""
        marks = torch.arange(mark_count, device=h.device)
        me = self.mark_emb(marks)                      # (K, E)
        h_exp = h.unsqueeze(-2).expand(*h.shape[:-1], mark_count, h.shape[-1])
        me_exp = me.expand(*h.shape[:-1], mark_count, me.shape[-1])
        v = torch.cat([h_exp, me_exp], dim=-1)         # (.., K, 2E)
        return torch.cat([self.head_mu(v), self.head_alpha(v), self.head_beta(v)],
                         dim=-1)                       # (.., K, 3)


class RecognitionModel(nn.Module):
    """End-to-end intensity recognizer over instance-normalized inputs."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.embedder = EventEmbedder(cfg)
        self.context_encoder = _encoder(cfg, cfg.context_layers)
        self.pool_query = nn.Parameter(torch.randn(1, 1, cfg.embed_dim) * 0.02)
        self.pool_attn = nn.MultiheadAttention(cfg.embed_dim, cfg.attention_heads,
                                               batch_first=True)
        self.combiner = _encoder(cfg, cfg.combiner_layers)
        dec_layer = nn.TransformerDecoderLayer(
            d_model=cfg.embed_dim, nhead=cfg.attention_heads,
            dim_feedforward=4 * cfg.embed_dim, batch_first=True, dropout=0.0)
        self.decoder = nn.TransformerDecoder(dec_layer, num_layers=cfg.decoder_layers)
        self.bos = nn.Parameter(torch.randn(1, 1, cfg.embed_dim) * 0.02)
        self.heads = ParamHeads(cfg)

    # -- spec operations ----------------------------------------------------

    def embed_events(self, seq: Sequence) -> torch.Tensor:
        """Per-event embeddings, shape (n, E).  Times must be normalized."""
        times = torch.as_tensor(seq.times, dtype=torch.float32)
        marks = torch.as_tensor(seq.marks, dtype=torch.long)
        return self.embedder(times, marks)

    def encode_context(self, sequences: list[Sequence]) -> torch.Tensor:
        """Combined per-sequence context rows, shape (m, E)."""
        if not sequences:
            raise ValueError("context must contain at least one sequence")
        pooled = []
        for seq in sequences:
            emb = self.embed_events(seq).unsqueeze(0)          # (1, n, E)
            enc = self.context_encoder(emb)
            c, _ = self.pool_attn(self.pool_query, enc, enc)   # (1, 1, E)
            pooled.append(c[0, 0])
        rows = torch.stack(pooled).unsqueeze(0)                # (1, m, E)
        return self.combiner(rows)[0]                          # (m, E)

    def prefix_encodings(self, history: Sequence, context: torch.Tensor) -> torch.Tensor:
        """Decoder outputs for every history prefix, shape (n + 1, E).

        Row j encodes the prefix of the first j events (row 0 = empty history
        via the BOS token); the causal mask makes one decoder pass yield all
        prefixes.
        """
        emb = self.embed_events(history)
        tgt = torch.cat([self.bos, emb.unsqueeze(0)], dim=1)   # (1, n+1, E)
        n = tgt.shape[1]
        mask = nn.Transformer.generate_square_subsequent_mask(n, device=tgt.device)
        out = self.decoder(tgt, context.unsqueeze(0), tgt_mask=mask)
        return out[0]                                          # (n+1, E)

    def decode_history(self, history: Sequence, context: torch.Tensor,
                       mark: int | None = None, mark_count: int | None = None):
        """Intensity parameters for the full history (anchored at its end).

        Returns (mu, alpha, beta) tensors of shape (K,), or scalars for a
        single ``mark``.  ``mark_count`` defaults to the largest mark seen in
        the history plus one.
        """
        K = mark_count if mark_count is not None else self._mark_count(history)
        if K > self.cfg.max_marks:
            raise ValueError(f"mark count {K} exceeds max_marks={self.cfg.max_marks}")
        h_t = self.prefix_encodings(history, context)[-1]
        params = self.heads(h_t, K)                            # (K, 3)
        mu, alpha, beta = params[:, 0], params[:, 1], params[:, 2]
        if mark is not None:
            if not 0 <= mark < K:
                raise ValueError(f"mark {mark} out of range for K={K}")
            return mu[mark], alpha[mark], beta[mark]
        return mu, alpha, beta

    def _mark_count(self, seq: Sequence) -> int:
        hi = int(seq.marks.max()) + 1 if len(seq) else 1
        if hi > self.cfg.max_marks:
            raise ValueError(f"mark count {hi} exceeds max_marks={self.cfg.max_marks}")
        return max(hi, 1)

    def sequence_params(self, target: Sequence, context: torch.Tensor,
                        mark_count: int) -> torch.Tensor:
        """(n + 1, K, 3) parameters, one row per history prefix of the target."""
        out = self.prefix_encodings(target, context)
        return self.heads(out, mark_count)


def save_checkpoint(model: RecognitionModel, out_dir, extra: dict | None = None) -> None:
    """Checkpoint directory: config.json + weights.pt (+ manifest extras)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(model.cfg.to_json() + "\n", encoding="utf-8")
    torch.save(model.state_dict(), out_dir / "weights.pt")
    if extra:
        (out_dir / "manifest.json").write_text(
            json.dumps(extra, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(out_dir) -> RecognitionModel:
    out_dir = Path(out_dir)
    cfg = ModelConfig.from_json((out_dir / "config.json").read_text(encoding="utf-8"))
    model = RecognitionModel(cfg)
    model.load_state_dict(torch.load(out_dir / "weights.pt", weights_only=True))
    return model
