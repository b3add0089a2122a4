import numpy as np
import pytest
import torch

from ppnet import (
    ModelConfig,
    RecognitionModel,
    Sequence,
    load_checkpoint,
    save_checkpoint,
    toy_config,
)

from conftest import random_sequence


@pytest.fixture(scope="module")
def model():
    torch.manual_seed(0)
    return RecognitionModel(toy_config())


class TestConfig:
    def test_paper_defaults(self):
        cfg = ModelConfig()
        assert (cfg.embed_dim, cfg.context_layers, cfg.combiner_layers,
                cfg.decoder_layers, cfg.attention_heads) == (256, 4, 2, 4, 4)

    def test_head_divisibility_enforced(self):
        with pytest.raises(ValueError):
            ModelConfig(embed_dim=30, attention_heads=4)

    def test_json_round_trip(self):
        cfg = toy_config(max_marks=5)
        assert ModelConfig.from_json(cfg.to_json()) == cfg


class TestEmbedEvents:
    @pytest.mark.parametrize("n", [1, 15, 100])
    def test_shape(self, model, n):
        rng = np.random.default_rng(n)
        seq = random_sequence(rng, n, mark_count=3)
        emb = model.embed_events(seq)
        assert emb.shape == (n, model.cfg.embed_dim)
        assert torch.isfinite(emb).all()

    def test_first_event_dt_equals_time(self, model):
        # dt_1 = t_1 under the t_0 = 0 convention
        t1 = 0.73
        seq = Sequence([t1], [2], 1.0)
        emb = model.embed_events(seq)
        t = torch.tensor([t1])
        manual = (model.embedder.phi_t(t) + model.embedder.phi_mark(torch.tensor([2]))
                  + model.embedder.phi_dt(t))
        assert torch.allclose(emb, manual)

    def test_mark_table_permutation_equivariance(self, model):
        rng = np.random.default_rng(4)
        seq = random_sequence(rng, 12, mark_count=4)
        perm = np.array([2, 3, 1, 0, *range(4, model.cfg.max_marks)])
        base = model.embed_events(seq)
        table = model.embedder.phi_mark.weight.data.clone()
        try:
            model.embedder.phi_mark.weight.data = table[perm]
            permuted_marks = np.argsort(perm)[seq.marks]  # so table[perm][pm] = table[marks]
            emb = model.embed_events(Sequence(seq.times, permuted_marks, seq.horizon))
            assert torch.allclose(base, emb)
        finally:
            model.embedder.phi_mark.weight.data = table

    def test_mark_out_of_range(self):
        torch.manual_seed(1)
        small = RecognitionModel(toy_config(max_marks=2))
        with pytest.raises(ValueError, match="out of range"):
            small.embed_events(Sequence([0.5], [2], 1.0))


class TestEncodeContext:
    @pytest.mark.parametrize("m", [1, 4, 32])
    def test_shape(self, model, m):
        rng = np.random.default_rng(m)
        seqs = [random_sequence(rng, 10, mark_count=2) for _ in range(m)]
        ctx = model.encode_context(seqs)
        assert ctx.shape == (m, model.cfg.embed_dim)
        assert torch.isfinite(ctx).all()

    def test_empty_context_rejected(self, model):
        with pytest.raises(ValueError, match="at least one"):
            model.encode_context([])

    def test_permutation_equivariance_of_rows(self, model):
        rng = np.random.default_rng(8)
        seqs = [random_sequence(rng, 8, mark_count=2) for _ in range(5)]
        base = model.encode_context(seqs).detach()
        perm = [3, 0, 4, 2, 1]
        out = model.encode_context([seqs[i] for i in perm]).detach()
        assert torch.allclose(out, base[perm], atol=1e-5)


class TestDecodeHistory:
    @pytest.mark.parametrize("n,m,K", [(1, 1, 1), (15, 4, 2), (100, 4, 22)])
    def test_shapes_and_nonnegativity(self, n, m, K):
        torch.manual_seed(42)
        model = RecognitionModel(toy_config(max_marks=22))
        rng = np.random.default_rng(n + m + K)
        ctx = model.encode_context(
            [random_sequence(rng, 12, mark_count=K) for _ in range(m)])
        hist = random_sequence(rng, n, mark_count=K)
        mu, alpha, beta = model.decode_history(hist, ctx, mark_count=K)
        for v in (mu, alpha, beta):
            assert v.shape == (K,)
            assert torch.isfinite(v).all()
            assert (v >= 0).all()  # softplus range

    def test_single_mark_access_and_range(self, model):
        rng = np.random.default_rng(3)
        ctx = model.encode_context([random_sequence(rng, 10, 2)])
        hist = random_sequence(rng, 5, 2)
        mu, alpha, beta = model.decode_history(hist, ctx, mark=1, mark_count=2)
        assert mu.ndim == 0 and alpha.ndim == 0 and beta.ndim == 0
        with pytest.raises(ValueError):
            model.decode_history(hist, ctx, mark=5, mark_count=2)

    def test_context_set_invariance_of_decoded_params(self, model):
        # reordering context sequences moves the decoded parameters by at
        # most numerical noise (no positional encoding in the combiner)
        rng = np.random.default_rng(11)
        seqs = [random_sequence(rng, 10, mark_count=2) for _ in range(6)]
        hist = random_sequence(rng, 8, mark_count=2)
        ref = model.decode_history(hist, model.encode_context(seqs), mark_count=2)
        for seed in range(3):
            order = np.random.default_rng(seed).permutation(6)
            out = model.decode_history(
                hist, model.encode_context([seqs[i] for i in order]), mark_count=2)
            for a, b in zip(ref, out):
                assert torch.allclose(a, b, atol=1e-6)

    def test_finite_across_history_lengths(self, model):
        rng = np.random.default_rng(13)
        ctx = model.encode_context([random_sequence(rng, 20, 2) for _ in range(2)])
        for n in (1, 7, 40, 100):
            hist = random_sequence(rng, n, 2)
            params = model.decode_history(hist, ctx, mark_count=2)
            assert all(torch.isfinite(v).all() for v in params)


class TestCheckpoint:
    def test_round_trip_preserves_outputs(self, tmp_path):
        torch.manual_seed(7)
        model = RecognitionModel(toy_config(max_marks=3))
        save_checkpoint(model, tmp_path / "ckpt", extra={"lr": 1e-3})
        again = load_checkpoint(tmp_path / "ckpt")
        rng = np.random.default_rng(1)
        seqs = [random_sequence(rng, 9, 3) for _ in range(3)]
        hist = random_sequence(rng, 6, 3)
        a = model.decode_history(hist, model.encode_context(seqs), mark_count=3)
        b = again.decode_history(hist, again.encode_context(seqs), mark_count=3)
        for x, y in zip(a, b):
            assert torch.equal(x, y)
