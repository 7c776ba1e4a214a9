import numpy as np
import pytest

from errors import ContractError
from models.classifiers import Batch, build_classifier
from models.model_loader import load_checkpoint, read_checkpoint, save_checkpoint, transfer_encoder
from schemas.configs import ModelConfig, TrainConfig
from services.dataset import materialize, split
from services.synthetic import generate_synthetic
from services.text_pipeline import build_vocab, record_text
from services.training import predict_proba, train


def text_data(rng, vocab_size=20, n=24, steps=4):
    lengths = rng.integers(1, steps + 1, size=n)
    ids = np.zeros((n, steps), dtype=np.int64)
    for row, length in enumerate(lengths):
        ids[row, :length] = rng.integers(2, vocab_size, size=length)
    return Batch(ids=ids, lengths=lengths), rng.integers(15, size=n)


def fused_data(rng, config, n=12):
    batch, labels = text_data(rng, config.vocab_size, n)
    batch.images = rng.uniform(size=(n, 3, config.image_size, config.image_size))
    return batch, labels


class TestTrainLoop:
    def test_zero_learning_rate_changes_nothing(self, rng, tiny_config):
        model = build_classifier("text", tiny_config)
        before = model.state_dict()
        train(model, text_data(rng), TrainConfig(epochs=3, batch_size=5, lr=0.0))
        for name, values in model.state_dict().items():
            assert np.array_equal(values, before[name]), name

    def test_same_seed_same_history(self, tiny_config):
        histories = []
        for _ in range(2):
            model = build_classifier("text", tiny_config)
            data = text_data(np.random.default_rng(0))
            result = train(model, data, TrainConfig(epochs=3, batch_size=8, seed=4), validation=data)
            histories.append([r.model_dump() for r in result.history])
        assert histories[0] == histories[1]

    def test_empty_split(self, tiny_config):
        model = build_classifier("text", tiny_config)
        empty = Batch(ids=np.zeros((0, 3), dtype=np.int64), lengths=np.zeros(0, dtype=np.int64))
        with pytest.raises(ContractError):
            train(model, (empty, np.zeros(0, dtype=np.int64)), TrainConfig(epochs=1))

    def test_one_epoch_one_row(self, rng, tiny_config):
        model = build_classifier("text", tiny_config)
        result = train(model, text_data(rng), TrainConfig(epochs=1))
        assert len(result.history) == 1
        assert result.history[0].val_loss is None

    def test_frozen_encoders_stay_bitwise_equal(self, rng, tiny_config):
        model = build_classifier("fused", tiny_config, freeze_encoders=True)
        before = model.state_dict()
        train(model, fused_data(rng, tiny_config), TrainConfig(epochs=5, batch_size=4, lr=0.01, freeze_encoders=True))
        after = model.state_dict()
        for name in before:
            if name.startswith("head."):
                assert not np.array_equal(before[name], after[name]), name
            else:
                assert np.array_equal(before[name], after[name]), name

    def test_early_stopping_restores_best(self, rng, tiny_config):
        model = build_classifier("text", tiny_config)
        train_data, validation = text_data(rng), text_data(rng)
        result = train(model, train_data, TrainConfig(epochs=40, batch_size=4, lr=0.05, patience=2), validation)
        losses = [r.val_loss for r in result.history]
        assert result.best_epoch == int(np.argmin(losses)) + 1
        if result.stopped_early:
            assert len(result.history) == result.best_epoch + 2


class TestCheckpoint:
    def test_round_trip_is_bitwise(self, tmp_path, rng, tiny_config):
        vocab = build_vocab([" ".join(f"w{i}" for i in range(18))], min_count=1)
        model = build_classifier("fused", tiny_config)
        batch, _ = fused_data(rng, tiny_config, n=4)
        expected = predict_proba(model, batch)

        path = save_checkpoint(tmp_path / "fused.json", model, "fused", tiny_config, vocab, ["g"] * 15, config={"SEED": 0})
        loaded = load_checkpoint(path)
        assert np.array_equal(predict_proba(loaded.model, batch), expected)
        assert loaded.vocab == vocab

        again = save_checkpoint(tmp_path / "again.json", loaded.model, "fused", tiny_config, loaded.vocab, ["g"] * 15, config={"SEED": 0})
        assert path.read_bytes() == again.read_bytes()

    def test_text_checkpoint_has_no_image_weights(self, tmp_path, tiny_config):
        vocab = build_vocab([" ".join(f"w{i}" for i in range(18))], min_count=1)
        path = save_checkpoint(tmp_path / "t.json", build_classifier("text", tiny_config), "text", tiny_config, vocab, ["g"] * 15)
        assert not any(name.startswith("image.") for name in read_checkpoint(path).parameters)

    def test_transfer_text_encoder(self, tmp_path, tiny_config):
        vocab = build_vocab([" ".join(f"w{i}" for i in range(18))], min_count=1)
        source = build_classifier("text", tiny_config.model_copy(update={"init_seed": 5}))
        path = save_checkpoint(tmp_path / "t.json", source, "text", tiny_config, vocab, ["g"] * 15)
        target = build_classifier("fused", tiny_config)
        assert transfer_encoder(target, path, "text") == 4
        assert np.array_equal(target.text_encoder.w_hidden.values, source.encoder.w_hidden.values)


@pytest.mark.slow
class TestLearnability:
    """Desk-scale end-to-end runs on synthetic corpora."""

    def corpus(self, tmp_path, n, seed, mode="distinct", p=1.0):
        records = generate_synthetic(n, num_genres=15, seed=seed, p_text=p, p_img=p, out_dir=tmp_path, mode=mode)
        records = [r.model_copy(update={"cover_path": (tmp_path / r.cover_path).as_posix()}) for r in records]
        data_split = split(records, seed=seed)
        by_id = {r.id: r for r in records}
        subsets = {name: [by_id[i] for i in data_split.ids(name)] for name in ("train", "validation", "test")}
        vocab = build_vocab([record_text(r.title, r.description) for r in subsets["train"]], min_count=3)
        return subsets, vocab

    def fit(self, subsets, vocab, modality, desk_config, epochs=50):
        config = ModelConfig(vocab_size=vocab.size, **desk_config)
        model = build_classifier(modality, config)
        inputs = {
            name: materialize(records, modality, vocab, max_len=40, image_size=config.image_size)
            for name, records in subsets.items()
        }
        train(model, inputs["train"], TrainConfig(epochs=epochs, batch_size=32, lr=0.005, patience=10), inputs["validation"])
        scores = {}
        for name in ("train", "test"):
            batch, labels = inputs[name]
            scores[name] = float((predict_proba(model, batch).argmax(axis=1) == labels).mean())
        return scores

    def test_fused_model_learns_full_signal(self, tmp_path, desk_config):
        subsets, vocab = self.corpus(tmp_path, 1500, seed=0)
        scores = self.fit(subsets, vocab, "fused", desk_config)
        assert scores["train"] >= 0.95
        assert scores["test"] >= 0.90

    def test_fusion_beats_each_modality_on_complementary_signals(self, tmp_path, desk_config):
        subsets, vocab = self.corpus(tmp_path, 1500, seed=1, mode="complementary")
        fused = self.fit(subsets, vocab, "fused", desk_config)["test"]
        text = self.fit(subsets, vocab, "text", desk_config)["test"]
        image = self.fit(subsets, vocab, "image", desk_config)["test"]
        assert fused >= text + 0.10
        assert fused >= image + 0.10

    def test_chance_signal_stays_near_chance(self, tmp_path, desk_config):
        subsets, vocab = self.corpus(tmp_path, 1500, seed=2, p=1 / 15)
        assert self.fit(subsets, vocab, "fused", desk_config, epochs=10)["test"] < 1 / 15 + 0.08


