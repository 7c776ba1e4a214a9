import json

import numpy as np
import pytest
from pydantic import ValidationError

from errors import ContractError, ManifestError
from schemas.records import GameRecord
from services.dataset import materialize, read_manifest, split, split_sizes, write_manifest
from services.text_pipeline import build_vocab


def records(n, genres=15):
    return [GameRecord(id=f"id-{i:06d}", raw_genres=["Sport"], resolved_genre=i % genres) for i in range(n)]


class TestSplit:
    def test_fifty_thousand(self):
        assert split_sizes(50_000) == (35_000, 5_000, 10_000)
        result = split(records(50_000), seed=1)
        assert (len(result.train), len(result.validation), len(result.test)) == (35_000, 5_000, 10_000)

    def test_ten(self):
        result = split(records(10), seed=0)
        assert (len(result.train), len(result.validation), len(result.test)) == (7, 1, 2)

    def test_same_seed_same_split(self):
        assert split(records(100), seed=5) == split(records(100), seed=5)
        assert split(records(100), seed=5) != split(records(100), seed=6)

    def test_manifest_order_does_not_matter(self):
        data = records(40)
        assert split(data, seed=2) == split(list(reversed(data)), seed=2)

    def test_too_few(self):
        with pytest.raises(ContractError):
            split(records(9), seed=0)

    @pytest.mark.parametrize("stratified", [False, True])
    def test_disjoint_and_exhaustive(self, stratified):
        rng = np.random.default_rng(11)
        for _ in range(25):
            n, seed = int(rng.integers(10, 400)), int(rng.integers(1_000))
            data = records(n)
            result = split(data, seed=seed, stratified=stratified)
            parts = [set(result.train), set(result.validation), set(result.test)]
            assert sum(len(p) for p in parts) == n
            assert set().union(*parts) == {r.id for r in data}
            if not stratified:
                expected = (0.7 * n, 0.1 * n, 0.2 * n)
                assert all(abs(len(p) - e) <= 1 for p, e in zip(parts, expected))

    def test_balanced_corpus_stays_balanced(self):
        data = records(1500)
        result = split(data, seed=3)
        by_id = {r.id: r.resolved_genre for r in data}
        counts = np.bincount([by_id[i] for i in result.test], minlength=15)
        # 300 test records, 20 expected per genre.
        assert counts.min() >= 5 and counts.max() <= 40

    def test_stratified_proportions_per_genre(self):
        data = records(300, genres=3)
        result = split(data, seed=0, stratified=True)
        by_id = {r.id: r.resolved_genre for r in data}
        assert np.bincount([by_id[i] for i in result.train], minlength=3).tolist() == [70, 70, 70]


class TestManifest:
    def test_round_trip_resolves_cover_paths(self, tmp_path):
        rows = [
            GameRecord(id="g1", title="One", description="Shoot things", cover_path="covers/g1.png", raw_genres=["Shooter"]),
            GameRecord(id="g2", description="Solve things", raw_genres=["Puzzle", "Indie"]),
        ]
        path = write_manifest(rows, tmp_path / "manifest.jsonl")
        loaded = read_manifest(path)
        assert [r.id for r in loaded] == ["g1", "g2"]
        assert loaded[0].cover_path == (tmp_path / "covers" / "g1.png").as_posix()
        assert loaded[1].raw_genres == ["Puzzle", "Indie"]

    def test_every_bad_row_reported(self, tmp_path):
        lines = [
            {"id": "ok", "genres": ["Sport"]},
            {"id": "no-genres", "genres": []},
            {"id": "ok", "genres": ["Racing"]},
            {"genres": ["Racing"]},
            {"id": "extra", "genres": ["Racing"], "rating": 5},
        ]
        path = tmp_path / "manifest.jsonl"
        path.write_text("\n".join(json.dumps(line) for line in lines) + "\nnot json\n")
        with pytest.raises(ManifestError) as info:
            read_manifest(path)
        problems = info.value.problems
        assert len(problems) == 5
        assert problems[1].startswith("line 3: duplicate id 'ok'")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_manifest(tmp_path / "manifest.jsonl")


def test_materialize_text_only():
    data = [
        GameRecord(id="a", description="jump jump run", raw_genres=["Platform"], resolved_genre=6),
        GameRecord(id="b", description="race", raw_genres=["Racing"], resolved_genre=9),
    ]
    vocab = build_vocab([r.description for r in data], min_count=1)
    batch, labels = materialize(data, "text", vocab, max_len=4, image_size=8)
    assert batch.images is None
    assert batch.ids.shape == (2, 4)
    assert labels.tolist() == [6, 9]

    with pytest.raises(ContractError):
        materialize([GameRecord(id="c", raw_genres=["Sport"])], "text", vocab, 4, 8)


def test_relative_manifest_path_stores_absolute_covers(tmp_path, monkeypatch):
    (tmp_path / "corpus").mkdir()
    (tmp_path / "corpus" / "manifest.jsonl").write_text(json.dumps({"id": "g1", "genres": ["Racing"], "cover_path": "covers/g1.png"}) + "\n")
    monkeypatch.chdir(tmp_path)
    record = read_manifest("corpus/manifest.jsonl")[0]
    assert record.cover_path == (tmp_path / "corpus" / "covers" / "g1.png").resolve().as_posix()


@pytest.mark.parametrize("genre", [-1, 15])
def test_resolved_genre_outside_canonical_range(genre):
    with pytest.raises(ValidationError):
        GameRecord(id="g1", raw_genres=["Racing"], resolved_genre=genre)
