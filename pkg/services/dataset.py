"""
Manifest ingestion, train/validation/test splitting and the prepared-dataset directory.

A prepared directory holds:
  records.jsonl          resolved GameRecords, one per line, manifest order
  train.txt validation.txt test.txt   one record id per line
  split.json             the DatasetSplit itself
  vocab.txt              vocabulary built from the training split only
  prepare_report.json    genre histogram, split sizes, config echo
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from errors import ContractError, ManifestError
from models.classifiers import Batch
from schemas.configs import Modality
from schemas.records import DatasetSplit, GameRecord, ManifestRow, Vocabulary
from schemas.reports import PrepareReport
from services.image_pipeline import prepare_image
from services.text_pipeline import encode_batch, load_vocab, record_text

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "validation", "test")
MIN_SPLIT_RECORDS = 10


# --- Manifest -------------------------------------------------------------------------------

def read_manifest(path: Union[str, Path]) -> List[GameRecord]:
    """
    Validates every row before returning; all bad rows are reported together.
    Relative cover paths are resolved against the manifest's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Manifest not found: {path}")
    base = path.resolve().parent
    records: List[GameRecord] = []
    problems: List[str] = []
    seen: Dict[str, int] = {}
    with path.open("r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = ManifestRow.model_validate_json(line).to_record()
            except ValidationError as e:
                details = "; ".join(f"{'.'.join(map(str, err['loc'])) or 'row'}: {err['msg']}" for err in e.errors())
                problems.append(f"line {number}: {details}")
                continue
            if record.id in seen:
                problems.append(f"line {number}: duplicate id '{record.id}' (first seen on line {seen[record.id]})")
                continue
            seen[record.id] = number
            if record.cover_path and not Path(record.cover_path).is_absolute():
                record = record.model_copy(update={"cover_path": (base / record.cover_path).as_posix()})
            records.append(record)
    if problems:
        raise ManifestError(problems)
    logger.info("Read %d record(s) from %s.", len(records), path)
    return records


def write_manifest(records: Sequence[GameRecord], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for r in records:
            row = ManifestRow(id=r.id, title=r.title, description=r.description, genres=r.raw_genres, cover_path=r.cover_path)
            f.write(row.model_dump_json() + "\n")
    return path


# --- Splitting ------------------------------------------------------------------------------

def split_sizes(n: int) -> Tuple[int, int, int]:
    """70/10/20 with round-half-up on train and validation; test takes the remainder."""
    n_train = (7 * n + 5) // 10
    n_val = (n + 5) // 10
    return n_train, n_val, n - n_train - n_val


def _partition(ids: List[str]) -> Tuple[List[str], List[str], List[str]]:
    n_train, n_val, _ = split_sizes(len(ids))
    return ids[:n_train], ids[n_train : n_train + n_val], ids[n_train + n_val :]


def split(records: Sequence[GameRecord], seed: int, stratified: bool = False) -> DatasetSplit:
    """
    Seeded shuffle then positional 70/10/20 partition. Records are ordered by id before
    shuffling, so the result does not depend on manifest order. With `stratified`, each
    resolved genre is shuffled and partitioned on its own.
    """
    if len(records) < MIN_SPLIT_RECORDS:
        raise ContractError(f"need at least {MIN_SPLIT_RECORDS} records to split, got {len(records)}")
    rng = np.random.default_rng(seed)

    if not stratified:
        ids = sorted(r.id for r in records)
        shuffled = [ids[i] for i in rng.permutation(len(ids))]
        train, validation, test = _partition(shuffled)
        return DatasetSplit(train=train, validation=validation, test=test, seed=seed, stratified=False)

    if any(r.resolved_genre is None for r in records):
        raise ContractError("stratified split needs resolved genres")
    by_genre: Dict[int, List[str]] = {}
    for r in records:
        by_genre.setdefault(r.resolved_genre, []).append(r.id)
    train, validation, test = [], [], []
    for genre in sorted(by_genre):
        ids = sorted(by_genre[genre])
        shuffled = [ids[i] for i in rng.permutation(len(ids))]
        part = _partition(shuffled)
        train += part[0]
        validation += part[1]
        test += part[2]
    # Interleave genres so batches are not ordered by class.
    train, validation, test = ([p[i] for i in rng.permutation(len(p))] for p in (train, validation, test))
    return DatasetSplit(train=train, validation=validation, test=test, seed=seed, stratified=True)


# --- Prepared dataset ----------------------------------------------------------------------

@dataclass
class PreparedDataset:
    root: Path
    records: Dict[str, GameRecord]
    split: DatasetSplit
    vocab: Vocabulary
    report: Optional[PrepareReport] = None

    def subset(self, name: str) -> List[GameRecord]:
        return [self.records[i] for i in self.split.ids(name)]

    @property
    def vocab_path(self) -> Path:
        return self.root / "vocab.txt"


def write_prepared(
    out_dir: Union[str, Path], records: Sequence[GameRecord], data_split: DatasetSplit, report: PrepareReport
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "records.jsonl").open("w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(r.model_dump_json() + "\n")
    for name in SPLIT_NAMES:
        ids = data_split.ids(name)
        (out / f"{name}.txt").write_text("".join(f"{i}\n" for i in ids), encoding="utf-8")
    (out / "split.json").write_text(data_split.model_dump_json(indent=2), encoding="utf-8")
    (out / "prepare_report.json").write_text(report.model_dump_json(indent=2), encoding="utf-8")
    return out


def load_prepared(root: Union[str, Path]) -> PreparedDataset:
    root = Path(root)
    required = ["records.jsonl", "split.json", "vocab.txt"]
    missing = [name for name in required if not (root / name).is_file()]
    if missing:
        raise FileNotFoundError(f"Prepared dataset {root} is missing {', '.join(missing)}; run 'prepare' first")

    records: Dict[str, GameRecord] = {}
    with (root / "records.jsonl").open("r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                record = GameRecord.model_validate_json(line)
                records[record.id] = record
    data_split = DatasetSplit.model_validate_json((root / "split.json").read_text(encoding="utf-8"))
    unknown = [i for name in SPLIT_NAMES for i in data_split.ids(name) if i not in records]
    if unknown:
        raise ContractError(f"split lists {len(unknown)} id(s) absent from records.jsonl, e.g. '{unknown[0]}'")

    report = None
    if (root / "prepare_report.json").is_file():
        report = PrepareReport.model_validate(json.loads((root / "prepare_report.json").read_text(encoding="utf-8")))
    return PreparedDataset(root=root, records=records, split=data_split, vocab=load_vocab(root / "vocab.txt"), report=report)


def materialize(
    records: Sequence[GameRecord],
    modality: Modality,
    vocab: Vocabulary,
    max_len: int,
    image_size: int,
    include_title: bool = False,
) -> Tuple[Batch, np.ndarray]:
    """Turns records into index-aligned model inputs and an integer label vector."""
    if any(r.resolved_genre is None for r in records):
        raise ContractError("every record needs a resolved genre before it can be fed to a model")
    batch = Batch()
    if modality in ("text", "fused"):
        batch.ids, batch.lengths = encode_batch(
            [record_text(r.title, r.description, include_title) for r in records], vocab, max_len
        )
    if modality in ("image", "fused"):
        images = [prepare_image(r.cover_path, image_size) for r in records]
        batch.images = np.stack(images) if images else np.zeros((0, 3, image_size, image_size))
    labels = np.array([r.resolved_genre for r in records], dtype=np.int64)
    return batch, labels
