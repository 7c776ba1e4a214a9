"""
Tokenization, vocabulary construction and fixed-length integer encoding of descriptions.

Tokenization is lowercase + split on every maximal run of non-alphanumeric characters.
Any other tokenizer with the same signature can be swapped in behind `tokenize`.
"""
import hashlib
import logging
import re
from collections import Counter
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from errors import ContractError
from schemas.records import EncodedText, Vocabulary

logger = logging.getLogger(__name__)

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

_TOKEN_PATTERN = re.compile(r"[^\W_]+")
_HEADER_PATTERN = re.compile(r"^# min_count=(\d+) size=(\d+)$")


def tokenize(text: str) -> List[str]:
    return _TOKEN_PATTERN.findall(text.lower())


def build_vocab(corpus: Iterable[str], min_count: int = 10) -> Vocabulary:
    """
    Keeps tokens seen at least `min_count` times. Ids follow descending frequency,
    ties broken lexicographically, so the same corpus always yields the same ids.
    """
    if min_count < 1:
        raise ContractError(f"min_count must be >= 1, got {min_count}")
    counts: Counter = Counter()
    for text in corpus:
        counts.update(tokenize(text))
    kept = sorted((tok for tok, n in counts.items() if n >= min_count), key=lambda tok: (-counts[tok], tok))
    vocab = Vocabulary(token_to_id={tok: i + 2 for i, tok in enumerate(kept)}, min_count=min_count)
    logger.info(
        "Built vocabulary of %d id(s) from %d distinct token(s) (min_count=%d).", vocab.size, len(counts), min_count
    )
    return vocab


def encode(text: str, vocab: Vocabulary, max_len: int = 200) -> EncodedText:
    """Maps tokens to ids (unknown -> UNK), truncates to `max_len` or right-pads with PAD."""
    if max_len < 1:
        raise ContractError(f"max_len must be >= 1, got {max_len}")
    ids = [vocab.token_to_id.get(tok, UNK_ID) for tok in tokenize(text)[:max_len]]
    true_length = len(ids)
    return EncodedText(ids=ids + [PAD_ID] * (max_len - true_length), true_length=true_length)


def encode_batch(texts: Sequence[str], vocab: Vocabulary, max_len: int) -> Tuple[np.ndarray, np.ndarray]:
    """Encodes many texts into an id matrix [N×max_len] and a length vector [N]."""
    encoded = [encode(t, vocab, max_len) for t in texts]
    return as_arrays(encoded, max_len)


def as_arrays(batch: Sequence[EncodedText], max_len: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    width = max([max_len] + [len(e.ids) for e in batch])
    ids = np.full((len(batch), width), PAD_ID, dtype=np.int64)
    for row, item in enumerate(batch):
        ids[row, : len(item.ids)] = item.ids
    lengths = np.array([item.true_length for item in batch], dtype=np.int64)
    return ids, lengths


def record_text(title: str, description: str, include_title: bool = False) -> str:
    return f"{title} {description}" if include_title and title else description


# --- Vocabulary file ------------------------------------------------------------------------

def vocab_lines(vocab: Vocabulary) -> List[str]:
    return [f"# min_count={vocab.min_count} size={vocab.size}", PAD_TOKEN, UNK_TOKEN, *vocab.tokens()]


def vocab_sha256(vocab: Vocabulary) -> str:
    return hashlib.sha256("\n".join(vocab_lines(vocab)).encode("utf-8")).hexdigest()


def save_vocab(vocab: Vocabulary, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(vocab_lines(vocab)) + "\n", encoding="utf-8")
    return path


def vocab_from_tokens(tokens: Sequence[str], min_count: int) -> Vocabulary:
    return Vocabulary(token_to_id={tok: i + 2 for i, tok in enumerate(tokens)}, min_count=min_count)


def load_vocab(path: Union[str, Path]) -> Vocabulary:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No vocabulary file found at {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    header = _HEADER_PATTERN.match(lines[0]) if lines else None
    if header is None or lines[1:3] != [PAD_TOKEN, UNK_TOKEN]:
        raise ContractError(f"{path} is not a vocabulary file (bad header)")
    min_count, size = int(header.group(1)), int(header.group(2))
    tokens = lines[3:]
    if len(tokens) + 2 != size:
        raise ContractError(f"{path} declares {size} ids but lists {len(tokens) + 2}")
    seen = {PAD_TOKEN, UNK_TOKEN}
    for number, token in enumerate(tokens, start=4):
        if token in seen:
            raise ContractError(f"{path}:{number}: token {token!r} is listed more than once")
        seen.add(token)
    return vocab_from_tokens(tokens, min_count)
