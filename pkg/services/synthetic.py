"""
Synthetic corpus for desk-scale verification.

Every record gets a text signal (a keyword set woven into filler prose) and an image
signal (a coloured shape drawn on a noisy cover). With probability p a signal is the
record's own; otherwise it belongs to a uniformly chosen different signal group, so
p = 1 is fully recoverable and p = 1/num_genres carries no information.

Modes:
  distinct       genre g has text signal g and image signal g.
  complementary  text signal g // 2, image signal (g + 1) // 2. Each modality alone
                 confuses pairs of genres; together they identify every genre.
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image, ImageDraw

from errors import ContractError
from schemas.records import GameRecord
from services.dataset import write_manifest
from services.genres import CANONICAL_GENRES
from services.text_pipeline import tokenize

logger = logging.getLogger(__name__)

SignalMode = Literal["distinct", "complementary"]

KEYWORDS_PER_SIGNAL = 3
COVER_SIZE = (40, 56)  # width, height

_SYLLABLES = ["ka", "zu", "mi", "ro", "te", "va", "lo", "qi", "shu", "ne", "bo", "ga", "fi", "xe", "py", "dar"]
_SUFFIXES = ["x", "n", "rk", "th"]

FILLER_WORDS = [
    "the", "a", "player", "world", "journey", "explore", "levels", "friends", "new", "story",
    "unlock", "features", "mode", "play", "time", "over", "hours", "content", "experience", "build",
    "classic", "epic", "discover", "challenge", "unique", "modes", "online", "local", "characters", "and",
    "with", "your", "through", "across", "every", "game", "take", "control", "of", "in",
]

PALETTE = [
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200), (245, 130, 48),
    (145, 30, 180), (70, 240, 240), (240, 50, 230), (210, 245, 60), (250, 190, 212),
    (0, 128, 128), (220, 190, 255), (170, 110, 40), (255, 250, 200), (128, 0, 0), (170, 255, 195),
]
SHAPES = ["rectangle", "ellipse", "triangle", "hbars", "vbars"]


def signal_groups(genre: int, mode: SignalMode) -> Tuple[int, int]:
    """(text signal, image signal) for a genre index."""
    if mode == "distinct":
        return genre, genre
    if mode == "complementary":
        return genre // 2, (genre + 1) // 2
    raise ContractError(f"unknown signal mode '{mode}'")


def signal_counts(num_genres: int, mode: SignalMode) -> Tuple[int, int]:
    groups = [signal_groups(g, mode) for g in range(num_genres)]
    return max(t for t, _ in groups) + 1, max(i for _, i in groups) + 1


def genre_keywords(signal: int) -> List[str]:
    """Pseudo-words for one text signal; never collide with filler or with other signals."""
    head = _SYLLABLES[signal % len(_SYLLABLES)] + _SYLLABLES[(signal // len(_SYLLABLES)) % len(_SYLLABLES)]
    return [f"{head}{_SYLLABLES[(signal * 7 + 4 * j + 1) % len(_SYLLABLES)]}{_SUFFIXES[j]}" for j in range(KEYWORDS_PER_SIGNAL)]


def build_lexicon(num_genres: int, mode: SignalMode) -> Dict[str, object]:
    text_signals, _ = signal_counts(num_genres, mode)
    return {
        "mode": mode,
        "genres": CANONICAL_GENRES[:num_genres],
        "text_signal": [signal_groups(g, mode)[0] for g in range(num_genres)],
        "image_signal": [signal_groups(g, mode)[1] for g in range(num_genres)],
        "keywords": {str(s): genre_keywords(s) for s in range(text_signals)},
    }


def _draw_signal(rng: np.random.Generator, other: int, own: int, p: float) -> int:
    if other <= 1 or rng.random() < p:
        return own
    choice = int(rng.integers(other - 1))
    return choice if choice < own else choice + 1


def _description(rng: np.random.Generator, text_signal: int) -> str:
    words = [FILLER_WORDS[i] for i in rng.integers(len(FILLER_WORDS), size=int(rng.integers(18, 31)))]
    keywords = genre_keywords(text_signal)
    for keyword in keywords + [keywords[int(rng.integers(len(keywords)))]]:
        words.insert(int(rng.integers(len(words) + 1)), keyword)
    sentence = " ".join(words)
    return sentence[0].upper() + sentence[1:] + "."


def render_cover(rng: np.random.Generator, image_signal: int, size: Tuple[int, int] = COVER_SIZE) -> Image.Image:
    """Noisy dark background with one motif: the signal's colour and shape, jittered in place."""
    width, height = size
    noise = rng.integers(0, 70, size=(height, width, 3), dtype=np.uint8)
    img = Image.fromarray(noise)
    draw = ImageDraw.Draw(img)
    colour = PALETTE[image_signal % len(PALETTE)]
    shape = SHAPES[image_signal % len(SHAPES)]
    # Signals sharing a shape are told apart by colour.
    w, h = int(width * 0.6), int(height * 0.6)
    x0 = int(rng.integers(0, width - w + 1))
    y0 = int(rng.integers(0, height - h + 1))
    x1, y1 = x0 + w - 1, y0 + h - 1
    if shape == "rectangle":
        draw.rectangle([x0, y0, x1, y1], fill=colour)
    elif shape == "ellipse":
        draw.ellipse([x0, y0, x1, y1], fill=colour)
    elif shape == "triangle":
        draw.polygon([(x0, y1), ((x0 + x1) // 2, y0), (x1, y1)], fill=colour)
    elif shape == "hbars":
        for y in range(y0, y1 + 1, 6):
            draw.rectangle([x0, y, x1, min(y + 2, y1)], fill=colour)
    else:
        for x in range(x0, x1 + 1, 6):
            draw.rectangle([x, y0, min(x + 2, x1), y1], fill=colour)
    return img


def generate_synthetic(
    n: int,
    num_genres: int = 15,
    seed: int = 0,
    p_text: float = 1.0,
    p_img: float = 1.0,
    out_dir: Optional[Union[str, Path]] = None,
    mode: SignalMode = "distinct",
    cover_size: Tuple[int, int] = COVER_SIZE,
    config: Optional[Dict[str, object]] = None,
) -> List[GameRecord]:
    """
    Builds n records with balanced labels (within one record per genre). When `out_dir`
    is given, writes covers/<id>.ppm, manifest.jsonl and keywords.json there.
    """
    if not 1 <= num_genres <= len(CANONICAL_GENRES):
        raise ContractError(f"num_genres must lie in [1, {len(CANONICAL_GENRES)}], got {num_genres}")
    if n < num_genres:
        raise ContractError(f"need at least one record per genre: n={n} < num_genres={num_genres}")
    for name, p in (("p_text", p_text), ("p_img", p_img)):
        if not 0.0 <= p <= 1.0:
            raise ContractError(f"{name} must lie in [0, 1], got {p}")

    master = np.random.default_rng(seed)
    labels = np.arange(n) % num_genres
    labels = labels[master.permutation(n)]
    text_signals, image_signals = signal_counts(num_genres, mode)

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "covers").mkdir(parents=True, exist_ok=True)

    records: List[GameRecord] = []
    for i, genre in enumerate(labels.tolist()):
        # Per-record generator: content does not depend on how many records came before.
        rng = np.random.default_rng([seed, i])
        own_text, own_image = signal_groups(genre, mode)
        text_signal = _draw_signal(rng, text_signals, own_text, p_text)
        image_signal = _draw_signal(rng, image_signals, own_image, p_img)
        record_id = f"game-{i:05d}"
        cover_path = f"covers/{record_id}.ppm"
        cover = render_cover(rng, image_signal, cover_size)
        if out is not None:
            cover.save(out / cover_path, format="PPM")
        records.append(
            GameRecord(
                id=record_id,
                title=f"Game {i}",
                description=_description(rng, text_signal),
                cover_path=cover_path,
                raw_genres=[CANONICAL_GENRES[genre]],
                resolved_genre=genre,
            )
        )

    if out is not None:
        write_manifest(records, out / "manifest.jsonl")
        lexicon = {**build_lexicon(num_genres, mode), "p_text": p_text, "p_img": p_img, "seed": seed, "config": config or {}}
        (out / "keywords.json").write_text(json.dumps(lexicon, indent=2) + "\n", encoding="utf-8")
        print(f"✅ Wrote {n} synthetic record(s) over {num_genres} genre(s) to {out}")
    logger.info("Generated %d synthetic record(s): mode=%s p_text=%.3f p_img=%.3f seed=%d", n, mode, p_text, p_img, seed)
    return records


def keyword_oracle(records: Sequence[GameRecord], lexicon: Dict[str, object]) -> List[Optional[int]]:
    """
    Predicts a genre per record from keyword hits alone: the text signal with the most
    hits wins and maps back to its lowest genre index. No hits gives None.
    """
    keywords = {int(s): set(words) for s, words in lexicon["keywords"].items()}
    first_genre: Dict[int, int] = {}
    for genre, signal in enumerate(lexicon["text_signal"]):
        first_genre.setdefault(signal, genre)
    predictions: List[Optional[int]] = []
    for record in records:
        tokens = tokenize(record.description)
        hits = {s: sum(tok in words for tok in tokens) for s, words in keywords.items()}
        best = max(sorted(hits), key=lambda s: hits[s])
        predictions.append(first_genre.get(best) if hits[best] > 0 else None)
    return predictions


def load_lexicon(path: Union[str, Path]) -> Dict[str, object]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Keyword lexicon not found: {path}")
    return json.loads(path.read_text(encoding="utf-8"))
