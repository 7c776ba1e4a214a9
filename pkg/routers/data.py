import argparse
import logging
from collections import Counter
from pathlib import Path

from dependencies import RunConfig
from errors import ClassificationError, UsageError
from schemas.reports import PrepareReport
from services.dataset import read_manifest, split, write_prepared
from services.genres import load_alias_table, resolve_all
from services.synthetic import generate_synthetic
from services.text_pipeline import build_vocab, record_text, save_vocab

logger = logging.getLogger(__name__)


def cmd_synth(args: argparse.Namespace, config: RunConfig) -> int:
    out = Path(args.out or "synthetic")
    generate_synthetic(
        n=config.SYNTH_RECORDS,
        num_genres=config.NUM_GENRES,
        seed=config.SEED,
        p_text=config.P_TEXT,
        p_img=config.P_IMG,
        out_dir=out,
        mode=config.SIGNAL_MODE,
        config=config.echo(),
    )
    return 0


def cmd_prepare(args: argparse.Namespace, config: RunConfig) -> int:
    """manifest -> resolved genres -> 70/10/20 split -> vocabulary from the training split."""
    if args.out:
        config = config.model_copy(update={"DATA_DIR": args.out})
    out = Path(config.DATA_DIR)
    data = config.data_params()
    if config.MANIFEST is None:
        raise UsageError("give a manifest with --manifest or MANIFEST in the run config")
    records = read_manifest(config.MANIFEST)
    genre_map = load_alias_table(config.ALIAS_TABLE)

    try:
        resolved = resolve_all(records, genre_map, config.SEED)
    except ClassificationError as e:
        out.mkdir(parents=True, exist_ok=True)
        failed = PrepareReport(
            num_records=len(records),
            genre_histogram={},
            split_sizes={},
            vocabulary_size=0,
            unknown_genres=e.unknown,
            config=config.echo(),
        )
        (out / "prepare_report.json").write_text(failed.model_dump_json(indent=2), encoding="utf-8")
        print(f"⚠️ {len(e.unknown)} unknown genre(s); report written to {out / 'prepare_report.json'}")
        raise

    data_split = split(resolved, config.SEED, stratified=config.STRATIFIED_SPLIT)
    logger.debug("Split sizes for seed %d: %s", config.SEED, {name: len(data_split.ids(name)) for name in ("train", "validation", "test")})
    by_id = {r.id: r for r in resolved}
    train_texts = [record_text(by_id[i].title, by_id[i].description, config.INCLUDE_TITLE) for i in data_split.train]
    vocab = build_vocab(train_texts, min_count=data["min_count"])

    histogram = Counter(genre_map.name(r.resolved_genre) for r in resolved)
    report = PrepareReport(
        num_records=len(resolved),
        genre_histogram={name: histogram.get(name, 0) for name in genre_map.canonical},
        split_sizes={name: len(data_split.ids(name)) for name in ("train", "validation", "test")},
        vocabulary_size=vocab.size,
        config=config.echo(),
    )
    write_prepared(out, resolved, data_split, report)
    save_vocab(vocab, out / "vocab.txt")

    sizes = report.split_sizes
    print(f"✅ Prepared {len(resolved)} record(s) in {out}: train {sizes['train']}, validation {sizes['validation']}, test {sizes['test']}; vocabulary {vocab.size} id(s).")
    return 0


def register(subparsers, common: argparse.ArgumentParser) -> None:
    synth = subparsers.add_parser("synth", parents=[common], help="Generate a synthetic verification corpus.")
    synth.add_argument("--n", type=int, default=None, help="Number of records (SYNTH_RECORDS, default 1500).")
    synth.add_argument("--num-genres", type=int, default=None, help="NUM_GENRES, default 15.")
    synth.add_argument("--p-text", type=float, default=None, help="Probability a description carries its own genre's keywords (P_TEXT, default 1.0).")
    synth.add_argument("--p-img", type=float, default=None, help="Probability a cover carries its own genre's motif (P_IMG, default 1.0).")
    synth.add_argument("--mode", choices=["distinct", "complementary"], default=None, help="SIGNAL_MODE, default distinct.")
    synth.set_defaults(handler=cmd_synth)

    prepare = subparsers.add_parser("prepare", parents=[common], help="Resolve genres, split, and build the vocabulary.")
    prepare.add_argument("--manifest", default=None, help="JSON Lines manifest (MANIFEST).")
    prepare.add_argument("--alias-table", default=None, help="Extra raw<TAB>canonical genre aliases.")
    prepare.set_defaults(handler=cmd_prepare)
