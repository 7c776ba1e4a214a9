import argparse
import logging
import math
from pathlib import Path

from dependencies import RunConfig
from errors import CompatibilityError, UsageError
from models.model_loader import load_checkpoint
from services.dataset import load_prepared, materialize
from services.metrics import evaluate
from services.predictor import GenrePredictor
from services.reporting import format_comparison, format_report, load_report, write_report
from services.text_pipeline import vocab_sha256
from services.training import predict_proba

logger = logging.getLogger(__name__)


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> int:
    loaded = load_checkpoint(args.checkpoint)
    meta = loaded.meta
    data = load_prepared(config.DATA_DIR)
    if vocab_sha256(data.vocab) != meta.vocab_sha256:
        raise CompatibilityError(
            f"{args.checkpoint} was trained with a different vocabulary than {data.vocab_path}; re-run prepare or pick the matching checkpoint"
        )

    records = data.subset(args.split)
    logger.debug("Evaluating %s on %d %s record(s).", meta.model_name, len(records), args.split)
    batch, labels = materialize(records, meta.modality, loaded.vocab, meta.max_len, meta.model.image_size, meta.include_title)
    probs = predict_proba(loaded.model, batch, config.BATCH_SIZE)
    report = evaluate(
        probs,
        labels,
        meta.genres,
        model_name=meta.model_name,
        split=args.split,
        config=meta.config,
    )
    paths = write_report(report, Path(args.out or "reports"), stem=f"{meta.model_name}_{args.split}")
    print(format_report(report), end="")
    print(f"💾 Report written to {paths['json']}")
    return 0


def format_probability(probability: float, places: int = 4) -> str:
    """Truncated, not rounded, so printed top-k values never sum above 1."""
    scale = 10 ** places
    return f"{math.floor(probability * scale) / scale:.{places}f}"


def cmd_predict(args: argparse.Namespace, config: RunConfig) -> int:
    if args.text is None and args.text_file is None and args.image is None:
        raise UsageError("give a description (--text or --text-file) and/or a cover image (--image)")
    description = args.text
    if args.text_file is not None:
        description = Path(args.text_file).read_text(encoding="utf-8")
    predictor = GenrePredictor(args.checkpoint)
    for rank, p in enumerate(predictor.predict(description, args.image, k=args.k, title=args.title or ""), start=1):
        print(f"{rank}. {p.genre:<14} {format_probability(p.probability)}")
    return 0


def cmd_compare(args: argparse.Namespace, config: RunConfig) -> int:
    reports = [load_report(path) for path in args.reports]
    print(format_comparison(reports), end="")
    return 0


def register(subparsers, common: argparse.ArgumentParser) -> None:
    evaluate_parser = subparsers.add_parser("evaluate", parents=[common], help="Score a checkpoint on a split.")
    evaluate_parser.add_argument("--checkpoint", required=True)
    evaluate_parser.add_argument("--data", default=None, help="Prepared dataset directory (DATA_DIR).")
    evaluate_parser.add_argument("--split", choices=["train", "validation", "test"], default="test")
    evaluate_parser.set_defaults(handler=cmd_evaluate)

    predict = subparsers.add_parser("predict", parents=[common], help="Top-k genres for one game.")
    predict.add_argument("--checkpoint", required=True)
    predict.add_argument("--text", default=None, help="Description text.")
    predict.add_argument("--text-file", default=None, help="File holding the description text.")
    predict.add_argument("--title", default=None)
    predict.add_argument("--image", default=None, help="Cover image (PNG, JPEG or PPM).")
    predict.add_argument("--k", type=int, default=3)
    predict.set_defaults(handler=cmd_predict)

    compare = subparsers.add_parser("compare", parents=[common], help="Side-by-side accuracy tables of evaluation reports.")
    compare.add_argument("reports", nargs="+", help="Report JSON files written by evaluate.")
    compare.set_defaults(handler=cmd_compare)
