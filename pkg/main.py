import argparse
import logging
import sys
from typing import Dict, List, Optional

from pydantic import ValidationError

# Imports from our project files
from dependencies import resolve_run_config
from errors import GenreFuseError, UsageError
from routers import data, evaluation, training

logger = logging.getLogger(__name__)

# Flag dest -> RunConfig field. Flags default to None so only given flags override;
# subcommand-only flags are absent from other commands' namespaces.
OVERRIDE_FLAGS: Dict[str, str] = {
    "profile": "PROFILE",
    "seed": "SEED",
    "modality": "MODALITY",
    "image_size": "IMAGE_SIZE",
    "max_len": "MAX_LEN",
    "min_count": "MIN_COUNT",
    "epochs": "EPOCHS",
    "batch_size": "BATCH_SIZE",
    "lr": "LR",
    "patience": "PATIENCE",
    "freeze_encoders": "FREEZE_ENCODERS",
    "include_title": "INCLUDE_TITLE",
    "stratified": "STRATIFIED_SPLIT",
    "data": "DATA_DIR",
    "manifest": "MANIFEST",
    "alias_table": "ALIAS_TABLE",
    "init_text": "INIT_TEXT",
    "init_image": "INIT_IMAGE",
    "n": "SYNTH_RECORDS",
    "num_genres": "NUM_GENRES",
    "p_text": "P_TEXT",
    "p_img": "P_IMG",
    "mode": "SIGNAL_MODE",
}


def common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="KEY=value run config file (or a JSON artifact to replay).")
    common.add_argument("--profile", choices=["dev", "prod"], default=None, help="Model dimension profile.")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--modality", choices=["text", "image", "fused"], default=None)
    common.add_argument("--image-size", type=int, default=None)
    common.add_argument("--max-len", type=int, default=None)
    common.add_argument("--min-count", type=int, default=None)
    common.add_argument("--epochs", type=int, default=None)
    common.add_argument("--batch-size", type=int, default=None)
    common.add_argument("--lr", type=float, default=None)
    common.add_argument("--patience", type=int, default=None)
    common.add_argument("--freeze-encoders", action="store_true", default=None)
    common.add_argument("--include-title", action="store_true", default=None)
    common.add_argument("--stratified", action="store_true", default=None)
    common.add_argument("--out", default=None, help="Output path (directory or checkpoint file, per command).")
    common.add_argument("--verbose", action="store_true", help="Debug logging.")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genrefuse",
        description="Video game genre classification from cover images and descriptions.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = common_parser()
    # Include one router per pipeline stage
    data.register(subparsers, common)
    training.register(subparsers, common)
    evaluation.register(subparsers, common)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        overrides = {field: getattr(args, dest, None) for dest, field in OVERRIDE_FLAGS.items()}
        config = resolve_run_config(args.config, overrides)
        return args.handler(args, config)
    except UsageError as e:
        print(f"⚠️ Usage error: {e}", file=sys.stderr)
        return 2
    except ValidationError as e:
        print(f"⚠️ Invalid configuration or input:\n{e}", file=sys.stderr)
        return 1
    except (GenreFuseError, OSError) as e:
        print(f"⚠️ {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.error(f"Unexpected failure in '{args.command}': {e}", exc_info=True)
        raise


if __name__ == "__main__":
    sys.exit(main())
