import argparse
import logging
from pathlib import Path

from dependencies import RunConfig
from errors import ContractError
from models.classifiers import build_classifier
from models.model_loader import resolve_model_config, save_checkpoint, transfer_encoder
from services.dataset import load_prepared, materialize
from services.genres import CANONICAL_GENRES
from services.reporting import write_history_csv
from services.training import predict_logits, train

logger = logging.getLogger(__name__)


def history_path(checkpoint: Path) -> Path:
    return checkpoint.with_name(f"{checkpoint.stem}_history.csv")


def cmd_train(args: argparse.Namespace, config: RunConfig) -> int:
    data = load_prepared(config.DATA_DIR)
    modality = config.MODALITY
    out = Path(args.out or f"checkpoints/{modality}.json")
    max_len = config.data_params()["max_len"]

    model_config = resolve_model_config(config.PROFILE, data.vocab.size, config.model_overrides(), init_seed=config.SEED)
    logger.debug("Resolved model config: %s", model_config.model_dump())
    model = build_classifier(modality, model_config, freeze_encoders=config.FREEZE_ENCODERS)
    for prefix, source in (("text", config.INIT_TEXT), ("image", config.INIT_IMAGE)):
        if source is None:
            continue
        if modality not in (prefix, "fused"):
            raise ContractError(f"a {modality} model has no {prefix} encoder to initialise from {source}")
        transfer_encoder(model, source, prefix)

    def inputs(name: str):
        return materialize(data.subset(name), modality, data.vocab, max_len, model_config.image_size, config.INCLUDE_TITLE)

    train_data = inputs("train")
    validation = inputs("validation") if data.split.validation else None
    print(f"💡 Training {modality} model on {len(train_data[0])} record(s) for up to {config.EPOCHS} epoch(s)...")
    result = train(model, train_data, config.train_config(show_progress=args.progress), validation)

    train_top1 = float((predict_logits(model, train_data[0], config.BATCH_SIZE).argmax(axis=1) == train_data[1]).mean())
    history = [r.model_dump() for r in result.history]
    save_checkpoint(
        out,
        model,
        modality,
        model_config,
        data.vocab,
        CANONICAL_GENRES,
        model_name=args.name or out.stem,
        history=history,
        config=config.echo(),
        vocab_path=data.vocab_path.as_posix(),
        max_len=max_len,
        include_title=config.INCLUDE_TITLE,
    )
    write_history_csv(result.history, history_path(out), config.echo())

    best = f", best validation epoch {result.best_epoch}" if result.best_epoch is not None else ""
    stop = " (early stop)" if result.stopped_early else ""
    print(f"✅ Trained {len(result.history)} epoch(s){stop}{best}; train top-1 {100.0 * train_top1:.1f}%.")
    return 0


def register(subparsers, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("train", parents=[common], help="Train a text, image or fused classifier.")
    parser.add_argument("--data", default=None, help="Prepared dataset directory (DATA_DIR).")
    parser.add_argument("--name", default=None, help="Model name recorded in the checkpoint.")
    parser.add_argument("--init-text", default=None, help="Checkpoint whose text encoder initialises this model (INIT_TEXT).")
    parser.add_argument("--init-image", default=None, help="Checkpoint whose image encoder initialises this model (INIT_IMAGE).")
    parser.add_argument("--progress", action="store_true", help="Show a progress bar over epochs.")
    parser.set_defaults(handler=cmd_train)
