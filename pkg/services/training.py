"""
Mini-batch training with Adam, validation tracking and early stopping, plus batched inference.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from errors import ContractError, NumericError
from models.classifiers import Batch
from models.layers import Module
from schemas.configs import TrainConfig
from schemas.reports import EpochRecord
from services.autodiff import Tape, sparse_categorical_cross_entropy, zero_grads
from services.optimizer import Adam

logger = logging.getLogger(__name__)

Labelled = Tuple[Batch, np.ndarray]


def take(batch: Batch, index: np.ndarray) -> Batch:
    """Rows `index` of every modality present in `batch`."""
    return Batch(
        ids=batch.ids[index] if batch.ids is not None else None,
        lengths=batch.lengths[index] if batch.lengths is not None else None,
        images=batch.images[index] if batch.images is not None else None,
    )


@dataclass
class TrainResult:
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    stopped_early: bool = False


def predict_logits(model: Module, batch: Batch, batch_size: int = 64) -> np.ndarray:
    """Logits [N×K] without recording a tape; batches run in order."""
    n = len(batch)
    chunks = [model.logits(take(batch, np.arange(s, min(s + batch_size, n)))).values for s in range(0, n, batch_size)]
    if not chunks:
        return np.zeros((0, model.num_classes))
    return np.concatenate(chunks, axis=0)


def predict_proba(model: Module, batch: Batch, batch_size: int = 64) -> np.ndarray:
    logits = predict_logits(model, batch, batch_size)
    if logits.shape[0] == 0:
        return logits
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _loss_and_accuracy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, float]:
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(labels.shape[0]), labels].mean())
    # Ties resolve to the lower index, as in predict_topk.
    accuracy = float((np.argmax(logits, axis=1) == labels).mean())
    return loss, accuracy


def train(model: Module, train_data: Labelled, config: TrainConfig, validation: Optional[Labelled] = None) -> TrainResult:
    """
    Each epoch: seeded shuffle, then per mini-batch zero grads, forward, mean
    cross-entropy, backward and one Adam step. With a validation set the lowest
    validation loss wins and its weights are restored at the end.
    """
    batch, labels = train_data
    n = len(batch)
    if n == 0:
        raise ContractError("the training split is empty")
    if labels.shape[0] != n:
        raise ContractError(f"{n} training input row(s) but {labels.shape[0]} label(s)")

    params = model.trainable_parameters()
    optimizer = Adam(params, lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)
    rng = np.random.default_rng(config.seed)
    result = TrainResult()
    best_loss = np.inf
    best_state: Optional[Dict[str, np.ndarray]] = None
    stale = 0

    logger.info(
        "Training %s model: %d record(s), %d epoch(s), batch %d, lr %g, %d trainable tensor(s).",
        getattr(model, "modality", "?"),
        n,
        config.epochs,
        config.batch_size,
        config.lr,
        len(params),
    )
    epochs = tqdm(range(1, config.epochs + 1), desc="epochs", unit="epoch", disable=not config.show_progress)
    for epoch in epochs:
        order = rng.permutation(n)
        total_loss, correct = 0.0, 0
        for number, start in enumerate(range(0, n, config.batch_size), start=1):
            index = order[start : start + config.batch_size]
            zero_grads(params)
            try:
                with Tape() as tape:
                    logits = model.logits(take(batch, index))
                    loss = sparse_categorical_cross_entropy(logits, labels[index])
                tape.backward(loss)
            except NumericError as e:
                raise NumericError(f"epoch {epoch}, batch {number}: {e}") from e
            optimizer.step()
            total_loss += loss.item() * index.shape[0]
            correct += int((np.argmax(logits.values, axis=1) == labels[index]).sum())

        record = EpochRecord(epoch=epoch, train_loss=total_loss / n, train_accuracy=correct / n)
        if validation is not None and len(validation[0]):
            record.val_loss, record.val_accuracy = _loss_and_accuracy(
                predict_logits(model, validation[0], config.batch_size), validation[1]
            )
        result.history.append(record)
        epochs.set_postfix(loss=f"{record.train_loss:.4f}", acc=f"{record.train_accuracy:.3f}")
        logger.debug("Epoch %d: %s", epoch, record.model_dump())

        if record.val_loss is None:
            continue
        if record.val_loss < best_loss:
            best_loss, best_state, result.best_epoch, stale = record.val_loss, model.state_dict(), epoch, 0
        else:
            stale += 1
            if config.patience is not None and stale >= config.patience:
                result.stopped_early = True
                logger.info("Early stop after epoch %d; best validation loss %.4f at epoch %d.", epoch, best_loss, result.best_epoch)
                break

    if best_state is not None:
        model.load_state_dict(best_state)
    return result
