import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from errors import UsageError
from models.classifiers import Batch, predict_topk
from models.model_loader import LoadedCheckpoint, load_checkpoint
from schemas.reports import GenrePrediction
from services.image_pipeline import prepare_image
from services.text_pipeline import encode_batch, record_text
from services.training import predict_proba


class GenrePredictor:
    """
    Wraps one trained checkpoint for single-record inference.
    """

    def __init__(self, checkpoint: Union[str, Path, LoadedCheckpoint], model_id: Optional[str] = None):
        self.loaded = checkpoint if isinstance(checkpoint, LoadedCheckpoint) else load_checkpoint(checkpoint)
        self.meta = self.loaded.meta
        self.model_id = model_id or self.meta.model_name
        self.logger = logging.getLogger(f"{__name__}.{self.model_id}")

    @property
    def modality(self) -> str:
        return self.meta.modality

    def _batch(self, description: Optional[str], cover_path: Optional[Union[str, Path]], title: str = "") -> Batch:
        needs_text = self.modality in ("text", "fused")
        needs_image = self.modality in ("image", "fused")
        missing = []
        if needs_text and description is None:
            missing.append("a description (--text)")
        if needs_image and cover_path is None:
            missing.append("a cover image (--image)")
        if missing:
            raise UsageError(f"the {self.modality} checkpoint '{self.model_id}' needs {' and '.join(missing)}")
        if not needs_text and description is not None:
            self.logger.warning("Ignoring description text: the checkpoint only reads cover images.")
        if not needs_image and cover_path is not None:
            self.logger.warning("Ignoring cover image: the checkpoint only reads description text.")

        batch = Batch()
        if needs_text:
            text = record_text(title, description, self.meta.include_title)
            batch.ids, batch.lengths = encode_batch([text], self.loaded.vocab, self.meta.max_len)
        if needs_image:
            batch.images = prepare_image(cover_path, self.meta.model.image_size)[np.newaxis]
        return batch

    def predict(
        self, description: Optional[str] = None, cover_path: Optional[Union[str, Path]] = None, k: int = 3, title: str = ""
    ) -> List[GenrePrediction]:
        """The k most probable genres, most probable first."""
        try:
            probs = predict_proba(self.loaded.model, self._batch(description, cover_path, title))
            top = predict_topk(probs, k)[0]
            self.logger.debug("Top-%d classes: %s", k, top)
            return [GenrePrediction(genre=self.meta.genres[c], probability=float(probs[0, c])) for c in top]
        except UsageError:
            raise
        except Exception as e:
            self.logger.error(f"Error during prediction for model '{self.model_id}': {e}", exc_info=True)
            raise
