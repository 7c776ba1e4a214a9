from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: Optional[float] = None
    val_accuracy: Optional[float] = None


class ConfusionPair(BaseModel):
    observed: str
    predicted: str
    count: int


class EvaluationReport(BaseModel):
    """
    Top-k accuracies, per-genre accuracies and the confusion matrix.
    Rows of `confusion` are observed genres, columns predicted genres.
    A genre without support has accuracy None (undefined), never 0.
    """
    genres: List[str]
    num_records: int
    top_k_accuracy: Dict[int, float]
    per_genre_accuracy: List[Optional[float]]
    support: List[int]
    predicted_counts: List[int]
    confusion: List[List[int]]
    top_confusions: List[ConfusionPair] = Field(default_factory=list)
    model_name: str = ""
    split: str = "test"
    config: Dict[str, Any] = Field(default_factory=dict)


class PrepareReport(BaseModel):
    num_records: int
    genre_histogram: Dict[str, int]
    split_sizes: Dict[str, int]
    vocabulary_size: int
    unknown_genres: List[str] = Field(default_factory=list)
    config: Dict[str, Any] = Field(default_factory=dict)


class GenrePrediction(BaseModel):
    genre: str
    probability: float = Field(ge=0.0, le=1.0)
