from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

# Size of the canonical genre list.
NUM_GENRES = 15


class GameRecord(BaseModel):
    """One video game as listed in a manifest."""
    id: str = Field(min_length=1)
    title: str = ""
    description: str = ""
    cover_path: str = ""
    raw_genres: List[str] = Field(min_length=1)
    resolved_genre: Optional[int] = Field(default=None, ge=0, lt=NUM_GENRES)

    @field_validator("raw_genres")
    @classmethod
    def _no_blank_genres(cls, genres: List[str]) -> List[str]:
        if any(not g.strip() for g in genres):
            raise ValueError("genre strings must not be blank")
        return genres

    class Config:
        extra = "forbid"


class DatasetSplit(BaseModel):
    """Disjoint train/validation/test id lists."""
    train: List[str]
    validation: List[str]
    test: List[str]
    seed: int
    stratified: bool = False

    def ids(self, name: str) -> List[str]:
        if name not in ("train", "validation", "test"):
            raise ValueError(f"unknown split '{name}'")
        return getattr(self, name)


class Vocabulary(BaseModel):
    """
    Token to id map. Ids 0 and 1 are reserved for padding and unknown tokens,
    real tokens start at 2 and are contiguous.
    """
    token_to_id: Dict[str, int]
    min_count: int = Field(default=10, ge=1)

    class Config:
        frozen = True

    @property
    def size(self) -> int:
        return len(self.token_to_id) + 2

    def tokens(self) -> List[str]:
        """Real tokens in id order."""
        return sorted(self.token_to_id, key=self.token_to_id.__getitem__)


class EncodedText(BaseModel):
    ids: List[int]
    true_length: int = Field(ge=0)


class ManifestRow(BaseModel):
    """One line of a JSON Lines manifest as written by users and by the synthetic generator."""
    id: str = Field(min_length=1)
    title: str = ""
    description: str = ""
    genres: List[str] = Field(min_length=1)
    cover_path: str = ""

    class Config:
        extra = "forbid"

    def to_record(self) -> GameRecord:
        return GameRecord(
            id=self.id, title=self.title, description=self.description, cover_path=self.cover_path, raw_genres=self.genres
        )
