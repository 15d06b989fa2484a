"""Persistent data model for datasets, predictions, and embeddings.

Positions are (x, y) pixel coordinates of a box's top-left corner, x growing
rightward and y downward; a canvas array is indexed ``pixels[y:y+64, x:x+64]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

CANVAS_SIZE = 224
OBJECT_SIZE = 64
WHITE = (255, 255, 255)

SOURCES = ("squiggle", "factorized", "noise", "imported")
LABELS = ("same", "different")
SPLITS = ("train", "val", "test")

# variant names; dissociation variants are "dissociation:<condition>"
BASE_VARIANTS = ("base", "grayscale", "masked", "flipped", "aligned", "single_object")
DISSOCIATION_CONDITIONS = ("none", "S", "T", "TS", "C", "CS", "CT", "CTS")


@dataclass(frozen=True)
class Factors:
    shape_id: str
    texture_id: str
    color_id: str

    def to_dict(self) -> dict:
        return {
            "shape_id": self.shape_id,
            "texture_id": self.texture_id,
            "color_id": self.color_id,
        }

    @staticmethod
    def from_dict(d: dict) -> "Factors":
        return Factors(d["shape_id"], d["texture_id"], d["color_id"])


@dataclass
class ObjectImage:
    """One 64x64 RGB object raster plus identity and provenance."""

    object_id: str
    pixels: np.ndarray
    source: str
    factors: Optional[Factors] = None

    def __post_init__(self) -> None:
        p = self.pixels
        if p.shape != (OBJECT_SIZE, OBJECT_SIZE, 3) or p.dtype != np.uint8:
            raise ValueError(
                f"object {self.object_id}: expected 64x64x3 uint8, got {p.dtype} {p.shape}"
            )
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if (self.factors is not None) != (self.source == "factorized"):
            raise ValueError("factors must be present iff source is factorized")


def is_dissociation_variant(variant: str) -> bool:
    return variant.startswith("dissociation:")


def dissociation_condition(variant: str) -> str:
    cond = variant.split(":", 1)[1]
    if cond not in DISSOCIATION_CONDITIONS:
        raise ValueError(f"unknown dissociation condition {cond!r}")
    return cond


def check_variant(variant: str) -> str:
    if variant in BASE_VARIANTS:
        return variant
    if is_dissociation_variant(variant):
        dissociation_condition(variant)
        return variant
    raise ValueError(f"unknown variant {variant!r}")


@dataclass
class StimulusRecord:
    """Metadata of one composed 224x224 stimulus.

    Single-object stimuli carry ``object_b=None`` and ``pos_b=None``; their
    label is fixed to "same" (an object trivially equals itself).
    """

    stimulus_id: str
    label: str
    object_a: str
    object_b: Optional[str]
    pos_a: tuple[int, int]
    pos_b: Optional[tuple[int, int]]
    split: str
    variant: str
    image_path: str

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValueError(f"bad label {self.label!r}")
        if self.split not in SPLITS:
            raise ValueError(f"bad split {self.split!r}")
        check_variant(self.variant)
        if (self.object_b is None) != (self.pos_b is None):
            raise ValueError("object_b and pos_b must be both present or both absent")
        self.pos_a = (int(self.pos_a[0]), int(self.pos_a[1]))
        if self.pos_b is not None:
            self.pos_b = (int(self.pos_b[0]), int(self.pos_b[1]))

    def to_dict(self) -> dict:
        return {
            "stimulus_id": self.stimulus_id,
            "label": self.label,
            "object_a": self.object_a,
            "object_b": self.object_b,
            "pos_a": list(self.pos_a),
            "pos_b": None if self.pos_b is None else list(self.pos_b),
            "split": self.split,
            "variant": self.variant,
            "image_path": self.image_path,
        }

    @staticmethod
    def from_dict(d: dict) -> "StimulusRecord":
        return StimulusRecord(
            stimulus_id=d["stimulus_id"],
            label=d["label"],
            object_a=d["object_a"],
            object_b=d.get("object_b"),
            pos_a=tuple(d["pos_a"]),
            pos_b=None if d.get("pos_b") is None else tuple(d["pos_b"]),
            split=d["split"],
            variant=d["variant"],
            image_path=d["image_path"],
        )


@dataclass
class DatasetManifest:
    """Complete reproducible description of one generated dataset."""

    dataset_id: str
    root_seed: int
    config: dict
    records: list[StimulusRecord]
    object_splits: dict[str, list[str]]
    image_checksums: dict[str, int] = field(default_factory=dict)


@dataclass
class PredictionRecord:
    stimulus_id: str
    score_same: float
    predicted: str
    model_id: str
    seed_id: int
    logit_same: Optional[float] = None
    logit_diff: Optional[float] = None

    def __post_init__(self) -> None:
        if self.predicted not in LABELS:
            raise ValueError(f"bad predicted label {self.predicted!r}")


@dataclass
class PredictionSet:
    """Parsed prediction file: records plus the decision threshold in force."""

    threshold: float
    records: list[PredictionRecord]


@dataclass
class EmbeddingMatrix:
    """id-indexed table of fixed-dimension float32 vectors."""

    ids: list[str]
    rows: np.ndarray

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.float32)
        if self.rows.ndim != 2:
            raise ValueError("rows must be 2-D")
        if self.rows.shape[0] != len(self.ids):
            raise ValueError(
                f"row count {self.rows.shape[0]} != id count {len(self.ids)}"
            )
        if not np.all(np.isfinite(self.rows)):
            raise ValueError("embedding rows must be finite")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, code: str, message: str) -> None:
        self.violations.append(Violation(code, message))

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return "ok: no violations"
        lines = [f"{len(self.violations)} violation(s):"]
        lines += [f"  {v}" for v in self.violations]
        return "\n".join(lines)
