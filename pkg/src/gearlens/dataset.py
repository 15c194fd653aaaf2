"""Labeled-image ingestion, deterministic splitting, and manifest files.

The split is a pure function of (sorted ids, ratios, seed): items are
sorted by id, shuffled by a seeded Fisher-Yates, and cut into train,
validation, and test blocks. The shuffle is pinned so manifests are
portable: for i from N-1 down to 1, j = SplitMix64.next_u64() % (i + 1),
swap items i and j.

Manifest format (UTF-8, LF): one line per item,
"<split>\\t<label>\\t<id>\\n" with split in {train, validation, test} and
label in {normal gear, broken gear}; blocks ordered train, validation,
test, each block ascending by id.
"""

import enum
import math
import os
from dataclasses import dataclass, field

from .imagecore import GrayImage, RgbImage, gray_to_rgb, load_pnm
from .rng import SplitMix64

_PNM_EXTENSIONS = (".pnm", ".pgm", ".ppm")
_CLASS_DIRS = {"normal_gear": "normal gear", "broken_gear": "broken gear"}


class Label(enum.Enum):
    NORMAL_GEAR = "normal gear"
    BROKEN_GEAR = "broken gear"


class IngestError(ValueError):
    """Dataset directory does not match the expected layout."""


class ManifestError(ValueError):
    """Malformed or inconsistent manifest file."""


@dataclass(frozen=True)
class LabeledImage:
    id: str  # "<class>/<filename>", unique within a dataset
    label: Label
    image: RgbImage


@dataclass(frozen=True)
class SplitRatios:
    train: float = 0.6
    validation: float = 0.2
    test: float = 0.2

    def __post_init__(self):
        if min(self.train, self.validation, self.test) < 0:
            raise ValueError("ratios must be non-negative")
        if abs(self.train + self.validation + self.test - 1.0) > 1e-9:
            raise ValueError("ratios must sum to 1")


@dataclass
class DatasetSplit:
    train: list[LabeledImage] = field(default_factory=list)
    validation: list[LabeledImage] = field(default_factory=list)
    test: list[LabeledImage] = field(default_factory=list)

    def parts(self) -> tuple[tuple[str, list[LabeledImage]], ...]:
        return (("train", self.train), ("validation", self.validation), ("test", self.test))


def _load_labeled(root: str, item_id: str, label: Label) -> LabeledImage:
    path = os.path.join(root, *item_id.split("/"))
    try:
        with open(path, "rb") as fh:
            image = load_pnm(fh.read())
    except (OSError, ValueError) as exc:
        raise IngestError(f"cannot load {path}: {exc}") from exc
    if isinstance(image, GrayImage):
        image = gray_to_rgb(image)
    return LabeledImage(id=item_id, label=label, image=image)


def ingest_directory(root: str) -> list[LabeledImage]:
    """Load every PNM file under <root>/normal_gear and <root>/broken_gear.

    P5 files are promoted to RGB by channel replication. Results are
    ordered by id ascending; unexpected subdirectories are an error.
    """
    if not os.path.isdir(root):
        raise IngestError(f"dataset root {root!r} is not a directory")
    subdirs = sorted(e.name for e in os.scandir(root) if e.is_dir())
    extra = [d for d in subdirs if d not in _CLASS_DIRS]
    if extra:
        raise IngestError(f"unknown subdirectories {extra} under {root!r}")
    missing = [d for d in _CLASS_DIRS if d not in subdirs]
    if missing:
        raise IngestError(f"missing class directories {missing} under {root!r}")

    items = []
    for class_dir, label_text in _CLASS_DIRS.items():
        names = sorted(
            e.name
            for e in os.scandir(os.path.join(root, class_dir))
            if e.is_file() and e.name.lower().endswith(_PNM_EXTENSIONS)
        )
        if not names:
            raise IngestError(f"class directory {class_dir!r} contains no PNM files")
        for name in names:
            items.append(_load_labeled(root, f"{class_dir}/{name}", Label(label_text)))
    items.sort(key=lambda item: item.id)
    return items


def split_dataset(items: list[LabeledImage], ratios: SplitRatios, seed: int) -> DatasetSplit:
    """Shuffle deterministically and cut into train/validation/test.

    Validation and test sizes are the ratio shares rounded half up; the
    remainder trains. Rounding to nearest keeps the training share within
    one item of its ratio for every dataset size.
    """
    n = len(items)
    if n < 3:
        raise ValueError(f"need at least 3 items to split, got {n}")
    ids = [item.id for item in items]
    if len(set(ids)) != n:
        raise ValueError("item ids must be unique")

    ordered = sorted(items, key=lambda item: item.id)
    rng = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = rng.next_below(i + 1)
        ordered[i], ordered[j] = ordered[j], ordered[i]

    n_val = math.floor(ratios.validation * n + 0.5)
    n_test = math.floor(ratios.test * n + 0.5)
    n_train = n - n_val - n_test
    for part, count, ratio in (
        ("train", n_train, ratios.train),
        ("validation", n_val, ratios.validation),
        ("test", n_test, ratios.test),
    ):
        if ratio > 0 and count == 0:
            raise ValueError(f"ratios leave the {part} part empty for {n} items")

    split = DatasetSplit(
        train=ordered[:n_train],
        validation=ordered[n_train : n_train + n_val],
        test=ordered[n_train + n_val :],
    )
    assigned = [item.id for _, part in split.parts() for item in part]
    assert len(assigned) == n and set(assigned) == set(ids), "split must partition the input"
    return split


def write_manifest(split: DatasetSplit, path: str) -> None:
    """Persist a split as tab-separated lines, blocks id-ascending."""
    lines = []
    for part_name, part in split.parts():
        for item in sorted(part, key=lambda it: it.id):
            lines.append(f"{part_name}\t{item.label.value}\t{item.id}\n")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.writelines(lines)


def read_manifest(path: str, root: str) -> DatasetSplit:
    """Reconstruct a split from a manifest, loading images under root."""
    split = DatasetSplit()
    parts = {"train": split.train, "validation": split.validation, "test": split.test}
    labels = {label.value: label for label in Label}
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                raise ManifestError(f"line {lineno}: expected 3 tab-separated fields")
            part_name, label_text, item_id = fields
            if part_name not in parts:
                raise ManifestError(f"line {lineno}: unknown split {part_name!r}")
            if label_text not in labels:
                raise ManifestError(f"line {lineno}: unknown label {label_text!r}")
            if item_id in seen:
                raise ManifestError(f"line {lineno}: duplicate id {item_id!r}")
            seen.add(item_id)
            parts[part_name].append(_load_labeled(root, item_id, labels[label_text]))
    return split
