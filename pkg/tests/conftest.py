import dataclasses
import math
import time
from pathlib import Path

import pytest

from gearlens.classifier import TrainConfig, train_on_features, _featurize
from gearlens.dataset import SplitRatios, ingest_directory, split_dataset
from gearlens.features import ExtractorConfig
from gearlens.imagecore import load_pnm
from gearlens.synthgear import GearSpec, MissingTooth, generate_dataset, render_gear

FIXTURE_DIR = Path(__file__).parent / "fixtures"

# The frozen gear fixture pair: one intact specimen and its missing-tooth
# twin, matching the synthetic dataset's design family.
INTACT_SPEC = GearSpec(
    image_size=128,
    root_radius=26.0,
    tooth_height=36.0,
    teeth=6,
    foreground=225,
    background=25,
    defect=None,
    noise_sigma=2.5,
    seed=20250810,
)
MISSING_SPEC = dataclasses.replace(INTACT_SPEC, defect=MissingTooth(4))

# Annular window over the missing tooth (index 4 of 6, so the sector
# spans 240..270 degrees), with margins that keep the intact gear's flank
# and tip edges out of reach of the blur + Sobel support.
REGION_RADII = (22.0, 30.0)
REGION_ANGLES = (math.radians(251.0), math.radians(259.0))


def region_pixels(size: int = 128):
    pixels = []
    for y in range(size):
        for x in range(size):
            dx = x + 0.5 - size / 2
            dy = y + 0.5 - size / 2
            r = math.hypot(dx, dy)
            theta = math.atan2(dy, dx) % (2 * math.pi)
            if REGION_RADII[0] <= r <= REGION_RADII[1] and REGION_ANGLES[0] <= theta <= REGION_ANGLES[1]:
                pixels.append((y, x))
    return pixels


def load_fixture(name: str):
    return load_pnm((FIXTURE_DIR / name).read_bytes())


@pytest.fixture(scope="session")
def gear_fixtures():
    return {
        "intact": render_gear(INTACT_SPEC),
        "missing": render_gear(MISSING_SPEC),
    }


@pytest.fixture(scope="session")
def benchmark(tmp_path_factory):
    """The frozen synthetic benchmark: 200+200 gears, seed 42, lr 0.1, 1000 steps."""
    start = time.monotonic()
    root = tmp_path_factory.mktemp("benchmark-data")
    generate_dataset(200, 42, str(root))
    items = ingest_directory(str(root))
    extractor = ExtractorConfig()
    cfg = TrainConfig(steps=1000, learning_rate=0.1, seed=42, eval_interval=10)
    split = split_dataset(items, cfg.ratios, cfg.seed)
    train_batch = _featurize(split.train, extractor)
    val_batch = _featurize(split.validation, extractor)
    test_batch = _featurize(split.test, extractor)
    head, trace = train_on_features(train_batch, cfg, extractor, validation=val_batch)
    elapsed = time.monotonic() - start
    return {
        "elapsed": elapsed,
        "root": root,
        "items": items,
        "extractor": extractor,
        "config": cfg,
        "split": split,
        "train_batch": train_batch,
        "val_batch": val_batch,
        "test_batch": test_batch,
        "head": head,
        "trace": trace,
    }
