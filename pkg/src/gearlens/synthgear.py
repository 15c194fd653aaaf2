"""Deterministic parametric renderer of gear silhouettes with optional defects.

A gear is a two-level silhouette in polar coordinates about the image
center (pixel centers, so the figure is symmetric): a pixel at radius r
and angle theta is foreground iff

    r <= root_radius + tooth_height * square_wave(teeth * theta)

where the square wave is 1 on the first half of each tooth period and 0
on the second. A MissingTooth defect forces its whole tooth sector down
to root_radius; a Crack forces pixels near a radial ray back to
background. Edges are hard (no anti-aliasing) so the Sobel bank responds
strongly and predictably.

All randomness comes from SplitMix64 seeded by the spec's seed. Additive
Gaussian noise uses the pinned Box-Muller scheme from gearlens.rng, one
sample per pixel, consumed in raster order.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from .imagecore import RgbImage, save_pnm
from .rng import SplitMix64, gaussian_field

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MissingTooth:
    index: int


@dataclass(frozen=True)
class Crack:
    angle: float  # radians
    width: float  # pixels; a pixel cracks when its distance to the ray is <= width


@dataclass(frozen=True)
class GearSpec:
    """Parameters of one rendered gear."""

    image_size: int = 128
    root_radius: float = 34.0
    tooth_height: float = 14.0
    teeth: int = 10
    foreground: int = 220
    background: int = 30
    defect: MissingTooth | Crack | None = None
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.image_size < 32:
            raise ValueError("image_size must be >= 32")
        if self.teeth < 6:
            raise ValueError("teeth must be >= 6")
        if self.root_radius + self.tooth_height >= self.image_size / 2:
            raise ValueError("root_radius + tooth_height must be < image_size/2")
        if not (0 <= self.foreground <= 255 and 0 <= self.background <= 255):
            raise ValueError("foreground and background must lie in [0, 255]")
        if self.foreground == self.background:
            raise ValueError("foreground must differ from background")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if isinstance(self.defect, MissingTooth) and not (0 <= self.defect.index < self.teeth):
            raise ValueError(f"missing-tooth index must lie in [0, {self.teeth})")


@dataclass(frozen=True)
class GenerationSummary:
    """What generate_dataset wrote and where."""

    root: str
    normal_dir: str
    broken_dir: str
    normal_count: int
    broken_count: int
    files: tuple[str, ...]


def render_gear(spec: GearSpec) -> RgbImage:
    """Render one gear; identical specs produce bit-identical images."""
    n = spec.image_size
    coords = np.arange(n, dtype=np.float64) + 0.5 - n / 2.0
    dx = coords[None, :]
    dy = coords[:, None]
    r = np.hypot(dx, dy)
    theta = np.mod(np.arctan2(dy, dx), _TWO_PI)

    period = _TWO_PI / spec.teeth
    wave = np.mod(theta * spec.teeth, _TWO_PI) < math.pi
    limit = spec.root_radius + spec.tooth_height * wave

    if isinstance(spec.defect, MissingTooth):
        lo = spec.defect.index * period
        sector = (theta >= lo) & (theta < lo + period)
        limit = np.where(sector, spec.root_radius, limit)

    mask = r <= limit

    if isinstance(spec.defect, Crack):
        rim = spec.root_radius + spec.tooth_height
        delta = theta - math.fmod(spec.defect.angle, _TWO_PI)
        ahead = np.cos(delta) > 0
        dist = r * np.abs(np.sin(delta))
        cracked = ahead & (dist <= spec.defect.width) & (r >= spec.root_radius / 2.0) & (r <= rim)
        mask = mask & ~cracked

    base = np.where(mask, float(spec.foreground), float(spec.background))
    if spec.noise_sigma > 0:
        base = base + spec.noise_sigma * gaussian_field(spec.seed, n * n).reshape(n, n)
    plane = np.clip(np.floor(base + 0.5), 0, 255).astype(np.uint8)
    return RgbImage(np.repeat(plane[:, :, None], 3, axis=2))


def _draw_item_spec(base_seed: int, index: int, image_size: int, broken: bool) -> GearSpec:
    """Specimen jitter for dataset item `index`, pinned draw order.

    Items model one gear design under an aligned camera and controlled
    lighting: tooth count, phase, and contrast are fixed while radii,
    noise level, and defect parameters vary per specimen. Normal and
    broken items with the same index share the geometry and noise-seed
    draws; defect parameters are drawn afterwards, so each broken gear
    has an identically shaped defect-free counterpart.
    """
    rng = SplitMix64(base_seed + index)
    teeth = 6
    root_radius = image_size * (0.200 + 0.004 * rng.next_float())
    tooth_height = image_size * (0.280 + 0.004 * rng.next_float())
    foreground = 225
    background = 25
    noise_sigma = 2.0 + 1.0 * rng.next_float()
    render_seed = rng.next_u64()
    defect: MissingTooth | Crack | None = None
    if broken:
        if index % 2 == 0:
            defect = MissingTooth(rng.next_below(teeth))
        else:
            defect = Crack(angle=_TWO_PI * rng.next_float(), width=10.0 + 2.0 * rng.next_float())
    return GearSpec(
        image_size=image_size,
        root_radius=root_radius,
        tooth_height=tooth_height,
        teeth=teeth,
        foreground=foreground,
        background=background,
        defect=defect,
        noise_sigma=noise_sigma,
        seed=render_seed,
    )


def generate_dataset(
    count_per_class: int,
    base_seed: int,
    destination: str,
    image_size: int = 128,
) -> GenerationSummary:
    """Write count_per_class normal and broken gears as P6 files.

    Layout is load-bearing for ingestion: <dest>/normal_gear/*.ppm and
    <dest>/broken_gear/*.ppm. Broken items alternate missing-tooth and
    crack defects; item index i draws its geometry from seed base_seed+i.
    """
    if count_per_class < 1:
        raise ValueError("count_per_class must be >= 1")
    dirs = {
        "normal_gear": os.path.join(destination, "normal_gear"),
        "broken_gear": os.path.join(destination, "broken_gear"),
    }
    for path in dirs.values():
        os.makedirs(path, exist_ok=True)

    files = []
    for class_name, broken in (("normal_gear", False), ("broken_gear", True)):
        for index in range(count_per_class):
            spec = _draw_item_spec(base_seed, index, image_size, broken)
            image = render_gear(spec)
            path = os.path.join(dirs[class_name], f"gear_{class_name}_{index:04d}.ppm")
            with open(path, "wb") as fh:
                fh.write(save_pnm(image))
            files.append(path)

    return GenerationSummary(
        root=destination,
        normal_dir=dirs["normal_gear"],
        broken_dir=dirs["broken_gear"],
        normal_count=count_per_class,
        broken_count=count_per_class,
        files=tuple(files),
    )
