"""Fixed feature extractor: grid-pooled filter-bank responses.

This stands in for a pretrained network's bottleneck so the trainable
final layer has a deterministic, bounded input. Pipeline per image:
bilinear resize to a square canonical size, grayscale conversion,
Gaussian blur, then for each bank kernel the absolute response is mean
pooled over a grid of equal cells. Sharpen cells use the high-frequency
residue |response - blurred input| so that, like the zero-sum kernels, a
constant image contributes zero. Two global statistics of the blurred
grayscale plane (mean/255 and population std/255) complete the vector,
and every component is clipped to [0, 1].

Feature order: kernel-major (sobel_x, sobel_y, laplacian, sharpen), cells
in raster order inside each kernel block, then the two globals. The
dimension 4*grid**2 + 2 depends only on the config.
"""

from dataclasses import dataclass, field

import numpy as np

from .filters import (
    BorderPolicy,
    GaussianSpec,
    KERNEL_NAMES,
    convolve,
    gaussian_blur,
    named_kernel,
)
from .imagecore import GrayImage, RgbImage, quantize, rgb_to_gray


@dataclass(frozen=True)
class ExtractorConfig:
    canonical_size: int = 128
    blur: GaussianSpec = field(default_factory=lambda: GaussianSpec(1.0, 1.0))
    grid: int = 4

    def __post_init__(self):
        if self.grid < 1:
            raise ValueError("grid must be >= 1")
        if self.canonical_size < self.grid:
            raise ValueError("canonical_size must be >= grid")


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def feature_dimension(config: ExtractorConfig) -> int:
    return 4 * config.grid * config.grid + 2


def resize_bilinear(image: RgbImage, size: int) -> RgbImage:
    """Resize to size x size with half-pixel-centered bilinear sampling."""
    if size < 1:
        raise ValueError("size must be >= 1")
    if image.width == size and image.height == size:
        return image
    src = image.pixels.astype(np.float64)
    out = np.empty((size, size, 3), dtype=np.float64)
    y0, y1, wy = _sample_axis(image.height, size)
    x0, x1, wx = _sample_axis(image.width, size)
    for ch in range(3):
        plane = src[:, :, ch]
        top = plane[y0][:, x0] * (1 - wx) + plane[y0][:, x1] * wx
        bottom = plane[y1][:, x0] * (1 - wx) + plane[y1][:, x1] * wx
        out[:, :, ch] = top * (1 - wy[:, None]) + bottom * wy[:, None]
    return RgbImage(quantize(out))


def _sample_axis(src_len: int, dst_len: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Neighbor indices and fractional weights for one axis.

    Source coordinate of destination pixel d is (d + 0.5) * s/D - 0.5,
    clamped to the image, with the upper neighbor clamped to the last row
    or column (edge replication).
    """
    pos = (np.arange(dst_len, dtype=np.float64) + 0.5) * (src_len / dst_len) - 0.5
    pos = np.clip(pos, 0.0, src_len - 1.0)
    base = np.floor(pos).astype(np.int64)
    upper = np.minimum(base + 1, src_len - 1)
    frac = pos - base
    return base, upper, frac


def _cell_means(plane: np.ndarray, grid: int) -> list[float]:
    """Mean over grid x grid cells, boundaries by integer division, raster order."""
    h, w = plane.shape
    means = []
    for gy in range(grid):
        y0, y1 = gy * h // grid, (gy + 1) * h // grid
        for gx in range(grid):
            x0, x1 = gx * w // grid, (gx + 1) * w // grid
            means.append(float(plane[y0:y1, x0:x1].mean()))
    return means


def extract_features(image: RgbImage, config: ExtractorConfig) -> FeatureVector:
    """Deterministic fixed-length feature vector; all components in [0, 1]."""
    resized = resize_bilinear(image, config.canonical_size)
    gray = rgb_to_gray(resized)
    blurred = gaussian_blur(gray, config.blur)
    base = blurred.intensities.astype(np.float64)

    components: list[float] = []
    for name in KERNEL_NAMES:
        response = convolve(blurred, named_kernel(name), BorderPolicy.REPLICATE).values
        magnitude = np.abs(response - base) if name == "sharpen" else np.abs(response)
        components.extend(v / 255.0 for v in _cell_means(magnitude, config.grid))

    components.append(float(base.mean()) / 255.0)
    components.append(float(base.std()) / 255.0)
    clipped = tuple(min(1.0, max(0.0, v)) for v in components)
    return FeatureVector(values=clipped)
