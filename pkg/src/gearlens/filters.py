"""Convolution engine, Gaussian blur, and the four-kernel edge bank.

"Convolve" here means cross-correlation (no kernel flip), the dominant
computer-vision convention: out(x, y) = sum_ij k[i][j] * I(x+j-c, y+i-c)
with c = (n-1)/2. For the antisymmetric Sobel kernels the sign difference
against true convolution is erased by the AbsClamp display mapping.
Accumulation is double precision; quantization to 8 bits happens only in
response_to_gray and at the end of gaussian_blur.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .imagecore import GrayImage, RgbImage, quantize

KERNEL_NAMES = ("sobel_x", "sobel_y", "laplacian", "sharpen")

_KERNELS = {
    "sobel_x": [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]],
    "sobel_y": [[-1, -2, -1], [0, 0, 0], [1, 2, 1]],
    # 5-point discretization of d2/dx2 + d2/dy2
    "laplacian": [[0, 1, 0], [1, -4, 1], [0, 1, 0]],
    # identity minus laplacian
    "sharpen": [[0, -1, 0], [-1, 5, -1], [0, -1, 0]],
}


class BorderPolicy(enum.Enum):
    """How out-of-range samples are resolved during convolution."""

    REPLICATE = "replicate"
    ZERO = "zero"


class IntensityMapping(enum.Enum):
    """How real responses are mapped back to displayable 8-bit intensities."""

    CLAMP = "clamp"
    ABS_CLAMP = "abs_clamp"


@dataclass(frozen=True)
class Kernel:
    """Named square convolution matrix with odd side length."""

    name: str
    weights: tuple  # n rows of n floats

    def __post_init__(self):
        n = len(self.weights)
        if n % 2 == 0 or n < 1:
            raise ValueError(f"kernel size must be odd and >= 1, got {n}")
        if any(len(row) != n for row in self.weights):
            raise ValueError("kernel must be square")

    @property
    def size(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)


@dataclass(frozen=True)
class GaussianSpec:
    """Blur parameters; default tap count per axis is 2*ceil(3*sigma)+1."""

    sigma_x: float
    sigma_y: float
    size_x: int | None = None
    size_y: int | None = None

    def __post_init__(self):
        if self.sigma_x <= 0 or self.sigma_y <= 0:
            raise ValueError("sigma_x and sigma_y must be positive")
        for size in (self.size_x, self.size_y):
            if size is not None and (size < 1 or size % 2 == 0):
                raise ValueError(f"explicit kernel size must be odd and >= 1, got {size}")


class ResponsePlane:
    """Real-valued convolution output, same dimensions as the input image."""

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"ResponsePlane expects a 2-D array, got shape {arr.shape}")
        if arr is values:  # do not freeze an array the caller still owns
            arr = arr.copy()
        arr.flags.writeable = False
        self.values = arr

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def named_kernel(name: str) -> Kernel:
    """Return one of the four bank kernels: sobel_x, sobel_y, laplacian, sharpen."""
    if name not in _KERNELS:
        raise ValueError(f"unknown kernel {name!r}, expected one of {KERNEL_NAMES}")
    return Kernel(name, tuple(tuple(float(w) for w in row) for row in _KERNELS[name]))


def _pad(plane: np.ndarray, ry: int, rx: int, border: BorderPolicy) -> np.ndarray:
    if border is BorderPolicy.REPLICATE:
        return np.pad(plane, ((ry, ry), (rx, rx)), mode="edge")
    return np.pad(plane, ((ry, ry), (rx, rx)), mode="constant")


def convolve(image: GrayImage, kernel: Kernel, border: BorderPolicy = BorderPolicy.REPLICATE) -> ResponsePlane:
    """Cross-correlate a grayscale image with a kernel; no clamping."""
    out = _correlate_plane(image.intensities.astype(np.float64), kernel.as_array(), border)
    return ResponsePlane(out)


def _correlate_plane(plane: np.ndarray, weights: np.ndarray, border: BorderPolicy) -> np.ndarray:
    n = weights.shape[0]
    c = (n - 1) // 2
    h, w = plane.shape
    padded = _pad(plane, c, c, border)
    out = np.zeros((h, w), dtype=np.float64)
    for i in range(n):
        for j in range(n):
            wij = weights[i, j]
            if wij != 0.0:
                out += wij * padded[i : i + h, j : j + w]
    return out


def response_to_gray(plane: ResponsePlane, mapping: IntensityMapping) -> GrayImage:
    """Map real responses to an 8-bit image: Clamp or AbsClamp."""
    values = plane.values
    if mapping is IntensityMapping.ABS_CLAMP:
        values = np.abs(values)
    return GrayImage(quantize(values))


def _gaussian_taps(sigma: float, size: int | None) -> np.ndarray:
    if size is None:
        size = 2 * math.ceil(3.0 * sigma) + 1
    r = (size - 1) // 2
    k = np.arange(-r, r + 1, dtype=np.float64)
    taps = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def make_gaussian_kernels(spec: GaussianSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sampled-Gaussian 1-D taps (horizontal, vertical), each normalized to sum 1."""
    return _gaussian_taps(spec.sigma_x, spec.size_x), _gaussian_taps(spec.sigma_y, spec.size_y)


def _blur_plane(plane: np.ndarray, kx: np.ndarray, ky: np.ndarray) -> np.ndarray:
    """Horizontal pass with kx then vertical pass with ky, replicate borders."""
    h, w = plane.shape
    rx = (len(kx) - 1) // 2
    padded = np.pad(plane, ((0, 0), (rx, rx)), mode="edge")
    tmp = np.zeros((h, w), dtype=np.float64)
    for j, tap in enumerate(kx):
        tmp += tap * padded[:, j : j + w]
    ry = (len(ky) - 1) // 2
    padded = np.pad(tmp, ((ry, ry), (0, 0)), mode="edge")
    out = np.zeros((h, w), dtype=np.float64)
    for i, tap in enumerate(ky):
        out += tap * padded[i : i + h, :]
    return out


def gaussian_blur(image: GrayImage | RgbImage, spec: GaussianSpec) -> GrayImage | RgbImage:
    """Separable blur; color images are blurred channel by channel."""
    kx, ky = make_gaussian_kernels(spec)
    if isinstance(image, GrayImage):
        return GrayImage(quantize(_blur_plane(image.intensities.astype(np.float64), kx, ky)))
    planes = [
        _blur_plane(image.pixels[:, :, ch].astype(np.float64), kx, ky) for ch in range(3)
    ]
    return RgbImage(quantize(np.stack(planes, axis=2)))


def apply_filter_bank(image: GrayImage, blur: GaussianSpec) -> dict[str, GrayImage]:
    """Blur, then run all four kernels and map each back to a gray image.

    Sobel and Laplacian responses are displayed as magnitudes (AbsClamp);
    the sharpen result is clamped as-is.
    """
    blurred = gaussian_blur(image, blur)
    out: dict[str, GrayImage] = {}
    for name in KERNEL_NAMES:
        plane = convolve(blurred, named_kernel(name), BorderPolicy.REPLICATE)
        mapping = IntensityMapping.CLAMP if name == "sharpen" else IntensityMapping.ABS_CLAMP
        out[name] = response_to_gray(plane, mapping)
    return out
