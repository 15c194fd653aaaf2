"""8-bit raster image types, RGB to grayscale conversion, and PNM codecs.

Images are immutable-by-convention wrappers around uint8 numpy arrays:
GrayImage holds an (H, W) intensity plane, RgbImage an (H, W, 3) pixel
cube, both row-major. The native interchange format is binary PNM with
maxval 255: P5 for grayscale, P6 for color. Encoding is canonical
("P5\\n<w> <h>\\n255\\n" + raster), so save followed by load is the
identity on all images and load followed by save is the identity on
canonical files.
"""

import numpy as np

MAX_DIMENSION = 1 << 16  # per-side cap; larger headers are a decode error

_LUMA_R = 0.299
_LUMA_G = 0.587
_LUMA_B = 0.114


class PnmDecodeError(ValueError):
    """Malformed PNM input; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _check_plane(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"{what} must be integers, got dtype {arr.dtype}")
    if arr.size == 0 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{what} must be at least 1x1")
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError(f"{what} values must lie in [0, 255]")
    out = arr.astype(np.uint8)
    out.flags.writeable = False
    return out


class GrayImage:
    """Grayscale raster; `intensities` is an (H, W) uint8 array."""

    def __init__(self, intensities):
        arr = np.asarray(intensities)
        if arr.ndim != 2:
            raise ValueError(f"GrayImage expects a 2-D array, got shape {arr.shape}")
        self.intensities = _check_plane(arr, "intensities")

    @property
    def width(self) -> int:
        return self.intensities.shape[1]

    @property
    def height(self) -> int:
        return self.intensities.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(
            self.intensities, other.intensities
        )

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height})"


class RgbImage:
    """Color raster; `pixels` is an (H, W, 3) uint8 array."""

    def __init__(self, pixels):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"RgbImage expects an (H, W, 3) array, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"pixels must be integers, got dtype {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("RgbImage must be at least 1x1")
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("channel values must lie in [0, 255]")
        out = arr.astype(np.uint8)
        out.flags.writeable = False
        self.pixels = out

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, RgbImage) and np.array_equal(self.pixels, other.pixels)

    def __repr__(self) -> str:
        return f"RgbImage({self.width}x{self.height})"


def round_half_up(values: np.ndarray) -> np.ndarray:
    """Round to nearest integer with halves going up (0.5 -> 1)."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


def quantize(values: np.ndarray) -> np.ndarray:
    """Round half up and clip to the 8-bit range."""
    return np.clip(round_half_up(values), 0, 255).astype(np.uint8)


def rgb_to_gray(image: RgbImage) -> GrayImage:
    """Rec. 601 luma conversion, rounded half up per pixel."""
    p = image.pixels.astype(np.float64)
    luma = _LUMA_R * p[:, :, 0] + _LUMA_G * p[:, :, 1] + _LUMA_B * p[:, :, 2]
    return GrayImage(quantize(luma))


def gray_to_rgb(image: GrayImage) -> RgbImage:
    """Promote grayscale to color by replicating the channel."""
    return RgbImage(np.repeat(image.intensities[:, :, None], 3, axis=2))


class _Tokenizer:
    """Whitespace-separated ASCII header fields; '#' comments to end of line."""

    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def _skip_separators(self) -> None:
        data = self.data
        while self.pos < len(data):
            b = data[self.pos]
            if b in b" \t\r\n\x0b\x0c":
                self.pos += 1
            elif b == ord("#"):
                while self.pos < len(data) and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def next_int(self, what: str) -> tuple[int, int]:
        """Return (value, offset of the token's first byte)."""
        self._skip_separators()
        start = self.pos
        data = self.data
        while self.pos < len(data) and data[self.pos : self.pos + 1].isdigit():
            self.pos += 1
        if self.pos == start:
            raise PnmDecodeError(f"expected {what}", start)
        return int(data[start : self.pos]), start


def load_pnm(data: bytes) -> RgbImage | GrayImage:
    """Decode binary PNM bytes: P5 yields GrayImage, P6 yields RgbImage."""
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise PnmDecodeError(f"unknown magic {magic!r}", 0)

    tok = _Tokenizer(data, 2)
    width, w_off = tok.next_int("width")
    height, h_off = tok.next_int("height")
    maxval, m_off = tok.next_int("maxval")
    if width < 1 or width > MAX_DIMENSION:
        raise PnmDecodeError(f"width {width} out of range [1, {MAX_DIMENSION}]", w_off)
    if height < 1 or height > MAX_DIMENSION:
        raise PnmDecodeError(f"height {height} out of range [1, {MAX_DIMENSION}]", h_off)
    if maxval != 255:
        raise PnmDecodeError(f"unsupported maxval {maxval}, must be 255", m_off)

    # exactly one whitespace byte separates the header from the raster
    if tok.pos >= len(data) or data[tok.pos] not in b" \t\r\n\x0b\x0c":
        raise PnmDecodeError("expected single whitespace before raster", tok.pos)
    raster_start = tok.pos + 1

    need = width * height * channels
    raster = data[raster_start : raster_start + need]
    if len(raster) < need:
        raise PnmDecodeError(
            f"truncated raster: need {need} bytes, have {len(raster)}",
            len(data),
        )
    arr = np.frombuffer(raster, dtype=np.uint8, count=need)
    if channels == 1:
        return GrayImage(arr.reshape(height, width))
    return RgbImage(arr.reshape(height, width, 3))


def save_pnm(image: RgbImage | GrayImage) -> bytes:
    """Encode to canonical binary PNM."""
    if isinstance(image, GrayImage):
        magic, raster = b"P5", image.intensities
    elif isinstance(image, RgbImage):
        magic, raster = b"P6", image.pixels
    else:
        raise TypeError(f"expected GrayImage or RgbImage, got {type(image).__name__}")
    header = magic + b"\n%d %d\n255\n" % (image.width, image.height)
    return header + raster.tobytes()
