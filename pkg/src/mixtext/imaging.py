"""Raster operations for the pipeline: load/save, contrast enhancement,
projection-profile deskew, rotation, and word cropping with white padding.

Images are 8-bit grayscale, 0 = black ink, 255 = white background.
"""

from __future__ import annotations

import math
import subprocess
import tempfile
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .docmodel import WordBox

BINARIZE_THRESHOLD = 128  # fixed ink threshold for projection profiles
DEFAULT_DESKEW_RANGE = 15.0
DEFAULT_DESKEW_STEP = 0.5
DEFAULT_PAD_PIXELS = 10

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ImageFormatError(ValueError):
    """Unsupported or corrupt image data."""


class GeometryError(ValueError):
    """A crop or box falls outside the image bounds."""


class EnhancementError(RuntimeError):
    """An external enhancement command failed."""


@dataclass(frozen=True)
class RasterImage:
    """Immutable grayscale raster; `pixels` is row-major, one byte per pixel."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ImageFormatError(f"bad dimensions {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height:
            raise ImageFormatError(
                f"{len(self.pixels)} pixel bytes for {self.width}x{self.height}"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "RasterImage":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ImageFormatError(f"expected 2-d array, got shape {arr.shape}")
        data = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
        return cls(arr.shape[1], arr.shape[0], data.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width)

    def pixel(self, x: int, y: int) -> int:
        return self.pixels[y * self.width + x]


@dataclass(frozen=True)
class SkewEstimate:
    """Correcting rotation angle and the profile-variance score behind it."""

    angle_degrees: float
    score: float

    def __post_init__(self):
        if not (-45.0 < self.angle_degrees <= 45.0):
            raise ValueError(f"skew angle {self.angle_degrees} outside (-45, 45]")


def load_image(path: str | Path) -> RasterImage:
    """Decode a PGM (P5) or PNG (8-bit gray/RGB) file to a grayscale raster."""
    data = Path(path).read_bytes()
    if data[:2] == b"P5":
        return _decode_pgm(data)
    if data[:8] == _PNG_SIGNATURE:
        return _decode_png(data)
    raise ImageFormatError(f"{path}: not a supported image format")


def save_pgm(img: RasterImage, path: str | Path) -> None:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.pixels)


def _decode_pgm(data: bytes) -> RasterImage:
    # Header tokens are whitespace separated; '#' starts a comment to EOL.
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        try:
            tokens.append(int(data[start:pos]))
        except ValueError:
            raise ImageFormatError(f"bad PGM header token {data[start:pos]!r}") from None
    width, height, maxval = tokens
    if width <= 0 or height <= 0 or not 0 < maxval < 256:
        raise ImageFormatError(f"bad PGM header {width}x{height} maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ImageFormatError("PGM raster shorter than header promises")
    if maxval != 255:
        arr = np.frombuffer(raster, dtype=np.uint8).astype(np.uint16)
        raster = ((arr * 255) // maxval).astype(np.uint8).tobytes()
    return RasterImage(width, height, raster)


def _decode_png(data: bytes) -> RasterImage:
    pos = 8
    width = height = color_type = None
    idat = bytearray()
    while pos + 8 <= len(data):
        length = int.from_bytes(data[pos : pos + 4], "big")
        ctype = data[pos + 4 : pos + 8]
        body = data[pos + 8 : pos + 8 + length]
        if len(body) != length:
            raise ImageFormatError("truncated PNG chunk")
        if ctype == b"IHDR":
            width = int.from_bytes(body[0:4], "big")
            height = int.from_bytes(body[4:8], "big")
            bit_depth, color_type, _, _, interlace = body[8:13]
            if bit_depth != 8 or color_type not in (0, 2) or interlace != 0:
                raise ImageFormatError(
                    "only non-interlaced 8-bit grayscale or RGB PNG is supported"
                )
        elif ctype == b"IDAT":
            idat.extend(body)
        elif ctype == b"IEND":
            break
        pos += 12 + length
    if width is None or not idat:
        raise ImageFormatError("PNG missing IHDR or IDAT")
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise ImageFormatError(f"PNG deflate stream corrupt: {exc}") from None
    channels = 1 if color_type == 0 else 3
    stride = width * channels
    if len(raw) != (stride + 1) * height:
        raise ImageFormatError("PNG pixel data has wrong length")
    flat = _unfilter_scanlines(raw, height, stride, channels)
    if channels == 1:
        return RasterImage(width, height, bytes(flat))
    rgb = np.frombuffer(bytes(flat), dtype=np.uint8).reshape(height, width, 3)
    lum = (
        77 * rgb[:, :, 0].astype(np.uint32)
        + 150 * rgb[:, :, 1].astype(np.uint32)
        + 29 * rgb[:, :, 2].astype(np.uint32)
    ) >> 8
    return RasterImage.from_array(lum)


def _unfilter_scanlines(raw: bytes, height: int, stride: int, bpp: int) -> bytearray:
    out = bytearray(height * stride)
    prev_row = bytearray(stride)
    for row in range(height):
        base = row * (stride + 1)
        ftype = raw[base]
        line = bytearray(raw[base + 1 : base + 1 + stride])
        if ftype == 1:  # Sub
            for i in range(bpp, stride):
                line[i] = (line[i] + line[i - bpp]) & 0xFF
        elif ftype == 2:  # Up
            for i in range(stride):
                line[i] = (line[i] + prev_row[i]) & 0xFF
        elif ftype == 3:  # Average
            for i in range(stride):
                left = line[i - bpp] if i >= bpp else 0
                line[i] = (line[i] + (left + prev_row[i]) // 2) & 0xFF
        elif ftype == 4:  # Paeth
            for i in range(stride):
                left = line[i - bpp] if i >= bpp else 0
                up = prev_row[i]
                up_left = prev_row[i - bpp] if i >= bpp else 0
                p = left + up - up_left
                pa, pb, pc = abs(p - left), abs(p - up), abs(p - up_left)
                if pa <= pb and pa <= pc:
                    pred = left
                elif pb <= pc:
                    pred = up
                else:
                    pred = up_left
                line[i] = (line[i] + pred) & 0xFF
        elif ftype != 0:
            raise ImageFormatError(f"unknown PNG filter type {ftype}")
        out[row * stride : (row + 1) * stride] = line
        prev_row = line
    return out


def enhance(
    img: RasterImage,
    command: list[str] | None = None,
    timeout: float | None = None,
) -> RasterImage:
    """Contrast enhancement; dimensions never change.

    Built-in path: percentile contrast stretch (2nd percentile to 0, 98th to
    255, linear in between) followed by 3x3 median filtering. When `command`
    is given, the image is round-tripped through that external program
    instead ({in}/{out} placeholders name PGM files).
    """
    if command is not None:
        return _enhance_external(img, command, timeout)
    arr = img.to_array()
    return RasterImage.from_array(_median3(_stretch(arr)))


def _stretch(arr: np.ndarray) -> np.ndarray:
    hist = np.bincount(arr.ravel(), minlength=256)
    cum = np.cumsum(hist)
    n = arr.size
    lo = int(np.searchsorted(cum, 0.02 * n))
    hi = int(np.searchsorted(cum, 0.98 * n))
    if hi <= lo:
        return arr
    values = np.arange(256, dtype=np.float64)
    lut = np.clip(np.rint((values - lo) * 255.0 / (hi - lo)), 0, 255).astype(np.uint8)
    return lut[arr]


def _median3(arr: np.ndarray) -> np.ndarray:
    padded = np.pad(arr, 1, mode="edge")
    stack = np.stack(
        [padded[dy : dy + arr.shape[0], dx : dx + arr.shape[1]] for dy in range(3) for dx in range(3)]
    )
    return np.median(stack, axis=0).astype(np.uint8)


def _enhance_external(img: RasterImage, command: list[str], timeout: float | None) -> RasterImage:
    with tempfile.TemporaryDirectory(prefix="mixtext-enhance-") as tmp:
        in_path = str(Path(tmp) / "in.pgm")
        out_path = str(Path(tmp) / "out.pgm")
        save_pgm(img, in_path)
        argv = [arg.replace("{in}", in_path).replace("{out}", out_path) for arg in command]
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise EnhancementError(f"enhancement command failed: {exc}") from exc
        if proc.returncode != 0:
            raise EnhancementError(
                f"enhancement command exited {proc.returncode}: {proc.stderr[:200]!r}"
            )
        if not Path(out_path).exists():
            raise EnhancementError("enhancement command produced no output file")
        out = load_image(out_path)
    if (out.width, out.height) != (img.width, img.height):
        raise EnhancementError("enhancement command changed image dimensions")
    return out


def estimate_skew(
    img: RasterImage,
    search_range_degrees: float = DEFAULT_DESKEW_RANGE,
    step_degrees: float = DEFAULT_DESKEW_STEP,
) -> SkewEstimate:
    """Correcting angle that maximizes horizontal projection-profile variance.

    The image is binarized at the fixed threshold; for every angle on the
    search grid the foreground is rotated and its per-row pixel counts
    histogrammed, and the angle whose profile has the largest variance wins.
    Rotating the image by the returned angle aligns its text lines. A blank
    image scores (0, 0). Ties prefer the smaller absolute angle.
    """
    if not 0 < step_degrees <= search_range_degrees <= 45:
        raise ValueError(
            f"need 0 < step ({step_degrees}) <= range ({search_range_degrees}) <= 45"
        )
    if not np.any(img.to_array() < BINARIZE_THRESHOLD):
        return SkewEstimate(0.0, 0.0)

    steps = int((search_range_degrees + 1e-9) / step_degrees)
    grid = [i * step_degrees for i in range(-steps, steps + 1) if -45.0 < i * step_degrees <= 45.0]
    best: tuple[float, float, float] | None = None  # (score, -|angle|, -angle)
    best_angle = 0.0
    best_score = 0.0
    for angle in grid:
        rotated = img if angle == 0 else rotate(img, angle)
        foreground = rotated.to_array() < BINARIZE_THRESHOLD
        profile = foreground.sum(axis=1)
        occupied = np.nonzero(profile)[0]
        if len(occupied) == 0:
            score = 0.0
        else:
            score = float(profile[occupied[0] : occupied[-1] + 1].var())
        key = (score, -abs(angle), -angle)
        if best is None or key > best:
            best = key
            best_angle, best_score = angle, score
    return SkewEstimate(best_angle, best_score)


def rotate(img: RasterImage, angle_degrees: float) -> RasterImage:
    """Rotate counterclockwise (as displayed) by the given angle.

    Multiples of 90 degrees are exact pixel permutations; anything else is
    bilinear with white fill on a canvas enlarged to hold the rotated bounds.
    """
    norm = angle_degrees % 360.0
    if norm in (0.0, 90.0, 180.0, 270.0):
        arr = img.to_array()
        rotated = np.rot90(arr, k=int(norm) // 90)
        return RasterImage.from_array(np.ascontiguousarray(rotated))
    return _rotate_bilinear(img, angle_degrees)


def _rotate_bilinear(img: RasterImage, angle_degrees: float) -> RasterImage:
    arr = img.to_array().astype(np.float64)
    a = math.radians(angle_degrees % 360.0)
    cos_a, sin_a = math.cos(a), math.sin(a)
    w, h = img.width, img.height
    out_w = int(math.ceil(abs(w * cos_a) + abs(h * sin_a)))
    out_h = int(math.ceil(abs(h * cos_a) + abs(w * sin_a)))

    yo, xo = np.mgrid[0:out_h, 0:out_w]
    dxo = xo - (out_w - 1) / 2.0
    dyo = yo - (out_h - 1) / 2.0
    # Inverse map: rotate output offsets by -angle back into source space.
    src_x = dxo * cos_a - dyo * sin_a + (w - 1) / 2.0
    src_y = dxo * sin_a + dyo * cos_a + (h - 1) / 2.0

    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    fx = src_x - x0
    fy = src_y - y0
    acc = np.zeros((out_h, out_w), dtype=np.float64)
    for oy, ox, weight in (
        (0, 0, (1 - fx) * (1 - fy)),
        (0, 1, fx * (1 - fy)),
        (1, 0, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        px = x0 + ox
        py = y0 + oy
        inside = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        sample = np.where(
            inside, arr[np.clip(py, 0, h - 1), np.clip(px, 0, w - 1)], 255.0
        )
        acc += weight * sample
    return RasterImage.from_array(acc)


def crop_word(img: RasterImage, box: WordBox, pad_pixels: int = DEFAULT_PAD_PIXELS) -> RasterImage:
    """Crop a word box and surround it with a white ring of `pad_pixels`."""
    if pad_pixels < 0:
        raise GeometryError(f"negative padding {pad_pixels}")
    x0, y0, x1, y1 = box.bbox
    if x0 < 0 or y0 < 0 or x1 > img.width or y1 > img.height:
        raise GeometryError(f"box {box.bbox} outside {img.width}x{img.height} image")
    arr = img.to_array()[y0:y1, x0:x1]
    padded = np.pad(arr, pad_pixels, mode="constant", constant_values=255)
    return RasterImage.from_array(padded)
