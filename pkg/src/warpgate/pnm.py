"""Minimal binary PGM (P5) / PPM (P6) reading and PGM writing.

P5 must be 8-bit with maxval 255; intensities come out in [0, 1]. P6 is
converted to gray as the channel mean before the same scaling.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = ["read_image", "write_pgm"]

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Collect `count` whitespace-separated header tokens, honoring # comments.

    Returns the tokens and the offset of the first raster byte (one
    whitespace byte after the last token, per the Netpbm convention).
    """
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise ValueError("truncated header")
        ch = data[i : i + 1]
        if ch in _WHITESPACE:
            i += 1
        elif ch == b"#":
            nl = data.find(b"\n", i)
            if nl < 0:
                raise ValueError("unterminated comment in header")
            i = nl + 1
        else:
            j = i
            while j < len(data) and data[j : j + 1] not in _WHITESPACE and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    if i >= len(data) or data[i : i + 1] not in _WHITESPACE:
        raise ValueError("missing whitespace after header")
    return tokens, i + 1


def read_image(path: str | Path):
    """Read a P5 or P6 file into a GrayImage."""
    from .imageproc import GrayImage

    data = Path(path).read_bytes()
    if data[:2] not in (b"P5", b"P6"):
        raise ValueError(f"{path}: unsupported format {data[:2]!r}, expected P5 or P6")
    magic = data[:2]
    tokens, offset = _header_tokens(data[2:], 3)
    width, height, maxval = (int(t) for t in tokens)
    offset += 2
    if width < 1 or height < 1:
        raise ValueError(f"{path}: invalid dimensions {width}x{height}")
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit maxval 255 supported, got {maxval}")
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    raster = np.frombuffer(data, dtype=np.uint8, count=-1, offset=offset)
    if raster.size < expected:
        raise ValueError(f"{path}: raster truncated ({raster.size} of {expected} bytes)")
    raster = raster[:expected].astype(np.float64)
    if channels == 3:
        raster = raster.reshape(height, width, 3).mean(axis=2)
    else:
        raster = raster.reshape(height, width)
    return GrayImage(raster / 255.0)


def write_pgm(path: str | Path, pixels: np.ndarray) -> None:
    """Write a (h, w) array in [0, 1] as binary 8-bit PGM."""
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D pixel array")
    scaled = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    h, w = scaled.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(scaled.tobytes())
