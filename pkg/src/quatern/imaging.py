"""Binary PPM/PGM I/O, Gaussian smoothing and the PSNR/SSIM image metrics."""

from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path

import numpy as np
from scipy.ndimage import correlate1d, uniform_filter

PSNR_CAP = 999.0  # stand-in for +inf when writing CSV
SSIM_WINDOW = 8
SSIM_K1, SSIM_K2 = 0.01, 0.03


class ImageFormatError(ValueError):
    pass


def _tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace separated header tokens, skipping ``#`` comments."""
    out, pos = [], 0
    while len(out) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(buf):
            raise ImageFormatError("truncated header")
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        out.append(buf[start:pos])
    return out, pos + 1  # exactly one whitespace byte precedes the raster


def _read_pnm(path, magic: bytes, channels: int) -> np.ndarray:
    buf = Path(path).read_bytes()
    (tag, w, h, maxval), pos = _tokens(buf, 4)
    if tag != magic:
        raise ImageFormatError(f"expected {magic.decode()} image, got {tag[:8]!r}")
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise ImageFormatError("non-integer header field") from None
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise ImageFormatError(f"bad header values {w}x{h} max {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = w * h * channels * dtype.itemsize
    raster = buf[pos:pos + need]
    if len(raster) < need:
        raise ImageFormatError(f"raster truncated: {len(raster)} of {need} bytes")
    arr = np.frombuffer(raster, dtype=dtype).reshape(h, w, channels) if channels > 1 \
        else np.frombuffer(raster, dtype=dtype).reshape(h, w)
    return arr.astype(np.float64) / maxval


def _atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _to_bytes(x: np.ndarray) -> bytes:
    return np.round(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8).tobytes()


def read_ppm(path) -> np.ndarray:
    """P6 image as an ``(h, w, 3)`` float array in ``[0, 1]``."""
    return _read_pnm(path, b"P6", 3)


def write_ppm(path, rgb: np.ndarray) -> None:
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ImageFormatError(f"expected (h, w, 3) array, got {rgb.shape}")
    h, w, _ = rgb.shape
    _atomic_write(path, f"P6\n{w} {h}\n255\n".encode() + _to_bytes(rgb))


def read_pgm(path) -> np.ndarray:
    """P5 image as an ``(h, w)`` float array in ``[0, 1]``."""
    return _read_pnm(path, b"P5", 1)


def write_pgm(path, gray: np.ndarray) -> None:
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2:
        raise ImageFormatError(f"expected 2-D array, got {gray.shape}")
    h, w = gray.shape
    _atomic_write(path, f"P5\n{w} {h}\n255\n".encode() + _to_bytes(gray))


def read_mask(path) -> np.ndarray:
    """Observation mask from a PGM file: 0 is missing, anything else observed."""
    return (read_pgm(path) > 0).astype(np.float64)


def write_mask(path, mask: np.ndarray) -> None:
    write_pgm(path, (np.asarray(mask) > 0).astype(np.float64))


# ---------------------------------------------------------------------------
# smoothing

def gaussian_kernel(sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    radius = math.ceil(3.0 * sigma)
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_blur(channel: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian smoothing with mirrored borders (edge sample repeated)."""
    k = gaussian_kernel(sigma)
    out = correlate1d(np.asarray(channel, dtype=np.float64), k, axis=0, mode="reflect")
    return correlate1d(out, k, axis=1, mode="reflect")


# ---------------------------------------------------------------------------
# metrics

def psnr(x: np.ndarray, ref: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal to noise ratio in dB over all channels; ``inf`` when identical."""
    x, ref = np.asarray(x, dtype=np.float64), np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {ref.shape}")
    mse = float(np.mean((x - ref) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def csv_psnr(value: float) -> float:
    return min(value, PSNR_CAP)


def _ssim_channel(x: np.ndarray, y: np.ndarray, peak: float, win: int) -> float:
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mean = lambda a: uniform_filter(a, size=win, mode="reflect")
    mx, my = mean(x), mean(y)
    vx = mean(x * x) - mx * mx
    vy = mean(y * y) - my * my
    cov = mean(x * y) - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * cov + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    smap = num / den
    # drop windows that hang over the border
    lo = win // 2
    hi_r = x.shape[0] - (win - 1 - lo)
    hi_c = x.shape[1] - (win - 1 - lo)
    if hi_r > lo and hi_c > lo:
        smap = smap[lo:hi_r, lo:hi_c]
    return float(smap.mean())


def ssim(x: np.ndarray, ref: np.ndarray, peak: float = 1.0, win: int = SSIM_WINDOW) -> float:
    """Mean structural similarity on sliding ``win`` by ``win`` windows, averaged over channels."""
    x, ref = np.asarray(x, dtype=np.float64), np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {ref.shape}")
    if x.ndim == 2:
        return _ssim_channel(x, ref, peak, win)
    return float(np.mean([_ssim_channel(x[..., c], ref[..., c], peak, win)
                          for c in range(x.shape[-1])]))
