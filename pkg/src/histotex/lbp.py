"""Local binary pattern codes and histograms.

A code thresholds ``n_points`` circular neighbors at radius ``radius``
against the center pixel: bit k is 1 iff the sampled neighbor is >= the
center (ties count as 1, which keeps flat regions deterministic), with bit 0
least significant. Neighbor k sits at

    (cx - radius * sin(2 pi k / n_points), cy + radius * cos(2 pi k / n_points))

in (column, row) coordinates, so k = 0 is the pixel directly below the
center. Off-grid samples are bilinearly interpolated; coordinates within
1e-6 of a grid point snap to that pixel. Centers whose circle leaves the
image are skipped (no padding).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .utils import parallel_map
from .validation import check_gray_image

GRID_SNAP_TOLERANCE = 1e-6

# Raw 2^p histograms above this many neighbor points are rejected: 2^24 bins
# per image is impractical, use uniform mode there.
MAX_RAW_POINTS = 16
MAX_POINTS = 24


@dataclass(frozen=True)
class LbpConfig:
    """Neighborhood and histogram settings for one LBP variant."""

    n_points: int = 8
    radius: int = 1
    uniform: bool = True
    normalize: bool = True

    def __post_init__(self):
        if self.n_points < 4:
            raise ValueError("n_points must be >= 4")
        if self.n_points > MAX_POINTS:
            raise ValueError(f"n_points must be <= {MAX_POINTS}")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if not self.uniform and self.n_points > MAX_RAW_POINTS:
            raise ValueError(
                f"raw histograms need n_points <= {MAX_RAW_POINTS} "
                f"(2^{self.n_points} bins is impractical); use uniform=True"
            )

    @property
    def n_bins(self) -> int:
        if self.uniform:
            return self.n_points * (self.n_points - 1) + 3
        return 1 << self.n_points


def neighbor_offsets(config: LbpConfig) -> np.ndarray:
    """(n_points, 2) array of (dx, dy) offsets, snapped to the pixel grid."""
    k = np.arange(config.n_points, dtype=np.float64)
    angle = 2.0 * np.pi * k / config.n_points
    dx = -config.radius * np.sin(angle)
    dy = config.radius * np.cos(angle)
    offsets = np.stack([dx, dy], axis=1)
    nearest = np.round(offsets)
    snap = np.abs(offsets - nearest) <= GRID_SNAP_TOLERANCE
    offsets[snap] = nearest[snap]
    return offsets


def _check_center(img: np.ndarray, cx: int, cy: int, radius: int) -> None:
    h, w = img.shape
    if not (radius <= cx <= w - 1 - radius and radius <= cy <= h - 1 - radius):
        raise ValueError(
            f"center ({cx}, {cy}) with radius {radius} leaves the "
            f"{w}x{h} image"
        )


def sample_neighbor(img, cx: int, cy: int, k: int, config: LbpConfig) -> float:
    """Intensity of neighbor ``k`` around (cx, cy), bilinearly interpolated."""
    img = check_gray_image(img)
    _check_center(img, cx, cy, config.radius)
    if not 0 <= k < config.n_points:
        raise ValueError(f"neighbor index {k} outside [0, {config.n_points})")
    dx, dy = neighbor_offsets(config)[k]
    x = cx + dx
    y = cy + dy
    if dx == np.floor(dx) and dy == np.floor(dy):
        return float(img[int(y), int(x)])
    x0 = int(np.floor(x))
    y0 = int(np.floor(y))
    fx = x - x0
    fy = y - y0
    top = (1.0 - fx) * img[y0, x0] + fx * img[y0, x0 + 1]
    bottom = (1.0 - fx) * img[y0 + 1, x0] + fx * img[y0 + 1, x0 + 1]
    return float((1.0 - fy) * top + fy * bottom)


def lbp_code(img, cx: int, cy: int, config: LbpConfig) -> int:
    """LBP code of the pixel at (cx, cy); ties threshold to 1."""
    img = check_gray_image(img)
    _check_center(img, cx, cy, config.radius)
    center = img[cy, cx]
    code = 0
    for k in range(config.n_points):
        if sample_neighbor(img, cx, cy, k, config) >= center:
            code |= 1 << k
    return code


def lbp_code_image(img, config: LbpConfig) -> np.ndarray:
    """Codes for every valid center, as an (h - 2r, w - 2r) int64 array."""
    img = check_gray_image(img)
    h, w = img.shape
    r = config.radius
    if w <= 2 * r or h <= 2 * r:
        raise ValueError(
            f"image {w}x{h} too small for radius {r}: no valid centers"
        )
    out_h = h - 2 * r
    out_w = w - 2 * r
    center = img[r:r + out_h, r:r + out_w]
    codes = np.zeros((out_h, out_w), dtype=np.int64)
    for k, (dx, dy) in enumerate(neighbor_offsets(config)):
        if dx == np.floor(dx) and dy == np.floor(dy):
            by = r + int(dy)
            bx = r + int(dx)
            plane = img[by:by + out_h, bx:bx + out_w]
        else:
            x0 = int(np.floor(dx))
            y0 = int(np.floor(dy))
            fx = dx - x0
            fy = dy - y0
            by = r + y0
            bx = r + x0
            p00 = img[by:by + out_h, bx:bx + out_w]
            p01 = img[by:by + out_h, bx + 1:bx + 1 + out_w]
            p10 = img[by + 1:by + 1 + out_h, bx:bx + out_w]
            p11 = img[by + 1:by + 1 + out_h, bx + 1:bx + 1 + out_w]
            plane = (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01) \
                + fy * ((1.0 - fx) * p10 + fx * p11)
        codes |= (plane >= center).astype(np.int64) << k
    return codes


def _rotate_left_1(codes, n_points: int):
    mask = (1 << n_points) - 1
    return ((codes << 1) | (codes >> (n_points - 1))) & mask


def transition_count(codes, n_points: int):
    """Circular 0<->1 transition count of each code."""
    codes = np.asarray(codes, dtype=np.int64)
    flipped = codes ^ _rotate_left_1(codes, n_points)
    return np.bitwise_count(flipped).astype(np.int64)


@lru_cache(maxsize=None)
def uniform_code_list(n_points: int) -> np.ndarray:
    """Sorted codes with <= 2 circular transitions; length p(p-1)+2."""
    codes = {0, (1 << n_points) - 1}
    for ones in range(1, n_points):
        run = (1 << ones) - 1
        for shift in range(n_points):
            codes.add(int(_rotate_left_shift(run, shift, n_points)))
    out = np.array(sorted(codes), dtype=np.int64)
    out.setflags(write=False)
    return out


def _rotate_left_shift(code: int, shift: int, n_points: int) -> int:
    mask = (1 << n_points) - 1
    shift %= n_points
    return ((code << shift) | (code >> (n_points - shift))) & mask


def map_to_uniform_bins(codes, n_points: int) -> np.ndarray:
    """Bin index per code: uniform codes get their rank (ascending code
    order), everything else the shared last bin p(p-1)+2."""
    codes = np.asarray(codes, dtype=np.int64)
    table = uniform_code_list(n_points)
    shared = n_points * (n_points - 1) + 2
    bins = np.searchsorted(table, codes)
    # searchsorted rank is exact for members; non-members fall anywhere, so
    # mask on the transition count.
    is_uniform = transition_count(codes, n_points) <= 2
    return np.where(is_uniform, bins, shared)


def uniform_mapping(n_points: int) -> np.ndarray:
    """Full lookup table code -> bin index over [0, 2^p).

    Memory is 8 * 2^p bytes; for n_points > 16 prefer map_to_uniform_bins
    on the observed codes.
    """
    if n_points > MAX_POINTS:
        raise ValueError(f"n_points must be <= {MAX_POINTS}")
    if n_points <= MAX_RAW_POINTS:
        return _uniform_mapping_cached(n_points)
    return _build_uniform_mapping(n_points)


@lru_cache(maxsize=None)
def _uniform_mapping_cached(n_points: int) -> np.ndarray:
    table = _build_uniform_mapping(n_points)
    table.setflags(write=False)
    return table


def _build_uniform_mapping(n_points: int) -> np.ndarray:
    size = 1 << n_points
    table = np.empty(size, dtype=np.int64)
    chunk = 1 << 20
    for start in range(0, size, chunk):
        stop = min(start + chunk, size)
        table[start:stop] = map_to_uniform_bins(
            np.arange(start, stop, dtype=np.int64), n_points
        )
    return table


def lbp_histogram(img, config: LbpConfig) -> np.ndarray:
    """Histogram of LBP codes over all valid centers of ``img``.

    Raw mode has 2^p bins indexed by code; uniform mode has p(p-1)+3 bins
    per map_to_uniform_bins. L1-normalized when config.normalize.
    """
    codes = lbp_code_image(img, config).ravel()
    if config.uniform:
        bins = map_to_uniform_bins(codes, config.n_points)
    else:
        bins = codes
    hist = np.bincount(bins, minlength=config.n_bins).astype(np.float64)
    if config.normalize:
        hist /= hist.sum()
    return hist


class LbpHistogramExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer turning grayscale images into LBP histograms.

    Parameters mirror LbpConfig; transform accepts a sequence of 2-D arrays
    (or objects with a ``pixels`` attribute) and returns an (n_images,
    n_bins) float64 matrix.
    """

    def __init__(self, n_points=8, radius=1, uniform=True, normalize=True,
                 threads=1):
        self.n_points = n_points
        self.radius = radius
        self.uniform = uniform
        self.normalize = normalize
        self.threads = threads

    def _config(self) -> LbpConfig:
        return LbpConfig(
            n_points=self.n_points,
            radius=self.radius,
            uniform=self.uniform,
            normalize=self.normalize,
        )

    def fit(self, X, y=None):
        self._config()  # validates parameters
        return self

    def transform(self, X):
        config = self._config()
        arrays = [getattr(im, "pixels", im) for im in X]
        rows = parallel_map(
            lambda a: lbp_histogram(a, config), arrays, self.threads
        )
        if not rows:
            return np.empty((0, config.n_bins), dtype=np.float64)
        return np.stack(rows)
