"""Bag-of-visual-words pipeline over uniform LBP(8,1) block descriptors.

Images are resized to a square, cut into grid blocks, and each block is
described by its own normalized uniform LBP(8,1) histogram (59 bins). A
codebook is learned with Lloyd k-means whose initial centroids are drawn
only from blocks with above-average gradient magnitude; images are then
encoded as normalized histograms of nearest-codeword assignments.
"""

import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, TransformerMixin

from .lbp import LbpConfig, lbp_code_image, map_to_uniform_bins
from .utils import parallel_map
from .validation import check_gray_image, check_matrix

# Block descriptor is fixed for the whole pipeline: uniform LBP(8,1).
DESCRIPTOR_CONFIG = LbpConfig(n_points=8, radius=1, uniform=True, normalize=True)
DESCRIPTOR_DIM = DESCRIPTOR_CONFIG.n_bins  # 59

KMEANS_TOL = 1e-4
KMEANS_MAX_ITER = 100

_CODEBOOK_MAGIC = b"KPCB"
_CODEBOOK_VERSION = 1


@dataclass(frozen=True)
class GridStrategy:
    """Square sampling grid: ``block`` side length, ``stride`` step."""

    block: int
    stride: int

    def __post_init__(self):
        if self.block < 1 or self.stride < 1:
            raise ValueError("block and stride must be positive")
        if self.stride > self.block:
            raise ValueError(
                f"stride {self.stride} larger than block {self.block} "
                "would skip pixels"
            )

    @classmethod
    def parse(cls, text: str) -> "GridStrategy":
        """Parse '16x8' (block x stride)."""
        try:
            block, stride = text.lower().split("x")
            return cls(block=int(block), stride=int(stride))
        except (ValueError, TypeError):
            raise ValueError(
                f"grid must look like '16x16' or '16x8', got {text!r}"
            ) from None

    def __str__(self):
        return f"{self.block}x{self.stride}"


@dataclass(frozen=True)
class Block:
    """One grid block with its origin in the source image."""

    x: int
    y: int
    pixels: np.ndarray = field(repr=False)


def resize_image(img, dim: int) -> np.ndarray:
    """Bilinear resample to dim x dim (pixel-center aligned).

    Resizing to the image's own size reproduces it exactly; output stays
    float64 without requantization.
    """
    img = check_gray_image(img)
    if dim < 1:
        raise ValueError("dim must be positive")
    h, w = img.shape
    out = img
    if h != dim:
        out = _resample_axis(out, dim, axis=0)
    if w != dim:
        out = _resample_axis(out, dim, axis=1)
    return np.ascontiguousarray(out)


def _resample_axis(img: np.ndarray, target: int, axis: int) -> np.ndarray:
    size = img.shape[axis]
    src = (np.arange(target, dtype=np.float64) + 0.5) * (size / target) - 0.5
    src = np.clip(src, 0.0, size - 1.0)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, size - 1)
    frac = src - lo
    lo_vals = np.take(img, lo, axis=axis)
    hi_vals = np.take(img, hi, axis=axis)
    shape = [1, 1]
    shape[axis] = target
    frac = frac.reshape(shape)
    return lo_vals * (1.0 - frac) + hi_vals * frac


def _grid_origins(height: int, width: int, grid: GridStrategy):
    ys = range(0, height - grid.block + 1, grid.stride)
    xs = range(0, width - grid.block + 1, grid.stride)
    return ys, xs


def grid_blocks(img, grid: GridStrategy) -> list:
    """All blocks in row-major order; origins are multiples of the stride."""
    img = check_gray_image(img)
    h, w = img.shape
    if h < grid.block or w < grid.block:
        raise ValueError(
            f"image {w}x{h} smaller than block size {grid.block}"
        )
    ys, xs = _grid_origins(h, w, grid)
    return [
        Block(x=x, y=y, pixels=img[y:y + grid.block, x:x + grid.block])
        for y in ys
        for x in xs
    ]


def block_descriptor(block) -> np.ndarray:
    """Normalized uniform LBP(8,1) histogram of one block (59 bins)."""
    pixels = getattr(block, "pixels", block)
    from .lbp import lbp_histogram

    return lbp_histogram(pixels, DESCRIPTOR_CONFIG)


def block_gradient(block) -> float:
    """Mean central-difference gradient magnitude (one-sided at borders)."""
    pixels = check_gray_image(getattr(block, "pixels", block))
    if pixels.shape[0] < 2 or pixels.shape[1] < 2:
        raise ValueError("block must be at least 2x2 for gradients")
    gy, gx = np.gradient(pixels)
    return float(np.mean(np.sqrt(gx * gx + gy * gy)))


def image_descriptors(img, grid: GridStrategy):
    """(descriptors, gradients) for every grid block of ``img``.

    Identical to calling block_descriptor / block_gradient per block, but
    shares one LBP code image across blocks: interior LBP centers of a
    block only read pixels of that block, so global codes sliced to the
    block equal the block-local computation.
    """
    img = check_gray_image(img)
    h, w = img.shape
    if h < grid.block or w < grid.block:
        raise ValueError(
            f"image {w}x{h} smaller than block size {grid.block}"
        )
    b = grid.block
    ys, xs = _grid_origins(h, w, grid)
    ys = np.fromiter(ys, dtype=np.int64)
    xs = np.fromiter(xs, dtype=np.int64)
    n_blocks = len(ys) * len(xs)

    codes = lbp_code_image(img, DESCRIPTOR_CONFIG)
    bins_img = map_to_uniform_bins(codes, DESCRIPTOR_CONFIG.n_points)
    # Valid centers of the block at (x, y) occupy the (b-2)x(b-2) window of
    # the global code plane starting at that same (x, y) offset.
    inner = b - 2
    windows = sliding_window_view(bins_img, (inner, inner))
    windows = windows[np.ix_(ys, xs)].reshape(n_blocks, inner * inner)
    offsets = np.arange(n_blocks, dtype=np.int64)[:, None] * DESCRIPTOR_DIM
    flat = (windows + offsets).ravel()
    counts = np.bincount(flat, minlength=n_blocks * DESCRIPTOR_DIM)
    descriptors = counts.reshape(n_blocks, DESCRIPTOR_DIM).astype(np.float64)
    descriptors /= float(inner * inner)

    block_stack = sliding_window_view(img, (b, b))[np.ix_(ys, xs)]
    block_stack = block_stack.reshape(n_blocks, b, b)
    gy, gx = np.gradient(block_stack, axis=(1, 2))
    gradients = np.mean(np.sqrt(gx * gx + gy * gy), axis=(1, 2))
    return descriptors, gradients


def squared_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Pairwise squared L2 via einsum (no BLAS, reproducible)."""
    x_sq = np.einsum("nd,nd->n", X, X)
    c_sq = np.einsum("kd,kd->k", C, C)
    cross = np.einsum("nd,kd->nk", X, C)
    d2 = x_sq[:, None] - 2.0 * cross + c_sq[None, :]
    return np.maximum(d2, 0.0)


def _cluster_means(points: np.ndarray, assign: np.ndarray, k: int) -> np.ndarray:
    order = np.argsort(assign, kind="stable")
    sorted_pts = points[order]
    boundaries = np.searchsorted(assign[order], np.arange(k))
    sums = np.add.reduceat(sorted_pts, boundaries, axis=0)
    counts = np.bincount(assign, minlength=k).astype(np.float64)
    return sums / counts[:, None]


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    objective: float
    objective_history: list
    n_iter: int


def kmeans(points, k: int, init_indices, tol: float = KMEANS_TOL,
           max_iter: int = KMEANS_MAX_ITER) -> KMeansResult:
    """Lloyd iterations with squared-L2 assignment (ties to the lowest
    centroid index) from the given initial points.

    Stops when the largest absolute centroid movement drops below ``tol``
    or after ``max_iter`` iterations. Empty clusters are re-seeded to the
    point currently farthest from its assigned centroid. The within-cluster
    sum of squares is checked to be non-increasing every iteration.
    """
    points = check_matrix(points, "points")
    n = points.shape[0]
    init_indices = np.asarray(init_indices, dtype=np.int64)
    if init_indices.ndim != 1 or init_indices.shape[0] != k:
        raise ValueError(f"need exactly {k} initial indices")
    if n < k:
        raise ValueError(f"cannot fit {k} clusters to {n} points")

    centroids = points[init_indices].copy()
    history = []
    previous = np.inf
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        assign = np.argmin(squared_distances(points, centroids), axis=1)
        assign, centroids = _fix_empty_clusters(points, assign, centroids, k)
        diffs = points - centroids[assign]
        objective = float(np.sum(diffs * diffs))
        if not objective <= previous * (1.0 + 1e-12) + 1e-12:
            raise AssertionError(
                f"k-means objective increased: {previous} -> {objective}"
            )
        previous = objective
        history.append(objective)
        new_centroids = _cluster_means(points, assign, k)
        movement = float(np.max(np.abs(new_centroids - centroids)))
        centroids = new_centroids
        if movement < tol:
            break
    assign = np.argmin(squared_distances(points, centroids), axis=1)
    diffs = points - centroids[assign]
    objective = float(np.sum(diffs * diffs))
    history.append(objective)
    return KMeansResult(
        centroids=centroids,
        assignments=assign,
        objective=objective,
        objective_history=history,
        n_iter=n_iter,
    )


def _fix_empty_clusters(points, assign, centroids, k):
    counts = np.bincount(assign, minlength=k)
    empties = np.flatnonzero(counts == 0)
    if empties.size == 0:
        return assign, centroids
    assign = assign.copy()
    centroids = centroids.copy()
    diffs = points - centroids[assign]
    dist_to_own = np.sum(diffs * diffs, axis=1)
    for cluster in empties:
        while True:
            farthest = int(np.argmax(dist_to_own))
            source = assign[farthest]
            if counts[source] > 1:
                break
            # taking the last member would just move the hole around
            dist_to_own[farthest] = -1.0
        centroids[cluster] = points[farthest]
        assign[farthest] = cluster
        counts[source] -= 1
        counts[cluster] += 1
        dist_to_own[farthest] = -1.0  # cannot be chosen again
    return assign, centroids


@dataclass(frozen=True)
class Codebook:
    """k-means centroids over block descriptors, plus the seed that built them."""

    centroids: np.ndarray = field(repr=False)
    seed: int = 0
    descriptor_config: LbpConfig = DESCRIPTOR_CONFIG

    def __post_init__(self):
        c = check_matrix(self.centroids, "centroids")
        if c.shape[0] < 1:
            raise ValueError("codebook needs at least one centroid")
        if float(c.min()) < 0.0:
            raise ValueError("centroids must be non-negative")
        if c.shape[1] != self.descriptor_config.n_bins:
            raise ValueError(
                f"centroid dimension {c.shape[1]} does not match descriptor "
                f"length {self.descriptor_config.n_bins}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def codebook_init_indices(gradients, k: int, rng) -> np.ndarray:
    """k distinct indices drawn uniformly from the blocks whose gradient
    exceeds the mean gradient; falls back to all blocks when that pool is
    smaller than k."""
    gradients = np.asarray(gradients, dtype=np.float64)
    if gradients.shape[0] < k:
        raise ValueError(
            f"need at least k={k} blocks, got {gradients.shape[0]}"
        )
    pool = np.flatnonzero(gradients > gradients.mean())
    if pool.size < k:
        pool = np.arange(gradients.shape[0])
    return pool[rng.choice(pool.size, size=k, replace=False)]


def build_codebook(descriptors, gradients, k: int, seed: int = 0) -> Codebook:
    """Learn a k-word codebook from block descriptors with gradient-filtered
    seeded initialization (see codebook_init_indices)."""
    descriptors = check_matrix(descriptors, "descriptors")
    gradients = np.asarray(gradients, dtype=np.float64)
    if gradients.shape != (descriptors.shape[0],):
        raise ValueError("gradients must parallel descriptors")
    rng = np.random.default_rng(int(seed))
    init = codebook_init_indices(gradients, k, rng)
    result = kmeans(descriptors, k, init)
    return Codebook(centroids=result.centroids, seed=int(seed))


def encode_image(img, codebook: Codebook, grid: GridStrategy, dim: int,
                 normalize: bool = True) -> np.ndarray:
    """Histogram of nearest-codeword assignments for one image.

    Pipeline: resize to dim x dim, grid blocks, block descriptors, hard
    assignment by squared L2 (ties to the lowest centroid index).
    """
    resized = resize_image(img, dim)
    descriptors, _ = image_descriptors(resized, grid)
    assign = np.argmin(
        squared_distances(descriptors, codebook.centroids), axis=1
    )
    hist = np.bincount(assign, minlength=codebook.k).astype(np.float64)
    if normalize:
        hist /= hist.sum()
    return hist


def save_codebook(codebook: Codebook, path) -> None:
    """Versioned binary: KPCB, version u16, k u32, dim u32, seed u64,
    then k*dim little-endian float64 centroids."""
    header = _CODEBOOK_MAGIC + struct.pack(
        "<HIIQ", _CODEBOOK_VERSION, codebook.k, codebook.dim,
        codebook.seed & 0xFFFFFFFFFFFFFFFF,
    )
    body = np.ascontiguousarray(
        codebook.centroids, dtype="<f8"
    ).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def load_codebook(path) -> Codebook:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _CODEBOOK_MAGIC:
        raise ValueError(f"{path}: bad codebook magic {blob[:4]!r} at offset 0")
    version, k, dim, seed = struct.unpack_from("<HIIQ", blob, 4)
    if version != _CODEBOOK_VERSION:
        raise ValueError(f"{path}: unsupported codebook version {version}")
    expected = 4 + struct.calcsize("<HIIQ") + k * dim * 8
    if len(blob) != expected:
        raise ValueError(
            f"{path}: expected {expected} bytes, got {len(blob)}"
        )
    offset = 4 + struct.calcsize("<HIIQ")
    centroids = np.frombuffer(
        blob, dtype="<f8", count=k * dim, offset=offset
    ).reshape(k, dim).astype(np.float64)
    return Codebook(centroids=centroids, seed=int(seed))


class BovwEncoder(TransformerMixin, BaseEstimator):
    """fit() learns the codebook from training images; transform() encodes
    images as normalized codeword histograms.

    Keeping codebook construction inside fit() is what guarantees held-out
    images never influence the vocabulary.
    """

    def __init__(self, resize_dim=256, block=16, stride=16,
                 codebook_size=800, random_state=0, threads=1):
        self.resize_dim = resize_dim
        self.block = block
        self.stride = stride
        self.codebook_size = codebook_size
        self.random_state = random_state
        self.threads = threads

    def _grid(self) -> GridStrategy:
        return GridStrategy(block=self.block, stride=self.stride)

    def fit(self, X, y=None):
        grid = self._grid()
        arrays = [getattr(im, "pixels", im) for im in X]

        def descriptors_of(arr):
            return image_descriptors(resize_image(arr, self.resize_dim), grid)

        pairs = parallel_map(descriptors_of, arrays, self.threads)
        descriptors = np.concatenate([d for d, _ in pairs], axis=0)
        gradients = np.concatenate([g for _, g in pairs], axis=0)
        self.codebook_ = build_codebook(
            descriptors, gradients, self.codebook_size,
            seed=int(self.random_state),
        )
        return self

    def transform(self, X):
        if not hasattr(self, "codebook_"):
            raise RuntimeError("BovwEncoder must be fitted before transform")
        grid = self._grid()
        arrays = [getattr(im, "pixels", im) for im in X]
        rows = parallel_map(
            lambda a: encode_image(a, self.codebook_, grid, self.resize_dim),
            arrays,
            self.threads,
        )
        if not rows:
            return np.empty((0, self.codebook_.k), dtype=np.float64)
        return np.stack(rows)
