"""Loading of the KIMIA Path960 image directory and synthetic test corpora.

The canonical directory layout is flat files named ``<class>_<index>.tif``;
one-subdirectory-per-class is accepted as a fallback. Path960 itself holds
960 color TIF patches of size 308x168, 48 per tissue class, 20 classes.
Images are decoded to grayscale on load; color is never used downstream.
"""

import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .utils import parallel_map
from .validation import check_gray_image

PATH960_CLASSES = 20
PATH960_PER_CLASS = 48
PATH960_TOTAL = PATH960_CLASSES * PATH960_PER_CLASS

_STRICT_EXTENSIONS = (".tif", ".tiff")
_EXTENSIONS = _STRICT_EXTENSIONS + (".png", ".jpg", ".jpeg", ".bmp")

# ITU-R BT.601 luma weights; rounding is half-up so the mapping is exact and
# platform independent.
_LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class LabeledImage:
    """One grayscale image with its class assignment.

    id: source filename (or generated id for synthetic images)
    class_label: integer index into Dataset.class_names
    pixels: 2-D float64 array, values in [0, 255], at least 3x3
    """

    id: str
    class_label: int
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        px = check_gray_image(self.pixels, name=f"image {self.id}")
        if px.shape[0] < 3 or px.shape[1] < 3:
            raise ValueError(
                f"image {self.id} is {px.shape[1]}x{px.shape[0]}; "
                "at least 3x3 is required"
            )
        if float(px.min()) < 0.0 or float(px.max()) > 255.0:
            raise ValueError(f"image {self.id} has values outside [0, 255]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class Dataset:
    """An ordered image collection plus the class-name table."""

    images: tuple
    class_names: tuple

    def __len__(self):
        return len(self.images)

    @property
    def labels(self) -> np.ndarray:
        return np.array([im.class_label for im in self.images], dtype=np.int64)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=len(self.class_names))


def to_grayscale(r, g, b) -> np.ndarray:
    """Convert RGB channels to luminance, rounded half-up and clamped.

    Output = 0.299 R + 0.587 G + 0.114 B per pixel.
    """
    r = np.asarray(r, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (r.shape == g.shape == b.shape):
        raise ValueError(
            f"channel shapes differ: {r.shape}, {g.shape}, {b.shape}"
        )
    wr, wg, wb = _LUMA_WEIGHTS
    y = wr * r + wg * g + wb * b
    return np.clip(np.floor(y + 0.5), 0.0, 255.0)


def _decode_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.mode in ("L", "I;16", "I", "F"):
                arr = np.asarray(im.convert("F"), dtype=np.float64)
                return np.clip(np.floor(arr + 0.5), 0.0, 255.0)
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    except Exception as exc:
        raise ValueError(f"unreadable image file {path}: {exc}") from exc
    return to_grayscale(rgb[..., 0], rgb[..., 1], rgb[..., 2])


def _collect_files(root: Path, strict: bool):
    """Returns (relative-path, class-name) pairs sorted by relative path."""
    exts = _STRICT_EXTENSIONS if strict else _EXTENSIONS
    flat = [
        p for p in root.iterdir()
        if p.is_file() and p.suffix.lower() in exts
    ]
    if flat:
        out = [(p, p.stem.split("_")[0]) for p in flat]
    else:
        # fallback layout: one subdirectory per class
        out = []
        for sub in root.iterdir():
            if not sub.is_dir():
                continue
            for p in sub.iterdir():
                if p.is_file() and p.suffix.lower() in exts:
                    out.append((p, sub.name))
    out.sort(key=lambda pair: str(pair[0].relative_to(root)))
    return out


def load_dataset(root, strict_path960: bool = False, threads: int = 1) -> Dataset:
    """Load every decodable image under ``root``, grouped into classes.

    Ordering is fixed by sorted filenames, so repeated loads produce
    identical datasets regardless of ``threads``. With ``strict_path960``
    the collection must be exactly 20 classes x 48 TIF images.
    """
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"dataset root {root} is not a directory")
    entries = _collect_files(root, strict_path960)
    if not entries:
        raise ValueError(f"no images found under {root}")

    class_names = tuple(sorted({name for _, name in entries}))
    label_of = {name: i for i, name in enumerate(class_names)}

    pixel_arrays = parallel_map(lambda e: _decode_image(e[0]), entries, threads)
    images = tuple(
        LabeledImage(id=path.name, class_label=label_of[name], pixels=px)
        for (path, name), px in zip(entries, pixel_arrays)
    )
    ds = Dataset(images=images, class_names=class_names)

    if strict_path960:
        counts = ds.class_counts()
        if len(class_names) != PATH960_CLASSES:
            raise ValueError(
                f"strict load expected {PATH960_CLASSES} classes, "
                f"found {len(class_names)}"
            )
        if len(images) != PATH960_TOTAL or not np.all(counts == PATH960_PER_CLASS):
            raise ValueError(
                f"strict load expected {PATH960_PER_CLASS} images per class "
                f"({PATH960_TOTAL} total), found counts {counts.tolist()}"
            )
    return ds


def class_name_for(index: int) -> str:
    """Spreadsheet-style class names: A..Z, then AA, AB, ..."""
    letters = string.ascii_uppercase
    name = ""
    index = int(index)
    while True:
        name = letters[index % 26] + name
        index = index // 26 - 1
        if index < 0:
            return name


def generate_synthetic(
    n_classes: int,
    per_class: int,
    size=(64, 64),
    seed: int = 0,
    noise: float = 42.0,
    orientation_jitter_deg: float = 7.0,
) -> Dataset:
    """Procedural labeled corpus: one oriented texture family per class.

    Each class is a two-scale grating (edge-sharpened sinusoids at
    wavelengths 4.5 and 9 px) whose component orientations advance with the
    class index; images within a class vary by seeded phase, small
    orientation jitter, and pixel noise. The families are learnable but not
    trivially separable, which protocol tests rely on. Deterministic for a
    fixed seed.
    """
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    if per_class < 2:
        raise ValueError("per_class must be >= 2")
    if isinstance(size, (int, np.integer)):
        width = height = int(size)
    else:
        width, height = (int(size[0]), int(size[1]))
    if width < 3 or height < 3:
        raise ValueError("size must be at least 3x3")

    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    images = []
    class_names = tuple(class_name_for(c) for c in range(n_classes))
    # orientations advance 14 degrees per class, shrinking for many classes
    # so families never wrap onto each other (orientation is modulo 180)
    step = np.deg2rad(min(14.0, 160.0 / n_classes))
    jitter = np.deg2rad(orientation_jitter_deg)
    for c in range(n_classes):
        theta_fine = np.deg2rad(10.0) + step * c
        theta_coarse = np.deg2rad(55.0) + step * c
        for j in range(per_class):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=int(seed), spawn_key=(c, j))
            )
            t1 = theta_fine + rng.uniform(-jitter, jitter)
            t2 = theta_coarse + rng.uniform(-jitter, jitter)
            axis1 = xx * np.cos(t1) + yy * np.sin(t1)
            axis2 = xx * np.cos(t2) + yy * np.sin(t2)
            tex = np.tanh(
                2.5 * np.sin(2.0 * np.pi * axis1 / 4.5 + rng.uniform(0, 2 * np.pi))
            ) + np.tanh(
                2.5 * np.sin(2.0 * np.pi * axis2 / 9.0 + rng.uniform(0, 2 * np.pi))
            )
            amplitude = 55.0 + rng.uniform(-8.0, 8.0)
            wave = 127.5 + amplitude * tex / 1.6 \
                + rng.normal(0.0, noise, size=(height, width))
            pixels = np.clip(np.floor(wave + 0.5), 0.0, 255.0)
            images.append(
                LabeledImage(
                    id=f"{class_names[c]}_{j:03d}",
                    class_label=c,
                    pixels=pixels,
                )
            )
    return Dataset(images=tuple(images), class_names=class_names)
