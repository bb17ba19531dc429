"""Input validation helpers shared by the estimators and metric functions."""

import numpy as np


def check_gray_image(img, name="image") -> np.ndarray:
    """Coerce ``img`` to a 2-D float64 array and validate it.

    Grayscale images are plain 2-D arrays indexed [row, column]; integer
    inputs are upcast so downstream arithmetic stays in double precision.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} is empty: shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_matrix(X, name="X") -> np.ndarray:
    """Coerce to a 2-D float64 feature matrix (rows are vectors)."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_vector(v, name="vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def check_same_length(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape[-1] != q.shape[-1]:
        raise ValueError(
            f"length mismatch: {p.shape[-1]} vs {q.shape[-1]}"
        )


def check_nonnegative(X: np.ndarray, name="X") -> None:
    if X.size and float(X.min()) < 0.0:
        raise ValueError(f"{name} must be non-negative")


def check_labels(y, n_rows: int) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {arr.shape}")
    if arr.shape[0] != n_rows:
        raise ValueError(f"got {arr.shape[0]} labels for {n_rows} rows")
    return arr
