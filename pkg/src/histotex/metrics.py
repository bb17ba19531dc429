"""Distances between feature vectors and batched distance matrices.

All accumulation is float64 through numpy reductions along the feature
axis, which keeps results bitwise reproducible across runs and thread
counts (no BLAS involvement). The chi-squared distance deliberately
computes on signed inputs without erroring: running it on signed deep
features and watching the accuracy collapse is part of the evaluation
harness, so we reproduce the failure instead of guarding against it.
"""

import enum

import numpy as np

from .validation import check_matrix, check_same_length, check_vector

# Bound on elements of one broadcasted (chunk, n_refs, dim) intermediate.
_CHUNK_ELEMENTS = 1 << 23


class MetricKind(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    CHI2 = "chi2"
    CHI2_ABS = "chi2abs"
    COSINE = "cosine"

    @classmethod
    def from_string(cls, name: str) -> "MetricKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = "|".join(m.value for m in cls)
            raise ValueError(f"unknown metric {name!r}; expected {valid}") from None


def l1(p, q) -> float:
    """City-block distance sum |p_i - q_i|."""
    p, q = check_vector(p), check_vector(q)
    check_same_length(p, q)
    return float(np.sum(np.abs(p - q)))


def l2(p, q) -> float:
    """Euclidean distance."""
    p, q = check_vector(p), check_vector(q)
    check_same_length(p, q)
    d = p - q
    return float(np.sqrt(np.sum(d * d)))


def chi2(p, q) -> float:
    """0.5 * sum (p_i - q_i)^2 / (p_i + q_i), zero-denominator terms
    contributing 0. Signed inputs are computed as-is (see module note)."""
    p, q = check_vector(p), check_vector(q)
    check_same_length(p, q)
    num = (p - q) ** 2
    den = p + q
    safe = np.where(den == 0.0, 1.0, den)
    terms = np.where(den == 0.0, 0.0, num / safe)
    return float(0.5 * np.sum(terms))


def chi2_abs(p, q) -> float:
    """chi2 on element-wise absolute values."""
    p, q = check_vector(p), check_vector(q)
    check_same_length(p, q)
    return chi2(np.abs(p), np.abs(q))


def cosine_dist(p, q) -> float:
    """1 - cosine similarity; any zero vector gives distance 1 by convention."""
    p, q = check_vector(p), check_vector(q)
    check_same_length(p, q)
    np_, nq = np.sqrt(np.sum(p * p)), np.sqrt(np.sum(q * q))
    if np_ == 0.0 or nq == 0.0:
        return 1.0
    return float(1.0 - np.sum(p * q) / (np_ * nq))


_SCALAR_FN = {
    MetricKind.L1: l1,
    MetricKind.L2: l2,
    MetricKind.CHI2: chi2,
    MetricKind.CHI2_ABS: chi2_abs,
    MetricKind.COSINE: cosine_dist,
}


def metric_fn(kind: MetricKind):
    """Scalar distance function for ``kind``."""
    return _SCALAR_FN[MetricKind(kind)]


def _pairwise_block(Q: np.ndarray, R: np.ndarray, kind: MetricKind) -> np.ndarray:
    """Distances between all rows of Q and R via broadcasting; Q is a chunk."""
    if kind in (MetricKind.CHI2, MetricKind.CHI2_ABS):
        if kind is MetricKind.CHI2_ABS:
            Q, R = np.abs(Q), np.abs(R)
        diff = Q[:, None, :] - R[None, :, :]
        den = Q[:, None, :] + R[None, :, :]
        safe = np.where(den == 0.0, 1.0, den)
        terms = np.where(den == 0.0, 0.0, diff * diff / safe)
        return 0.5 * np.sum(terms, axis=-1)
    if kind is MetricKind.L1:
        return np.sum(np.abs(Q[:, None, :] - R[None, :, :]), axis=-1)
    if kind is MetricKind.L2:
        diff = Q[:, None, :] - R[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))
    if kind is MetricKind.COSINE:
        dots = np.sum(Q[:, None, :] * R[None, :, :], axis=-1)
        qn = np.sqrt(np.sum(Q * Q, axis=-1))
        rn = np.sqrt(np.sum(R * R, axis=-1))
        norms = qn[:, None] * rn[None, :]
        zero = (qn[:, None] == 0.0) | (rn[None, :] == 0.0)
        safe = np.where(zero, 1.0, norms)
        return np.where(zero, 1.0, 1.0 - dots / safe)
    raise ValueError(f"unhandled metric {kind}")


def distance_matrix(queries, refs, kind: MetricKind) -> np.ndarray:
    """(n_queries, n_refs) matrix of kind-distances, row i vs column j.

    Entries are computed independently; chunking is a fixed memory bound
    and does not affect any value.
    """
    kind = MetricKind(kind)
    nq, nr = len(queries), len(refs)
    if nq == 0 or nr == 0:
        return np.zeros((nq, nr), dtype=np.float64)
    Q = check_matrix(queries, "queries")
    R = check_matrix(refs, "refs")
    check_same_length(Q, R)
    dim = Q.shape[1]
    chunk = max(1, _CHUNK_ELEMENTS // max(1, nr * dim))
    out = np.empty((nq, nr), dtype=np.float64)
    for start in range(0, nq, chunk):
        stop = min(start + chunk, nq)
        out[start:stop] = _pairwise_block(Q[start:stop], R, kind)
    return out
