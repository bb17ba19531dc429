"""Histogram-intersection-kernel SVM.

The binary solver is SMO on the soft-margin dual with the maximal-violating
pair working set: with u_t the margin term sum_j alpha_j y_j K(x_j, x_t),
the quantity y_t - u_t bounds the bias from below over I_up (points whose
alpha can grow along +y) and from above over I_low, so training stops once
max_{I_up}(y - u) - min_{I_low}(y - u) < tol, at which point every KKT
violation is below tol. Kernel values are cached as a full Gram matrix;
training sets here stay small enough (<= 960 points) for that to be cheap.

Multiclass is one-vs-one with majority vote; ties go to the class with the
largest summed |decision value| over the pairwise models it won, then to
the lowest class index.
"""

import struct
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .validation import (
    check_labels,
    check_matrix,
    check_nonnegative,
    check_same_length,
    check_vector,
)

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 100_000
SUPPORT_EPS = 1e-12
_TAU = 1e-12

# C values tried by cross-validation when the caller gives no grid.
DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)

_MODEL_MAGIC = b"KPSV"
_MODEL_VERSION = 1

_CHUNK_ELEMENTS = 1 << 23


class ConvergenceError(RuntimeError):
    """SMO hit its iteration cap; carries the residual KKT violation."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def hik(u, v) -> float:
    """Histogram intersection sum_i min(u_i, v_i); inputs must be >= 0."""
    u, v = check_vector(u), check_vector(v)
    check_same_length(u, v)
    check_nonnegative(u, "u")
    check_nonnegative(v, "v")
    return float(np.sum(np.minimum(u, v)))


def hik_gram(X, Y=None) -> np.ndarray:
    """(n, m) matrix of histogram intersections between rows of X and Y."""
    X = check_matrix(X, "X")
    check_nonnegative(X, "X")
    if Y is None:
        Y = X
    else:
        Y = check_matrix(Y, "Y")
        check_nonnegative(Y, "Y")
        check_same_length(X, Y)
    n, dim = X.shape
    m = Y.shape[0]
    chunk = max(1, _CHUNK_ELEMENTS // max(1, m * dim))
    out = np.empty((n, m), dtype=np.float64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        out[start:stop] = np.sum(
            np.minimum(X[start:stop, None, :], Y[None, :, :]), axis=-1
        )
    return out


def _smo_solve(K, y, C, tol, max_iter):
    """Dual solution (alpha, bias, residual) for a precomputed Gram K."""
    n = y.shape[0]
    alpha = np.zeros(n, dtype=np.float64)
    u = np.zeros(n, dtype=np.float64)  # sum_j alpha_j y_j K_tj
    pos = y > 0

    for _ in range(max_iter):
        crit = y - u
        up = (pos & (alpha < C)) | (~pos & (alpha > 0.0))
        low = (pos & (alpha > 0.0)) | (~pos & (alpha < C))
        up_vals = np.where(up, crit, -np.inf)
        low_vals = np.where(low, crit, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        violation = up_vals[i] - low_vals[j]
        if violation < tol:
            free = (alpha > 0.0) & (alpha < C)
            if np.any(free):
                bias = float(np.mean(crit[free]))
            else:
                lo = up_vals[i] if np.isfinite(up_vals[i]) else low_vals[j]
                hi = low_vals[j] if np.isfinite(low_vals[j]) else up_vals[i]
                bias = float(0.5 * (lo + hi))
            return alpha, bias, float(max(violation, 0.0))

        old_i, old_j = alpha[i], alpha[j]
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = _TAU
        if y[i] != y[j]:
            delta = y[i] * (crit[i] - crit[j]) / quad
            diff = old_i - old_j
            alpha[i] = old_i + delta
            alpha[j] = old_j + delta
            if diff > 0.0:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = diff
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            # same label: mass moves between the pair, total preserved
            delta = y[i] * (crit[i] - crit[j]) / quad
            total = old_i + old_j
            alpha[i] = old_i + delta
            alpha[j] = old_j - delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = total
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = total
        u += (alpha[i] - old_i) * y[i] * K[i] + (alpha[j] - old_j) * y[j] * K[j]

    crit = y - u
    up = (pos & (alpha < C)) | (~pos & (alpha > 0.0))
    low = (pos & (alpha > 0.0)) | (~pos & (alpha < C))
    residual = float(
        np.max(np.where(up, crit, -np.inf))
        - np.min(np.where(low, crit, np.inf))
    )
    raise ConvergenceError(
        f"SMO did not converge within {max_iter} iterations; "
        f"residual KKT violation {residual:.3e} (tol {tol})",
        residual=residual,
    )


@dataclass(frozen=True)
class BinarySvmModel:
    """Trained soft-margin binary IKSVM.

    dual_coefs holds alpha_i * y_i for each stored support vector (all with
    alpha_i > 1e-12); decision value is sum_i dual_coefs_i * k(sv_i, x) + bias.
    """

    support_vectors: np.ndarray = field(repr=False)
    dual_coefs: np.ndarray = field(repr=False)
    bias: float
    C: float
    support_indices: np.ndarray = field(repr=False, default=None)

    def decision_values(self, X) -> np.ndarray:
        X = check_matrix(X, "X")
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias, dtype=np.float64)
        K = hik_gram(X, self.support_vectors)
        return np.einsum("nm,m->n", K, self.dual_coefs) + self.bias

    def decision_value(self, x) -> float:
        return float(self.decision_values(np.asarray(x)[None, :])[0])


def train_binary(X, y, C: float, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> BinarySvmModel:
    """Solve the binary soft-margin dual with the intersection kernel."""
    X = check_matrix(X, "X")
    check_nonnegative(X, "X")
    y = np.asarray(y, dtype=np.float64)
    check_labels(y, X.shape[0])
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if np.all(y > 0) or np.all(y < 0):
        raise ValueError("training data contains a single class")
    if C <= 0:
        raise ValueError("C must be positive")
    K = hik_gram(X)
    return _model_from_gram(K, X, y, C, tol, max_iter)


def _model_from_gram(K, X, y, C, tol, max_iter) -> BinarySvmModel:
    alpha, bias, _ = _smo_solve(K, y, float(C), tol, max_iter)
    keep = np.flatnonzero(alpha > SUPPORT_EPS)
    return BinarySvmModel(
        support_vectors=X[keep].copy(),
        dual_coefs=(alpha[keep] * y[keep]),
        bias=bias,
        C=float(C),
        support_indices=keep,
    )


class IntersectionKernelSVC(ClassifierMixin, BaseEstimator):
    """One-vs-one multiclass SVM with the histogram intersection kernel."""

    def __init__(self, C=1.0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y, gram=None):
        """Train all pairwise models.

        ``gram`` optionally passes a precomputed intersection Gram matrix of
        X against itself, which cross-validation uses to avoid recomputing
        kernels for every candidate C.
        """
        X = check_matrix(X, "X")
        check_nonnegative(X, "X")
        y = np.asarray(check_labels(y, X.shape[0]))
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] < 2:
            raise ValueError("need at least two classes")
        if gram is None:
            gram = hik_gram(X)
        self._dim = X.shape[1]
        self.pair_models_ = []
        n_classes = self.classes_.shape[0]
        for a in range(n_classes):
            for b in range(a + 1, n_classes):
                idx = np.flatnonzero((y == self.classes_[a]) | (y == self.classes_[b]))
                y_bin = np.where(y[idx] == self.classes_[a], 1.0, -1.0)
                sub = gram[np.ix_(idx, idx)]
                model = _model_from_gram(
                    sub, X[idx], y_bin, self.C, self.tol, self.max_iter
                )
                self.pair_models_.append((a, b, model))
        return self

    def _check_fitted(self):
        if not hasattr(self, "pair_models_"):
            raise RuntimeError("classifier is not fitted")

    def decision_table(self, X) -> np.ndarray:
        """(n_samples, n_pairs) raw pairwise decision values."""
        self._check_fitted()
        X = check_matrix(X, "X")
        if X.shape[1] != self._dim:
            raise ValueError(
                f"expected {self._dim}-dimensional inputs, got {X.shape[1]}"
            )
        cols = [m.decision_values(X) for _, _, m in self.pair_models_]
        return np.stack(cols, axis=1)

    def predict(self, X) -> np.ndarray:
        """Majority vote over pairwise decisions (ties per module docstring)."""
        self._check_fitted()
        X = check_matrix(X, "X")
        table = self.decision_table(X)
        n = X.shape[0]
        n_classes = self.classes_.shape[0]
        votes = np.zeros((n, n_classes), dtype=np.int64)
        strength = np.zeros((n, n_classes), dtype=np.float64)
        for col, (a, b, _) in enumerate(self.pair_models_):
            d = table[:, col]
            wins_a = d >= 0.0
            votes[:, a] += wins_a
            votes[:, b] += ~wins_a
            mag = np.abs(d)
            strength[:, a] += np.where(wins_a, mag, 0.0)
            strength[:, b] += np.where(wins_a, 0.0, mag)
        out = np.empty(n, dtype=self.classes_.dtype)
        for row in range(n):
            best_votes = votes[row].max()
            tied = np.flatnonzero(votes[row] == best_votes)
            if tied.shape[0] > 1:
                best_strength = strength[row, tied].max()
                tied = tied[strength[row, tied] == best_strength]
            out[row] = self.classes_[tied[0]]
        return out


def _stratified_folds(y, n_folds, rng):
    """Fold index per sample; each class spread as evenly as possible."""
    y = np.asarray(y)
    fold_of = np.empty(y.shape[0], dtype=np.int64)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.shape[0] < n_folds:
            raise ValueError(
                f"class {cls!r} has {idx.shape[0]} members, "
                f"cannot stratify into {n_folds} folds"
            )
        idx = idx[rng.permutation(idx.shape[0])]
        for f in range(n_folds):
            fold_of[idx[f::n_folds]] = f
    return fold_of


def select_c(X, y, grid=DEFAULT_C_GRID, folds: int = 3, seed: int = 0,
             tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Penalty parameter with the best stratified CV accuracy.

    Mean fold accuracy decides; ties go to the smallest C. Deterministic
    for a fixed seed.
    """
    grid = [float(c) for c in grid]
    if not grid:
        raise ValueError("C grid must not be empty")
    X = check_matrix(X, "X")
    y = np.asarray(check_labels(y, X.shape[0]))
    rng = np.random.default_rng(int(seed))
    fold_of = _stratified_folds(y, folds, rng)
    gram = hik_gram(X)
    accuracy = np.zeros((len(grid), folds), dtype=np.float64)
    for f in range(folds):
        test = fold_of == f
        train = ~test
        tr_idx = np.flatnonzero(train)
        sub_gram = gram[np.ix_(tr_idx, tr_idx)]
        for ci, c_value in enumerate(grid):
            clf = IntersectionKernelSVC(C=c_value, tol=tol, max_iter=max_iter)
            clf.fit(X[tr_idx], y[tr_idx], gram=sub_gram)
            pred = clf.predict(X[test])
            accuracy[ci, f] = float(np.mean(pred == y[test]))
    mean_acc = accuracy.mean(axis=1)
    order = sorted(range(len(grid)), key=lambda ci: (-mean_acc[ci], grid[ci]))
    return grid[order[0]]


def save_iksvm(clf: IntersectionKernelSVC, path) -> None:
    """Versioned binary model file (magic KPSV, little-endian throughout)."""
    clf._check_fitted()
    classes = np.asarray(clf.classes_, dtype=np.int64)
    parts = [
        _MODEL_MAGIC,
        struct.pack("<HII", _MODEL_VERSION, classes.shape[0], clf._dim),
        classes.astype("<i8").tobytes(),
        struct.pack("<I", len(clf.pair_models_)),
    ]
    for a, b, model in clf.pair_models_:
        n_sv = model.support_vectors.shape[0]
        parts.append(struct.pack("<IIddI", a, b, model.bias, model.C, n_sv))
        parts.append(np.ascontiguousarray(model.dual_coefs, dtype="<f8").tobytes())
        parts.append(
            np.ascontiguousarray(model.support_vectors, dtype="<f8").tobytes()
        )
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_iksvm(path) -> IntersectionKernelSVC:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MODEL_MAGIC:
        raise ValueError(f"{path}: bad model magic {blob[:4]!r} at offset 0")
    version, n_classes, dim = struct.unpack_from("<HII", blob, 4)
    if version != _MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {version}")
    offset = 4 + struct.calcsize("<HII")
    classes = np.frombuffer(blob, dtype="<i8", count=n_classes, offset=offset)
    offset += n_classes * 8
    (n_pairs,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    clf = IntersectionKernelSVC()
    clf.classes_ = classes.astype(np.int64)
    clf._dim = int(dim)
    clf.pair_models_ = []
    for _ in range(n_pairs):
        a, b, bias, c_value, n_sv = struct.unpack_from("<IIddI", blob, offset)
        offset += struct.calcsize("<IIddI")
        dual = np.frombuffer(blob, dtype="<f8", count=n_sv, offset=offset)
        offset += n_sv * 8
        svs = np.frombuffer(
            blob, dtype="<f8", count=n_sv * dim, offset=offset
        ).reshape(n_sv, dim)
        offset += n_sv * dim * 8
        model = BinarySvmModel(
            support_vectors=svs.astype(np.float64),
            dual_coefs=dual.astype(np.float64),
            bias=float(bias),
            C=float(c_value),
            support_indices=None,
        )
        clf.pair_models_.append((int(a), int(b), model))
    if offset != len(blob):
        raise ValueError(
            f"{path}: {len(blob) - offset} trailing bytes at offset {offset}"
        )
    return clf
