"""Dataset generators, CSV ingestion and CSV round-trip helpers."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError, InvalidArgument
from .training import Dataset, one_hot_pm

MINMAX = "minmax_to_[0,pi]"
NO_SCALING = "none"
NORMALIZATIONS = (MINMAX, NO_SCALING)

BIVARIATE_GRID = 512
# raw bivariate values can overshoot the grid maximum by a hair at random samples
BIVARIATE_CLIP_TOL = 1e-9


def sinc5(x):
    """sin(5x)/(5x) with the removable singularity filled in."""
    return np.sinc(5 * np.asarray(x, dtype=float) / np.pi)


def _split_tags(n, n_train, rng):
    tags = np.full(n, "test", dtype=object)
    tags[rng.permutation(n)[:n_train]] = "train"
    return tags.astype(str)


def gen_sinc(n_points: int = 300, interval=(0.0, np.pi), seed: int = 0) -> Dataset:
    """Uniform grid samples of sinc5; two thirds train, one third test (200/100 at 300 points)."""
    if n_points < 2:
        raise InvalidArgument("n_points must be at least 2")
    x = np.linspace(interval[0], interval[1], n_points)
    n_train = int(round(2 * n_points / 3))
    return Dataset(x, sinc5(x), _split_tags(n_points, n_train, np.random.default_rng(seed)))


def square_wave(x, period: float = 4.0, amplitude: float = 1.0):
    s = np.sin(2 * np.pi * np.asarray(x, dtype=float) / period)
    # exact zeros of sin and the float noise around them
    s[np.abs(s) < 1e-12] = 0.0
    return np.where(s >= 0, amplitude, -amplitude)


def gen_square_wave(n_points: int = 400, interval=(0.0, 20.0), period: float = 4.0,
                    amplitude: float = 1.0) -> Dataset:
    """Uniform grid samples of sign(sin(2 pi x / period)) * amplitude, all tagged train.

    A zero of the sine (x = 0 in particular) maps to +amplitude.
    """
    if not period > 0:
        raise InvalidArgument("period must be positive")
    if not 0 < amplitude <= 1:
        raise InvalidArgument("amplitude must lie in (0, 1] so targets stay in [-1, 1]")
    if n_points < 1:
        raise InvalidArgument("n_points must be positive")
    x = np.linspace(interval[0], interval[1], n_points)
    return Dataset(x, square_wave(x, period, amplitude))


def bivariate_raw(x, y):
    return (x ** 2 + y - 1.5 * np.pi) ** 2 + (x + y ** 2 - np.pi) ** 2


def bivariate_range(grid: int = BIVARIATE_GRID) -> tuple[float, float]:
    """(min, max) of the raw bivariate target on [-pi, pi]^2.

    The minimum is 0 analytically (the target is a sum of squares with real
    common zeros); the maximum is taken on a ``grid x grid`` lattice, which
    includes the corners where it is attained.
    """
    g = np.linspace(-np.pi, np.pi, grid)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    return 0.0, float(bivariate_raw(gx, gy).max())


def normalize_bivariate(raw, lo: float, hi: float):
    v = 2 * (np.asarray(raw, dtype=float) - lo) / (hi - lo) - 1
    if np.any(np.abs(v) > 1 + BIVARIATE_CLIP_TOL):
        raise DataError("bivariate sample outside the normalization range")
    return np.clip(v, -1.0, 1.0)


def gen_bivariate(n_points: int = 400, seed: int = 0, grid: int = BIVARIATE_GRID) -> Dataset:
    """Uniform random samples on [-pi, pi]^2, targets min-max scaled to [-1, 1]."""
    if n_points < 4:
        raise InvalidArgument("n_points must be at least 4")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-np.pi, np.pi, size=(n_points, 2))
    lo, hi = bivariate_range(grid)
    return Dataset(X, normalize_bivariate(bivariate_raw(X[:, 0], X[:, 1]), lo, hi))


# -- CSV ingestion ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LabeledTable:
    features: np.ndarray  # (N, F)
    labels: np.ndarray  # (N,) class indices in first-appearance order
    classes: tuple
    feature_names: tuple

    @property
    def n_classes(self) -> int:
        return len(self.classes)


def iris_path() -> Path:
    return Path(str(resources.files("qnnlab") / "data" / "iris.csv"))


def read_table(path, label_column=-1) -> LabeledTable:
    """Parse a headered CSV whose features are numeric and whose label column is free text."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file, expected a header row")
    header = [h.strip() for h in rows[0]]
    if isinstance(label_column, str):
        if label_column not in header:
            raise DataError(f"{path}: no column named {label_column!r}")
        lc = header.index(label_column)
    else:
        lc = int(label_column) % len(header) if header else 0
        if not -len(header) <= int(label_column) < len(header):
            raise DataError(f"{path}: label column {label_column} out of range")
    feats, labels, classes = [], [], {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        vals = []
        for j, cell in enumerate(row):
            if j == lc:
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric value {cell.strip()!r} in column {header[j]!r}") from None
        if not all(np.isfinite(vals)):
            raise DataError(f"{path}:{lineno}: non-finite feature value")
        label = row[lc].strip()
        labels.append(classes.setdefault(label, len(classes)))
        feats.append(vals)
    if not feats:
        raise DataError(f"{path}: no data rows")
    names = tuple(h for j, h in enumerate(header) if j != lc)
    return LabeledTable(np.array(feats, dtype=float), np.array(labels, dtype=int), tuple(classes), names)


def minmax_to_pi(X) -> np.ndarray:
    """Per-column affine map onto [0, pi]; constant columns map to 0."""
    X = np.asarray(X, dtype=float)
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = hi - lo
    out = np.zeros_like(X)
    ok = span > 0
    out[:, ok] = (X[:, ok] - lo[ok]) / span[ok] * np.pi
    return out


def load_csv(path, label_column=-1, normalization: str = MINMAX) -> Dataset:
    """Classification dataset with +-1 one-hot targets, every row tagged train."""
    if normalization not in NORMALIZATIONS:
        raise InvalidArgument(f"normalization must be one of {NORMALIZATIONS}")
    t = read_table(path, label_column)
    X = minmax_to_pi(t.features) if normalization == MINMAX else t.features
    return Dataset(X, one_hot_pm(t.labels, t.n_classes), n_classes=t.n_classes)


def _allocate(counts, n):
    """Largest-remainder allocation of n draws proportional to counts."""
    counts = np.asarray(counts)
    exact = counts * n / counts.sum()
    take = np.floor(exact).astype(int)
    for i in np.argsort(-(exact - take), kind="stable")[: n - take.sum()]:
        take[i] += 1
    return np.minimum(take, counts)


def stratified_indices(labels, n, rng) -> np.ndarray:
    """n row indices drawn without replacement, class proportions preserved."""
    labels = np.asarray(labels)
    if not 0 < n <= labels.size:
        raise InvalidArgument(f"cannot sample {n} of {labels.size} rows")
    classes = np.unique(labels)
    take = _allocate([np.sum(labels == c) for c in classes], n)
    picked = [rng.choice(np.flatnonzero(labels == c), k, replace=False) for c, k in zip(classes, take)]
    return np.sort(np.concatenate(picked))


def stratified_split(labels, train_fraction, rng) -> np.ndarray:
    """train/test tags with the train share taken per class."""
    labels = np.asarray(labels)
    tags = np.full(labels.size, "test", dtype=object)
    tags[stratified_indices(labels, int(round(train_fraction * labels.size)), rng)] = "train"
    return tags.astype(str)


def sample_classification(data: Dataset, n_samples: int = 100, train_fraction: float = 0.8,
                          seed: int = 0) -> Dataset:
    """Stratified subsample of a classification dataset, then a stratified train/test split."""
    if not data.n_classes:
        raise InvalidArgument("dataset has no class labels")
    if not 0 < train_fraction <= 1:
        raise InvalidArgument("train_fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    n = min(n_samples, len(data))
    idx = stratified_indices(data.labels, n, rng)
    labels = data.labels[idx]
    return Dataset(data.inputs[idx], data.targets[idx], stratified_split(labels, train_fraction, rng),
                   data.n_classes)


def load_iris(normalization: str = MINMAX) -> Dataset:
    return load_csv(iris_path(), "species", normalization)


# -- CSV round trip ----------------------------------------------------------------------

def write_dataset_csv(data: Dataset, path) -> None:
    """Columns x0.., y0.., split; floats written with repr so reloading is bit-exact."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(data.d)] + [f"y{i}" for i in range(data.targets.shape[1])] + ["split"])
        for x, y, s in zip(data.inputs, data.targets, data.split):
            w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in y] + [s])


def read_dataset_csv(path, n_classes: int = 0) -> Dataset:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][-1] != "split":
        raise DataError(f"{path}: expected a header ending in 'split'")
    header = rows[0]
    xs = [i for i, h in enumerate(header) if h.startswith("x")]
    ys = [i for i, h in enumerate(header) if h.startswith("y")]
    X, Y, S = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            X.append([float(row[i]) for i in xs])
            Y.append([float(row[i]) for i in ys])
        except ValueError as e:
            raise DataError(f"{path}:{lineno}: {e}") from None
        S.append(row[-1])
    return Dataset(np.array(X).reshape(len(S), len(xs)), np.array(Y).reshape(len(S), len(ys)), np.array(S), n_classes)
