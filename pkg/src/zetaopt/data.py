"""Synthetic classification datasets, label-noise injection, splitting,
and seeded mini-batching.

Every generator is a pure function of its sizes and seed: repeated calls
return bit-identical arrays.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "Dataset",
    "BatchPlan",
    "make_blobs",
    "make_spirals",
    "inject_label_noise",
    "train_test_split",
    "iterate_batches",
    "load_csv_dataset",
]

# Pairwise distance between blob centers is sqrt(2) times this, so the
# `spread` argument (cluster standard deviation) alone sets difficulty.
_CENTER_SCALE = 3.0


@dataclass
class Dataset:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64
    num_classes: int
    name: str

    def __post_init__(self) -> None:
        if self.features.ndim != 2 or len(self.features) < 1:
            raise ValueError("features must be a non-empty (n, d) array")
        if self.labels.shape != (len(self.features),):
            raise ValueError("labels length must match features")
        if not np.isfinite(self.features).all():
            raise ValueError("features contain non-finite entries")
        if len(self.labels) and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise ValueError("labels out of range")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class BatchPlan:
    batch_size: int = 64
    shuffle_seed: int = 0
    drop_last: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _balanced_counts(n: int, k: int) -> np.ndarray:
    counts = np.full(k, n // k, dtype=np.int64)
    counts[: n % k] += 1
    return counts


def make_blobs(n: int, d: int, k: int, spread: float, seed: int) -> Dataset:
    """Gaussian clusters with seeded centers on a fixed-scale simplex.

    When d >= k the centers are k orthonormal directions (a regular
    simplex, equal pairwise distances); for d < k they fall back to
    seeded unit directions.  `spread` is the per-cluster standard
    deviation, so spread -> 0 gives perfectly separable clusters.
    Class counts are balanced to within one sample.
    """
    if not (n >= k >= 2 and d >= 1 and spread > 0.0):
        raise ValueError(f"invalid blob sizes: n={n}, d={d}, k={k}, spread={spread}")
    rng = np.random.default_rng(seed)
    if d >= k:
        q, r = np.linalg.qr(rng.standard_normal((d, k)))
        # canonicalize the QR sign ambiguity
        q = q * np.sign(np.diag(r))
        centers = _CENTER_SCALE * q.T
    else:
        raw = rng.standard_normal((k, d))
        centers = _CENTER_SCALE * raw / np.linalg.norm(raw, axis=1, keepdims=True)
    counts = _balanced_counts(n, k)
    labels = np.repeat(np.arange(k, dtype=np.int64), counts)
    features = centers[labels] + spread * rng.standard_normal((n, d))
    return Dataset(features, labels, k, f"blobs(n={n},d={d},k={k})")


def make_spirals(n: int, k: int, noise: float, seed: int) -> Dataset:
    """Interleaved 2-D spiral arms, one class per arm.

    With noise = 0 every point lies exactly on its arm's parametric
    curve r = t, angle = 3*pi*t + arm offset, t in [0.05, 1].
    """
    if not (k >= 2 and n >= k):
        raise ValueError(f"invalid spiral sizes: n={n}, k={k}")
    if noise < 0.0:
        raise ValueError("noise must be >= 0")
    rng = np.random.default_rng(seed)
    counts = _balanced_counts(n, k)
    labels = np.repeat(np.arange(k, dtype=np.int64), counts)
    xs = np.empty((n, 2))
    row = 0
    for arm in range(k):
        m = int(counts[arm])
        t = np.linspace(0.05, 1.0, m)
        angle = 3.0 * np.pi * t + 2.0 * np.pi * arm / k
        xs[row : row + m, 0] = t * np.cos(angle)
        xs[row : row + m, 1] = t * np.sin(angle)
        row += m
    xs += noise * rng.standard_normal((n, 2))
    return Dataset(xs, labels, k, f"spirals(n={n},k={k})")


def inject_label_noise(
    ds: Dataset, rate: float, seed: int
) -> tuple[Dataset, np.ndarray]:
    """Symmetric label noise: each sample flips with probability `rate`
    to a uniformly random different class.

    Returns a new dataset (the input is untouched) and the sorted array
    of flipped indices.  A flipped label never equals the original.
    """
    if not (0.0 <= rate <= 1.0):
        raise ValueError(f"rate must be in [0, 1], got {rate}")
    if ds.num_classes < 2:
        raise ValueError("label noise needs at least 2 classes")
    rng = np.random.default_rng(seed)
    n = len(ds)
    flip = rng.random(n) < rate
    idx = np.flatnonzero(flip)
    labels = ds.labels.copy()
    offsets = rng.integers(1, ds.num_classes, size=len(idx))
    labels[idx] = (labels[idx] + offsets) % ds.num_classes
    noisy = Dataset(ds.features.copy(), labels, ds.num_classes, ds.name + "+noise")
    return noisy, idx


def train_test_split(
    ds: Dataset, test_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Seeded stratified permutation split.

    Test size is round(n * test_fraction) exactly, allocated across
    classes by largest remainder; each class appears on both sides
    whenever it has at least two samples.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must be in (0, 1)")
    n = len(ds)
    target = int(round(n * test_fraction))
    if target < 1 or target >= n:
        raise ValueError(
            f"split of n={n} at fraction {test_fraction} would empty a side"
        )
    perm = np.random.default_rng(seed).permutation(n)
    labels_perm = ds.labels[perm]
    classes = np.arange(ds.num_classes)
    counts = np.array([(ds.labels == c).sum() for c in classes])
    present = classes[counts > 0]

    # largest-remainder allocation: per-class test counts summing to target
    exact = counts * test_fraction
    take = np.floor(exact).astype(np.int64)
    shortfall = target - int(take.sum())
    for c in np.argsort(-(exact - take), kind="stable")[:shortfall]:
        take[c] += 1

    # presence fix-ups via paired swaps (total stays exactly `target`):
    # any class with >= 2 samples should land on both sides when a swap
    # partner exists.
    floor_ = np.where(counts >= 2, 1, 0)
    ceil_ = np.where(counts >= 2, counts - 1, counts)
    for c in present:
        while take[c] > ceil_[c]:
            room = np.flatnonzero(take < ceil_)
            if len(room) == 0:
                break
            take[c] -= 1
            take[int(room[0])] += 1
        while take[c] < floor_[c]:
            spare = np.flatnonzero(take > floor_)
            if len(spare) == 0:
                break
            take[c] += 1
            take[int(spare[0])] -= 1

    test_mask = np.zeros(n, dtype=bool)
    for c in present:
        rows = perm[labels_perm == c]
        test_mask[rows[: take[c]]] = True
    test_idx = np.flatnonzero(test_mask)
    train_idx = np.flatnonzero(~test_mask)
    train = Dataset(
        ds.features[train_idx], ds.labels[train_idx], ds.num_classes, ds.name
    )
    test = Dataset(ds.features[test_idx], ds.labels[test_idx], ds.num_classes, ds.name)
    return train, test


def iterate_batches(
    ds: Dataset, plan: BatchPlan, epoch: int
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (features, labels) batches in a per-epoch shuffled order.

    The order is seeded by (shuffle_seed, epoch), so replaying an epoch
    reproduces it exactly; every sample appears once per epoch, with the
    short final batch kept unless drop_last.
    """
    n = len(ds)
    perm = np.random.default_rng([plan.shuffle_seed, epoch]).permutation(n)
    stop = (n // plan.batch_size) * plan.batch_size if plan.drop_last else n
    for start in range(0, stop, plan.batch_size):
        idx = perm[start : start + plan.batch_size]
        yield ds.features[idx], ds.labels[idx]


def load_csv_dataset(
    path: str,
    num_classes: int,
    has_header: bool = False,
    scale: bool = False,
) -> Dataset:
    """Parse `label, f1, ..., fd` rows into a Dataset.

    All rows must share one width; labels must be integers in
    [0, num_classes).  With scale=True each feature column is min-max
    scaled into [0, 1] (constant columns map to 0).  Errors carry the
    1-based line number of the offending row.
    """
    rows: list[list[float]] = []
    labels: list[int] = []
    width: int | None = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1 and has_header:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}: line {lineno}: need label plus features")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} fields, got {len(row)}"
                )
            try:
                label = int(row[0].strip())
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: label {row[0]!r} is not an integer"
                ) from None
            if not (0 <= label < num_classes):
                raise ValueError(
                    f"{path}: line {lineno}: label {label} out of range "
                    f"[0, {num_classes})"
                )
            try:
                feats = [float(f) for f in row[1:]]
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: malformed feature value"
                ) from None
            labels.append(label)
            rows.append(feats)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    features = np.asarray(rows, dtype=np.float64)
    if scale:
        lo = features.min(axis=0)
        hi = features.max(axis=0)
        span = hi - lo
        span[span == 0.0] = 1.0
        features = (features - lo) / span
    return Dataset(
        features, np.asarray(labels, dtype=np.int64), num_classes, f"csv:{path}"
    )
