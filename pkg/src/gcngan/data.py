"""Snapshot sequences: file formats, preprocessing, statistics, synthetic data.

Sequence file (UTF-8, ``\\n`` line endings)::

    TLPSEQ 1 <N> <T> <max_weight>
    SNAPSHOT 0
    <N lines of N space-separated weights>
    SNAPSHOT 1
    ...

Distance files use the header ``TLPDIST 1 <N> <T>`` and the same blocks.
Weights are written with ``repr`` (shortest round-tripping form, at most 17
significant digits).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import Matrix, ShapeError, check_square, make_rng

SYMMETRY_TOL = 1e-9
FORMAT_VERSION = 1


class DataError(ValueError):
    """Malformed or invalid snapshot data."""


def _validate_snapshot(a: Matrix, n: int, max_weight: float | None, where: str) -> Matrix:
    if a.shape != (n, n):
        raise ShapeError(f"{where}: snapshot has shape {a.shape}, expected {(n, n)}")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{where}: non-finite weight")
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL:
        raise DataError(f"{where}: snapshot is not symmetric")
    if np.any(a < 0):
        raise DataError(f"{where}: negative weight")
    if max_weight is not None and np.any(a > max_weight):
        raise DataError(f"{where}: weight exceeds max_weight {max_weight}")
    a = (a + a.T) / 2.0
    np.fill_diagonal(a, 0.0)
    return a


@dataclass
class SnapshotSequence:
    """Adjacency matrices of one weighted dynamic network in temporal order.

    Snapshots are validated on construction: square N x N, symmetric within
    ``SYMMETRY_TOL`` (then averaged to exact symmetry), non-negative and
    bounded by ``max_weight``. Diagonals are forced to zero.
    """

    n_nodes: int
    snapshots: list[Matrix]
    max_weight: float

    def __post_init__(self):
        if not self.snapshots:
            raise DataError("sequence must contain at least one snapshot")
        if not self.max_weight > 0:
            raise DataError("max_weight must be positive")
        self.snapshots = [
            _validate_snapshot(np.array(a, dtype=np.float64), self.n_nodes, self.max_weight, f"snapshot {t}")
            for t, a in enumerate(self.snapshots)
        ]

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, t: int) -> Matrix:
        return self.snapshots[t]

    def normalized(self) -> list[Matrix]:
        return normalize(self)[0]


# ---------------------------------------------------------------------------
# file I/O


def _format_row(row) -> str:
    return " ".join(repr(float(v)) for v in row)


def _write_blocks(path, header: str, mats: list[Matrix]) -> None:
    lines = [header]
    for t, a in enumerate(mats):
        lines.append(f"SNAPSHOT {t}")
        lines.extend(_format_row(r) for r in a)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_blocks(path, magic: str, n_header_fields: int):
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataError(f"{path}:1: empty file")
    head = lines[0].split()
    if len(head) != n_header_fields or head[0] != magic:
        raise DataError(f"{path}:1: malformed header, expected '{magic} ...'")
    if head[1] != str(FORMAT_VERSION):
        raise DataError(f"{path}:1: unsupported format version {head[1]}")
    try:
        n, t_count = int(head[2]), int(head[3])
    except ValueError:
        raise DataError(f"{path}:1: malformed header counts") from None
    if n < 1:
        raise DataError(f"{path}:1: node count must be positive")
    if t_count < 1:
        raise DataError(f"{path}:1: sequence must contain at least one snapshot")
    mats, starts = [], []
    pos = 1
    for t in range(t_count):
        if pos >= len(lines) or lines[pos].split() != ["SNAPSHOT", str(t)]:
            raise DataError(f"{path}:{pos + 1}: expected 'SNAPSHOT {t}'")
        starts.append(pos + 2)
        rows = []
        for r in range(n):
            lineno = pos + 2 + r
            if lineno - 1 >= len(lines) or lines[lineno - 1].startswith("SNAPSHOT"):
                raise ShapeError(f"{path}:{lineno}: snapshot {t} has fewer than {n} rows")
            try:
                row = [float(v) for v in lines[lineno - 1].split()]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric weight") from None
            if len(row) != n:
                raise ShapeError(f"{path}:{lineno}: expected {n} values, got {len(row)}")
            rows.append(row)
        mats.append(np.array(rows, dtype=np.float64))
        pos += 1 + n
    if pos != len(lines):
        raise ShapeError(f"{path}:{pos + 1}: unexpected data after {t_count} snapshots (more rows than N={n}?)")
    return head, n, mats, starts


def save_sequence(seq: SnapshotSequence, path) -> None:
    header = f"TLPSEQ {FORMAT_VERSION} {seq.n_nodes} {len(seq)} {float(seq.max_weight)!r}"
    _write_blocks(path, header, seq.snapshots)


def load_sequence(path) -> SnapshotSequence:
    head, n, mats, starts = _read_blocks(path, "TLPSEQ", 5)
    try:
        max_weight = float(head[4])
    except ValueError:
        raise DataError(f"{path}:1: malformed max_weight") from None
    if not max_weight > 0:
        raise DataError(f"{path}:1: max_weight must be positive")
    checked = [
        _validate_snapshot(a, n, max_weight, f"{path}:{line}") for a, line in zip(mats, starts)
    ]
    return SnapshotSequence(n, checked, max_weight)


def save_distances(mats: list[Matrix], path) -> None:
    n = check_square(mats[0], "distance matrix")
    _write_blocks(path, f"TLPDIST {FORMAT_VERSION} {n} {len(mats)}", mats)


def load_distances(path) -> list[Matrix]:
    _, _, mats, _ = _read_blocks(path, "TLPDIST", 4)
    return mats


# ---------------------------------------------------------------------------
# preprocessing


@dataclass(frozen=True)
class PreprocessConfig:
    distance_threshold: float

    def __post_init__(self):
        if not self.distance_threshold > 0:
            raise ValueError("distance_threshold must be positive")


def distances_to_weights(d: Matrix, cfg: PreprocessConfig) -> Matrix:
    """Closer pairs get larger weights: ``delta - d`` below the threshold, else 0."""
    check_square(d, "distance matrix")
    if np.any(d < 0):
        raise DataError("distances must be non-negative")
    if np.max(np.abs(d - d.T), initial=0.0) > SYMMETRY_TOL:
        raise DataError("distance matrix is not symmetric")
    delta = cfg.distance_threshold
    w = np.where(d < delta, delta - d, 0.0)
    w = (w + w.T) / 2.0
    np.fill_diagonal(w, 0.0)
    return w


def preprocess_distances(mats: list[Matrix], cfg: PreprocessConfig) -> SnapshotSequence:
    n = check_square(mats[0], "distance matrix")
    weights = [distances_to_weights(d, cfg) for d in mats]
    return SnapshotSequence(n, weights, cfg.distance_threshold)


def normalize(seq: SnapshotSequence) -> tuple[list[Matrix], float]:
    """Scale by the dataset-wide maximum weight into [0, 1]."""
    return [a / seq.max_weight for a in seq.snapshots], seq.max_weight


def renormalize(m: Matrix, max_weight: float) -> Matrix:
    if not max_weight > 0:
        raise ValueError("max_weight must be positive")
    return m * max_weight


# ---------------------------------------------------------------------------
# statistics


def sparsity(seq: SnapshotSequence) -> float:
    """Mean fraction of zero entries per snapshot, diagonal included."""
    return float(np.mean([np.mean(a == 0) for a in seq.snapshots]))


def weight_histogram(seq: SnapshotSequence, n_bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Counts of non-zero weights in equal-width bins over (0, max_weight].

    Each undirected edge is counted once (upper triangle). Returns
    ``(counts, edges)`` with ``len(edges) == n_bins + 1``.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be at least 1")
    iu = np.triu_indices(seq.n_nodes, k=1)
    w = np.concatenate([a[iu] for a in seq.snapshots])
    w = w[w > 0]
    edges = np.linspace(0.0, seq.max_weight, n_bins + 1)
    # right-closed bins: (edges[k], edges[k+1]]
    idx = np.clip(np.ceil(w / seq.max_weight * n_bins).astype(int) - 1, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return counts, edges


# ---------------------------------------------------------------------------
# synthetic networks


@dataclass(frozen=True)
class SyntheticSpec:
    n_nodes: int = 16
    n_slices: int = 40
    target_sparsity: float = 0.7
    max_weight: float = 2000.0
    drift_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 2 or self.n_slices < 1:
            raise ValueError("need at least 2 nodes and 1 slice")
        if not 0.0 <= self.target_sparsity <= 1.0:
            raise ValueError("target_sparsity must lie in [0, 1]")
        if not 0.0 <= self.drift_rate <= 1.0:
            raise ValueError("drift_rate must lie in [0, 1]")
        if not self.max_weight > 0:
            raise ValueError("max_weight must be positive")


def generate_synthetic(spec: SyntheticSpec) -> SnapshotSequence:
    """Fixed random support with smoothly drifting positive weights.

    The number of inactive pairs is chosen so that the zero fraction,
    diagonal included, is as close to ``target_sparsity`` as N allows; which
    pairs are inactive is random.
    Active edges start uniform in (0, max_weight] and are multiplied by
    ``1 + drift_rate * u`` (u ~ U[-1, 1]) each slice, clamped to
    (0, max_weight].
    """
    rng = make_rng(spec.seed)
    n = spec.n_nodes
    iu = np.triu_indices(n, k=1)
    n_pairs = iu[0].size
    n_zero = min(n_pairs, max(0, round((spec.target_sparsity * n * n - n) / 2)))
    active = rng.permutation(n_pairs) >= n_zero
    # 1 - U[0,1) lies in (0, 1]
    w = (1.0 - rng.random(n_pairs)) * spec.max_weight * active
    tiny = np.nextafter(0.0, 1.0)
    snaps = []
    for t in range(spec.n_slices):
        if t > 0:
            u = rng.uniform(-1.0, 1.0, n_pairs)
            w = np.where(active, np.clip(w * (1.0 + spec.drift_rate * u), tiny, spec.max_weight), 0.0)
        a = np.zeros((n, n))
        a[iu] = w
        snaps.append(a + a.T)
    return SnapshotSequence(n, snaps, spec.max_weight)
