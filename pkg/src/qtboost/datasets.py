"""Dataset generation and ingestion.

Three sources:

* a synthetic generator that divides [0, 2π) into equal subintervals,
  assigns subintervals to classes at random (every class gets at least
  one), and draws each sample's coordinates i.i.d. uniform inside one of
  its class's subintervals;
* ground states of the axial next-nearest-neighbor Ising chain, labeled by
  phase (0 = antiphase, 1 = ferromagnetic, 2 = paramagnetic) via the two
  critical-field lines;
* IDX image/label files (big-endian MNIST layout) with area-averaging
  resize.

All generators are bit-reproducible from their seed (counter-based RNG).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .qcore import eigsh_ground, rng


@dataclass
class LabeledSet:
    """Raw feature vectors plus integer labels plus provenance."""

    features: np.ndarray  # (M, d) float64
    labels: np.ndarray    # (M,) int64
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels must align")
        if self.features.shape[0] == 0:
            raise ValueError("empty dataset")
        if np.any(self.labels < 0):
            raise ValueError("labels must be non-negative")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.meta.get("n_classes", int(self.labels.max()) + 1))

    def class_counts(self) -> dict[int, int]:
        vals, counts = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}


# ------------------------------------------------------------- synthetic


def gen_synthetic(dim: int, per_class_train: int, per_class_test: int,
                  seed: int, classes: int = 3,
                  n_intervals: int | None = None) -> tuple[LabeledSet, LabeledSet]:
    """Blocky synthetic data on [0, 2π)^dim.

    The interval→class assignment is drawn once from the seed (redrawn until
    every class holds at least one interval) and shared by the train and
    test splits, which use independent sample streams.
    """
    if dim < 1 or per_class_train < 1 or per_class_test < 1:
        raise ValueError("dimension and per-class counts must be positive")
    if classes < 2:
        raise ValueError("need at least two classes")
    if n_intervals is None:
        n_intervals = max(8, classes)
    if n_intervals < classes:
        raise ValueError(f"{classes} classes cannot share {n_intervals} intervals")

    gen = rng([seed])
    while True:
        assignment = gen.integers(0, classes, size=n_intervals)
        if np.unique(assignment).shape[0] == classes:
            break
    width = 2.0 * np.pi / n_intervals

    def draw(split_index: int, per_class: int) -> LabeledSet:
        sgen = rng([seed, split_index])
        blocks_x, blocks_y = [], []
        for k in range(classes):
            own = np.flatnonzero(assignment == k)
            chosen = own[sgen.integers(0, own.shape[0], size=per_class)]
            lo = chosen * width
            u = sgen.random((per_class, dim))
            blocks_x.append(lo[:, None] + u * width)
            blocks_y.append(np.full(per_class, k, dtype=np.int64))
        return LabeledSet(np.concatenate(blocks_x), np.concatenate(blocks_y),
                          meta={"generator": "synthetic", "seed": seed,
                                "n_classes": classes,
                                "n_intervals": n_intervals,
                                "interval_assignment": assignment.tolist(),
                                "split": "train" if split_index == 0 else "test"})

    return draw(0, per_class_train), draw(1, per_class_test)


# ---------------------------------------------------------------- ANNNI


def annni_hamiltonian(n: int, kappa: float, h: float) -> np.ndarray:
    """Open-boundary chain −(Σ XᵢXᵢ₊₁ − κ·Σ XᵢXᵢ₊₂ + h·Σ Zᵢ) on n ≥ 3 sites.

    Returned as a real symmetric (2^n, 2^n) array (all terms are real).
    """
    if n < 3:
        raise ValueError("chain needs at least 3 sites")
    dim = 1 << n
    ham = np.zeros((dim, dim))
    idx = np.arange(dim)
    zdiag = np.zeros(dim)
    for site in range(n):
        zdiag += 1.0 - 2.0 * ((idx >> (n - 1 - site)) & 1)
    ham[idx, idx] = -h * zdiag
    for site in range(n - 1):
        mask = (1 << (n - 1 - site)) | (1 << (n - 2 - site))
        ham[idx ^ mask, idx] += -1.0
    for site in range(n - 2):
        mask = (1 << (n - 1 - site)) | (1 << (n - 3 - site))
        ham[idx ^ mask, idx] += kappa
    return ham


def critical_field_para(kappa: float) -> float:
    """Boundary between ferromagnetic and paramagnetic phases (κ < 0.5).

    Algebraically equal to ((1−κ)/κ)·(1−√A) with A=(1−3κ+4κ²)/(1−κ), but
    written as 2(1−2κ)/(1+√A) which stays finite and accurate as κ → 0.
    """
    a = (1.0 - 3.0 * kappa + 4.0 * kappa * kappa) / (1.0 - kappa)
    return 2.0 * (1.0 - 2.0 * kappa) / (1.0 + np.sqrt(a))


def critical_field_antiphase(kappa: float) -> float:
    """Boundary between antiphase and paramagnetic phases (κ ≥ 0.5)."""
    return 1.05 * np.sqrt((kappa - 0.5) * (kappa - 0.1))


def annni_phase_label(kappa: float, h: float) -> int:
    """Phase of the (κ, h) point: 0 antiphase, 1 ferromagnetic, 2 paramagnetic."""
    if not (0.0 <= kappa < 1.0):
        raise ValueError(f"kappa={kappa} outside [0, 1)")
    if h < 0.0:
        raise ValueError(f"h={h} must be non-negative")
    if kappa < 0.5:
        return 1 if h < critical_field_para(kappa) else 2
    return 0 if h < critical_field_antiphase(kappa) else 2


def gen_annni(n: int, per_class_train: int, per_class_test: int, seed: int,
              region=((0.0, 0.99), (0.0, 2.0)), margin: float = 1e-6,
              budget_factor: int = 2000) -> tuple[LabeledSet, LabeledSet]:
    """Rejection-sample (κ, h) uniformly in the region until per-phase quotas
    are met; features are the ground-state amplitudes of the chain.

    Points within `margin` of the relevant critical line are discarded so
    labels are unambiguous.  Raises if a phase cannot be filled within the
    sampling budget (region misses the phase).
    """
    (k_lo, k_hi), (h_lo, h_hi) = region
    if not (0.0 <= k_lo < k_hi < 1.0) or not (0.0 <= h_lo < h_hi):
        raise ValueError("region outside the label function domain")
    dim = 1 << n

    def draw(split_index: int, per_class: int) -> LabeledSet:
        sgen = rng([seed, split_index])
        want = {0: per_class, 1: per_class, 2: per_class}
        feats: dict[int, list[np.ndarray]] = {0: [], 1: [], 2: []}
        points: dict[int, list[tuple[float, float]]] = {0: [], 1: [], 2: []}
        budget = budget_factor * 3 * per_class
        draws = 0
        while any(len(feats[c]) < want[c] for c in want):
            if draws >= budget:
                missing = [c for c in want if len(feats[c]) < want[c]]
                raise ValueError(
                    f"sampling budget exhausted; region misses phase(s) {missing}"
                )
            draws += 1
            kappa = float(sgen.uniform(k_lo, k_hi))
            h = float(sgen.uniform(h_lo, h_hi))
            line = (critical_field_para(kappa) if kappa < 0.5
                    else critical_field_antiphase(kappa))
            if abs(h - line) < margin:
                continue
            label = annni_phase_label(kappa, h)
            if len(feats[label]) >= want[label]:
                continue
            ham = annni_hamiltonian(n, kappa, h)
            energy, vec = eigsh_ground(ham)
            resid = np.linalg.norm(ham @ vec - energy * vec)
            if resid > 1e-7 * np.linalg.norm(ham):
                raise RuntimeError(f"ground-state residual {resid} too large")
            feats[label].append(np.real(vec))
            points[label].append((kappa, h))
        x = np.concatenate([np.stack(feats[c]) for c in (0, 1, 2)])
        y = np.concatenate([np.full(want[c], c, dtype=np.int64) for c in (0, 1, 2)])
        return LabeledSet(x, y, meta={
            "generator": "annni", "seed": seed, "n_classes": 3,
            "n_qubits": n, "region": [list(region[0]), list(region[1])],
            "points": {c: points[c] for c in (0, 1, 2)},
            "split": "train" if split_index == 0 else "test"})

    if dim < 8:
        raise ValueError("chain needs at least 3 sites")
    return draw(0, per_class_train), draw(1, per_class_test)


# ------------------------------------------------------------ file formats


def save_csv(data: LabeledSet, path) -> None:
    """One record per line: comma-separated features (17 significant digits)
    then the integer label; one `#`-prefixed header line."""
    gen_name = data.meta.get("generator", "unknown")
    seed = data.meta.get("seed", 0)
    with open(path, "w") as fh:
        fh.write(f"# d={data.dim} K={data.n_classes} generator={gen_name} seed={seed}\n")
        for row, label in zip(data.features, data.labels):
            fh.write(",".join(f"{v:.17g}" for v in row) + f",{label}\n")


def load_csv(path) -> LabeledSet:
    meta: dict = {}
    feats, labels = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" in token:
                        key, val = token.split("=", 1)
                        if key == "d":
                            meta["dim"] = int(val)
                        elif key == "K":
                            meta["n_classes"] = int(val)
                        elif key == "generator":
                            meta["generator"] = val
                        elif key == "seed":
                            meta["seed"] = int(val)
                continue
            parts = line.split(",")
            feats.append([float(v) for v in parts[:-1]])
            labels.append(int(parts[-1]))
    if not feats:
        raise ValueError(f"no records in {path}")
    out = LabeledSet(np.asarray(feats), np.asarray(labels), meta=meta)
    if "dim" in meta and out.dim != meta["dim"]:
        raise ValueError(f"header dimension {meta['dim']} != data dimension {out.dim}")
    return out


def area_resize(image: np.ndarray, out_side: int) -> np.ndarray:
    """Box-filter (area-averaging) resize of a 2-D image."""
    img = np.asarray(image, dtype=np.float64)

    def overlap(n_in: int, n_out: int) -> np.ndarray:
        scale = n_in / n_out
        w = np.zeros((n_out, n_in))
        for i in range(n_out):
            lo, hi = i * scale, (i + 1) * scale
            for j in range(int(np.floor(lo)), min(n_in, int(np.ceil(hi)))):
                w[i, j] = min(hi, j + 1) - max(lo, j)
        return w / scale

    return overlap(img.shape[0], out_side) @ img @ overlap(img.shape[1], out_side).T


def load_idx(images_path, labels_path, resize: int | None = None,
             classes=None) -> LabeledSet:
    """Read big-endian IDX image/label files into flattened [0, 1] features.

    Optional `resize` applies area-averaging down to (resize, resize);
    `classes` filters to the given labels and re-indexes them densely
    (sorted original label → 0, 1, ...).
    """
    with open(images_path, "rb") as fh:
        magic, count, rows, cols = struct.unpack(">IIII", fh.read(16))
        if magic != 0x803:
            raise ValueError(f"bad image-file magic 0x{magic:x}, expected 0x803")
        raw = np.frombuffer(fh.read(count * rows * cols), dtype=np.uint8)
        if raw.size != count * rows * cols:
            raise ValueError("image file truncated")
        images = raw.reshape(count, rows, cols).astype(np.float64) / 255.0
    with open(labels_path, "rb") as fh:
        magic, label_count = struct.unpack(">II", fh.read(8))
        if magic != 0x801:
            raise ValueError(f"bad label-file magic 0x{magic:x}, expected 0x801")
        labels = np.frombuffer(fh.read(label_count), dtype=np.uint8).astype(np.int64)
    if label_count != count:
        raise ValueError(f"image/label count mismatch: {count} vs {label_count}")

    if resize is not None and resize != rows:
        images = np.stack([area_resize(im, resize) for im in images])
    feats = images.reshape(images.shape[0], -1)

    meta: dict = {"generator": "idx", "seed": 0, "source": str(images_path),
                  "resize": resize}
    if classes is not None:
        keep_vals = sorted(int(c) for c in classes)
        mask = np.isin(labels, keep_vals)
        feats, labels = feats[mask], labels[mask]
        remap = {v: i for i, v in enumerate(keep_vals)}
        labels = np.asarray([remap[int(v)] for v in labels], dtype=np.int64)
        meta["original_labels"] = keep_vals
        meta["n_classes"] = len(keep_vals)
    else:
        meta["n_classes"] = int(labels.max()) + 1 if labels.size else 0
    return LabeledSet(feats, labels, meta=meta)
