"""Labeled text datasets: CSV ingestion, seeded splitting, batching.

Splits are driven by the package RNG, never the host PRNG, so a seed pins
the exact partition on every platform. Sizes may be absolute counts
(integers >= 0) or fractions (floats in [0, 1), rounded half up against the
pool they draw from: test from the full set, dev from what test leaves).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .rng import Rng

logger = logging.getLogger(__name__)

LABEL_KINDS = ("class", "real")


@dataclass
class LabeledDataset:
    """Parallel texts and labels; class labels are contiguous ids from 0."""

    texts: list[str]
    labels: list
    label_kind: str
    label_names: list[str] | None = None

    def __post_init__(self):
        if self.label_kind not in LABEL_KINDS:
            raise ValueError(f"label_kind must be one of {LABEL_KINDS}, got {self.label_kind!r}")
        if len(self.texts) != len(self.labels):
            raise ValueError(
                f"{len(self.texts)} texts but {len(self.labels)} labels"
            )
        if self.label_kind == "class":
            for lab in self.labels:
                if not isinstance(lab, (int, np.integer)) or lab < 0:
                    raise ValueError(f"class labels must be non-negative ints, got {lab!r}")
            if self.label_names is not None:
                top = max(self.labels, default=-1)
                if top >= len(self.label_names):
                    raise ValueError(
                        f"label id {top} out of range for {len(self.label_names)} label names"
                    )

    def __len__(self) -> int:
        return len(self.texts)

    @property
    def num_classes(self) -> int:
        if self.label_kind != "class":
            raise ValueError("num_classes is undefined for real-valued labels")
        if self.label_names is not None:
            return len(self.label_names)
        return int(max(self.labels)) + 1 if self.labels else 0

    def label_array(self) -> np.ndarray:
        dtype = np.int64 if self.label_kind == "class" else np.float64
        return np.asarray(self.labels, dtype=dtype)

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset(
            texts=[self.texts[i] for i in indices],
            labels=[self.labels[i] for i in indices],
            label_kind=self.label_kind,
            label_names=self.label_names,
        )


def load_csv(
    path: str,
    text_column: str,
    label_column: str,
    label_kind: str = "class",
    label_names: list[str] | None = None,
) -> LabeledDataset:
    """Read a CSV with headers into a LabeledDataset.

    Class labels map to contiguous ids by first appearance; pass the
    ``label_names`` of a previous load to reuse its mapping (unknown labels
    then fail instead of extending it). Rows with empty text are skipped
    with a logged count.
    """
    if label_kind not in LABEL_KINDS:
        raise ValueError(f"label_kind must be one of {LABEL_KINDS}, got {label_kind!r}")
    mapping: dict[str, int] = {}
    frozen = label_names is not None
    if frozen:
        mapping = {name: i for i, name in enumerate(label_names)}
    texts: list[str] = []
    labels: list = []
    skipped = 0
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        for col in (text_column, label_column):
            if col not in header:
                raise ValueError(
                    f"{path}: column {col!r} not found; file has {header}"
                )
        for lineno, row in enumerate(reader, start=2):
            text = (row[text_column] or "").strip()
            raw = (row[label_column] or "").strip()
            if not text:
                skipped += 1
                continue
            if label_kind == "class":
                if raw not in mapping:
                    if frozen:
                        raise ValueError(
                            f"{path} line {lineno}: label {raw!r} not in the provided mapping"
                        )
                    mapping[raw] = len(mapping)
                labels.append(mapping[raw])
            else:
                try:
                    labels.append(float(raw))
                except ValueError:
                    raise ValueError(
                        f"{path} line {lineno}: cannot parse {raw!r} as a real label"
                    ) from None
            texts.append(text)
    if skipped:
        logger.warning("%s: skipped %d rows with empty text", path, skipped)
    names = label_names if frozen else [name for name, _ in sorted(mapping.items(), key=lambda kv: kv[1])]
    return LabeledDataset(
        texts=texts,
        labels=labels,
        label_kind=label_kind,
        label_names=names if label_kind == "class" else None,
    )


def _as_count(size, pool: int, name: str) -> int:
    """Fractions in [0, 1) round half up against the pool; ints pass through."""
    if isinstance(size, bool):
        raise ValueError(f"{name} must be a count or fraction, got a bool")
    if isinstance(size, (int, np.integer)):
        if size < 0:
            raise ValueError(f"{name} must be >= 0, got {size}")
        return int(size)
    if isinstance(size, float):
        if 0.0 <= size < 1.0:
            return int(pool * size + 0.5)
        raise ValueError(
            f"{name}={size} is ambiguous: use a float in [0, 1) for a fraction "
            f"or an int for a count"
        )
    raise ValueError(f"{name} must be an int or float, got {type(size).__name__}")


def _largest_remainder(counts: list[int], total: int) -> list[int]:
    """Apportion ``total`` slots proportionally to ``counts``.

    Floor the quotas, then hand leftover slots to the largest fractional
    remainders; ties go to the smaller class id.
    """
    pool = sum(counts)
    quotas = [total * c / pool for c in counts]
    alloc = [int(q) for q in quotas]
    leftover = total - sum(alloc)
    order = sorted(range(len(counts)), key=lambda i: (-(quotas[i] - alloc[i]), i))
    for i in order[:leftover]:
        alloc[i] += 1
    return alloc


def split(
    ds: LabeledDataset,
    test_size,
    dev_size,
    seed: int,
    stratify: bool = False,
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Partition into (train, dev, test): test drawn first, dev from the rest.

    With ``stratify``, both draws allocate per class proportionally via
    largest-remainder rounding. Splits are returned in original row order.
    """
    n = len(ds)
    test_n = _as_count(test_size, n, "test_size")
    if test_n > n:
        raise ValueError(f"test_size {test_n} exceeds dataset size {n}")
    dev_n = _as_count(dev_size, n - test_n, "dev_size")
    if test_n + dev_n > n:
        raise ValueError(
            f"test_size {test_n} plus dev_size {dev_n} exceeds dataset size {n}"
        )

    rng = Rng(seed).spawn("split")
    perm = rng.permutation(n)

    if not stratify:
        test_idx = perm[:test_n]
        dev_idx = perm[test_n : test_n + dev_n]
        train_idx = perm[test_n + dev_n :]
    else:
        if ds.label_kind != "class":
            raise ValueError("stratified splitting requires class labels")
        num_classes = ds.num_classes
        by_class: list[list[int]] = [[] for _ in range(num_classes)]
        labels = ds.labels
        for pos in perm:
            by_class[labels[pos]].append(int(pos))
        counts = [len(members) for members in by_class]
        parts = 1 + (test_n > 0) + (dev_n > 0)
        thin = [c for c, cnt in enumerate(counts) if 0 < cnt < parts]
        if thin:
            raise ValueError(
                f"stratified split needs at least {parts} samples per class "
                f"(one per part); classes {thin} are smaller"
            )
        test_alloc = _largest_remainder(counts, test_n)
        remaining = [c - a for c, a in zip(counts, test_alloc)]
        dev_alloc = _largest_remainder(remaining, dev_n)
        test_list: list[int] = []
        dev_list: list[int] = []
        train_list: list[int] = []
        for members, t_n, d_n in zip(by_class, test_alloc, dev_alloc):
            test_list.extend(members[:t_n])
            dev_list.extend(members[t_n : t_n + d_n])
            train_list.extend(members[t_n + d_n :])
        test_idx, dev_idx, train_idx = test_list, dev_list, train_list

    return (
        ds.subset(sorted(int(i) for i in train_idx)),
        ds.subset(sorted(int(i) for i in dev_idx)),
        ds.subset(sorted(int(i) for i in test_idx)),
    )


def batch_indices(n: int, batch_size: int, shuffle: bool = False,
                  seed: int = 0, epoch: int = 0) -> list[np.ndarray]:
    """Index blocks covering range(n); order is seeded by (seed, epoch)."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = Rng(seed).spawn("batch", epoch).permutation(n) if shuffle else np.arange(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def batch(ds: LabeledDataset, batch_size: int, shuffle: bool = False,
          seed: int = 0, epoch: int = 0) -> list[LabeledDataset]:
    """Slice a dataset into batches; the last one may be short."""
    return [ds.subset(idx) for idx in batch_indices(len(ds), batch_size, shuffle, seed, epoch)]
