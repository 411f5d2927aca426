"""Seeded k-fold index splitting."""

from __future__ import annotations

import numpy as np

from ._validation import check_positive_int, derive_rng
from .exceptions import ConfigError, DataError


def kfold_split(n, folds, stratify_labels=None, seed=0):
    """Split ``range(n)`` into ``folds`` (train, test) index pairs.

    With ``stratify_labels`` each class is shuffled and dealt round-robin
    across folds, so every fold's class counts differ from the global
    proportion by less than one sample. Without labels the indices are
    shuffled and dealt the same way. Test sets are disjoint and cover every
    index; both halves of each pair are sorted.
    """
    n = check_positive_int(n, "n")
    folds = check_positive_int(folds, "folds", minimum=2)
    rng = derive_rng(seed, 0xF01D)
    fold_of = np.empty(n, dtype=int)
    if stratify_labels is None:
        if n < folds:
            raise DataError(f"cannot split {n} samples into {folds} folds")
        groups = [np.arange(n)]
    else:
        labels = np.asarray(stratify_labels)
        if labels.shape != (n,):
            raise DataError(f"expected {n} stratification labels, got {labels.shape}")
        groups = [np.flatnonzero(labels == c) for c in np.unique(labels)]
        for c, g in zip(np.unique(labels), groups):
            if len(g) < folds:
                raise DataError(
                    f"class {c!r} has {len(g)} samples, fewer than folds={folds}"
                )
    offset = 0
    for g in groups:
        g = rng.permutation(g)
        # continue dealing where the previous class stopped so fold sizes
        # stay balanced overall
        fold_of[g] = (np.arange(len(g)) + offset) % folds
        offset += len(g)
    all_idx = np.arange(n)
    splits = []
    for f in range(folds):
        test = all_idx[fold_of == f]
        if len(test) == 0:
            raise ConfigError(f"fold {f} is empty")
        splits.append((all_idx[fold_of != f], test))
    return splits
