"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def hash_keys(keys: list, dim: int) -> np.ndarray:
    return np.fromiter((fnv1a64(k) % dim for k in keys), dtype=np.int64, count=len(keys))


def row_logits(weights: np.ndarray, feats: np.ndarray, scale: float) -> np.ndarray:
    return weights[feats].sum(axis=1) * scale


def segment_log_softmax(logits: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    starts = offsets[:-1]
    sizes = np.diff(offsets)
    seg_max = np.maximum.reduceat(logits, starts)
    shifted = logits - np.repeat(seg_max, sizes)
    lse = np.log(np.add.reduceat(np.exp(shifted), starts))
    return shifted - np.repeat(lse, sizes)


def scatter_rows(out: np.ndarray, feats: np.ndarray, coef: np.ndarray) -> None:
    k = feats.shape[1]
    out += np.bincount(feats.ravel(), weights=np.repeat(coef, k), minlength=out.shape[0])
