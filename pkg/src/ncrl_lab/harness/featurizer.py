"""Signed hashing featurizer for small real text corpora.

Tokens hash to a bucket and a sign with a keyed digest, so features are
stable across processes (unlike the interpreter's salted hash). Rows are
L2-normalized; an empty text stays a zero vector.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

_TOKEN = re.compile(r"[a-z0-9]+")


def hashing_featurizer(texts, dim: int, seed: int = 0) -> np.ndarray:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    key = (int(seed) & (1 << 64) - 1).to_bytes(8, "little")
    out = np.zeros((len(texts), dim))
    for row, text in enumerate(texts):
        for token in _TOKEN.findall(text.lower()):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8,
                                     key=key).digest()
            h = int.from_bytes(digest, "little")
            out[row, (h >> 1) % dim] += 1.0 if h & 1 else -1.0
        norm = np.linalg.norm(out[row])
        if norm > 0:
            out[row] /= norm
    return out
