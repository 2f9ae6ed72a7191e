"""Deterministic code embeddings: hashed token n-gram vectors.

The embedding model is configuration, not contract: anything with exact
self-similarity and sane token-overlap ordering works here. Hashed n-grams
need no model weights, are stable across processes (hashing goes through
md5, not the randomized builtin hash), and all components are non-negative,
so cosine similarity already lives in [0, 1].
"""

from __future__ import annotations

import hashlib
import math
import re
from typing import Dict, List, Sequence

MODEL_ID = "token-3gram-hash-v1"

_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+")
_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z0-9]+|[A-Z]+|\d+")


def tokenize(source_code: str) -> List[str]:
    """Lowercased word tokens; punctuation carries no signal and is dropped.
    camelCase/underscore identifiers also contribute their parts, so
    `obscureTransfer` still overlaps with `transfer`."""
    out: List[str] = []
    for tok in _TOKEN_RE.findall(source_code):
        out.append(tok.lower())
        if tok[0].isalpha() or tok[0] == "_":
            parts = [p.lower() for p in _CAMEL_RE.findall(tok)]
            if len(parts) > 1:
                out.extend(parts)
    return out


def _bucket(gram: str, dim: int) -> int:
    digest = hashlib.md5(gram.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") % dim


def embed(source_code: str, dim: int = 512) -> List[float]:
    """L2-normalized hashed counts of token unigrams and trigrams."""
    tokens = tokenize(source_code)
    counts: Dict[int, float] = {}
    for tok in tokens:
        counts[_bucket("1:" + tok, dim)] = counts.get(_bucket("1:" + tok, dim), 0.0) + 1.0
    for i in range(len(tokens) - 2):
        gram = "3:" + "\x1f".join(tokens[i:i + 3])
        counts[_bucket(gram, dim)] = counts.get(_bucket(gram, dim), 0.0) + 1.0
    vec = [0.0] * dim
    for idx, val in counts.items():
        vec[idx] = val
    norm = math.sqrt(sum(v * v for v in vec))
    if norm > 0:
        vec = [v / norm for v in vec]
    return vec


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    score = sum(x * y for x, y in zip(a, b))
    return min(1.0, max(0.0, score))
