"""Reference codebase: representative implementation snippets per category,
embedded at load time."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Tuple

from .embedding import MODEL_ID, embed


class ModelUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class ReferenceEntry:
    category_id: str
    snippet: str
    embedding: Tuple[float, ...]


@dataclass(frozen=True)
class ReferenceCodebase:
    entries: Tuple[ReferenceEntry, ...]
    model_id: str

    def categories(self) -> set:
        return {e.category_id for e in self.entries}


def load_codebase(path: str, dim: int = 512) -> ReferenceCodebase:
    """Read JSON-lines of {"category", "snippet"} and embed every snippet."""
    entries: List[ReferenceEntry] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                category = str(doc["category"])
                snippet = str(doc["snippet"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise ModelUnavailable(f"{path}:{line_no}: bad codebase row: {exc}") from None
            entries.append(ReferenceEntry(
                category_id=category,
                snippet=snippet,
                embedding=tuple(embed(snippet, dim)),
            ))
    if not entries:
        raise ModelUnavailable(f"{path}: codebase is empty")
    dims = {len(e.embedding) for e in entries}
    if len(dims) != 1:
        raise ModelUnavailable(f"{path}: inconsistent embedding dimensions {dims}")
    return ReferenceCodebase(entries=tuple(entries), model_id=MODEL_ID)
