"""Classification service: nearest-category search plus validation."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

from .codebase import ModelUnavailable, ReferenceCodebase
from .embedding import cosine, embed


class ValidatorTimeout(RuntimeError):
    pass


# a validator answers with raw text; the service parses the constrained
# schema {"verdict": "confirm"|"reject"} out of it
Validator = Callable[[str, str, str], str]


def nearest_category(source_code: str, codebase: ReferenceCodebase) -> Tuple[str, float]:
    """Argmax-similarity category for a decoded function's source."""
    if not source_code:
        raise ModelUnavailable("empty source code")
    if not codebase.entries:
        raise ModelUnavailable("codebase has no entries")
    query = embed(source_code, dim=len(codebase.entries[0].embedding))
    best_cat, best_sim = codebase.entries[0].category_id, -1.0
    for entry in codebase.entries:
        sim = cosine(query, entry.embedding)
        if sim > best_sim:
            best_cat, best_sim = entry.category_id, sim
    return best_cat, best_sim


def validate(category_id: str, signature: str, source_code: str,
             validator: Optional[Validator], similarity: float,
             timeout_s: float = 30.0) -> dict:
    """Second-stage check of the nearest-category result.

    Pass-through mode (no validator): validated=True with the similarity as
    confidence. With a validator, only a conforming confirm verdict
    validates; anything else (rejection, malformed payload) does not.
    """
    if validator is None:
        return {"validated": True, "confidence": similarity}
    with ThreadPoolExecutor(max_workers=1) as pool:
        future = pool.submit(validator, category_id, signature, source_code)
        try:
            raw = future.result(timeout=timeout_s)
        except FutureTimeout:
            raise ValidatorTimeout(f"validator exceeded {timeout_s}s") from None
    try:
        doc = json.loads(raw)
        verdict = doc["verdict"]
    except (json.JSONDecodeError, TypeError, KeyError):
        return {"validated": False, "confidence": similarity,
                "diagnostic": "non-conforming validator response"}
    if verdict == "confirm":
        return {"validated": True, "confidence": similarity}
    return {"validated": False, "confidence": similarity}


@dataclass
class ClassifierService:
    """One classify() call per protocol request."""

    codebase: ReferenceCodebase
    validator: Optional[Validator] = None
    min_similarity: float = 0.5  # distrust floor for the nearest match
    validator_timeout_s: float = 30.0

    def classify(self, signature: str, source_code: str) -> dict:
        # callers without source retrieval send only the signature; such
        # queries stay answerable but usually land under the distrust floor
        query = source_code or signature
        category, similarity = nearest_category(query, self.codebase)
        if similarity < self.min_similarity:
            return {"category": category, "confidence": similarity, "validated": False}
        outcome = validate(category, signature, source_code, self.validator,
                           similarity, self.validator_timeout_s)
        return {
            "category": category,
            "confidence": outcome["confidence"],
            "validated": outcome["validated"],
        }


def confirm_validator(category_id: str, signature: str, source_code: str) -> str:
    return json.dumps({"verdict": "confirm"})


def reject_validator(category_id: str, signature: str, source_code: str) -> str:
    """Scripted rejection, used as a test fixture for the NEW_CATEGORY path."""
    return json.dumps({"verdict": "reject"})
