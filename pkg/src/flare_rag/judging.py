"""Answer correctness by normalized containment.

A predicted answer counts as correct when any normalized gold answer is a
substring of the normalized prediction. Normalization: lowercase, map every
character that is neither alphanumeric nor whitespace to a space, collapse
whitespace runs.
"""

from __future__ import annotations

from typing import Iterable


def normalize_answer(text: str) -> str:
    cleaned = "".join(ch if ch.isalnum() or ch.isspace() else " " for ch in text.lower())
    return " ".join(cleaned.split())


def judge(answer: str, gold_answers: Iterable[str]) -> bool:
    normalized = normalize_answer(answer)
    return any(normalize_answer(gold) in normalized for gold in gold_answers)
