"""Small string-matching helpers shared by the parser and column resolution."""

from __future__ import annotations


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1,
                               current[j - 1] + 1,
                               previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def normalized_edit_distance(a: str, b: str) -> float:
    """Levenshtein distance divided by the longer length; 0.0 for two empties."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def fuzzy_match(name: str, candidates: list[str], threshold: float = 0.25) -> list[str]:
    """Candidates within the normalized-edit-distance threshold, best first.

    Exact (case-insensitive) hits win outright.
    """
    lowered = name.lower()
    exact = [c for c in candidates if c.lower() == lowered]
    if exact:
        return exact[:1]
    scored = [(normalized_edit_distance(lowered, c.lower()), c) for c in candidates]
    close = sorted((s, c) for s, c in scored if s <= threshold)
    if not close:
        return []
    best = close[0][0]
    return [c for s, c in close if s <= best + 1e-12]
