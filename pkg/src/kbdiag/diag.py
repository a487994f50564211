"""Minimal conflicts and minimal diagnoses.

A conflict is a subset of K that is faulty together with the background and
positive test cases; a diagnosis is a subset of K whose removal repairs the
KB.  Minimal diagnoses are exactly the minimal hitting sets of the minimal
conflicts, which is what the hitting-set tree below exploits: it only ever
asks the reasoner for fresh minimal conflicts and reuses every conflict it
has seen as a tree label first.

All sets are formula-id sets (1-based, file order).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from heapq import heappop, heappush
from itertools import combinations
from typing import Sequence

from .dpi import DPI, faulty_ids

BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True)
class Diagnosis:
    ids: frozenset[int]

    def sorted(self) -> list[int]:
        return sorted(self.ids)

    def __str__(self) -> str:
        return "[" + ", ".join(map(str, sorted(self.ids))) + "]"


@dataclass(frozen=True)
class ConflictSet:
    ids: frozenset[int]

    def __str__(self) -> str:
        return "{" + ", ".join(map(str, sorted(self.ids))) + "}"


# ---------------------------------------------------------------------------
# QuickXPlain


def minimal_conflict(candidates: Sequence[int], dpi: DPI) -> ConflictSet | None:
    """One minimal conflict among `candidates`, or None if they are not faulty.

    Deterministic for a fixed candidate order: the divide-and-conquer always
    splits at the midpoint and recurses into the left half first.
    """
    cand = list(candidates)
    if not cand or not faulty_ids(dpi, frozenset(cand)):
        return None
    return ConflictSet(frozenset(_qx(dpi, [], cand, False)))


def _qx(dpi: DPI, background: list[int], cand: list[int], check: bool) -> list[int]:
    if check and faulty_ids(dpi, frozenset(background)):
        return []
    if len(cand) == 1:
        return list(cand)
    mid = len(cand) // 2
    left, right = cand[:mid], cand[mid:]
    d2 = _qx(dpi, background + left, right, bool(left))
    d1 = _qx(dpi, background + d2, left, bool(d2))
    return d1 + d2


# ---------------------------------------------------------------------------
# Hitting-set tree


def _prob_cost(ids: frozenset[int], log_odds: dict[int, float]) -> float:
    return sum(log_odds[i] for i in ids)


def leading_diagnoses(dpi: DPI, n: int, rank: str = "card",
                      warn: bool = True) -> list[Diagnosis]:
    """Up to n minimal diagnoses in rank order.

    rank="card" explores the tree breadth-first (smallest diagnoses first),
    rank="prob" uniform-cost by prior fault probability (most probable
    first).  Ties break lexicographically on the sorted id path, so the
    result order is deterministic.  A non-faulty KB has the single minimal
    diagnosis {} and no tree is built.  warn=False silences the
    fewer-than-two warning for callers to whom one diagnosis is success.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if rank not in ("card", "prob"):
        raise ValueError(f"unknown rank {rank!r}")
    if faulty_ids(dpi, frozenset()):
        from .dpi import AdmissibilityError
        raise AdmissibilityError("background and positive test cases are faulty")

    all_ids = frozenset(dpi.kb_ids())
    if not faulty_ids(dpi, all_ids):
        if warn:
            warnings.warn(
                "the KB is not faulty; {} is the sole minimal diagnosis and "
                "querying needs at least 2", stacklevel=2)
        return [Diagnosis(frozenset())]

    log_odds: dict[int, float] = {}
    if rank == "prob":
        probs = dpi.fault_probs
        log_odds = {i: math.log((1.0 - probs[i]) / probs[i]) for i in all_ids}

    def cost(ids: frozenset[int]) -> float:
        return float(len(ids)) if rank == "card" else _prob_cost(ids, log_odds)

    conflicts: list[frozenset[int]] = []  # discovery order, reused as labels
    found: list[Diagnosis] = []
    found_sets: set[frozenset[int]] = set()
    visited: set[frozenset[int]] = set()
    heap: list[tuple[float, tuple[int, ...], frozenset[int]]] = []
    heappush(heap, (cost(frozenset()), (), frozenset()))

    def minimize(ids: frozenset[int]) -> frozenset[int]:
        # uniform-cost with negative edge weights (fault prob > 0.5) can pop
        # a non-minimal hitting set; shrink greedily before emitting
        out = set(ids)
        for i in sorted(ids):
            trial = frozenset(out - {i})
            if not faulty_ids(dpi, all_ids - trial):
                out.discard(i)
        return frozenset(out)

    while heap and len(found) < n:
        _, _, path = heappop(heap)
        if path in visited:
            continue
        visited.add(path)
        if any(d.ids <= path for d in found):
            continue
        label = next((c for c in conflicts if not (c & path)), None)
        if label is None:
            rest = sorted(all_ids - path)
            conflict = minimal_conflict(rest, dpi)
            if conflict is not None:
                conflicts.append(conflict.ids)
                label = conflict.ids
        if label is None:
            diag = minimize(path)
            if diag not in found_sets and not any(d.ids <= diag for d in found):
                found_sets.add(diag)
                found.append(Diagnosis(diag))
            continue
        for element in sorted(label):
            child = path | {element}
            if child not in visited:
                heappush(heap, (cost(child), tuple(sorted(child)), child))

    if warn and len(found) < 2:
        warnings.warn(
            f"only {len(found)} minimal diagnosis found; querying needs at least 2",
            stacklevel=2)
    return found


# ---------------------------------------------------------------------------
# Brute-force oracles.  Exhaustive subset enumeration, guarded to small KBs;
# used to cross-check the tree and the duality between conflicts and
# diagnoses.


def _guard(dpi: DPI):
    if len(dpi.kb) > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force is limited to |K| <= {BRUTE_FORCE_LIMIT}, got {len(dpi.kb)}")


def brute_force_diagnoses(dpi: DPI) -> set[frozenset[int]]:
    """All minimal diagnoses by ascending-cardinality subset enumeration."""
    _guard(dpi)
    all_ids = sorted(dpi.kb_ids())
    found: list[frozenset[int]] = []
    for size in range(len(all_ids) + 1):
        for combo in combinations(all_ids, size):
            d = frozenset(combo)
            if any(f <= d for f in found):
                continue
            if not faulty_ids(dpi, frozenset(all_ids) - d):
                found.append(d)
    return set(found)


def brute_force_conflicts(dpi: DPI) -> set[frozenset[int]]:
    """All minimal conflicts by ascending-cardinality subset enumeration."""
    _guard(dpi)
    all_ids = sorted(dpi.kb_ids())
    found: list[frozenset[int]] = []
    for size in range(1, len(all_ids) + 1):
        for combo in combinations(all_ids, size):
            c = frozenset(combo)
            if any(f <= c for f in found):
                continue
            if faulty_ids(dpi, c):
                found.append(c)
    return set(found)
