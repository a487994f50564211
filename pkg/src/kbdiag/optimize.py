"""Query optimization (phase 4).

The enriched query Q' = Q + Q_impl usually contains more than one minimal
q-partition-preserving subset.  optimizeQuery picks a good one: it sorts Q'
so that implicit formulas come first and explicit KB formulas follow in
ascending fault probability, then runs minQ, a QuickXPlain-style
divide-and-conquer that returns a subset-minimal preserving subset while
preferentially retaining elements that appear early in the order.  The net
effect: if some minimal preserving subset avoids the original KB formulas
entirely, the result contains none of them; otherwise the explicit formulas
that do remain are the individually least suspect ones.

Preservation is checked against D- only: X keeps the reference q-partition
iff X is non-empty and K*_i + X is faulty for every D_i in D-.  The D+ side
needs no check for subsets of Q': every member is entailed by each K*_i with
i in D+ (that is requirement (2) of enrichment), and entailment of a subset
is monotone.  The D- check is also monotone upward within Q', which is what
makes minQ's divide-and-conquer sound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .dpi import DPI, QPartition, is_faulty, k_star
from .diag import Diagnosis
from .logic import Formula


def is_qp_preserving(x: Iterable[Formula], ref: QPartition,
                     diagnoses: Sequence[Diagnosis], dpi: DPI) -> bool:
    """Does asking X instead of Q' leave the reference q-partition intact?"""
    formulas = list(x)
    if not formulas:
        return False
    for idx in sorted(ref.dminus):
        solution = k_star(dpi, diagnoses[idx].ids)
        if not is_faulty(solution + formulas, dpi):
            return False
    return True


def min_q(ordered: Sequence[Formula], ref: QPartition,
          diagnoses: Sequence[Diagnosis], dpi: DPI,
          pred: Callable[[list[Formula]], bool] | None = None) -> list[Formula]:
    """Subset-minimal preserving subset of `ordered`, earlier elements
    preferentially retained.  The input itself must be preserving."""
    items = list(ordered)
    if not items:
        raise ValueError("cannot minimize an empty query")
    if pred is None:
        pred = lambda xs: is_qp_preserving(xs, ref, diagnoses, dpi)
    return _minq([], False, items, pred)


def _minq(background: list[Formula], has_delta: bool, items: list[Formula],
          pred: Callable[[list[Formula]], bool]) -> list[Formula]:
    if has_delta and pred(background):
        return []
    if len(items) == 1:
        return list(items)
    mid = len(items) // 2
    left, right = items[:mid], items[mid:]
    d2 = _minq(background + left, True, right, pred)
    d1 = _minq(background + d2, bool(d2), left, pred)
    return d1 + d2


@dataclass(frozen=True)
class OptimizeResult:
    query: tuple[Formula, ...]
    kept_ids: frozenset[int]          # explicit KB formulas that survived
    kept_impl: tuple[Formula, ...]    # implicit formulas that survived
    preserving_checks: int


def optimize_query(query_ids: Iterable[int], q_impl: Sequence[Formula],
                   ref: QPartition, diagnoses: Sequence[Diagnosis], dpi: DPI,
                   probs: Mapping[int, float] | None = None) -> OptimizeResult:
    """Minimize the enriched query against the reference q-partition.

    query_ids are the explicit (phase-2) formulas by KB id; q_impl the
    enrichment in its stable order.  Explicit formulas are sorted by
    ascending fault probability (ties by id) behind the implicit block.
    The preserving-check count is at most 2 * |Q'| and is reported in the
    result for auditability.
    """
    if probs is None:
        probs = dpi.fault_probs
    ids = sorted(query_ids)
    if not ids and not q_impl:
        raise ValueError("nothing to optimize")
    explicit = sorted(ids, key=lambda i: (probs[i], i))
    ordered: list[Formula] = list(q_impl) + [dpi.kb[i - 1] for i in explicit]

    checks = 0

    def pred(xs: list[Formula]) -> bool:
        nonlocal checks
        checks += 1
        return is_qp_preserving(xs, ref, diagnoses, dpi)

    kept = min_q(ordered, ref, diagnoses, dpi, pred)
    impl_set = set(q_impl)
    kept_impl = tuple(f for f in kept if f in impl_set)
    formula_id = {id(dpi.kb[i - 1]): i for i in ids}
    kept_ids = frozenset(formula_id[id(f)] for f in kept if id(f) in formula_id)
    assert checks <= 2 * len(ordered), "minQ exceeded its probe budget"
    return OptimizeResult(tuple(kept), kept_ids, kept_impl, checks)
