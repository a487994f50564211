"""Query selection inside a fixed q-partition.

The queries with exactly the q-partition of a search node are the minimal
hitting sets of its subset-minimal traits: a query must keep every D- member
refuted, and a D- member stays refuted precisely when the query hits its
trait.  Enumerating minimal hitting sets of the trait family in cost order
is therefore pure set manipulation; like phase 1 this never touches the
reasoner.

Cost criteria: "card" prefers the smallest query, "minsum" the smallest
total fault probability, "maxprob" the smallest worst single-formula fault
probability (a proxy for how hard the nastiest formula is to judge, which is
what makes a query comprehensible to the person answering it).
"""

from __future__ import annotations

from dataclasses import dataclass
from heapq import heappop, heappush
from itertools import islice
from typing import Iterator, Mapping

from .qpsearch import SearchNode, mask_to_ids

_KINDS = ("card", "minsum", "maxprob")


@dataclass(frozen=True)
class Criterion:
    kind: str = "card"
    prob: Mapping[int, float] | None = None  # formula id -> fault probability

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown criterion {self.kind!r}; pick one of {_KINDS}")
        if self.kind != "card":
            if self.prob is None:
                raise ValueError(f"criterion {self.kind!r} needs fault probabilities")
            bad = {i: p for i, p in self.prob.items() if not 0.0 < p < 1.0}
            if bad:
                raise ValueError(f"fault probabilities must be in (0, 1): {bad}")


def minimal_traits(node: SearchNode) -> set[frozenset[int]]:
    """Subset-minimal traits of the node's D- members, as formula-id sets."""
    masks = sorted(set(node.traits.values()))
    out = [t for t in masks if not any(o != t and (o | t) == t for o in masks)]
    return {mask_to_ids(t) for t in out}


def _cost_key(crit: Criterion, ids: frozenset[int]) -> tuple:
    ordered = tuple(sorted(ids))
    if crit.kind == "card":
        return (len(ids), ordered)
    probs = crit.prob
    assert probs is not None
    if crit.kind == "minsum":
        return (sum(probs[i] for i in ids), len(ids), ordered)
    top = max((probs[i] for i in ids), default=0.0)
    return (top, len(ids), ordered)


def _minimal_hitting_sets(traits: list[frozenset[int]],
                          crit: Criterion) -> Iterator[frozenset[int]]:
    """Uniform-cost tree over partial hitting sets; yields minimal ones in
    cost order.  All three cost keys are monotone under adding elements, so
    the first complete set popped for a given cost really is cost-minimal,
    and emitting in pop order with a subset filter yields exactly the
    subset-minimal hitting sets."""
    traits = sorted(traits, key=lambda t: (len(t), tuple(sorted(t))))
    heap: list[tuple[tuple, frozenset[int]]] = [(_cost_key(crit, frozenset()), frozenset())]
    seen: set[frozenset[int]] = set()
    emitted: list[frozenset[int]] = []
    while heap:
        _, current = heappop(heap)
        if current in seen:
            continue
        seen.add(current)
        if any(e <= current for e in emitted):
            continue
        unhit = next((t for t in traits if not (t & current)), None)
        if unhit is None:
            emitted.append(current)
            yield current
            continue
        for element in sorted(unhit):
            child = current | {element}
            if child not in seen:
                heappush(heap, (_cost_key(crit, child), child))


def select_query_for_q_partition(node: SearchNode,
                                 crit: Criterion = Criterion()) -> frozenset[int]:
    """Best query (by the criterion) with exactly the node's q-partition."""
    queries = all_minimal_queries(node, 1, crit)
    assert queries, "a canonical q-partition always admits its canonical query"
    return queries[0]


def all_minimal_queries(node: SearchNode, limit: int,
                        crit: Criterion = Criterion()) -> list[frozenset[int]]:
    """Up to `limit` minimal queries for the node, best cost first."""
    if node.cq_mask is None:
        raise ValueError("the initial search state is not a q-partition")
    if limit < 1:
        raise ValueError("limit must be positive")
    traits = [t for t in minimal_traits(node)]
    return list(islice(_minimal_hitting_sets(traits, crit), limit))
