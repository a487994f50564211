"""Reasoner-free search over canonical q-partitions.

Given leading diagnoses D, a query splits D into <D+, D-, D0>.  Instead of
guessing queries and classifying them with the reasoner, the search walks the
space of canonical q-partitions directly: pick a seed D+ and take the
canonical query CQ = Disc_D minus the union of D+, where Disc_D is the union
of all leading diagnoses minus their intersection.  Every step is pure set
algebra, so phase 1 costs zero reasoner calls; the reasoner only ever sees
the finished query (phases 3/4) or test assertions.

Formula-id sets are carried as int bitmasks (bit i-1 for formula id i): the
per-step work is a handful of word-parallel AND/OR/NOT operations, quasi
constant in |K| at desk scale, which is what keeps phase 1 well under the
per-query latency budget even at |D| = 40.

Successor relation: for a canonical q-partition with parts <D+, D->, each
D_i in D- has the trait D_i minus the union of D+ (its private share of the
canonical query).  Diagnoses with equal traits form equivalence classes;
moving one class with a subset-minimal trait from D- to D+ yields the next
canonical q-partition.  With fewer than two classes there is no successor.
The initial state <{}, D, {}> is not itself a q-partition; its successors
seed the search with one singleton D+ per diagnosis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .dpi import DPI, QPartition
from .diag import Diagnosis

DEFAULT_BUDGET = 10_000
ENUMERATE_LIMIT = 15
DEFAULT_THRESHOLD = {"spl": 0.0, "ent": 0.05}


def ids_to_mask(ids: Iterable[int]) -> int:
    mask = 0
    for i in ids:
        mask |= 1 << (i - 1)
    return mask


def mask_to_ids(mask: int) -> frozenset[int]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def _diag_masks(diagnoses: Sequence[Diagnosis]) -> list[int]:
    return [ids_to_mask(d.ids) for d in diagnoses]


def discrimination_formulas(diagnoses: Sequence[Diagnosis], dpi: DPI) -> frozenset[int]:
    """Disc_D: formulas in the union of the diagnoses but not their
    intersection.  Only these can tell leading diagnoses apart."""
    if len(diagnoses) < 2:
        raise ValueError("need at least two leading diagnoses")
    masks = _diag_masks(diagnoses)
    union = 0
    inter = masks[0]
    for m in masks:
        union |= m
        inter &= m
    return mask_to_ids(union & ~inter)


def canonical_query(dplus: Iterable[int], diagnoses: Sequence[Diagnosis],
                    dpi: DPI) -> frozenset[int] | None:
    """CQ for a seed D+ (given as diagnosis indices), or None when undefined
    (the seed union already covers all discrimination formulas)."""
    seed = frozenset(dplus)
    indices = frozenset(range(len(diagnoses)))
    if not seed or not seed < indices:
        raise ValueError("the seed must be a non-empty proper subset of the diagnoses")
    masks = _diag_masks(diagnoses)
    union = 0
    inter = masks[0]
    for m in masks:
        union |= m
        inter &= m
    disc = union & ~inter
    u_plus = 0
    for i in seed:
        u_plus |= masks[i]
    cq = disc & ~u_plus
    return mask_to_ids(cq) if cq else None


@dataclass(frozen=True)
class SearchNode:
    """A canonical q-partition (D0 is empty by construction).

    dplus/dminus hold diagnosis indices; cq_mask/traits hold formula-id
    bitmasks.  cq_mask is None only for the synthetic initial state.
    """

    dplus: frozenset[int]
    dminus: frozenset[int]
    union_mask: int
    cq_mask: int | None
    traits: Mapping[int, int] = field(default_factory=dict)

    def cq_ids(self) -> frozenset[int]:
        return mask_to_ids(self.cq_mask) if self.cq_mask else frozenset()

    def trait_ids(self) -> dict[int, frozenset[int]]:
        return {i: mask_to_ids(m) for i, m in self.traits.items()}

    def partition(self) -> QPartition:
        return QPartition(self.dplus, self.dminus, frozenset())


def initial_node(diagnoses: Sequence[Diagnosis]) -> SearchNode:
    return SearchNode(frozenset(), frozenset(range(len(diagnoses))), 0, None)


def node_for_dplus(dplus: Iterable[int], diagnoses: Sequence[Diagnosis],
                   dpi: DPI) -> SearchNode:
    """SearchNode for an explicit D+ choice; the choice must admit a CQ."""
    seed = frozenset(dplus)
    masks = _diag_masks(diagnoses)
    indices = frozenset(range(len(diagnoses)))
    if not seed or not seed < indices:
        raise ValueError("D+ must be a non-empty proper subset of the diagnoses")
    union_all = 0
    inter = masks[0]
    for m in masks:
        union_all |= m
        inter &= m
    node = _make_node(seed, masks, union_all & ~inter, indices)
    if not node.cq_mask:
        raise ValueError("this D+ has no canonical query")
    if any(t == 0 for t in node.traits.values()):
        raise ValueError("D+ is not union-closed: it misses a covered diagnosis")
    return node


def _make_node(dplus: frozenset[int], masks: list[int], disc: int,
               indices: frozenset[int]) -> SearchNode:
    union = 0
    for i in dplus:
        union |= masks[i]
    dminus = indices - dplus
    traits = {i: masks[i] & ~union for i in dminus}
    return SearchNode(dplus, dminus, union, disc & ~union, traits)


def expand_cqp(node: SearchNode, diagnoses: Sequence[Diagnosis],
               dpi: DPI) -> list[SearchNode]:
    """Successor q-partitions; pure bit algebra, no reasoner.

    From the initial state: one singleton-D+ node per diagnosis.  From a
    q-partition: one node per subset-minimal-trait equivalence class, or []
    when D- has a single class.  Successor CQs are never empty; this is
    asserted, not checked with the reasoner.
    """
    masks = _diag_masks(diagnoses)
    indices = frozenset(range(len(diagnoses)))
    union_all = 0
    inter = masks[0] if masks else 0
    for m in masks:
        union_all |= m
        inter &= m
    disc = union_all & ~inter

    if node.cq_mask is None:
        out = [_make_node(frozenset({i}), masks, disc, indices)
               for i in sorted(indices)]
        assert all(s.cq_mask for s in out), "singleton seeds always have a CQ"
        return out

    classes: dict[int, list[int]] = {}
    for i in sorted(node.dminus):
        classes.setdefault(node.traits[i], []).append(i)
    if len(classes) < 2:
        return []
    traits = list(classes)
    out = []
    for t in traits:
        if any(o != t and (o | t) == t for o in traits):
            continue  # some other class trait is a proper subset
        members = classes[t]
        succ = _make_node(node.dplus | frozenset(members), masks, disc, indices)
        assert succ.cq_mask, "minimal-trait moves preserve a non-empty CQ"
        out.append(succ)
    out.sort(key=lambda s: tuple(sorted(s.dplus)))
    return out


# ---------------------------------------------------------------------------
# Measures


@dataclass(frozen=True)
class Measure:
    """Query-quality measure; lower is better.

    kind "ent" scores one minus the information gain of the answer, "spl"
    the worst-case number of surviving diagnoses (split evenness).  "rio" is
    reserved and unimplemented.  probs maps diagnosis index to probability;
    None means uniform.  threshold overrides the kind's goal tolerance.
    """

    kind: str = "ent"
    probs: Mapping[int, float] | None = None
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in ("ent", "spl", "rio"):
            raise ValueError(f"unknown measure kind {self.kind!r}")

    def tolerance(self) -> float:
        if self.threshold is not None:
            return self.threshold
        if self.kind not in DEFAULT_THRESHOLD:
            raise NotImplementedError(f"measure kind {self.kind!r} is reserved")
        return DEFAULT_THRESHOLD[self.kind]


def _plogp(p: float) -> float:
    return p * math.log2(p) if p > 0.0 else 0.0


def _check_probs(probs: Mapping[int, float], indices: Iterable[int]) -> None:
    total = sum(probs[i] for i in indices)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"diagnosis probabilities sum to {total}, expected 1")


def evaluate_measure(m: Measure, partition: QPartition | SearchNode,
                     probs: Mapping[int, float] | None = None) -> float:
    """Score a q-partition; validates that probabilities are normalized."""
    dplus, dminus, dzero = partition.dplus, partition.dminus, (
        frozenset() if isinstance(partition, SearchNode) else partition.dzero)
    indices = dplus | dminus | dzero
    if probs is None:
        probs = m.probs
    if probs is None:
        probs = {i: 1.0 / len(indices) for i in indices}
    _check_probs(probs, indices)
    return _eval(m, dplus, dminus, dzero, probs)


def _eval(m: Measure, dplus, dminus, dzero, probs) -> float:
    if m.kind not in ("ent", "spl"):
        raise NotImplementedError(f"measure kind {m.kind!r} is reserved")
    if m.kind == "spl":
        return abs(len(dplus) - len(dminus)) + len(dzero)
    p_zero = sum(probs[i] for i in dzero)
    p_yes = sum(probs[i] for i in dplus) + 0.5 * p_zero
    p_no = sum(probs[i] for i in dminus) + 0.5 * p_zero
    return _plogp(p_yes) + _plogp(p_no) + p_zero + 1.0


def spl_floor(n_diagnoses: int) -> int:
    """Best reachable SPL over empty-D0 partitions: parity of |D|."""
    return n_diagnoses % 2


@dataclass
class QPSearchResult:
    node: SearchNode
    value: float
    goal_met: bool
    budget_exhausted: bool
    nodes_expanded: int
    nodes_generated: int
    generated: list[SearchNode]


def find_q_partition(diagnoses: Sequence[Diagnosis], dpi: DPI, m: Measure,
                     budget: int = DEFAULT_BUDGET) -> QPSearchResult:
    """Depth-first best-first search for a good canonical q-partition.

    At each node all successors are generated and scored; the goal test
    (value within tolerance of the measure's floor) fires on generation, and
    the walk descends into the best unvisited successor first, backtracking
    when a subtree is exhausted.  Already-seen q-partitions are recognized by
    their D+ union fingerprint and never regenerated.  For "ent", subtrees
    rooted at p(D+) >= 0.5 are pruned: p(D+) only grows along a path and ENT
    is increasing in p(D+) from 0.5 on, so nothing better can live there.

    Budget counts expanded nodes; on exhaustion the best node seen so far is
    returned with budget_exhausted set.
    """
    if len(diagnoses) < 2:
        raise ValueError("need at least two leading diagnoses")
    probs = m.probs
    if probs is None:
        probs = {i: 1.0 / len(diagnoses) for i in range(len(diagnoses))}
    _check_probs(probs, range(len(diagnoses)))

    floor = float(spl_floor(len(diagnoses))) if m.kind == "spl" else 0.0
    bound = floor + m.tolerance()

    visited: set[int] = set()
    generated: list[SearchNode] = []
    best: tuple[float, SearchNode] | None = None
    expanded = 0
    out_of_budget = False

    def score(node: SearchNode) -> float:
        return _eval(m, node.dplus, node.dminus, (), probs)

    def descend(node: SearchNode) -> SearchNode | None:
        nonlocal expanded, best, out_of_budget
        if expanded >= budget:
            out_of_budget = True
            return None
        expanded += 1
        scored: list[tuple[float, int, tuple[int, ...], SearchNode]] = []
        for succ in expand_cqp(node, diagnoses, dpi):
            if succ.union_mask in visited:
                continue
            visited.add(succ.union_mask)
            generated.append(succ)
            scored.append((score(succ), len(succ.dplus),
                           tuple(sorted(succ.dplus)), succ))
        scored.sort(key=lambda e: e[:3])
        for value, _, _, succ in scored:
            if best is None or value < best[0]:
                best = (value, succ)
            if value <= bound:
                return succ
        for value, _, _, succ in scored:
            if m.kind == "ent":
                p_plus = sum(probs[i] for i in succ.dplus)
                if p_plus >= 0.5:
                    continue
            hit = descend(succ)
            if hit is not None:
                return hit
            if out_of_budget:
                return None
        return None

    goal = descend(initial_node(diagnoses))
    if goal is not None:
        return QPSearchResult(goal, score(goal), True, False,
                              expanded, len(generated), generated)
    assert best is not None, "the initial state always has successors"
    return QPSearchResult(best[1], best[0], False, out_of_budget,
                          expanded, len(generated), generated)


def enumerate_cqps(diagnoses: Sequence[Diagnosis], dpi: DPI) -> set[QPartition]:
    """Every canonical q-partition, by exhausting all 2^|D|-2 seeds.

    Distinct seeds with the same D+ union give the same q-partition, so the
    result is deduplicated on the union fingerprint.  Guarded to |D| <= 15.
    """
    k = len(diagnoses)
    if k < 2:
        raise ValueError("need at least two leading diagnoses")
    if k > ENUMERATE_LIMIT:
        raise ValueError(f"enumeration is limited to |D| <= {ENUMERATE_LIMIT}")
    masks = _diag_masks(diagnoses)
    union_all = 0
    for mmask in masks:
        union_all |= mmask
    seen: set[int] = set()
    out: set[QPartition] = set()
    for seed_bits in range(1, (1 << k) - 1):
        union = 0
        for i in range(k):
            if seed_bits & (1 << i):
                union |= masks[i]
        if union == union_all or union in seen:
            continue
        seen.add(union)
        dplus = frozenset(i for i in range(k) if masks[i] & ~union == 0)
        out.add(QPartition(dplus, frozenset(range(k)) - dplus, frozenset()))
    return out


def survey_empty_dzero_qps(diagnoses: Sequence[Diagnosis], dpi: DPI,
                           max_kb: int = 12) -> tuple[set[QPartition], set[QPartition]]:
    """Reasoner-based sweep for empty-D0 q-partitions that are not canonical.

    Enumerates every non-empty subset of K as a query, classifies it with the
    reasoner, and splits the empty-D0 results into (canonical, non-canonical).
    This reports on the open question of whether non-canonical empty-D0
    q-partitions exist instead of assuming they do not.  K-subsets are the
    natural finite query space; the sweep says nothing about queries built
    from formulas outside K.
    """
    from .dpi import q_partition_of
    if len(dpi.kb) > max_kb:
        raise ValueError(f"survey is limited to |K| <= {max_kb}")
    canonical = enumerate_cqps(diagnoses, dpi)
    seen_canonical: set[QPartition] = set()
    rogue: set[QPartition] = set()
    ids = list(dpi.kb_ids())
    for bits in range(1, 1 << len(ids)):
        query = [dpi.kb[i - 1] for pos, i in enumerate(ids) if bits & (1 << pos)]
        qp = q_partition_of(query, diagnoses, dpi)
        if qp.dzero or not qp.dplus or not qp.dminus:
            continue
        if qp in canonical:
            seen_canonical.add(qp)
        else:
            rogue.add(qp)
    return seen_canonical, rogue
