"""Query enrichment (phase 3).

A selected query is a set of KB formulas; asking it verbatim can be awkward
("is this whole formula correct?").  Enrichment widens the query with simple
consequences that hold exactly when the query does, giving the later
optimization phase cheap material to swap in: with

    F_plus  = Ent_T((K minus U_D) + B + U_P + Q)
    F_minus = Ent_T((K minus U_D) + B + U_P)

the implicit part is Q_impl = (F_plus minus F_minus) minus Q: consequences
that appear only once the query is assumed.  Ent_T extracts entailed
literals plus entailed binary implications over the DPI's atoms, so exactly
two Ent_T invocations happen per enrichment; this module's counters are the
audited record of that.

Members of K, B or U_P that resurface as entailments are filtered out of
Q_impl (syntactically, after normalizing associativity and commutativity):
the enriched query must not smuggle suspect formulas back in.  Dropping them
is harmless because any Q'' between Q and Q' has the same q-partition.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

from .dpi import DPI, union_positive
from .diag import Diagnosis
from .logic import (
    Formula,
    GLOBAL_STATS,
    entailed_binary_implications,
    entailed_literals,
    format_formula,
    normal_key,
)

_LOCK = threading.Lock()
_ENT_T_CALLS = 0
_SAT_PROBES = 0


@dataclass(frozen=True)
class EnrichCounters:
    ent_t_invocations: int
    sat_probes: int


def reasoner_call_count() -> EnrichCounters:
    """Totals since the last reset; one invocation = one combined
    literal-and-implication extraction."""
    with _LOCK:
        return EnrichCounters(_ENT_T_CALLS, _SAT_PROBES)


def reset_counters() -> None:
    global _ENT_T_CALLS, _SAT_PROBES
    with _LOCK:
        _ENT_T_CALLS = 0
        _SAT_PROBES = 0


def _ent_t(premises: list[Formula], dpi: DPI) -> set[Formula]:
    """One Ent_T invocation: entailed literals + binary implications."""
    global _ENT_T_CALLS, _SAT_PROBES
    before = GLOBAL_STATS.snapshot()[0]
    lits = entailed_literals(premises, dpi.atoms)
    impls = entailed_binary_implications(premises, dpi.atoms)
    after = GLOBAL_STATS.snapshot()[0]
    with _LOCK:
        _ENT_T_CALLS += 1
        _SAT_PROBES += after - before
    return lits | impls


@dataclass(frozen=True)
class EnrichResult:
    query: tuple[Formula, ...]   # Q' = Q followed by Q_impl
    q_impl: tuple[Formula, ...]  # deterministic generation order


def enrich_query(query: Sequence[Formula], diagnoses: Sequence[Diagnosis],
                 dpi: DPI) -> EnrichResult:
    """Q' = Q + Q_impl.  Exactly two Ent_T invocations, no other reasoner
    use beyond their internal probes."""
    q = list(query)
    if not q:
        raise ValueError("cannot enrich an empty query")
    union_d: set[int] = set()
    for d in diagnoses:
        union_d |= d.ids
    common = [f for i, f in enumerate(dpi.kb, start=1) if i not in union_d]
    premises = common + list(dpi.background) + list(union_positive(dpi))

    f_plus = _ent_t(premises + q, dpi)
    f_minus = _ent_t(premises, dpi)

    banned = {normal_key(f) for f in list(dpi.kb) + list(dpi.background)}
    banned |= {normal_key(f) for f in union_positive(dpi)}
    q_keys = {normal_key(f) for f in q}

    fresh = f_plus - f_minus
    q_impl = [f for f in _ordered(fresh, dpi)
              if normal_key(f) not in q_keys and normal_key(f) not in banned]
    return EnrichResult(tuple(q) + tuple(q_impl), tuple(q_impl))


def _ordered(formulas: set[Formula], dpi: DPI) -> list[Formula]:
    """Stable order: literals by atom-table position (positive before
    negative), then implications by antecedent/consequent position."""
    pos = {name: i for i, name in enumerate(dpi.atoms)}

    def key(f: Formula) -> tuple:
        from .logic import Atom, Implies, Not
        if isinstance(f, Atom):
            return (0, pos.get(f.name, len(pos)), 0)
        if isinstance(f, Not):
            return (0, pos.get(f.sub.name, len(pos)), 1)
        if isinstance(f, Implies):
            return (1, pos.get(f.lhs.name, len(pos)), pos.get(f.rhs.name, len(pos)))
        return (2, 0, 0)

    return sorted(formulas, key=lambda f: key(f) + (format_formula(f),))
