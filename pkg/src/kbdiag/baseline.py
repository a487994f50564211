"""The classic generate-and-test query method, kept as a measuring stick.

For each seed subset S of the leading diagnoses it computes the common
Ent_T entailments of the seed's repaired KBs as a candidate query, has the
reasoner classify every leading diagnosis against it, scores the resulting
q-partition under the measure, and finally minimizes the best query found.
The candidate space is all 2^|D| - 2 seeds (optionally a seeded random
fraction), and every candidate costs reasoner work: this is precisely the
bill the q-partition search avoids, so the module's job is to present that
bill accurately.  All solver probes and Ent_T extractions are counted, and
per-diagnosis Ent_T results are cached so the count is not inflated by
repetition across seeds.

Minimization is only applied when the best q-partition has an empty D0: the
preserving check is monotone on the D- side and entailment keeps D+ stable
under subsets, but a D0 membership ("neither entailed nor refuted") can flip
when formulas are dropped, and a changed partition would invalidate the
reported value.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from typing import Sequence

from .diag import Diagnosis
from .dpi import DPI, QPartition, k_star, q_partition_of
from .logic import (Formula, entailed_binary_implications, entailed_literals,
                    format_formula, reasoner_usage)
from .optimize import min_q
from .qpsearch import Measure, evaluate_measure


@dataclass(frozen=True)
class StdQueryResult:
    query: tuple[Formula, ...]
    partition: QPartition
    value: float
    sat_probes: int
    ent_t_calls: int       # one per distinct repaired KB extracted
    seeds_evaluated: int
    seeds_total: int       # size of the (possibly sampled) candidate pool
    timed_out: bool
    elapsed_ms: float


def std_method_query(diagnoses: Sequence[Diagnosis], dpi: DPI, m: Measure,
                     fraction: float = 1.0, seed: int = 0,
                     timeout_s: float | None = None) -> StdQueryResult:
    """Best query over the sampled seed pool, by exhaustive classification.

    fraction < 1 draws that share of the pool with the given seed; the walk
    order stays ascending either way, so equal arguments give equal results.
    On timeout the best candidate seen so far is returned with the flag set.
    """
    n = len(diagnoses)
    if n < 2:
        raise ValueError("need at least two leading diagnoses")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    pool = list(range(1, (1 << n) - 1))
    if fraction < 1.0:
        rng = random.Random(seed)
        take = max(1, math.ceil(fraction * len(pool)))
        pool = sorted(rng.sample(pool, take))

    t0 = time.perf_counter()
    best: tuple[tuple[float, int], list[Formula], QPartition] | None = None
    ent_cache: dict[int, frozenset[Formula]] = {}
    evaluated = 0
    timed_out = False

    with reasoner_usage() as usage:
        for mask in pool:
            if timeout_s is not None and time.perf_counter() - t0 > timeout_s:
                timed_out = True
                break
            common: frozenset[Formula] | None = None
            for i in range(n):
                if not mask >> i & 1:
                    continue
                if i not in ent_cache:
                    solution = k_star(dpi, diagnoses[i].ids)
                    found = set(entailed_literals(solution, dpi.atoms))
                    found |= entailed_binary_implications(solution, dpi.atoms)
                    ent_cache[i] = frozenset(found)
                common = ent_cache[i] if common is None else common & ent_cache[i]
                if not common:
                    break
            evaluated += 1
            if not common:
                continue
            query = sorted(common, key=format_formula)
            qp = q_partition_of(query, diagnoses, dpi)
            if not qp.dminus:
                continue
            key = (evaluate_measure(m, qp), mask)
            if best is None or key < best[0]:
                best = (key, query, qp)

        if best is not None and not best[2].dzero:
            minimized = min_q(best[1], best[2], diagnoses, dpi)
            best = (best[0], minimized, best[2])

    if best is None:
        if timed_out:
            raise RuntimeError("timed out before any seed yielded a query")
        raise RuntimeError("no seed yields a discriminating common-entailment query")
    (value, _), query, qp = best
    return StdQueryResult(tuple(query), qp, value, usage.sat_solves,
                          len(ent_cache), evaluated, len(pool), timed_out,
                          (time.perf_counter() - t0) * 1000.0)
