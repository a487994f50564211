"""Sequential diagnosis sessions: ask, answer, shrink, repeat.

A session owns a DPI plus the state the interaction loop needs: the current
leading diagnoses with normalized priors, the pending query (computed lazily,
cached until answered), and a transcript of finished rounds.  Each round runs
the pipeline

  1. search the canonical q-partitions for one scoring well under the measure,
  2. pick a cost-minimal query with exactly that q-partition,
  3. optionally widen the query with entailed consequences,
  4. optionally shrink the widened query back to a minimal preserving one,

then folds the oracle's answer into the DPI as a fresh test case and
recomputes the leading diagnoses.  Phases 1 and 2 never touch the reasoner;
per-phase solver counts land in the transcript so the claim stays checkable
on every single run, not just in the test suite.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .diag import Diagnosis, leading_diagnoses
from .dpi import DPI, apply_answer, faulty_ids, k_star
from .enrich import enrich_query, reasoner_call_count
from .logic import Formula, entails, format_formula, reasoner_usage
from .optimize import optimize_query
from .qpsearch import (DEFAULT_BUDGET, Measure, SearchNode, enumerate_cqps,
                       evaluate_measure, find_q_partition, node_for_dplus)
from .queryselect import Criterion, select_query_for_q_partition

MEASURES = ("ent", "spl", "random")
CRITERIA = ("card", "minsum", "maxprob")
RANKS = ("card", "prob")
PHASES = ("p1", "p2", "p3", "p4")


class SessionError(RuntimeError):
    pass


class SessionFinished(SessionError):
    """Raised when a finished session is asked for another query."""


@dataclass(frozen=True)
class SessionConfig:
    """Knobs for the query loop.

    measure "random" draws a uniformly random canonical q-partition instead
    of searching; it exists as a floor to compare the informed measures
    against and needs |D| small enough to enumerate (15 or fewer).  sigma is
    the stop threshold on the posterior of the best diagnosis; 1.0 means
    "run until a single diagnosis remains".  seed only feeds the "random"
    measure.
    """

    n: int = 3
    measure: str = "ent"
    threshold: float | None = None
    criterion: str = "card"
    enrich: bool = False
    sigma: float = 0.95
    rank: str = "card"
    budget: int = DEFAULT_BUDGET
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}; pick one of {MEASURES}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}; pick one of {CRITERIA}")
        if self.rank not in RANKS:
            raise ValueError(f"unknown rank {self.rank!r}; pick one of {RANKS}")
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError("sigma must be in (0, 1]")
        if self.threshold is not None and self.threshold < 0.0:
            raise ValueError("threshold must be non-negative")
        if self.budget < 1:
            raise ValueError("budget must be positive")


def diagnosis_priors(diagnoses: Sequence[Diagnosis], dpi: DPI) -> dict[int, float]:
    """Normalized prior of each leading diagnosis being the actual one.

    A diagnosis weighs the product of its members' fault probabilities times
    the non-fault probabilities of the remaining KB formulas; the weights are
    normalized over the leading set.  Keys are positions in `diagnoses`.
    """
    if not diagnoses:
        raise ValueError("need at least one diagnosis")
    probs = dpi.fault_probs
    weights = []
    for d in diagnoses:
        w = 1.0
        for fid in dpi.kb_ids():
            p = probs[fid]
            w *= p if fid in d.ids else 1.0 - p
        weights.append(w)
    total = sum(weights)
    return {i: w / total for i, w in enumerate(weights)}


@dataclass(frozen=True)
class QueryPlan:
    """One computed query, waiting for its answer."""

    round: int
    formulas: tuple[Formula, ...]      # what to actually ask
    explicit_ids: frozenset[int]       # KB members among them, by id
    implicit: tuple[Formula, ...]      # entailed companions that survived
    node: SearchNode                   # q-partition over the leading diagnoses
    measure_value: float
    goal_met: bool
    timings_ms: Mapping[str, float]    # per phase; 0.0 when skipped
    reasoner_calls: Mapping[str, int]  # solver probes per phase
    ent_t_calls: int                   # entailment extractions in phase 3

    def texts(self) -> list[str]:
        return [format_formula(f) for f in self.formulas]


class Session:
    """Mutable interaction state over an immutable chain of DPIs."""

    def __init__(self, dpi: DPI, config: SessionConfig | None = None) -> None:
        self.config = config if config is not None else SessionConfig()
        self.dpi = dpi
        self.round = 1
        self.transcript: list[dict] = []
        self._plan: QueryPlan | None = None
        self._rng = random.Random(self.config.seed)
        self._refresh()

    def _refresh(self) -> None:
        self.diagnoses = leading_diagnoses(self.dpi, self.config.n,
                                           self.config.rank, warn=False)
        self.priors = diagnosis_priors(self.diagnoses, self.dpi)

    def is_finished(self) -> bool:
        if len(self.diagnoses) == 1:
            return True
        return max(self.priors.values()) >= self.config.sigma

    @property
    def ambiguous(self) -> bool:
        """More than one leading diagnosis at or above the stop threshold."""
        return sum(1 for p in self.priors.values() if p >= self.config.sigma) > 1

    def final_diagnosis(self) -> Diagnosis | None:
        if not self.is_finished():
            return None
        best = max(range(len(self.diagnoses)), key=lambda i: (self.priors[i], -i))
        return self.diagnoses[best]

    def _choose_q_partition(self) -> tuple[SearchNode, float, bool]:
        if self.config.measure == "random":
            pool = sorted(enumerate_cqps(self.diagnoses, self.dpi),
                          key=lambda qp: tuple(sorted(qp.dplus)))
            pick = self._rng.choice(pool)
            node = node_for_dplus(pick.dplus, self.diagnoses, self.dpi)
            value = evaluate_measure(Measure("ent", self.priors), node)
            return node, value, False
        probs = self.priors if self.config.measure == "ent" else None
        m = Measure(self.config.measure, probs, self.config.threshold)
        res = find_q_partition(self.diagnoses, self.dpi, m, self.config.budget)
        return res.node, res.value, res.goal_met

    def next_query(self) -> QueryPlan:
        """Compute (or return the already pending) query for this round."""
        if self.is_finished():
            raise SessionFinished("the session is finished; no further query")
        if self._plan is not None:
            return self._plan

        timings = dict.fromkeys(PHASES, 0.0)
        calls = dict.fromkeys(PHASES, 0)

        t0 = time.perf_counter()
        with reasoner_usage() as u1:
            node, value, goal = self._choose_q_partition()
        timings["p1"] = (time.perf_counter() - t0) * 1000.0
        calls["p1"] = u1.sat_solves

        crit = Criterion(self.config.criterion,
                         None if self.config.criterion == "card"
                         else self.dpi.fault_probs)
        t0 = time.perf_counter()
        with reasoner_usage() as u2:
            q_ids = select_query_for_q_partition(node, crit)
        timings["p2"] = (time.perf_counter() - t0) * 1000.0
        calls["p2"] = u2.sat_solves

        formulas = tuple(self.dpi.formulas_of(q_ids))
        explicit = frozenset(q_ids)
        implicit: tuple[Formula, ...] = ()
        ent_t = 0
        if self.config.enrich:
            before = reasoner_call_count().ent_t_invocations
            t0 = time.perf_counter()
            with reasoner_usage() as u3:
                rich = enrich_query(formulas, self.diagnoses, self.dpi)
            timings["p3"] = (time.perf_counter() - t0) * 1000.0
            calls["p3"] = u3.sat_solves
            ent_t = reasoner_call_count().ent_t_invocations - before

            t0 = time.perf_counter()
            with reasoner_usage() as u4:
                opt = optimize_query(q_ids, rich.q_impl, node.partition(),
                                     self.diagnoses, self.dpi)
            timings["p4"] = (time.perf_counter() - t0) * 1000.0
            calls["p4"] = u4.sat_solves
            formulas = opt.query
            explicit = opt.kept_ids
            implicit = opt.kept_impl

        self._plan = QueryPlan(self.round, formulas, explicit, implicit, node,
                               value, goal, timings, calls, ent_t)
        return self._plan

    def submit_answer(self, answer: bool) -> dict:
        """Fold the answer in; returns the transcript row for the round."""
        if self._plan is None:
            raise SessionError("no pending query; call next_query first")
        plan = self._plan
        node = plan.node
        gone = sorted(node.dminus) if answer else sorted(node.dplus)
        row = {
            "round": plan.round,
            "query": plan.texts(),
            "qpartition": {
                "dplus": [sorted(self.diagnoses[i].ids) for i in sorted(node.dplus)],
                "dminus": [sorted(self.diagnoses[i].ids) for i in sorted(node.dminus)],
                "dzero": [],
            },
            "answer": answer,
            "eliminated": [sorted(self.diagnoses[i].ids) for i in gone],
            "measure_value": plan.measure_value,
            "timings_ms": dict(plan.timings_ms),
            "reasoner_calls": dict(plan.reasoner_calls),
        }
        self.transcript.append(row)
        self.dpi = apply_answer(self.dpi, plan.formulas, answer)
        self._plan = None
        self.round += 1
        self._refresh()
        return row


class SimulatedOracle:
    """Answers queries from a hidden truth.

    The truth is the KB with one planted diagnosis removed, plus background
    and the positive test cases.  A query is answered yes exactly when the
    truth entails every formula in it, so the planted diagnosis survives
    every elimination a session derives from these answers.
    """

    def __init__(self, dpi: DPI, target: Iterable[int]) -> None:
        ids = frozenset(target)
        if not ids <= set(dpi.kb_ids()):
            raise ValueError("target diagnosis mentions unknown formula ids")
        if faulty_ids(dpi, frozenset(dpi.kb_ids()) - ids):
            raise ValueError("the target is not a diagnosis of this DPI")
        self.target = ids
        self._truth = tuple(k_star(dpi, ids))

    def answer(self, query: Iterable[Formula]) -> bool:
        q = tuple(query)
        if not q:
            raise ValueError("cannot answer an empty query")
        return entails(self._truth, q)


@dataclass(frozen=True)
class SimulationResult:
    target: frozenset[int]
    final: Diagnosis
    hit: bool
    rounds: int
    answers: tuple[bool, ...]
    transcript: tuple[dict, ...]
    total_ms: float
    reasoner_calls: dict[str, int]
    ambiguous: bool


def run_simulation(dpi: DPI, target: Iterable[int],
                   config: SessionConfig | None = None,
                   max_rounds: int = 100) -> SimulationResult:
    """Drive a session against a simulated oracle until it stops.

    With sigma = 1.0 the loop ends with the planted target as the sole
    leading diagnosis: the target stays a minimal diagnosis of every
    intermediate DPI (its proper subsets were faulty from the start and
    faultiness only grows), while each answer refutes one whole side of the
    asked q-partition, so the candidate pool strictly shrinks.  Smaller
    sigma trades that guarantee for earlier stops.
    """
    oracle = SimulatedOracle(dpi, target)
    session = Session(dpi, config)
    answers: list[bool] = []
    t0 = time.perf_counter()
    while not session.is_finished():
        if len(session.transcript) >= max_rounds:
            raise SessionError(f"no convergence within {max_rounds} rounds")
        plan = session.next_query()
        ans = oracle.answer(plan.formulas)
        session.submit_answer(ans)
        answers.append(ans)
    total = (time.perf_counter() - t0) * 1000.0
    final = session.final_diagnosis()
    assert final is not None
    calls = dict.fromkeys(PHASES, 0)
    for row in session.transcript:
        for ph in PHASES:
            calls[ph] += row["reasoner_calls"][ph]
    return SimulationResult(oracle.target, final, final.ids == oracle.target,
                            len(session.transcript), tuple(answers),
                            tuple(session.transcript), total, calls,
                            session.ambiguous)
