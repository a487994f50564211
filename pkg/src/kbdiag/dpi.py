"""Diagnosis problem instances.

A DPI is <K, B, P, N> plus the consistency requirement: K the knowledge base
under suspicion (formulas numbered 1..|K| in file order), B trusted background
knowledge, P positive test cases (must be entailed by any repair), N negative
test cases (must never be entailed).  A subset S of K-and-friends is faulty
when S together with B and all positive test cases is inconsistent or entails
some negative test case.

The on-disk format is line-based UTF-8 with '#' comments:

    [REQUIREMENTS]
    consistency
    [KB]
    A -> B & L          # one formula per line, ids 1..|K| in this order
    [BACKGROUND]
    [POSITIVE]
    A ; B -> C          # one test case per line, formulas separated by ';'
    [NEGATIVE]
    A -> H
    [PROBS]
    2: 0.4              # fault probability for formula id 2

[POSITIVE], [NEGATIVE] and [PROBS] are optional.  Unlisted formulas default
to fault probability 0.3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .logic import (
    Formula,
    atoms_of,
    entails,
    format_formula,
    is_consistent,
    parse_formula,
)

DEFAULT_FAULT_PROB = 0.3

_SECTIONS = ("REQUIREMENTS", "KB", "BACKGROUND", "POSITIVE", "NEGATIVE", "PROBS")


class DpiFormatError(ValueError):
    pass


class AdmissibilityError(ValueError):
    """Background plus positive test cases are already faulty."""


@dataclass(frozen=True)
class TestCase:
    formulas: tuple[Formula, ...]

    def __post_init__(self):
        if not self.formulas:
            raise ValueError("a test case needs at least one formula")

    def __str__(self) -> str:
        return " ; ".join(format_formula(f) for f in self.formulas)


@dataclass(frozen=True)
class DPI:
    kb: tuple[Formula, ...]
    background: tuple[Formula, ...] = ()
    positive: tuple[TestCase, ...] = ()
    negative: tuple[TestCase, ...] = ()
    # fault probabilities as a sorted (formula-id, p) tuple so the instance
    # stays hashable; use fault_probs for the id -> p view
    fault_prob: tuple[tuple[int, float], ...] | None = None
    atoms: tuple[str, ...] = ()
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def fault_probs(self) -> dict[int, float]:
        probs = dict(self.fault_prob or ())
        return {i: probs.get(i, DEFAULT_FAULT_PROB) for i in range(1, len(self.kb) + 1)}

    def formulas_of(self, ids: Iterable[int]) -> list[Formula]:
        return [self.kb[i - 1] for i in sorted(ids)]

    def kb_ids(self) -> range:
        return range(1, len(self.kb) + 1)


def union_positive(dpi: DPI) -> tuple[Formula, ...]:
    out: list[Formula] = []
    for tc in dpi.positive:
        out.extend(tc.formulas)
    return tuple(out)


def k_star(dpi: DPI, diagnosis_ids: frozenset[int]) -> list[Formula]:
    """(K minus the diagnosis) + B + union of positive test cases."""
    rest = [f for i, f in enumerate(dpi.kb, start=1) if i not in diagnosis_ids]
    return rest + list(dpi.background) + list(union_positive(dpi))


def make_dpi(kb: Sequence[Formula], background: Sequence[Formula] = (),
             positive: Sequence[TestCase] = (), negative: Sequence[TestCase] = (),
             fault_prob: Mapping[int, float] | None = None,
             validate: bool = True) -> DPI:
    kb = tuple(kb)
    prob_item: tuple[tuple[int, float], ...] | None = None
    if fault_prob is not None:
        for i, p in fault_prob.items():
            if not 1 <= i <= len(kb):
                raise ValueError(f"fault probability for unknown formula id {i}")
            if not 0.0 < p < 1.0:
                raise ValueError(f"fault probability for formula {i} must be in (0, 1), got {p}")
        prob_item = tuple(sorted(fault_prob.items()))
    seen: dict[str, None] = {}
    pool: list[Formula] = list(kb) + list(background)
    for tc in list(positive) + list(negative):
        pool.extend(tc.formulas)
    for f in pool:
        for a in atoms_of(f):
            seen.setdefault(a, None)
    dpi = DPI(kb, tuple(background), tuple(positive), tuple(negative),
              prob_item, tuple(seen))
    if validate and is_faulty([], dpi):
        raise AdmissibilityError(
            "background and positive test cases are faulty on their own")
    return dpi


def parse_dpi(text: str) -> DPI:
    """Parse the DPI file format; raises DpiFormatError with a line number."""
    section: str | None = None
    seen_sections: list[str] = []
    kb: list[Formula] = []
    background: list[Formula] = []
    positive: list[TestCase] = []
    negative: list[TestCase] = []
    probs: dict[int, float] = {}
    requirements: list[str] = []

    def fail(lineno: int, msg: str):
        raise DpiFormatError(f"line {lineno}: {msg}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            if name not in _SECTIONS:
                fail(lineno, f"unknown section [{name}]")
            if seen_sections and _SECTIONS.index(name) <= _SECTIONS.index(seen_sections[-1]):
                fail(lineno, f"section [{name}] out of order")
            seen_sections.append(name)
            section = name
            continue
        if section is None:
            fail(lineno, "content before the first section header")
        try:
            if section == "REQUIREMENTS":
                if line != "consistency":
                    fail(lineno, f"unsupported requirement {line!r}")
                requirements.append(line)
            elif section == "KB":
                kb.append(parse_formula(line))
            elif section == "BACKGROUND":
                background.append(parse_formula(line))
            elif section in ("POSITIVE", "NEGATIVE"):
                tc = TestCase(tuple(parse_formula(part) for part in line.split(";")))
                (positive if section == "POSITIVE" else negative).append(tc)
            elif section == "PROBS":
                idx_text, sep, p_text = line.partition(":")
                if not sep:
                    fail(lineno, "expected '<formula-id>: <probability>'")
                idx = int(idx_text.strip())
                p = float(p_text.strip())
                if not 1 <= idx <= len(kb):
                    fail(lineno, f"formula id {idx} out of range 1..{len(kb)}")
                if idx in probs:
                    fail(lineno, f"duplicate probability for formula {idx}")
                if not 0.0 < p < 1.0:
                    fail(lineno, f"probability must be in (0, 1), got {p}")
                probs[idx] = p
        except DpiFormatError:
            raise
        except ValueError as exc:
            fail(lineno, str(exc))

    for required in ("REQUIREMENTS", "KB", "BACKGROUND"):
        if required not in seen_sections:
            raise DpiFormatError(f"missing section [{required}]")
    if not requirements:
        raise DpiFormatError("the [REQUIREMENTS] section must list 'consistency'")
    if not kb:
        raise DpiFormatError("the [KB] section is empty")
    return make_dpi(kb, background, positive, negative, probs or None)


def load_dpi(path: str) -> DPI:
    with open(path, encoding="utf-8") as fh:
        return parse_dpi(fh.read())


def dump_dpi(dpi: DPI) -> str:
    """Inverse of parse_dpi up to comments and formatting."""
    lines = ["[REQUIREMENTS]", "consistency", "[KB]"]
    lines += [format_formula(f) for f in dpi.kb]
    lines.append("[BACKGROUND]")
    lines += [format_formula(f) for f in dpi.background]
    if dpi.positive:
        lines.append("[POSITIVE]")
        lines += [str(tc) for tc in dpi.positive]
    if dpi.negative:
        lines.append("[NEGATIVE]")
        lines += [str(tc) for tc in dpi.negative]
    if dpi.fault_prob:
        lines.append("[PROBS]")
        lines += [f"{i}: {p}" for i, p in dpi.fault_prob]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Semantics


def is_faulty(formulas: Iterable[Formula], dpi: DPI) -> bool:
    """S + B + U_P inconsistent, or entailing some negative test case."""
    s = list(formulas) + list(dpi.background) + list(union_positive(dpi))
    if not is_consistent(s):
        return True
    return any(entails(s, tc.formulas) for tc in dpi.negative)


def faulty_ids(dpi: DPI, ids: frozenset[int]) -> bool:
    """is_faulty on a subset of K given by formula ids, memoized per DPI."""
    cache = dpi._cache.setdefault("faulty", {})
    hit = cache.get(ids)
    if hit is None:
        hit = cache[ids] = is_faulty((dpi.kb[i - 1] for i in sorted(ids)), dpi)
    return hit


def is_solution_kb(formulas: Iterable[Formula], dpi: DPI) -> bool:
    """Consistent with B, entails every positive and no negative test case."""
    s = list(formulas) + list(dpi.background)
    if not is_consistent(s):
        return False
    if any(not entails(s, tc.formulas) for tc in dpi.positive):
        return False
    return not any(entails(s, tc.formulas) for tc in dpi.negative)


@dataclass(frozen=True)
class QPartition:
    """Reaction of the leading diagnoses to a query.

    Members are indices into the leading-diagnosis list: dplus collects the
    diagnoses whose repaired KB entails the query, dminus those it refutes,
    dzero the uncommitted rest.
    """

    dplus: frozenset[int]
    dminus: frozenset[int]
    dzero: frozenset[int]

    def as_dict(self) -> dict[str, list[int]]:
        return {
            "dplus": sorted(self.dplus),
            "dminus": sorted(self.dminus),
            "dzero": sorted(self.dzero),
        }


def q_partition_of(query: Iterable[Formula], diagnoses, dpi: DPI) -> QPartition:
    """Classify each leading diagnosis against the query with the reasoner.

    This is the ground truth the reasoner-free search is checked against;
    the engine itself never calls it while hunting for q-partitions.
    """
    q = list(query)
    if not q:
        raise ValueError("a query must contain at least one formula")
    dplus, dminus, dzero = set(), set(), set()
    for idx, diag in enumerate(diagnoses):
        solution = k_star(dpi, diag.ids)
        if entails(solution, q):
            dplus.add(idx)
        elif is_faulty(solution + q, dpi):
            # B and U_P are already inside k_star; is_faulty re-adding them
            # is harmless set union
            dminus.add(idx)
        else:
            dzero.add(idx)
    return QPartition(frozenset(dplus), frozenset(dminus), frozenset(dzero))


def apply_answer(dpi: DPI, query: Iterable[Formula], answer: bool) -> DPI:
    """New DPI with the query appended as a positive (yes) or negative (no)
    test case.  The input instance is never mutated."""
    q = TestCase(tuple(query))
    if answer:
        return make_dpi(dpi.kb, dpi.background, dpi.positive + (q,), dpi.negative,
                        dict(dpi.fault_prob) if dpi.fault_prob else None,
                        validate=False)
    return make_dpi(dpi.kb, dpi.background, dpi.positive, dpi.negative + (q,),
                    dict(dpi.fault_prob) if dpi.fault_prob else None,
                    validate=False)
