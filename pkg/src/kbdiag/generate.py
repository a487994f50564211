"""DPI generators: seeded random instances and controlled benchmark families."""

from __future__ import annotations

import random
import string
from typing import Mapping, Sequence

from .diag import leading_diagnoses
from .dpi import DPI, TestCase, faulty_ids, make_dpi
from .logic import And, Atom, Formula, Iff, Implies, Not, Or, entails, normal_key

_CONNECTIVES = ("not", "and", "or", "implies", "iff")
_WEIGHTS = (1, 3, 3, 4, 1)


def atom_names(k: int) -> list[str]:
    if k <= 26:
        return list(string.ascii_uppercase[:k])
    return [f"P{i}" for i in range(1, k + 1)]


def random_formula(rng: random.Random, atoms: Sequence[str],
                   depth: int = 2) -> Formula:
    """Random formula tree; depth bounds nesting, leaves are atoms."""
    if depth == 0 or rng.random() < 0.3:
        return Atom(rng.choice(atoms))
    kind = rng.choices(_CONNECTIVES, weights=_WEIGHTS)[0]
    if kind == "not":
        return Not(random_formula(rng, atoms, depth - 1))
    lhs = random_formula(rng, atoms, depth - 1)
    rhs = random_formula(rng, atoms, depth - 1)
    ctor = {"and": And, "or": Or, "implies": Implies, "iff": Iff}[kind]
    return ctor(lhs, rhs)


def random_dpi(seed: int, n_atoms: int = 5, kb_size: int = 8,
               min_diagnoses: int = 2, with_probs: bool = False,
               depth: int = 2, max_tries: int = 500) -> DPI:
    """Seeded random DPI that is admissible, faulty, and has at least
    min_diagnoses minimal diagnoses.

    Deterministic per seed: the attempt loop consumes one shared stream, so
    equal arguments give byte-equal instances.
    """
    rng = random.Random(seed)
    atoms = atom_names(n_atoms)
    for _ in range(max_tries):
        kb: list[Formula] = []
        seen: set[object] = set()
        guard = 0
        while len(kb) < kb_size and guard < 200:
            guard += 1
            f = random_formula(rng, atoms, depth)
            key = normal_key(f)
            if key in seen:
                continue
            seen.add(key)
            kb.append(f)
        if len(kb) < kb_size:
            continue
        neg = random_formula(rng, atoms, depth)
        if entails([], [neg]):
            continue  # a tautological test case would make the DPI inadmissible
        probs = None
        if with_probs:
            probs = {i: round(rng.uniform(0.05, 0.95), 3)
                     for i in range(1, kb_size + 1)}
        dpi = make_dpi(kb, negative=[TestCase((neg,))], fault_prob=probs)
        if not faulty_ids(dpi, frozenset(dpi.kb_ids())):
            continue
        if len(leading_diagnoses(dpi, min_diagnoses, warn=False)) < min_diagnoses:
            continue
        return dpi
    raise RuntimeError(f"no suitable DPI found for seed {seed}")


def pair_chain_dpi(k: int,
                   fault_prob: Mapping[int, float] | None = None) -> DPI:
    """KB of k pairs {X_i, X_i -> Q} with Q forbidden.

    Each pair is a minimal conflict, so the minimal diagnoses are exactly the
    2^k one-per-pair picks, all of cardinality k: a family with a controlled
    diagnosis count for benchmarking.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    q = Atom("Q")
    kb: list[Formula] = []
    for i in range(1, k + 1):
        x = Atom(f"X{i}")
        kb.append(x)
        kb.append(Implies(x, q))
    return make_dpi(kb, negative=[TestCase((q,))], fault_prob=fault_prob)


def shuffled_dpi(dpi: DPI, seed: int) -> DPI:
    """The same DPI with the KB order (and the probability map) permuted."""
    rng = random.Random(seed)
    order = list(dpi.kb_ids())
    rng.shuffle(order)
    kb = [dpi.kb[i - 1] for i in order]
    probs = None
    if dpi.fault_prob is not None:
        old = dict(dpi.fault_prob)
        probs = {new_id: old[old_id]
                 for new_id, old_id in enumerate(order, 1) if old_id in old}
    return make_dpi(kb, dpi.background, dpi.positive, dpi.negative, probs,
                    validate=False)
