"""Propositional logic layer: formulas, parsing, printing, and a complete reasoner.

Formulas are immutable trees over atoms and the connectives !, &, |, ->, <->.
The concrete syntax is ASCII:

    formula := iff
    iff     := impl ("<->" impl)*        right-associative
    impl    := or ("->" or)*             right-associative
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "!" unary | "(" formula ")" | IDENT

Precedence from tightest to loosest: ! & | -> <->.  '#' starts a line comment.

Reasoning is a hand-rolled DPLL over a Tseitin encoding.  No external solver:
every satisfiability probe must be countable and deterministic, which is the
whole point of the instrumentation below.  Auxiliary Tseitin variables never
leak into answers; entailment queries only ever ask about source atoms.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence


class ParseError(ValueError):
    """Syntax error with 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class InconsistentPremises(ValueError):
    """Raised when an entailment extraction is asked about an unsatisfiable set."""


# ---------------------------------------------------------------------------
# Formula AST


@dataclass(frozen=True)
class Formula:
    """Base class; concrete nodes below.  Structural equality throughout."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    __slots__ = ("name",)
    name: str


@dataclass(frozen=True)
class Not(Formula):
    __slots__ = ("sub",)
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    __slots__ = ("lhs", "rhs")
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Or(Formula):
    __slots__ = ("lhs", "rhs")
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Implies(Formula):
    __slots__ = ("lhs", "rhs")
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff(Formula):
    __slots__ = ("lhs", "rhs")
    lhs: Formula
    rhs: Formula


# ---------------------------------------------------------------------------
# Tokenizer / parser

_SYMBOLS = ("<->", "->", "!", "&", "|", "(", ")")


def _tokenize(text: str) -> Iterator[tuple[str, str, int, int]]:
    """Yield (kind, value, line, column) with kind in {IDENT, SYM, EOF}."""
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        matched = False
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                yield ("SYM", sym, line, col)
                i += len(sym)
                col += len(sym)
                matched = True
                break
        if matched:
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            yield ("IDENT", text[i:j], line, col)
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    yield ("EOF", "", line, col)


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def peek(self) -> tuple[str, str, int, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str, int, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_sym(self, sym: str) -> None:
        kind, value, line, col = self.take()
        if kind != "SYM" or value != sym:
            raise ParseError(f"expected {sym!r}, found {value or 'end of input'!r}", line, col)

    def formula(self) -> Formula:
        return self.iff()

    def iff(self) -> Formula:
        parts = [self.impl()]
        while self.peek()[:2] == ("SYM", "<->"):
            self.take()
            parts.append(self.impl())
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = Iff(p, out)
        return out

    def impl(self) -> Formula:
        parts = [self.or_()]
        while self.peek()[:2] == ("SYM", "->"):
            self.take()
            parts.append(self.or_())
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = Implies(p, out)
        return out

    def or_(self) -> Formula:
        out = self.and_()
        while self.peek()[:2] == ("SYM", "|"):
            self.take()
            out = Or(out, self.and_())
        return out

    def and_(self) -> Formula:
        out = self.unary()
        while self.peek()[:2] == ("SYM", "&"):
            self.take()
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        kind, value, line, col = self.peek()
        if kind == "SYM" and value == "!":
            self.take()
            return Not(self.unary())
        if kind == "SYM" and value == "(":
            self.take()
            out = self.formula()
            self.expect_sym(")")
            return out
        if kind == "IDENT":
            self.take()
            return Atom(value)
        raise ParseError(f"expected a formula, found {value or 'end of input'!r}", line, col)


def parse_formula(text: str) -> Formula:
    parser = _Parser(text)
    out = parser.formula()
    kind, value, line, col = parser.peek()
    if kind != "EOF":
        raise ParseError(f"trailing input {value!r}", line, col)
    return out


# ---------------------------------------------------------------------------
# Printing.  format_formula emits the minimal-paren ASCII form; parsing it
# back gives a structurally equal tree.

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5, Atom: 6}
_RIGHT_ASSOC = {Iff, Implies}
_OP = {Iff: "<->", Implies: "->", Or: "|", And: "&"}


def _fmt(f: Formula, min_prec: int) -> str:
    prec = _PREC[type(f)]
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "!" + _fmt(f.sub, prec)
    op = _OP[type(f)]
    if type(f) in _RIGHT_ASSOC:
        left = _fmt(f.lhs, prec + 1)
        right = _fmt(f.rhs, prec)
    else:
        left = _fmt(f.lhs, prec)
        right = _fmt(f.rhs, prec + 1)
    text = f"{left} {op} {right}"
    return f"({text})" if prec < min_prec else text


def format_formula(f: Formula) -> str:
    return _fmt(f, 0)


def atoms_of(f: Formula) -> list[str]:
    """Atom names in first-occurrence order."""
    seen: dict[str, None] = {}
    stack = [f]
    out: list[str] = []
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            if node.name not in seen:
                seen[node.name] = None
                out.append(node.name)
        elif isinstance(node, Not):
            stack.append(node.sub)
        else:
            stack.append(node.rhs)  # type: ignore[attr-defined]
            stack.append(node.lhs)  # type: ignore[attr-defined]
    return out


def atoms_of_all(formulas: Iterable[Formula]) -> list[str]:
    seen: dict[str, None] = {}
    for f in formulas:
        for a in atoms_of(f):
            seen.setdefault(a, None)
    return list(seen)


def evaluate(f: Formula, assignment: Mapping[str, bool]) -> bool:
    """Truth value under a total assignment.  Used by tests as the oracle path."""
    if isinstance(f, Atom):
        return assignment[f.name]
    if isinstance(f, Not):
        return not evaluate(f.sub, assignment)
    if isinstance(f, And):
        return evaluate(f.lhs, assignment) and evaluate(f.rhs, assignment)
    if isinstance(f, Or):
        return evaluate(f.lhs, assignment) or evaluate(f.rhs, assignment)
    if isinstance(f, Implies):
        return (not evaluate(f.lhs, assignment)) or evaluate(f.rhs, assignment)
    if isinstance(f, Iff):
        return evaluate(f.lhs, assignment) == evaluate(f.rhs, assignment)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Normal keys.  Syntactic identity modulo flattening of nested & and | chains
# and sorting of commutative operands.  Used for "is this formula already in
# the KB" style membership checks, never for semantic equivalence.


def normal_key(f: Formula) -> tuple:
    if isinstance(f, Atom):
        return ("a", f.name)
    if isinstance(f, Not):
        return ("!", normal_key(f.sub))
    if isinstance(f, (And, Or)):
        tag = "&" if isinstance(f, And) else "|"
        ops: list[tuple] = []
        stack = [f]
        while stack:
            node = stack.pop()
            if isinstance(node, type(f)):
                stack.append(node.lhs)
                stack.append(node.rhs)
            else:
                ops.append(normal_key(node))
        return (tag, tuple(sorted(ops)))
    if isinstance(f, Implies):
        return ("->", normal_key(f.lhs), normal_key(f.rhs))
    if isinstance(f, Iff):
        return ("<->", tuple(sorted((normal_key(f.lhs), normal_key(f.rhs)))))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Instrumentation.  sat_solves counts DPLL runs (one per satisfiability
# probe); ent_t_calls counts entailment-extraction invocations at this
# module's granularity (entailedLiterals and entailedBinaryImplications are
# one each).  The enrichment layer keeps its own coarser counter.


class ReasonerStats:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.sat_solves = 0
        self.ent_t_calls = 0

    def bump_sat(self) -> None:
        with self._lock:
            self.sat_solves += 1

    def bump_ent_t(self) -> None:
        with self._lock:
            self.ent_t_calls += 1

    def snapshot(self) -> tuple[int, int]:
        with self._lock:
            return (self.sat_solves, self.ent_t_calls)


GLOBAL_STATS = ReasonerStats()


class reasoner_usage:
    """Context manager measuring reasoner activity inside a block.

    >>> with reasoner_usage() as u:
    ...     is_consistent([parse_formula("A -> B")])
    >>> u.sat_solves
    1
    """

    def __enter__(self) -> "reasoner_usage":
        self._before = GLOBAL_STATS.snapshot()
        self.sat_solves = 0
        self.ent_t_calls = 0
        return self

    def __exit__(self, *exc) -> None:
        after = GLOBAL_STATS.snapshot()
        self.sat_solves = after[0] - self._before[0]
        self.ent_t_calls = after[1] - self._before[1]


# ---------------------------------------------------------------------------
# Tseitin encoding


@dataclass
class ClauseSet:
    """CNF with a variable table.  Variables 1..n; atom_var maps source atoms."""

    clauses: list[tuple[int, ...]]
    n_vars: int
    atom_var: dict[str, int]


class _Encoder:
    def __init__(self) -> None:
        self.atom_var: dict[str, int] = {}
        self.n_vars = 0
        self.clauses: list[tuple[int, ...]] = []
        self._cache: dict[Formula, int] = {}

    def fresh(self) -> int:
        self.n_vars += 1
        return self.n_vars

    def var_for_atom(self, name: str) -> int:
        v = self.atom_var.get(name)
        if v is None:
            v = self.fresh()
            self.atom_var[name] = v
        return v

    def literal(self, f: Formula) -> int:
        """Tseitin literal for f; defining clauses appended as a side effect."""
        cached = self._cache.get(f)
        if cached is not None:
            return cached
        if isinstance(f, Atom):
            lit = self.var_for_atom(f.name)
        elif isinstance(f, Not):
            lit = -self.literal(f.sub)
        else:
            a = self.literal(f.lhs)  # type: ignore[attr-defined]
            b = self.literal(f.rhs)  # type: ignore[attr-defined]
            v = self.fresh()
            cl = self.clauses
            if isinstance(f, And):
                cl.append((-v, a))
                cl.append((-v, b))
                cl.append((v, -a, -b))
            elif isinstance(f, Or):
                cl.append((-v, a, b))
                cl.append((v, -a))
                cl.append((v, -b))
            elif isinstance(f, Implies):
                cl.append((-v, -a, b))
                cl.append((v, a))
                cl.append((v, -b))
            elif isinstance(f, Iff):
                cl.append((-v, -a, b))
                cl.append((-v, a, -b))
                cl.append((v, a, b))
                cl.append((v, -a, -b))
            else:
                raise TypeError(f"not a formula: {f!r}")
            lit = v
        self._cache[f] = lit
        return lit

    def assert_true(self, f: Formula) -> None:
        self.clauses.append((self.literal(f),))

    def assert_false(self, f: Formula) -> None:
        self.clauses.append((-self.literal(f),))


def clause_set(formulas: Sequence[Formula]) -> ClauseSet:
    """Equisatisfiable CNF for the conjunction of the given formulas.

    Atom variables are numbered by sorted atom name so the encoding does not
    depend on input iteration order.
    """
    enc = _Encoder()
    for name in sorted(atoms_of_all(formulas)):
        enc.var_for_atom(name)
    for f in formulas:
        enc.assert_true(f)
    return ClauseSet(enc.clauses, enc.n_vars, dict(enc.atom_var))


# ---------------------------------------------------------------------------
# DPLL.  Iterative, two watched literals, chronological backtracking.
# Decision order is "lowest-numbered unassigned variable, positive phase
# first", which together with the sorted atom table makes every probe
# deterministic.


def solve_cnf(clauses: Sequence[Sequence[int]], n_vars: int) -> bool:
    GLOBAL_STATS.bump_sat()

    assign = [0] * (n_vars + 1)  # 0 unknown, 1 true, -1 false
    trail: list[int] = []
    watches: dict[int, list[int]] = {}
    cl: list[list[int]] = []

    def value(lit: int) -> int:
        v = assign[lit] if lit > 0 else -assign[-lit]
        return v

    def enqueue(lit: int) -> bool:
        v = value(lit)
        if v == 1:
            return True
        if v == -1:
            return False
        assign[abs(lit)] = 1 if lit > 0 else -1
        trail.append(lit)
        return True

    for raw in clauses:
        c = tuple(dict.fromkeys(raw))  # drop duplicate literals
        if not c:
            return False
        if any(-lit in c for lit in c):
            continue  # tautology
        if len(c) == 1:
            if not enqueue(c[0]):
                return False
            continue
        idx = len(cl)
        cl.append(list(c))
        watches.setdefault(c[0], []).append(idx)
        watches.setdefault(c[1], []).append(idx)

    head = 0

    def propagate() -> bool:
        """Exhaust unit propagation; False on conflict."""
        nonlocal head
        while head < len(trail):
            lit = trail[head]
            head += 1
            falsified = -lit
            ws = watches.get(falsified)
            if not ws:
                continue
            kept: list[int] = []
            for pos, ci in enumerate(ws):
                c = cl[ci]
                if c[0] == falsified:
                    c[0], c[1] = c[1], c[0]
                # now c[1] == falsified
                first = c[0]
                if value(first) == 1:
                    kept.append(ci)
                    continue
                moved = False
                for k in range(2, len(c)):
                    if value(c[k]) != -1:
                        c[1], c[k] = c[k], c[1]
                        watches.setdefault(c[1], []).append(ci)
                        moved = True
                        break
                if moved:
                    continue
                kept.append(ci)
                if value(first) == -1:
                    kept.extend(ws[pos + 1:])
                    watches[falsified] = kept
                    return False
                enqueue(first)
            watches[falsified] = kept
        return True

    # decision stack entries: [var, flipped?, trail length at decision]
    decisions: list[list[int]] = []
    next_var = 1

    while True:
        if propagate():
            while next_var <= n_vars and assign[next_var] != 0:
                next_var += 1
            if next_var > n_vars:
                return True
            decisions.append([next_var, 0, len(trail)])
            enqueue(next_var)
        else:
            while decisions and decisions[-1][1]:
                var, _, mark = decisions.pop()
                while len(trail) > mark:
                    assign[abs(trail.pop())] = 0
            if not decisions:
                return False
            var, _, mark = decisions[-1]
            while len(trail) > mark:
                assign[abs(trail.pop())] = 0
            head = mark
            decisions[-1][1] = 1
            enqueue(-var)
            if var < next_var:
                next_var = var


# ---------------------------------------------------------------------------
# Probe layer.  The expensive part of a probe is re-encoding the premise set,
# so encodings are cached per premise tuple and extended per probe; extending
# never mutates the cached base (clause tuples are immutable, the extension
# writes into fresh lists/overlay dicts).


class _BaseEncoding:
    def __init__(self, formulas: tuple[Formula, ...]):
        enc = _Encoder()
        for name in sorted(atoms_of_all(formulas)):
            enc.var_for_atom(name)
        for f in formulas:
            enc.assert_true(f)
        self.clauses = enc.clauses
        self.n_vars = enc.n_vars
        self.atom_var = enc.atom_var


_BASE_CACHE: dict[tuple[Formula, ...], _BaseEncoding] = {}
_BASE_CACHE_LOCK = threading.Lock()
_BASE_CACHE_LIMIT = 2048


def _base_encoding(formulas: tuple[Formula, ...]) -> _BaseEncoding:
    with _BASE_CACHE_LOCK:
        base = _BASE_CACHE.get(formulas)
    if base is None:
        base = _BaseEncoding(formulas)
        with _BASE_CACHE_LOCK:
            if len(_BASE_CACHE) >= _BASE_CACHE_LIMIT:
                _BASE_CACHE.clear()
            _BASE_CACHE[formulas] = base
    return base


class _ExtensionEncoder(_Encoder):
    """Continues numbering on top of a base encoding without touching it."""

    def __init__(self, base: _BaseEncoding):
        super().__init__()
        self.n_vars = base.n_vars
        self.clauses = list(base.clauses)
        self._base_atoms = base.atom_var

    def var_for_atom(self, name: str) -> int:
        v = self._base_atoms.get(name)
        if v is not None:
            return v
        return super().var_for_atom(name)


def _probe(premises: tuple[Formula, ...], true_extras: Sequence[Formula] = (),
           false_conj: Sequence[Formula] = ()) -> bool:
    """SAT(premises AND extras AND NOT(conj of false_conj))."""
    enc = _ExtensionEncoder(_base_encoding(premises))
    for f in true_extras:
        enc.assert_true(f)
    if false_conj:
        # not(x1 & ... & xk) is the single clause (!x1 | ... | !xk)
        enc.clauses.append(tuple(-enc.literal(f) for f in false_conj))
    return solve_cnf(enc.clauses, enc.n_vars)


def is_consistent(formulas: Iterable[Formula]) -> bool:
    """One satisfiability probe for the conjunction of the given formulas."""
    return _probe(tuple(formulas))


def entails(premises: Iterable[Formula], conclusion: Iterable[Formula]) -> bool:
    """premises |= conjunction(conclusion), decided by one refutation probe."""
    concl = tuple(conclusion)
    if not concl:
        return True
    return not _probe(tuple(premises), false_conj=concl)


def entailed_literals(premises: Iterable[Formula], atoms: Sequence[str]) -> set[Formula]:
    """All literals over `atoms` entailed by the premises.

    Counts as one Ent_T invocation.  Raises InconsistentPremises when the
    premises are unsatisfiable (every literal would be trivially entailed).
    """
    GLOBAL_STATS.bump_ent_t()
    prem = tuple(premises)
    if not _probe(prem):
        raise InconsistentPremises("premises are unsatisfiable")
    out: set[Formula] = set()
    for name in atoms:
        pos = Atom(name)
        if not _probe(prem, false_conj=(pos,)):
            out.add(pos)
        elif not _probe(prem, true_extras=(pos,)):
            out.add(Not(pos))
    return out


def entailed_binary_implications(premises: Iterable[Formula],
                                 atoms: Sequence[str]) -> set[Formula]:
    """All implications a -> b between distinct atoms entailed by the premises.

    a -> a is excluded.  Counts as one Ent_T invocation; raises on
    inconsistent premises like entailed_literals.
    """
    GLOBAL_STATS.bump_ent_t()
    prem = tuple(premises)
    if not _probe(prem):
        raise InconsistentPremises("premises are unsatisfiable")
    out: set[Formula] = set()
    for a in atoms:
        for b in atoms:
            if a == b:
                continue
            # premises |= a -> b  iff  premises, a, !b is unsat
            if not _probe(prem, true_extras=(Atom(a),), false_conj=(Atom(b),)):
                out.add(Implies(Atom(a), Atom(b)))
    return out
