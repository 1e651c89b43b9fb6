"""Finite Markov chains with letter labels and a qualitative model checker.

The checker decides formulas whose path arguments are next/globally/until
over state operands, under any of the four quantifiers.  All answers are
exact: probabilities are rationals and the qualitative questions reduce to
graph reachability and bottom components of the chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import AutomatonFormatError, ProbSumError, UnsupportedShapeError
from .formulas import PathFormula, StateFormula
from .graphs import strongly_connected_components
from .automata import _check_name, _content_lines


@dataclass(frozen=True)
class FiniteMarkovChain:
    names: tuple[str, ...]
    labels: tuple[str, ...]
    initial: int
    edges: tuple[tuple[int, int, Fraction], ...]
    _succ: dict[int, list[int]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        n = len(self.names)
        if len(set(self.names)) != n:
            raise AutomatonFormatError("duplicate state names")
        if len(self.labels) != n:
            raise AutomatonFormatError("one label per state required")
        if not 0 <= self.initial < n:
            raise AutomatonFormatError("initial state out of range")
        totals = [Fraction(0)] * n
        seen: set[tuple[int, int]] = set()
        for src, dst, p in self.edges:
            if not (0 <= src < n and 0 <= dst < n):
                raise AutomatonFormatError(f"edge endpoint out of range {(src, dst)}")
            if (src, dst) in seen:
                raise AutomatonFormatError(
                    f"duplicate edge {self.names[src]} -> {self.names[dst]}"
                )
            seen.add((src, dst))
            if not 0 < p <= 1:
                raise AutomatonFormatError(f"edge probability {p} out of (0, 1]")
            totals[src] += p
            self._succ.setdefault(src, []).append(dst)
        for q, total in enumerate(totals):
            if total != 1:
                raise ProbSumError(
                    f"probabilities from {self.names[q]} sum to {total}, not 1"
                )

    @property
    def state_count(self) -> int:
        return len(self.names)

    def states(self) -> range:
        return range(len(self.names))

    def successors(self, q: int) -> list[int]:
        return self._succ.get(q, [])


# ------------------------------------------------------------------ format

def parse_mc(text: str) -> FiniteMarkovChain:
    lines = _content_lines(text)
    if not lines or lines[0][1] != ["mc"]:
        raise AutomatonFormatError("expected 'mc' header")
    names: list[str] = []
    labels: list[str] = []
    rank: dict[str, int] = {}
    initial: int | None = None
    edges: list[tuple[int, int, Fraction]] = []

    def state_ref(name: str, line_no: int) -> int:
        if name not in rank:
            raise AutomatonFormatError(f"line {line_no}: unknown state {name!r}")
        return rank[name]

    for line_no, words in lines[1:]:
        head = words[0]
        if head == "state":
            if len(words) != 3 or not words[2].startswith("label="):
                raise AutomatonFormatError(f"line {line_no}: bad state line")
            name = words[1]
            _check_name(name, line_no)
            if name in rank:
                raise AutomatonFormatError(
                    f"line {line_no}: duplicate state {name!r}"
                )
            label = words[2][len("label="):]
            _check_name(label, line_no)
            rank[name] = len(names)
            names.append(name)
            labels.append(label)
        elif head == "edge":
            if len(words) != 4:
                raise AutomatonFormatError(f"line {line_no}: bad edge line")
            try:
                p = Fraction(words[3])
            except (ValueError, ZeroDivisionError):
                raise AutomatonFormatError(
                    f"line {line_no}: bad probability {words[3]!r}"
                ) from None
            edges.append(
                (state_ref(words[1], line_no), state_ref(words[2], line_no), p)
            )
        elif head == "init":
            if initial is not None or len(words) != 2:
                raise AutomatonFormatError(f"line {line_no}: bad init line")
            initial = state_ref(words[1], line_no)
        else:
            raise AutomatonFormatError(
                f"line {line_no}: unknown directive {head!r}"
            )
    if initial is None:
        raise AutomatonFormatError("missing init line")
    return FiniteMarkovChain(
        names=tuple(names),
        labels=tuple(labels),
        initial=initial,
        edges=tuple(edges),
    )


def format_mc(m: FiniteMarkovChain) -> str:
    out = ["mc"]
    for name, label in zip(m.names, m.labels):
        out.append(f"state {name} label={label}")
    out.append(f"init {m.names[m.initial]}")
    for src, dst, p in m.edges:
        out.append(f"edge {m.names[src]} {m.names[dst]} {p}")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------ model checker

def _pre_exists(m: FiniteMarkovChain, target: set[int]) -> set[int]:
    return {q for q in m.states() if any(d in target for d in m.successors(q))}


def _pre_all(m: FiniteMarkovChain, target: set[int]) -> set[int]:
    return {q for q in m.states() if all(d in target for d in m.successors(q))}


def _reach_through(m: FiniteMarkovChain, body: set[int], goal: set[int]) -> set[int]:
    """States with a path to the goal whose strict prefix stays in the body."""
    out = set(goal)
    frontier = True
    while frontier:
        grown = {
            q
            for q in body - out
            if any(d in out for d in m.successors(q))
        }
        frontier = bool(grown)
        out |= grown
    return out

def _exists_globally(m: FiniteMarkovChain, body: set[int]) -> set[int]:
    """States with some infinite path inside the body."""
    out = set(body)
    while True:
        kept = {q for q in out if any(d in out for d in m.successors(q))}
        if kept == out:
            return out
        out = kept


def _positive_globally(m: FiniteMarkovChain, body: set[int]) -> set[int]:
    """States that stay in the body forever with positive probability: a path
    inside the body must reach a bottom component contained in the body."""
    closed: set[int] = set()
    for comp in strongly_connected_components(
        list(m.states()), lambda q: m.successors(q)
    ):
        members = set(comp)
        if members <= body and all(
            d in members for q in comp for d in m.successors(q)
        ):
            closed |= members
    return _reach_through(m, body, closed)


def _all_globally(m: FiniteMarkovChain, body: set[int]) -> set[int]:
    out = set(body)
    while True:
        kept = {q for q in out if all(d in out for d in m.successors(q))}
        if kept == out:
            return out
        out = kept


def satisfying_states(m: FiniteMarkovChain, s: StateFormula) -> frozenset[int]:
    memo: dict[StateFormula, frozenset[int]] = {}
    everything = frozenset(m.states())

    def sat(node: StateFormula) -> frozenset[int]:
        out = memo.get(node)
        if out is not None:
            return out
        kind = node.kind
        if kind == "true":
            out = everything
        elif kind == "false":
            out = frozenset()
        elif kind == "letter":
            out = frozenset(
                q for q in m.states() if m.labels[q] == node.letter
            )
        elif kind == "not":
            out = everything - sat(node.children[0])
        elif kind == "and":
            out = sat(node.children[0]) & sat(node.children[1])
        elif kind == "or":
            out = sat(node.children[0]) | sat(node.children[1])
        else:
            assert node.path is not None
            out = frozenset(path_sat(kind, node.path))
        memo[node] = out
        return out

    def path_sat(quantifier: str, p: PathFormula) -> set[int]:
        shape = p.kind
        if shape == "next" and p.children[0].kind == "state":
            target = set(sat(p.children[0].state))  # type: ignore[arg-type]
            if quantifier in ("exists", "prob_pos"):
                return _pre_exists(m, target)
            return _pre_all(m, target)
        if shape == "globally" and p.children[0].kind == "state":
            body = set(sat(p.children[0].state))  # type: ignore[arg-type]
            if quantifier == "exists":
                return _exists_globally(m, body)
            if quantifier == "prob_pos":
                return _positive_globally(m, body)
            return _all_globally(m, body)
        if (
            shape == "until"
            and p.children[0].kind == "state"
            and p.children[1].kind == "state"
        ):
            body = set(sat(p.children[0].state))  # type: ignore[arg-type]
            goal = set(sat(p.children[1].state))  # type: ignore[arg-type]
            if quantifier in ("exists", "prob_pos"):
                return _reach_through(m, body - goal, goal)
            missed = set(m.states()) - goal
            escape = missed - body
            if quantifier == "forall":
                bad = _exists_globally(m, missed) | _reach_through(
                    m, missed - escape, escape
                )
            else:
                bad = _positive_globally(m, missed) | _reach_through(
                    m, missed - escape, escape
                )
            return set(m.states()) - bad
        raise UnsupportedShapeError(
            f"path shape {shape!r} is outside the checkable fragment"
        )

    return sat(s)


def check(m: FiniteMarkovChain, s: StateFormula) -> bool:
    """Truth of the formula at the chain's initial state."""
    return m.initial in satisfying_states(m, s)
