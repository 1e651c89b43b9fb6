"""Alternating and non-deterministic nonzero automata on infinite binary
trees, their text formats, and structural checks.

States carry a total order given by their declaration rank.  A run of an
automaton is judged by the largest state seen infinitely often along each
play, against three acceptance sets: ``f_forall`` constrains every play,
``f_one`` almost every play, and ``f_pos`` supports the positive condition
(from every visit to ``f_pos`` the play must stay in ``f_pos`` forever with
positive probability).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AutomatonFormatError, EmptyAfterNormalization
from .graphs import strongly_connected_components

StateId = int

Local = tuple[StateId, str, StateId]
Split = tuple[StateId, str, StateId, StateId]


# ------------------------------------------------------------- alternating

@dataclass(frozen=True)
class AlternatingAutomaton:
    names: tuple[str, ...]
    alphabet: tuple[str, ...]
    initial: StateId
    adam: frozenset[StateId]
    f_forall: frozenset[StateId]
    f_one: frozenset[StateId]
    f_pos: frozenset[StateId]
    locals_: tuple[Local, ...]
    splits: tuple[Split, ...]
    _moves: dict[tuple[StateId, str], list[tuple]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        n = len(self.names)
        if len(set(self.names)) != n:
            raise AutomatonFormatError("duplicate state names")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise AutomatonFormatError("duplicate alphabet letters")
        if not 0 <= self.initial < n:
            raise AutomatonFormatError("initial state out of range")
        for group in (self.adam, self.f_forall, self.f_one, self.f_pos):
            if not all(0 <= q < n for q in group):
                raise AutomatonFormatError("state set out of range")
        letters = set(self.alphabet)
        for src, a, dst in self.locals_:
            if not (0 <= src < n and 0 <= dst < n and a in letters):
                raise AutomatonFormatError(f"bad local transition {(src, a, dst)}")
            self._moves.setdefault((src, a), []).append(("local", dst))
        for src, a, left, right in self.splits:
            if not (
                0 <= src < n and 0 <= left < n and 0 <= right < n and a in letters
            ):
                raise AutomatonFormatError(
                    f"bad split transition {(src, a, left, right)}"
                )
            self._moves.setdefault((src, a), []).append(("split", left, right))

    @property
    def state_count(self) -> int:
        return len(self.names)

    def states(self) -> range:
        return range(len(self.names))

    def moves(self, q: StateId, letter: str) -> list[tuple]:
        return self._moves.get((q, letter), [])

    def is_adam(self, q: StateId) -> bool:
        return q in self.adam


@dataclass(frozen=True)
class Diagnostics:
    """Structural report: completeness gaps and normalization violations."""

    missing_moves: tuple[tuple[StateId, str], ...]
    split_positive_violations: tuple[Split, ...]
    local_positive_violations: tuple[Local, ...]
    one_outside_forall: tuple[StateId, ...]

    @property
    def is_complete(self) -> bool:
        return not self.missing_moves

    @property
    def is_normalized(self) -> bool:
        return (
            self.is_complete
            and not self.split_positive_violations
            and not self.local_positive_violations
            and not self.one_outside_forall
        )


def validate(a: AlternatingAutomaton) -> Diagnostics:
    missing = [
        (q, letter)
        for q in a.states()
        for letter in a.alphabet
        if not a.moves(q, letter)
    ]
    bad_splits = [
        t
        for t in a.splits
        if t[0] in a.f_pos and t[2] not in a.f_pos and t[3] not in a.f_pos
    ]
    bad_locals = [
        t for t in a.locals_ if t[0] in a.f_pos and t[2] not in a.f_pos
    ]
    one_out = sorted(a.f_one - a.f_forall)
    return Diagnostics(
        tuple(missing), tuple(bad_splits), tuple(bad_locals), tuple(one_out)
    )


def normalize(a: AlternatingAutomaton) -> AlternatingAutomaton:
    """Delete transitions that deny the positive condition at their source
    (a split from a positive state needs a positive endpoint, a local needs a
    positive target), then cascade: a state left without a move on some
    letter is removed together with every transition touching it.  Finally
    clip ``f_one`` to ``f_forall``.  Raises when the initial state dies."""
    alive = set(a.states())
    locals_ = sorted(a.locals_)
    splits = sorted(a.splits)

    def local_ok(t: Local) -> bool:
        if t[0] not in alive or t[2] not in alive:
            return False
        return t[0] not in a.f_pos or t[2] in a.f_pos

    def split_ok(t: Split) -> bool:
        if t[0] not in alive or t[2] not in alive or t[3] not in alive:
            return False
        return t[0] not in a.f_pos or t[2] in a.f_pos or t[3] in a.f_pos

    while True:
        locals_ = [t for t in locals_ if local_ok(t)]
        splits = [t for t in splits if split_ok(t)]
        covered = {(t[0], t[1]) for t in locals_} | {(t[0], t[1]) for t in splits}
        dead = {
            q
            for q in alive
            if any((q, letter) not in covered for letter in a.alphabet)
        }
        if not dead:
            break
        alive -= dead
    if a.initial not in alive:
        raise EmptyAfterNormalization(
            "initial state removed while normalizing"
        )
    order = sorted(alive)
    renum = {q: i for i, q in enumerate(order)}
    return AlternatingAutomaton(
        names=tuple(a.names[q] for q in order),
        alphabet=a.alphabet,
        initial=renum[a.initial],
        adam=frozenset(renum[q] for q in a.adam & alive),
        f_forall=frozenset(renum[q] for q in a.f_forall & alive),
        f_one=frozenset(renum[q] for q in a.f_one & a.f_forall & alive),
        f_pos=frozenset(renum[q] for q in a.f_pos & alive),
        locals_=tuple((renum[s], x, renum[d]) for s, x, d in locals_),
        splits=tuple(
            (renum[s], x, renum[l], renum[r]) for s, x, l, r in splits
        ),
    )


# --------------------------------------------------------- transition graph

@dataclass(frozen=True)
class TransitionGraph:
    """Letter-labelled successor graph: split transitions contribute both
    endpoints.  States in the same non-trivial strongly connected component
    are recurrent partners; the rest are transient."""

    edges: tuple[tuple[StateId, str, StateId], ...]
    component_of: dict[StateId, int]
    nontrivial: frozenset[int]

    def same_class(self, q: StateId, r: StateId) -> bool:
        c = self.component_of[q]
        return c == self.component_of[r] and c in self.nontrivial

    def is_transient(self, q: StateId) -> bool:
        return self.component_of[q] not in self.nontrivial


def transition_graph(a: AlternatingAutomaton) -> TransitionGraph:
    edges: list[tuple[StateId, str, StateId]] = []
    for src, letter, dst in a.locals_:
        edges.append((src, letter, dst))
    for src, letter, left, right in a.splits:
        edges.append((src, letter, left))
        edges.append((src, letter, right))
    edges = sorted(set(edges))
    succ: dict[StateId, list[StateId]] = {q: [] for q in a.states()}
    for src, _, dst in edges:
        succ[src].append(dst)
    components = strongly_connected_components(list(a.states()), lambda q: succ[q])
    component_of: dict[StateId, int] = {}
    nontrivial: set[int] = set()
    for i, comp in enumerate(components):
        for q in comp:
            component_of[q] = i
        if len(comp) > 1 or any(d == comp[0] for d in succ[comp[0]]):
            nontrivial.add(i)
    return TransitionGraph(tuple(edges), component_of, frozenset(nontrivial))


@dataclass(frozen=True)
class CanonicalMap:
    """For each controllable state and letter, the unique local move that
    stays inside its own recurrence class, when it exists."""

    moves: tuple[tuple[StateId, str, StateId], ...]

    def get(self, q: StateId, letter: str) -> StateId | None:
        for src, a, dst in self.moves:
            if src == q and a == letter:
                return dst
        return None


@dataclass(frozen=True)
class LimitedChoiceViolations:
    splits_from_adam: tuple[Split, ...]
    ambiguous: tuple[tuple[StateId, str, StateId, StateId], ...]


def check_limited_choice(
    a: AlternatingAutomaton, g: TransitionGraph | None = None
) -> CanonicalMap | LimitedChoiceViolations:
    """Adam states may only move locally, and per letter at most one of those
    moves may stay in the state's own recurrence class."""
    if g is None:
        g = transition_graph(a)
    bad_splits = tuple(t for t in a.splits if t[0] in a.adam)
    canonical: list[tuple[StateId, str, StateId]] = []
    ambiguous: list[tuple[StateId, str, StateId, StateId]] = []
    for q in sorted(a.adam):
        for letter in a.alphabet:
            inside = sorted(
                dst
                for kind, *rest in a.moves(q, letter)
                if kind == "local"
                for dst in rest
                if g.same_class(q, dst)
            )
            if len(inside) == 1:
                canonical.append((q, letter, inside[0]))
            elif len(inside) > 1:
                ambiguous.append((q, letter, inside[0], inside[1]))
    if bad_splits or ambiguous:
        return LimitedChoiceViolations(bad_splits, tuple(ambiguous))
    return CanonicalMap(tuple(canonical))


@dataclass(frozen=True)
class NllOk:
    pass


@dataclass(frozen=True)
class LocalLoopWitness:
    letter: str
    cycle: tuple[StateId, ...]


def check_nll(a: AlternatingAutomaton) -> NllOk | LocalLoopWitness:
    """Reject local cycles on a single letter: they would let a play remain
    inside one tree node forever."""
    for letter in a.alphabet:
        succ: dict[StateId, list[StateId]] = {q: [] for q in a.states()}
        for src, x, dst in a.locals_:
            if x == letter:
                succ[src].append(dst)
        for comp in strongly_connected_components(
            list(a.states()), lambda q: succ[q]
        ):
            if len(comp) > 1 or comp[0] in succ[comp[0]]:
                cycle = _local_cycle(comp[0], set(comp), succ)
                return LocalLoopWitness(letter, tuple(cycle))
    return NllOk()


def _local_cycle(
    start: StateId, comp: set[StateId], succ: dict[StateId, list[StateId]]
) -> list[StateId]:
    path = [start]
    seen = {start}
    q = start
    while True:
        q = next(d for d in succ[q] if d in comp)
        if q in seen:
            return path[path.index(q):]
        path.append(q)
        seen.add(q)


# ----------------------------------------------------------------- closure

def _combine(
    a: AlternatingAutomaton, b: AlternatingAutomaton, fresh_is_adam: bool
) -> AlternatingAutomaton:
    if set(a.alphabet) != set(b.alphabet):
        raise AutomatonFormatError("alphabets differ")
    names = (
        ("init",)
        + tuple("l_" + s for s in a.names)
        + tuple("r_" + s for s in b.names)
    )
    off_a, off_b = 1, 1 + len(a.names)
    locals_ = [(0, x, off_a + a.initial) for x in a.alphabet]
    locals_ += [(0, x, off_b + b.initial) for x in a.alphabet]
    locals_ += [(off_a + s, x, off_a + d) for s, x, d in a.locals_]
    locals_ += [(off_b + s, x, off_b + d) for s, x, d in b.locals_]
    splits = [(off_a + s, x, off_a + l, off_a + r) for s, x, l, r in a.splits]
    splits += [(off_b + s, x, off_b + l, off_b + r) for s, x, l, r in b.splits]
    shift = lambda qs, off: frozenset(off + q for q in qs)  # noqa: E731
    combined = AlternatingAutomaton(
        names=names,
        alphabet=a.alphabet,
        initial=0,
        adam=shift(a.adam, off_a) | shift(b.adam, off_b)
        | (frozenset([0]) if fresh_is_adam else frozenset()),
        f_forall=shift(a.f_forall, off_a) | shift(b.f_forall, off_b),
        f_one=shift(a.f_one, off_a) | shift(b.f_one, off_b),
        f_pos=shift(a.f_pos, off_a) | shift(b.f_pos, off_b),
        locals_=tuple(sorted(locals_)),
        splits=tuple(sorted(splits)),
    )
    return normalize(combined)


def union(a: AlternatingAutomaton, b: AlternatingAutomaton) -> AlternatingAutomaton:
    """Fresh least initial state owned by the tree-quantifying player picks
    one of the two automata on the first letter."""
    return _combine(a, b, fresh_is_adam=False)


def intersection(
    a: AlternatingAutomaton, b: AlternatingAutomaton
) -> AlternatingAutomaton:
    """Fresh least initial state owned by the adversary demands both."""
    return _combine(a, b, fresh_is_adam=True)


# --------------------------------------------------------------- alt format

_NAME = "state names are words over letters, digits and underscore"


def _check_name(name: str, line_no: int) -> None:
    if not name or not all(c.isalnum() or c == "_" for c in name):
        raise AutomatonFormatError(f"line {line_no}: bad name {name!r}; {_NAME}")


def _content_lines(text: str) -> list[tuple[int, list[str]]]:
    out = []
    for i, raw in enumerate(text.split("\n"), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            out.append((i, body.split()))
    return out


def parse_alt(text: str) -> AlternatingAutomaton:
    lines = _content_lines(text)
    if not lines or lines[0][1] != ["alt"]:
        raise AutomatonFormatError("expected 'alt' header")
    if len(lines) < 2 or lines[1][1][0] != "alphabet":
        raise AutomatonFormatError("expected 'alphabet' line")
    alphabet = tuple(lines[1][1][1:])
    if not alphabet:
        raise AutomatonFormatError("empty alphabet")
    for i, letter in enumerate(alphabet):
        _check_name(letter, lines[1][0])

    names: list[str] = []
    adam: set[int] = set()
    f_forall: set[int] = set()
    f_one: set[int] = set()
    f_pos: set[int] = set()
    rank: dict[str, int] = {}
    initial: int | None = None
    locals_: list[Local] = []
    splits: list[Split] = []

    def state_ref(name: str, line_no: int) -> int:
        if name not in rank:
            raise AutomatonFormatError(f"line {line_no}: unknown state {name!r}")
        return rank[name]

    def letter_ref(name: str, line_no: int) -> str:
        if name not in alphabet:
            raise AutomatonFormatError(f"line {line_no}: unknown letter {name!r}")
        return name

    for line_no, words in lines[2:]:
        head = words[0]
        if head == "state":
            if initial is not None:
                raise AutomatonFormatError(
                    f"line {line_no}: state declared after init"
                )
            if len(words) < 3:
                raise AutomatonFormatError(f"line {line_no}: truncated state line")
            name = words[1]
            _check_name(name, line_no)
            if name in rank:
                raise AutomatonFormatError(
                    f"line {line_no}: duplicate state {name!r}"
                )
            q = len(names)
            rank[name] = q
            names.append(name)
            owner = words[2]
            if owner == "owner=adam":
                adam.add(q)
            elif owner != "owner=eve":
                raise AutomatonFormatError(
                    f"line {line_no}: expected owner=eve or owner=adam"
                )
            for flag in words[3:]:
                if flag == "forall":
                    f_forall.add(q)
                elif flag == "one":
                    f_one.add(q)
                elif flag == "pos":
                    f_pos.add(q)
                else:
                    raise AutomatonFormatError(
                        f"line {line_no}: unknown flag {flag!r}"
                    )
        elif head == "init":
            if initial is not None or len(words) != 2:
                raise AutomatonFormatError(f"line {line_no}: bad init line")
            initial = state_ref(words[1], line_no)
        elif head == "local":
            if initial is None or len(words) != 4:
                raise AutomatonFormatError(f"line {line_no}: bad local line")
            locals_.append(
                (
                    state_ref(words[1], line_no),
                    letter_ref(words[2], line_no),
                    state_ref(words[3], line_no),
                )
            )
        elif head == "split":
            if initial is None or len(words) != 5:
                raise AutomatonFormatError(f"line {line_no}: bad split line")
            splits.append(
                (
                    state_ref(words[1], line_no),
                    letter_ref(words[2], line_no),
                    state_ref(words[3], line_no),
                    state_ref(words[4], line_no),
                )
            )
        else:
            raise AutomatonFormatError(
                f"line {line_no}: unknown directive {head!r}"
            )
    if initial is None:
        raise AutomatonFormatError("missing init line")
    return AlternatingAutomaton(
        names=tuple(names),
        alphabet=alphabet,
        initial=initial,
        adam=frozenset(adam),
        f_forall=frozenset(f_forall),
        f_one=frozenset(f_one),
        f_pos=frozenset(f_pos),
        locals_=tuple(sorted(set(locals_))),
        splits=tuple(sorted(set(splits))),
    )


def format_alt(a: AlternatingAutomaton) -> str:
    out = ["alt", "alphabet " + " ".join(a.alphabet)]
    for q, name in enumerate(a.names):
        flags = ["owner=adam" if q in a.adam else "owner=eve"]
        if q in a.f_forall:
            flags.append("forall")
        if q in a.f_one:
            flags.append("one")
        if q in a.f_pos:
            flags.append("pos")
        out.append(f"state {name} " + " ".join(flags))
    out.append(f"init {a.names[a.initial]}")
    for src, letter, dst in sorted(a.locals_):
        out.append(f"local {a.names[src]} {letter} {a.names[dst]}")
    for src, letter, left, right in sorted(a.splits):
        out.append(
            f"split {a.names[src]} {letter} {a.names[left]} {a.names[right]}"
        )
    return "\n".join(out) + "\n"


# ---------------------------------------------------------- non-determinism

@dataclass(frozen=True)
class BuchiTarget:
    """Sure condition: visit the target set infinitely often on every play."""

    states: frozenset[StateId]


@dataclass(frozen=True)
class LimsupSet:
    """Sure condition: the largest state recurring on a play lies in the set."""

    states: frozenset[StateId]


@dataclass(frozen=True)
class NonzeroAutomaton:
    """Letterless split-only automaton over binary trees; all branching is
    resolved by the run itself."""

    names: tuple[str, ...]
    initial: StateId
    f_one: frozenset[StateId]
    f_pos: frozenset[StateId]
    sure: BuchiTarget | LimsupSet
    splits: tuple[tuple[StateId, StateId, StateId], ...]
    _succ: dict[StateId, list[tuple[StateId, StateId]]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        n = len(self.names)
        if len(set(self.names)) != n:
            raise AutomatonFormatError("duplicate state names")
        if not 0 <= self.initial < n:
            raise AutomatonFormatError("initial state out of range")
        for group in (self.f_one, self.f_pos, self.sure.states):
            if not all(0 <= q < n for q in group):
                raise AutomatonFormatError("state set out of range")
        for src, left, right in self.splits:
            if not (0 <= src < n and 0 <= left < n and 0 <= right < n):
                raise AutomatonFormatError(f"bad split {(src, left, right)}")
            self._succ.setdefault(src, []).append((left, right))

    @property
    def state_count(self) -> int:
        return len(self.names)

    def states(self) -> range:
        return range(len(self.names))

    def choices(self, q: StateId) -> list[tuple[StateId, StateId]]:
        return self._succ.get(q, [])


def normalize_nonzero(a: NonzeroAutomaton) -> NonzeroAutomaton:
    """Drop splits that leave the positive set from inside it, then drop
    states without any split; the initial state is kept regardless."""
    alive = set(a.states())
    splits = sorted(a.splits)
    while True:
        splits = [
            t
            for t in splits
            if t[0] in alive
            and t[1] in alive
            and t[2] in alive
            and (t[0] not in a.f_pos or t[1] in a.f_pos or t[2] in a.f_pos)
        ]
        with_split = {t[0] for t in splits}
        dead = alive - with_split - {a.initial}
        if not dead:
            break
        alive -= dead
    order = sorted(alive)
    renum = {q: i for i, q in enumerate(order)}
    sure: BuchiTarget | LimsupSet
    kept = frozenset(renum[q] for q in a.sure.states if q in alive)
    sure = type(a.sure)(kept)
    return NonzeroAutomaton(
        names=tuple(a.names[q] for q in order),
        initial=renum[a.initial],
        f_one=frozenset(renum[q] for q in a.f_one if q in alive),
        f_pos=frozenset(renum[q] for q in a.f_pos if q in alive),
        sure=sure,
        splits=tuple((renum[s], renum[l], renum[r]) for s, l, r in splits),
    )


def parse_nonzero(text: str) -> NonzeroAutomaton:
    lines = _content_lines(text)
    if not lines or lines[0][1] != ["nonzero"]:
        raise AutomatonFormatError("expected 'nonzero' header")
    if (
        len(lines) < 2
        or len(lines[1][1]) != 2
        or lines[1][1][0] != "sure-kind"
        or lines[1][1][1] not in ("buchi", "limsup")
    ):
        raise AutomatonFormatError("expected 'sure-kind buchi' or 'sure-kind limsup'")
    buchi = lines[1][1][1] == "buchi"
    names: list[str] = []
    rank: dict[str, int] = {}
    f_one: set[int] = set()
    f_pos: set[int] = set()
    sure_states: set[int] = set()
    initial: int | None = None
    splits: list[tuple[int, int, int]] = []

    def state_ref(name: str, line_no: int) -> int:
        if name not in rank:
            raise AutomatonFormatError(f"line {line_no}: unknown state {name!r}")
        return rank[name]

    for line_no, words in lines[2:]:
        head = words[0]
        if head == "state":
            if initial is not None:
                raise AutomatonFormatError(
                    f"line {line_no}: state declared after init"
                )
            if len(words) < 2:
                raise AutomatonFormatError(f"line {line_no}: truncated state line")
            name = words[1]
            _check_name(name, line_no)
            if name in rank:
                raise AutomatonFormatError(
                    f"line {line_no}: duplicate state {name!r}"
                )
            q = len(names)
            rank[name] = q
            names.append(name)
            for flag in words[2:]:
                if flag == "one":
                    f_one.add(q)
                elif flag == "pos":
                    f_pos.add(q)
                elif flag == "sure":
                    sure_states.add(q)
                else:
                    raise AutomatonFormatError(
                        f"line {line_no}: unknown flag {flag!r}"
                    )
        elif head == "init":
            if initial is not None or len(words) != 2:
                raise AutomatonFormatError(f"line {line_no}: bad init line")
            initial = state_ref(words[1], line_no)
        elif head == "split":
            if initial is None or len(words) != 4:
                raise AutomatonFormatError(f"line {line_no}: bad split line")
            splits.append(
                (
                    state_ref(words[1], line_no),
                    state_ref(words[2], line_no),
                    state_ref(words[3], line_no),
                )
            )
        else:
            raise AutomatonFormatError(
                f"line {line_no}: unknown directive {head!r}"
            )
    if initial is None:
        raise AutomatonFormatError("missing init line")
    sure: BuchiTarget | LimsupSet
    sure = (BuchiTarget if buchi else LimsupSet)(frozenset(sure_states))
    return NonzeroAutomaton(
        names=tuple(names),
        initial=initial,
        f_one=frozenset(f_one),
        f_pos=frozenset(f_pos),
        sure=sure,
        splits=tuple(sorted(set(splits))),
    )


def format_nonzero(a: NonzeroAutomaton) -> str:
    kind = "buchi" if isinstance(a.sure, BuchiTarget) else "limsup"
    out = ["nonzero", f"sure-kind {kind}"]
    for q, name in enumerate(a.names):
        flags = []
        if q in a.f_one:
            flags.append("one")
        if q in a.f_pos:
            flags.append("pos")
        if q in a.sure.states:
            flags.append("sure")
        out.append(("state " + name + " " + " ".join(flags)).rstrip())
    out.append(f"init {a.names[a.initial]}")
    for src, left, right in sorted(a.splits):
        out.append(f"split {a.names[src]} {a.names[left]} {a.names[right]}")
    return "\n".join(out) + "\n"
