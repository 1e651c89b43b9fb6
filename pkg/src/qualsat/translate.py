"""Compilation of positive-form state formulas into alternating automata.

Each quantified subformula is first turned into a deterministic word
automaton over valuations of its state-formula leaves (``path_automaton``);
a run accepts when its largest infinitely repeated state is accepting, so
complements never need a separate construction.  ``translate`` then wires
the automata of all quantified subformulas, and of the duals Adam may ask
for, into one alternating automaton: Eve claims a valuation of the leaves
at every tree node, Adam either accepts the claim and lets the word
automaton advance, or challenges one leaf and the game descends into the
claimed formula or its dual.  Splits advance in the tree; the quantifier
kind decides how (both children, a chosen child, or a child kept with
positive probability).

Adam only ever has local moves, and at most one of them stays inside his
current recurrence class (the accept move), so every output has limited
choice; challenge moves strictly descend the subformula order, so no letter
admits a local cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .automata import AlternatingAutomaton, Local, Split, StateId
from .errors import UnknownLetterError, UnsupportedPathFormula
from .formulas import (
    PathFormula,
    StateFormula,
    alphabet_of,
    classify,
    dual,
    format_path,
    is_positive_form,
)

_QUANTIFIERS = ("exists", "forall", "prob_pos", "prob_one")


@dataclass(frozen=True)
class PathAutomaton:
    """Deterministic, complete automaton over valuations of ``leaves``.

    States are ordered by rank; a run accepts when the largest state it
    visits infinitely often is in ``accepting``.  Letters are bit masks
    with bit ``j`` meaning leaf ``j`` is claimed true.
    """

    names: tuple[str, ...]
    initial: int
    accepting: frozenset[int]
    leaves: tuple[StateFormula, ...]
    table: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.names)
        width = 1 << len(self.leaves)
        if len(self.table) != n or any(len(row) != width for row in self.table):
            raise ValueError("transition table has the wrong shape")
        if any(not 0 <= dst < n for row in self.table for dst in row):
            raise ValueError("transition target out of range")
        if not 0 <= self.initial < n or not self.accepting <= set(range(n)):
            raise ValueError("state index out of range")
        if len(set(map(id, self.leaves))) != len(self.leaves):
            raise ValueError("duplicate leaf formula")

    def step(self, state: int, mask: int) -> int:
        return self.table[state][mask]


def _automaton(
    names: tuple[str, ...],
    initial: int,
    accepting: set[int],
    leaves: tuple[StateFormula, ...],
    delta: Callable[[int, int], int],
) -> PathAutomaton:
    width = 1 << len(leaves)
    table = tuple(
        tuple(delta(q, m) for m in range(width)) for q in range(len(names))
    )
    return PathAutomaton(names, initial, frozenset(accepting), leaves, table)


def _tests(
    args: tuple[StateFormula, ...],
) -> tuple[tuple[StateFormula, ...], list[Callable[[int], bool]]]:
    """Leaf list (distinct, constants dropped) and per-argument mask tests."""
    leaves: list[StateFormula] = []
    index: dict[int, int] = {}
    tests: list[Callable[[int], bool]] = []
    for arg in args:
        if arg.kind == "true":
            tests.append(lambda m: True)
        elif arg.kind == "false":
            tests.append(lambda m: False)
        else:
            j = index.get(id(arg))
            if j is None:
                j = len(leaves)
                index[id(arg)] = j
                leaves.append(arg)
            tests.append(lambda m, j=j: bool(m >> j & 1))
    return tuple(leaves), tests


def _extend(
    leaves: tuple[StateFormula, ...], guard: StateFormula
) -> tuple[tuple[StateFormula, ...], Callable[[int], bool]]:
    """Add one tracked formula to a product, reusing an existing leaf."""
    if guard.kind == "true":
        return leaves, lambda m: True
    if guard.kind == "false":
        return leaves, lambda m: False
    for j, leaf in enumerate(leaves):
        if leaf is guard:
            return leaves, lambda m, j=j: bool(m >> j & 1)
    j = len(leaves)
    return leaves + (guard,), lambda m, j=j: bool(m >> j & 1)


# ------------------------------------------------------------- core shapes

def _state_core(s: StateFormula) -> PathAutomaton:
    leaves, tests = _tests((s,))
    t = tests[0]

    def delta(q: int, m: int) -> int:
        if q == 1:
            return 2 if t(m) else 0
        return q

    return _automaton(("reject", "begin", "accept"), 1, {2}, leaves, delta)


def _globally_core(s: StateFormula) -> PathAutomaton:
    leaves, tests = _tests((s,))
    t = tests[0]
    return _automaton(
        ("dead", "live"),
        1,
        {1},
        leaves,
        lambda q, m: 1 if q == 1 and t(m) else 0,
    )


def _until_core(x: StateFormula, y: StateFormula) -> PathAutomaton:
    leaves, tests = _tests((x, y))
    tx, ty = tests

    def delta(q: int, m: int) -> int:
        if q != 1:
            return q
        if ty(m):
            return 2
        return 1 if tx(m) else 0

    return _automaton(("dead", "wait", "sat"), 1, {2}, leaves, delta)


def _weak_core(z: StateFormula, w: StateFormula) -> PathAutomaton:
    # G z | (z U w): waiting forever is as good as reaching the witness.
    leaves, tests = _tests((z, w))
    tz, tw = tests

    def delta(q: int, m: int) -> int:
        if q != 1:
            return q
        if tw(m):
            return 2
        return 1 if tz(m) else 0

    return _automaton(("dead", "wait", "sat"), 1, {1, 2}, leaves, delta)


def _repeat_core(y: StateFormula) -> PathAutomaton:
    # G F y: the hit state is on top, so it decides the largest recurring.
    leaves, tests = _tests((y,))
    t = tests[0]
    return _automaton(
        ("pending", "hit"), 0, {1}, leaves, lambda q, m: 1 if t(m) else 0
    )


def _settle_core(y: StateFormula) -> PathAutomaton:
    # F G y: the outside state is on top, so escaping it finitely often wins.
    leaves, tests = _tests((y,))
    t = tests[0]
    return _automaton(
        ("inside", "outside"), 1, {0}, leaves, lambda q, m: 0 if t(m) else 1
    )


def _delay_start(core: PathAutomaton) -> PathAutomaton:
    """Prefix a start state that skips the first valuation.  The start state
    is visited once, so placing it at the bottom changes no run's largest
    recurring state."""
    width = 1 << len(core.leaves)
    rows = [tuple(core.initial + 1 for _ in range(width))]
    for q in range(len(core.names)):
        rows.append(tuple(core.table[q][m] + 1 for m in range(width)))
    return PathAutomaton(
        ("start",) + core.names,
        0,
        frozenset(q + 1 for q in core.accepting),
        core.leaves,
        tuple(rows),
    )


def _buchi_core(
    p: PathFormula,
) -> tuple[PathAutomaton, frozenset[int], bool] | None:
    """Embed a literal, or a literal under one next, for the guarded
    products; returns the core, its recurrence ranks, and the complement
    flag, or None when the shape is not literal-based."""
    if p.kind == "automaton":
        core, buchi = _literal_core(p)
        return core, buchi, p.complement
    if p.kind == "next" and p.children[0].kind == "automaton":
        lit = p.children[0]
        core, buchi = _literal_core(lit)
        return (
            _delay_start(core),
            frozenset(q + 1 for q in buchi),
            lit.complement,
        )
    return None


def _literal_core(p: PathFormula) -> tuple[PathAutomaton, frozenset[int]]:
    """Embed an automaton literal, recurrence states on top; returns the
    embedded automaton and the ranks of the literal's recurrence set."""
    dba = p.automaton
    assert dba is not None
    leaves, tests = _tests(p.arguments)
    plain = [q for q in dba.states if q not in dba.accepting]
    marked = [q for q in dba.states if q in dba.accepting]
    ordered = plain + marked
    rank = {name: i for i, name in enumerate(ordered)}
    width = 1 << len(leaves)
    argmask = [
        sum(1 << i for i, t in enumerate(tests) if t(m)) for m in range(width)
    ]
    table = tuple(
        tuple(rank[dba.step(name, argmask[m])] for m in range(width))
        for name in ordered
    )
    buchi = frozenset(range(len(plain), len(ordered)))
    accepting = frozenset(range(len(plain))) if p.complement else buchi
    return (
        PathAutomaton(
            tuple(ordered), rank[dba.initial], accepting, leaves, table
        ),
        buchi,
    )


# ------------------------------------------------------- guarded products

def _and_repeat(core: PathAutomaton, guard: StateFormula) -> PathAutomaton:
    """core & G F guard, for cores whose runs settle on a single state: the
    settled state paired with a fresh guard bit decides both conjuncts."""
    leaves, tg = _extend(core.leaves, guard)
    inner = (1 << len(core.leaves)) - 1
    n = len(core.names)
    names = tuple(
        f"{core.names[c]}/{t}" for c in range(n) for t in (0, 1)
    )

    def delta(q: int, m: int) -> int:
        dst = core.table[q >> 1][m & inner]
        return dst << 1 | (1 if tg(m) else 0)

    accepting = {c << 1 | 1 for c in core.accepting}
    return _automaton(names, core.initial << 1, accepting, leaves, delta)


def _or_settle(core: PathAutomaton, guard: StateFormula) -> PathAutomaton:
    """core | F G guard, for settling cores; the guard-missed copy sits above
    the guard-held copy, so missing the guard finitely often wins outright."""
    leaves, tg = _extend(core.leaves, guard)
    inner = (1 << len(core.leaves)) - 1
    n = len(core.names)
    names = tuple(
        f"{core.names[c]}/{t}" for c in range(n) for t in (1, 0)
    )

    def delta(q: int, m: int) -> int:
        dst = core.table[q >> 1][m & inner]
        return dst << 1 | (0 if tg(m) else 1)

    accepting = {c << 1 for c in range(n)} | {
        c << 1 | 1 for c in core.accepting
    }
    return _automaton(names, core.initial << 1, accepting, leaves, delta)


def _round_product(
    core: PathAutomaton,
    buchi: frozenset[int],
    guard: StateFormula,
    flip_guard: bool,
    accept_fired: bool,
) -> PathAutomaton:
    """Count rounds of (recurrence visit, then guard letter).  The fired
    block sits on top: rounds recur iff both events recur, which gives
    literal & G F guard directly and its complement-shaped disjunction by
    accepting everything below the fired block instead."""
    leaves, tg = _extend(core.leaves, guard)
    inner = (1 << len(core.leaves)) - 1
    n = len(core.names)
    stage = ("seek", "wait", "fired")
    names = tuple(
        f"{core.names[c]}.{stage[j]}" for j in range(3) for c in range(n)
    )

    def delta(q: int, m: int) -> int:
        j, c = divmod(q, n)
        if j == 2:
            j = 0
        if j == 0 and c in buchi:
            j = 1
        if j == 1 and (tg(m) != flip_guard):
            j = 2
        return j * n + core.table[c][m & inner]

    accepting = (
        set(range(2 * n, 3 * n)) if accept_fired else set(range(2 * n))
    )
    return _automaton(names, core.initial, accepting, leaves, delta)


def _graded_product(
    core: PathAutomaton,
    buchi: frozenset[int],
    guard: StateFormula,
    flip_guard: bool,
    accepting_grades: tuple[int, ...],
) -> PathAutomaton:
    """Grade each step (2: recurrence visit, 1: guard event, 0: neither) and
    remember the grade of the incoming step; grade-major order makes the
    largest recurring state carry the largest recurring grade.  Covers
    literal | F G guard and complemented literal & G F guard."""
    leaves, tg = _extend(core.leaves, guard)
    inner = (1 << len(core.leaves)) - 1
    n = len(core.names)
    names = tuple(
        f"{core.names[c]}.g{g}" for g in range(3) for c in range(n)
    )

    def delta(q: int, m: int) -> int:
        c = q % n
        if c in buchi:
            grade = 2
        elif tg(m) != flip_guard:
            grade = 1
        else:
            grade = 0
        return grade * n + core.table[c][m & inner]

    accepting = {
        g * n + c for g in accepting_grades for c in range(n)
    }
    return _automaton(names, core.initial, accepting, leaves, delta)


# ---------------------------------------------------------------- dispatch

def _unsupported(p: PathFormula) -> UnsupportedPathFormula:
    return UnsupportedPathFormula(
        f"path formula {format_path(p)!r} is outside the supported fragment; "
        "nest temporal operators only through state formulas, or encode the "
        "property as a deterministic auto{...} literal"
    )


def _repeat_guard(p: PathFormula) -> StateFormula | None:
    """Match G F y for a state formula y."""
    if p.kind != "globally":
        return None
    body = p.children[0]
    if body.kind != "until":
        return None
    left, right = body.children
    if (
        left.kind == "state"
        and left.state is not None
        and left.state.kind == "true"
        and right.kind == "state"
    ):
        return right.state
    return None


def _settle_guard(p: PathFormula) -> StateFormula | None:
    """Match F G y for a state formula y."""
    if p.kind != "until":
        return None
    left, right = p.children
    if not (
        left.kind == "state"
        and left.state is not None
        and left.state.kind == "true"
        and right.kind == "globally"
    ):
        return None
    body = right.children[0]
    return body.state if body.kind == "state" else None


def _weak_pair(
    p: PathFormula,
) -> tuple[StateFormula, StateFormula] | None:
    """Match G z | (z U w) in either orientation, with the two z shared."""
    if p.kind != "or":
        return None
    first, second = p.children
    for a, b in ((first, second), (second, first)):
        if (
            a.kind == "globally"
            and a.children[0].kind == "state"
            and b.kind == "until"
            and b.children[0].kind == "state"
            and b.children[1].kind == "state"
            and b.children[0].state is a.children[0].state
        ):
            return a.children[0].state, b.children[1].state  # type: ignore[return-value]
    return None


def _core(p: PathFormula) -> PathAutomaton:
    """Shapes whose runs settle on a single state; products build on these."""
    if p.kind == "state":
        return _state_core(p.state)  # type: ignore[arg-type]
    if p.kind == "globally":
        body = p.children[0]
        if body.kind == "state":
            return _globally_core(body.state)  # type: ignore[arg-type]
        raise _unsupported(p)
    if p.kind == "until":
        left, right = p.children
        if left.kind == "state" and right.kind == "state":
            return _until_core(left.state, right.state)  # type: ignore[arg-type]
        raise _unsupported(p)
    if p.kind == "next":
        body = p.children[0]
        if body.kind == "state":
            return _delay_start(_state_core(body.state))  # type: ignore[arg-type]
        if (
            body.kind == "until"
            and body.children[0].kind == "state"
            and body.children[1].kind == "state"
        ):
            return _delay_start(
                _until_core(body.children[0].state, body.children[1].state)  # type: ignore[arg-type]
            )
        pair = _weak_pair(body)
        if pair is not None:
            return _delay_start(_weak_core(*pair))
        raise _unsupported(p)
    pair = _weak_pair(p)
    if pair is not None:
        return _weak_core(*pair)
    raise _unsupported(p)


def path_automaton(p: PathFormula) -> PathAutomaton:
    """Deterministic word automaton of a path formula over leaf valuations.

    Accepts X/G/U over state formulas, automaton literals, the weak-until
    disjunction produced by dualizing an until, the recurrence and
    settlement forms G F y and F G y, and conjunctions or disjunctions of a
    core shape with those two forms.  Everything else raises
    UnsupportedPathFormula.
    """
    if p.kind == "automaton":
        return _literal_core(p)[0]
    guard = _repeat_guard(p)
    if guard is not None:
        return _repeat_core(guard)
    guard = _settle_guard(p)
    if guard is not None:
        return _settle_core(guard)
    if p.kind == "and":
        first, second = p.children
        for side, other in ((second, first), (first, second)):
            guard = _repeat_guard(side)
            if guard is None:
                continue
            based = _buchi_core(other)
            if based is None:
                return _and_repeat(_core(other), guard)
            embedded, buchi, complemented = based
            if complemented:
                return _graded_product(embedded, buchi, guard, False, (1,))
            return _round_product(embedded, buchi, guard, False, True)
        raise _unsupported(p)
    if p.kind == "or":
        pair = _weak_pair(p)
        if pair is not None:
            return _weak_core(*pair)
        first, second = p.children
        for side, other in ((second, first), (first, second)):
            guard = _settle_guard(side)
            if guard is None:
                continue
            based = _buchi_core(other)
            if based is None:
                return _or_settle(_core(other), guard)
            embedded, buchi, complemented = based
            if complemented:
                return _round_product(embedded, buchi, guard, True, False)
            return _graded_product(embedded, buchi, guard, True, (0, 2))
        raise _unsupported(p)
    if p.kind == "next" and p.children[0].kind == "automaton":
        return _delay_start(_literal_core(p.children[0])[0])
    return _core(p)


# -------------------------------------------------------------- translation

@dataclass(frozen=True)
class TranslationState:
    """One state of the translated automaton.

    ``formula`` states carry a subformula to be established; ``component``,
    ``valuated`` and ``expanded`` states carry a quantified formula, a
    position of its path automaton, and (for ``valuated``) Eve's claimed
    leaf mask.  ``top``, ``bottom`` and ``sharp`` are the absorbing verdict
    states.
    """

    kind: str
    formula: StateFormula | None = None
    q: int | None = None
    mask: int | None = None


def translate(
    s: StateFormula, alphabet: tuple[str, ...] | None = None
) -> AlternatingAutomaton:
    """Compile a positive-form state formula into an alternating automaton
    whose accepted binary trees are exactly the formula's models.

    The alphabet defaults to the formula's letters; passing one pins the
    letter set and order.  Raises UnsupportedPathFormula on quantified path
    formulas outside the supported fragment and UnknownLetterError when the
    formula uses a letter missing from the given alphabet.
    """
    if not is_positive_form(s):
        raise ValueError("translation expects a formula in positive form")
    used = alphabet_of(s)
    if alphabet is None:
        letters = tuple(sorted(used))
    else:
        letters = tuple(alphabet)
        if len(set(letters)) != len(letters):
            raise ValueError("duplicate letters in the alphabet")
        missing = sorted(used - set(letters))
        if missing:
            raise UnknownLetterError(
                f"formula letter {missing[0]!r} is not in the alphabet"
            )
    if not letters:
        raise ValueError("translation needs at least one letter")

    automata: dict[StateFormula, PathAutomaton] = {}

    def expand(x: StateFormula) -> tuple[StateFormula, ...]:
        if x.kind in ("and", "or"):
            return x.children
        if x.kind in _QUANTIFIERS:
            pa = automata.get(x)
            if pa is None:
                assert x.path is not None
                pa = path_automaton(x.path)
                automata[x] = pa
            out: list[StateFormula] = []
            for leaf in pa.leaves:
                out.append(leaf)
                out.append(dual(leaf))
            return tuple(out)
        return ()

    # Subformulas and the duals Adam may ask for, children first; the dual
    # of a leaf is smaller than its quantifier, so the walk terminates.
    order: list[StateFormula] = []
    mark: set[int] = set()
    stack: list[tuple[StateFormula, bool]] = [(s, False)]
    while stack:
        node, ready = stack.pop()
        if node.kind in ("true", "false"):
            continue
        if ready:
            order.append(node)
            continue
        if id(node) in mark:
            continue
        mark.add(id(node))
        stack.append((node, True))
        for child in reversed(expand(node)):
            stack.append((child, False))

    names: list[str] = []
    key_of: dict[TranslationState, StateId] = {}

    def alloc(key: TranslationState, name: str) -> StateId:
        rank = len(names)
        names.append(name)
        key_of[key] = rank
        return rank

    bottom = alloc(TranslationState("bottom"), "bot")
    for n, x in enumerate(order):
        alloc(TranslationState("formula", x), f"f{n}")
        if x.kind in _QUANTIFIERS:
            pa = automata[x]
            bits = len(pa.leaves)
            for q in range(len(pa.names)):
                for b in range(1 << bits):
                    alloc(TranslationState("valuated", x, q, b), f"v{n}_{q}_{b}")
                alloc(TranslationState("expanded", x, q), f"e{n}_{q}")
            # Path-automaton copies last: the largest state a trapped play
            # revisits is then always one of them, in path-automaton order.
            for q in range(len(pa.names)):
                alloc(TranslationState("component", x, q), f"c{n}_{q}")
    sharp = alloc(TranslationState("sharp"), "sharp")
    top_rank = alloc(TranslationState("top"), "top")

    def formula_state(x: StateFormula) -> StateId:
        if x.kind == "true":
            return top_rank
        if x.kind == "false":
            return bottom
        return key_of[TranslationState("formula", x)]

    locs: set[Local] = set()
    spl: set[Split] = set()
    adam: set[StateId] = set()
    for letter in letters:
        for q in (bottom, sharp, top_rank):
            spl.add((q, letter, q, q))
    for n, x in enumerate(order):
        src = key_of[TranslationState("formula", x)]
        if x.kind == "letter":
            for letter in letters:
                target = top_rank if letter == x.letter else bottom
                locs.add((src, letter, target))
        elif x.kind == "not":
            inner = x.children[0].letter
            for letter in letters:
                target = bottom if letter == inner else top_rank
                locs.add((src, letter, target))
        elif x.kind in ("and", "or"):
            if x.kind == "and":
                adam.add(src)
            for letter in letters:
                for child in x.children:
                    locs.add((src, letter, formula_state(child)))
        else:
            pa = automata[x]
            bits = len(pa.leaves)
            entry = key_of[TranslationState("component", x, pa.initial)]
            for letter in letters:
                locs.add((src, letter, entry))
            for q in range(len(pa.names)):
                here = key_of[TranslationState("component", x, q)]
                for b in range(1 << bits):
                    claim = key_of[TranslationState("valuated", x, q, b)]
                    adam.add(claim)
                    targets = [
                        formula_state(
                            leaf if b >> j & 1 else dual(leaf)
                        )
                        for j, leaf in enumerate(pa.leaves)
                    ]
                    targets.append(
                        key_of[
                            TranslationState("expanded", x, pa.table[q][b])
                        ]
                    )
                    for letter in letters:
                        locs.add((here, letter, claim))
                        for target in targets:
                            locs.add((claim, letter, target))
                grown = key_of[TranslationState("expanded", x, q)]
                for letter in letters:
                    if x.kind == "exists":
                        spl.add((grown, letter, top_rank, here))
                        spl.add((grown, letter, here, top_rank))
                    else:
                        spl.add((grown, letter, here, here))
                        if x.kind == "prob_pos":
                            spl.add((grown, letter, sharp, here))
                            spl.add((grown, letter, here, sharp))

    f_one = {top_rank, sharp}
    for x in order:
        if x.kind in _QUANTIFIERS:
            for q in automata[x].accepting:
                f_one.add(key_of[TranslationState("component", x, q)])
    if classify(s).forall_trivial:
        f_forall = frozenset(range(len(names)))
    else:
        forall = {top_rank, sharp}
        for x in order:
            if x.kind not in _QUANTIFIERS:
                continue
            pa = automata[x]
            if x.kind in ("prob_pos", "prob_one"):
                bits = len(pa.leaves)
                for q in range(len(pa.names)):
                    for b in range(1 << bits):
                        forall.add(
                            key_of[TranslationState("valuated", x, q, b)]
                        )
                    forall.add(key_of[TranslationState("expanded", x, q)])
                    forall.add(key_of[TranslationState("component", x, q)])
            else:
                for q in pa.accepting:
                    forall.add(key_of[TranslationState("component", x, q)])
        f_forall = frozenset(forall)

    return AlternatingAutomaton(
        names=tuple(names),
        alphabet=letters,
        initial=formula_state(s),
        adam=frozenset(adam),
        f_forall=f_forall,
        f_one=frozenset(f_one),
        f_pos=frozenset(q for q in range(len(names)) if q != sharp),
        locals_=tuple(sorted(locs)),
        splits=tuple(sorted(spl)),
    )
