"""Abstract syntax and normalization for qualitative branching-time formulas.

Formulas are hash-consed DAGs: the factory functions intern every node, so
structurally equal formulas are the same object and all rewrites stay linear
in the DAG size. Equality on formula nodes is identity.

State formulas carry the boolean and quantifier layer (E, A, P>0, P=1); path
formulas carry the temporal layer (X, U, G, deterministic-automaton
literals). The factories fold constants and collapse purely state-level path
combinations back into state formulas, which keeps the translation closed
under duals without a general word-automaton construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import DelayLetterCollision

# Reserved letter standing for the delay symbol of the binary-tree encoding.
# Surface syntax spells it @delay; identifiers cannot start with _.
DELAY_LETTER = "_delay"


@dataclass(frozen=True, eq=False)
class BuchiWordAutomaton:
    """Deterministic, complete Buchi automaton over valuations of `arity`
    state formulas; letters are bitmasks with bit i = argument i claimed
    true."""

    states: tuple[str, ...]
    initial: str
    accepting: frozenset[str]
    arity: int
    transitions: tuple[tuple[str, int, str], ...]

    def __post_init__(self) -> None:
        known = set(self.states)
        if len(known) != len(self.states):
            raise ValueError("duplicate automaton state")
        if self.initial not in known or not self.accepting <= known:
            raise ValueError("automaton references unknown state")
        table: dict[tuple[str, int], str] = {}
        for src, mask, dst in self.transitions:
            if src not in known or dst not in known:
                raise ValueError("transition references unknown state")
            if not 0 <= mask < (1 << self.arity):
                raise ValueError("transition letter out of range")
            if (src, mask) in table:
                raise ValueError(f"ambiguous transition from {src}")
            table[src, mask] = dst
        if len(table) != len(self.states) << self.arity:
            raise ValueError("automaton is not complete")
        object.__setattr__(self, "_table", table)

    def step(self, state: str, mask: int) -> str:
        return self._table[state, mask]  # type: ignore[attr-defined]

    def _key(self) -> tuple:
        return (
            self.states,
            self.initial,
            tuple(sorted(self.accepting)),
            self.arity,
            tuple(sorted(self.transitions)),
        )


@dataclass(frozen=True, eq=False)
class StateFormula:
    kind: str  # true false letter not and or exists forall prob_pos prob_one
    letter: str | None = None
    children: tuple["StateFormula", ...] = ()
    path: "PathFormula | None" = None

    def __repr__(self) -> str:
        return f"<{format_state(self)}>"


@dataclass(frozen=True, eq=False)
class PathFormula:
    kind: str  # state not and or next until globally automaton
    state: StateFormula | None = None
    children: tuple["PathFormula", ...] = ()
    automaton: BuchiWordAutomaton | None = None
    arguments: tuple[StateFormula, ...] = ()
    # Complemented automaton literal: accept iff the Buchi set is visited
    # only finitely often. Keeps literals closed under negation.
    complement: bool = False

    def __repr__(self) -> str:
        return f"<{format_path(self)}>"


_STATE_TABLE: dict[tuple, StateFormula] = {}
_PATH_TABLE: dict[tuple, PathFormula] = {}


def _mk_state(
    kind: str,
    letter: str | None = None,
    children: tuple[StateFormula, ...] = (),
    path: PathFormula | None = None,
) -> StateFormula:
    key = (kind, letter, tuple(id(c) for c in children), id(path))
    node = _STATE_TABLE.get(key)
    if node is None:
        node = _STATE_TABLE.setdefault(
            key, StateFormula(kind, letter, children, path)
        )
    return node


def _mk_path(
    kind: str,
    state: StateFormula | None = None,
    children: tuple[PathFormula, ...] = (),
    automaton: BuchiWordAutomaton | None = None,
    arguments: tuple[StateFormula, ...] = (),
    complement: bool = False,
) -> PathFormula:
    key = (
        kind,
        id(state),
        tuple(id(c) for c in children),
        automaton._key() if automaton is not None else None,
        tuple(id(a) for a in arguments),
        complement,
    )
    node = _PATH_TABLE.get(key)
    if node is None:
        node = _PATH_TABLE.setdefault(
            key,
            PathFormula(kind, state, children, automaton, arguments, complement),
        )
    return node


# ---------------------------------------------------------------- factories

def top() -> StateFormula:
    return _mk_state("true")


def bot() -> StateFormula:
    return _mk_state("false")


def atom(name: str) -> StateFormula:
    return _mk_state("letter", letter=name)


def neg(s: StateFormula) -> StateFormula:
    if s.kind == "true":
        return bot()
    if s.kind == "false":
        return top()
    if s.kind == "not":
        return s.children[0]
    return _mk_state("not", children=(s,))


def conj(a: StateFormula, b: StateFormula) -> StateFormula:
    if a.kind == "false" or b.kind == "false":
        return bot()
    if a.kind == "true":
        return b
    if b.kind == "true":
        return a
    return _mk_state("and", children=(a, b))


def disj(a: StateFormula, b: StateFormula) -> StateFormula:
    if a.kind == "true" or b.kind == "true":
        return top()
    if a.kind == "false":
        return b
    if b.kind == "false":
        return a
    return _mk_state("or", children=(a, b))


def _quantified(kind: str, p: PathFormula) -> StateFormula:
    # A quantified pure-state path formula is equivalent to the state formula
    # itself under every one of the four quantifiers.
    if p.kind == "state":
        return p.state  # type: ignore[return-value]
    return _mk_state(kind, path=p)


def exists(p: PathFormula) -> StateFormula:
    return _quantified("exists", p)


def forall(p: PathFormula) -> StateFormula:
    return _quantified("forall", p)


def prob_pos(p: PathFormula) -> StateFormula:
    return _quantified("prob_pos", p)


def prob_one(p: PathFormula) -> StateFormula:
    return _quantified("prob_one", p)


def path_state(s: StateFormula) -> PathFormula:
    return _mk_path("state", state=s)


def path_not(p: PathFormula) -> PathFormula:
    if p.kind == "state":
        return path_state(neg(p.state))  # type: ignore[arg-type]
    if p.kind == "not":
        return p.children[0]
    return _mk_path("not", children=(p,))


def path_and(a: PathFormula, b: PathFormula) -> PathFormula:
    if a.kind == "state" and b.kind == "state":
        return path_state(conj(a.state, b.state))  # type: ignore[arg-type]
    if a.kind == "state" and a.state.kind == "false":  # type: ignore[union-attr]
        return a
    if b.kind == "state" and b.state.kind == "false":  # type: ignore[union-attr]
        return b
    if a.kind == "state" and a.state.kind == "true":  # type: ignore[union-attr]
        return b
    if b.kind == "state" and b.state.kind == "true":  # type: ignore[union-attr]
        return a
    return _mk_path("and", children=(a, b))


def path_or(a: PathFormula, b: PathFormula) -> PathFormula:
    if a.kind == "state" and b.kind == "state":
        return path_state(disj(a.state, b.state))  # type: ignore[arg-type]
    if a.kind == "state" and a.state.kind == "true":  # type: ignore[union-attr]
        return a
    if b.kind == "state" and b.state.kind == "true":  # type: ignore[union-attr]
        return b
    if a.kind == "state" and a.state.kind == "false":  # type: ignore[union-attr]
        return b
    if b.kind == "state" and b.state.kind == "false":  # type: ignore[union-attr]
        return a
    return _mk_path("or", children=(a, b))


def path_next(p: PathFormula) -> PathFormula:
    if p.kind == "state" and p.state.kind in ("true", "false"):  # type: ignore[union-attr]
        return p
    return _mk_path("next", children=(p,))


def path_until(a: PathFormula, b: PathFormula) -> PathFormula:
    if b.kind == "state" and b.state.kind == "false":  # type: ignore[union-attr]
        return b
    if a.kind == "state" and a.state.kind == "false":  # type: ignore[union-attr]
        return b
    return _mk_path("until", children=(a, b))


def path_eventually(p: PathFormula) -> PathFormula:
    return path_until(path_state(top()), p)


def path_globally(p: PathFormula) -> PathFormula:
    if p.kind == "state" and p.state.kind in ("true", "false"):  # type: ignore[union-attr]
        return p
    return _mk_path("globally", children=(p,))


def path_automaton_literal(
    automaton: BuchiWordAutomaton,
    arguments: Iterable[StateFormula],
    complement: bool = False,
) -> PathFormula:
    arguments = tuple(arguments)
    if automaton.arity != len(arguments):
        raise ValueError("automaton arity does not match argument count")
    return _mk_path(
        "automaton",
        automaton=automaton,
        arguments=arguments,
        complement=complement,
    )


# ------------------------------------------------------------ positive form

_POS_S: dict[StateFormula, StateFormula] = {}
_NEG_S: dict[StateFormula, StateFormula] = {}
_POS_P: dict[PathFormula, PathFormula] = {}
_NEG_P: dict[PathFormula, PathFormula] = {}
_POSITIVE_S: dict[StateFormula, bool] = {}
_POSITIVE_P: dict[PathFormula, bool] = {}


def _positive_state(s: StateFormula) -> bool:
    out = _POSITIVE_S.get(s)
    if out is None:
        if s.kind == "not":
            out = s.children[0].kind == "letter"
        else:
            out = all(_positive_state(c) for c in s.children) and (
                s.path is None or _positive_path(s.path)
            )
        _POSITIVE_S[s] = out
    return out


def _positive_path(p: PathFormula) -> bool:
    out = _POSITIVE_P.get(p)
    if out is None:
        if p.kind == "not":
            out = False
        else:
            out = all(_positive_path(c) for c in p.children)
            if p.kind == "state":
                out = _positive_state(p.state)  # type: ignore[arg-type]
            elif p.kind == "automaton":
                out = all(_positive_state(a) for a in p.arguments)
        _POSITIVE_P[p] = out
    return out


def to_positive_form(s: StateFormula) -> StateFormula:
    """Push negations down to the letters.

    The Until negation keeps the extra conjunct at the witness position,
    !(p U q) = G!q | (!q U (!p & !q)): without it, the word a b b... would
    satisfy both a U b and its rewritten negation.
    """
    return _pos_state(s)


def dual(s: StateFormula) -> StateFormula:
    """Positive form of the negation of a positive formula.

    Pairs are cached both ways, so dual is an involution on everything it
    has produced; the translation relies on that to keep its state set
    finite and its duals compilable.
    """
    cached = _NEG_S.get(s)
    if cached is None:
        cached = _neg_state(s)
    _NEG_S.setdefault(cached, s)
    _POS_S.setdefault(cached, cached)
    return cached


def _pos_state(s: StateFormula) -> StateFormula:
    out = _POS_S.get(s)
    if out is not None:
        return out
    kind = s.kind
    if kind in ("true", "false", "letter"):
        out = s
    elif kind == "not":
        out = _neg_state(s.children[0])
    elif kind == "and":
        out = conj(_pos_state(s.children[0]), _pos_state(s.children[1]))
    elif kind == "or":
        out = disj(_pos_state(s.children[0]), _pos_state(s.children[1]))
    else:
        builder = {
            "exists": exists,
            "forall": forall,
            "prob_pos": prob_pos,
            "prob_one": prob_one,
        }[kind]
        out = builder(_pos_path(s.path))  # type: ignore[arg-type]
    _POS_S[s] = out
    return out


def _neg_state(s: StateFormula) -> StateFormula:
    out = _NEG_S.get(s)
    if out is not None:
        return out
    kind = s.kind
    if kind == "true":
        out = bot()
    elif kind == "false":
        out = top()
    elif kind == "letter":
        out = neg(s)
    elif kind == "not":
        out = _pos_state(s.children[0])
    elif kind == "and":
        out = disj(_neg_state(s.children[0]), _neg_state(s.children[1]))
    elif kind == "or":
        out = conj(_neg_state(s.children[0]), _neg_state(s.children[1]))
    else:
        flipped = {
            "exists": forall,
            "forall": exists,
            "prob_pos": prob_one,
            "prob_one": prob_pos,
        }[kind]
        out = flipped(_neg_path(s.path))  # type: ignore[arg-type]
    _NEG_S[s] = out
    if _positive_state(s):
        # Remember the inverse pair so dual() is involutive even when the
        # partner was first produced here rather than by dual() itself.
        _NEG_S.setdefault(out, s)
        _POS_S.setdefault(out, out)
    return out


def _pos_path(p: PathFormula) -> PathFormula:
    out = _POS_P.get(p)
    if out is not None:
        return out
    kind = p.kind
    if kind == "state":
        out = path_state(_pos_state(p.state))  # type: ignore[arg-type]
    elif kind == "not":
        out = _neg_path(p.children[0])
    elif kind == "and":
        out = path_and(_pos_path(p.children[0]), _pos_path(p.children[1]))
    elif kind == "or":
        out = path_or(_pos_path(p.children[0]), _pos_path(p.children[1]))
    elif kind == "next":
        out = path_next(_pos_path(p.children[0]))
    elif kind == "until":
        out = path_until(_pos_path(p.children[0]), _pos_path(p.children[1]))
    elif kind == "globally":
        out = path_globally(_pos_path(p.children[0]))
    else:
        out = path_automaton_literal(
            p.automaton,  # type: ignore[arg-type]
            tuple(_pos_state(a) for a in p.arguments),
            p.complement,
        )
    _POS_P[p] = out
    return out


def _neg_path(p: PathFormula) -> PathFormula:
    out = _NEG_P.get(p)
    if out is not None:
        return out
    kind = p.kind
    if kind == "state":
        out = path_state(_neg_state(p.state))  # type: ignore[arg-type]
    elif kind == "not":
        out = _pos_path(p.children[0])
    elif kind == "and":
        out = path_or(_neg_path(p.children[0]), _neg_path(p.children[1]))
    elif kind == "or":
        out = path_and(_neg_path(p.children[0]), _neg_path(p.children[1]))
    elif kind == "next":
        out = path_next(_neg_path(p.children[0]))
    elif kind == "globally":
        out = path_until(path_state(top()), _neg_path(p.children[0]))
    elif kind == "until":
        left = _neg_path(p.children[0])
        right = _neg_path(p.children[1])
        out = path_or(
            path_globally(right), path_until(right, path_and(left, right))
        )
    else:
        # The literal's acceptance is a limsup test, so its complement is the
        # same automaton with the flag flipped; arguments keep their polarity.
        out = path_automaton_literal(
            p.automaton,  # type: ignore[arg-type]
            tuple(_pos_state(a) for a in p.arguments),
            not p.complement,
        )
    _NEG_P[p] = out
    return out


def is_positive_form(s: StateFormula) -> bool:
    """True when negation appears on letters only, at state or path level."""
    return _positive_state(s)


# ------------------------------------------------------------------ lifting

def lift_delay(s: StateFormula) -> StateFormula:
    """Rewrite a formula over alphabet S into one over S + the delay letter
    whose binary-tree models encode the Markov-chain models of the input.

    Temporal operators learn to skip delay nodes; E and A additionally guard
    against branches that delay forever; automaton literals gain a delay bit
    on which they stutter.
    """
    if DELAY_LETTER in alphabet_of(s):
        raise DelayLetterCollision("the delay letter already occurs in the formula")
    return _lift_state(s, {}, {})


def _lift_state(
    s: StateFormula,
    memo_s: dict[StateFormula, StateFormula],
    memo_p: dict[PathFormula, PathFormula],
) -> StateFormula:
    out = memo_s.get(s)
    if out is not None:
        return out
    kind = s.kind
    if kind in ("true", "false", "letter"):
        out = s
    elif kind == "not":
        out = neg(_lift_state(s.children[0], memo_s, memo_p))
    elif kind == "and":
        out = conj(
            _lift_state(s.children[0], memo_s, memo_p),
            _lift_state(s.children[1], memo_s, memo_p),
        )
    elif kind == "or":
        out = disj(
            _lift_state(s.children[0], memo_s, memo_p),
            _lift_state(s.children[1], memo_s, memo_p),
        )
    else:
        lifted = _lift_path(s.path, memo_s, memo_p)  # type: ignore[arg-type]
        delay_forever = path_until(
            path_state(top()), path_globally(path_state(atom(DELAY_LETTER)))
        )
        if kind == "exists":
            out = conj(
                neg(atom(DELAY_LETTER)),
                exists(path_and(lifted, path_not(delay_forever))),
            )
        elif kind == "forall":
            out = conj(
                neg(atom(DELAY_LETTER)), forall(path_or(lifted, delay_forever))
            )
        else:
            builder = prob_pos if kind == "prob_pos" else prob_one
            out = conj(neg(atom(DELAY_LETTER)), builder(lifted))
    memo_s[s] = out
    return out


def _delay_stable(p: PathFormula) -> bool:
    """Whether the lifted form of p absorbs leading delay letters, holding
    at a delay node exactly when it holds at the next real node.  Lifted
    until, globally and stuttered literals do; state claims can be true at
    a delay node outright and next shifts its anchor, so neither does."""
    if p.kind in ("until", "globally", "automaton"):
        return True
    if p.kind in ("state", "next"):
        return False
    return all(_delay_stable(c) for c in p.children)


def _real(p: PathFormula) -> PathFormula:
    """Restrict a claim to fire at real positions only."""
    guard = neg(atom(DELAY_LETTER))
    if p.kind == "state":
        return path_state(conj(guard, p.state))  # type: ignore[arg-type]
    return path_and(path_state(guard), p)


def _lift_path(
    p: PathFormula,
    memo_s: dict[StateFormula, StateFormula],
    memo_p: dict[PathFormula, PathFormula],
) -> PathFormula:
    out = memo_p.get(p)
    if out is not None:
        return out
    kind = p.kind
    delay = path_state(atom(DELAY_LETTER))
    if kind == "state":
        out = path_state(_lift_state(p.state, memo_s, memo_p))  # type: ignore[arg-type]
    elif kind == "not":
        out = path_not(_lift_path(p.children[0], memo_s, memo_p))
    elif kind == "and":
        out = path_and(
            _lift_path(p.children[0], memo_s, memo_p),
            _lift_path(p.children[1], memo_s, memo_p),
        )
    elif kind == "or":
        out = path_or(
            _lift_path(p.children[0], memo_s, memo_p),
            _lift_path(p.children[1], memo_s, memo_p),
        )
    elif kind == "next":
        # A delay-stable body reads the same from the delay run's end, so
        # the plain shape carries over; anything else needs the explicit
        # walk to the next real node.
        body = _lift_path(p.children[0], memo_s, memo_p)
        if not _delay_stable(p.children[0]):
            body = path_until(delay, _real(body))
        out = path_next(body)
    elif kind == "globally":
        # Delay nodes are excused unless the body absorbs them already;
        # keeping stable bodies bare preserves the recurrence shape.
        body = _lift_path(p.children[0], memo_s, memo_p)
        if not _delay_stable(p.children[0]):
            body = path_or(delay, body)
        out = path_globally(body)
    elif kind == "until":
        # The firing position must be real unless the body cannot tell
        # the difference; positions before it are excused when delayed.
        right = _lift_path(p.children[1], memo_s, memo_p)
        if not _delay_stable(p.children[1]):
            right = _real(right)
        out = path_until(
            path_or(delay, _lift_path(p.children[0], memo_s, memo_p)),
            right,
        )
    else:
        out = _stutter_literal(p, memo_s, memo_p)
    memo_p[p] = out
    return out


def _stutter_literal(
    p: PathFormula,
    memo_s: dict[StateFormula, StateFormula],
    memo_p: dict[PathFormula, PathFormula],
) -> PathFormula:
    """Add a delay bit to an automaton literal; the automaton holds its state
    on delay nodes and runs the original transition elsewhere."""
    dba = p.automaton
    assert dba is not None
    k = dba.arity
    transitions = []
    for src in dba.states:
        for mask in range(1 << k):
            transitions.append((src, mask, dba.step(src, mask)))
            transitions.append((src, mask | (1 << k), src))
    stuttering = BuchiWordAutomaton(
        states=dba.states,
        initial=dba.initial,
        accepting=dba.accepting,
        arity=k + 1,
        transitions=tuple(transitions),
    )
    lifted_args = tuple(_lift_state(a, memo_s, memo_p) for a in p.arguments)
    return path_automaton_literal(
        stuttering, lifted_args + (atom(DELAY_LETTER),), p.complement
    )


def binsat_wrap(s: StateFormula) -> StateFormula:
    """Conjoin the almost-sure progress requirement: with probability one a
    branch must leave every run of delay nodes. Satisfiability over binary
    trees of the result matches satisfiability of the unlifted formula over
    Markov chains."""
    delay_forever = path_until(
        path_state(top()), path_globally(path_state(atom(DELAY_LETTER)))
    )
    return to_positive_form(conj(s, neg(prob_pos(delay_forever))))


# ------------------------------------------------------------ classification

@dataclass(frozen=True)
class FragmentInfo:
    shape: str  # "CTL" | "ECTL" | "CTLstar"
    uses_deterministic_quantifiers: bool
    forall_trivial: bool


def _ctl_shaped(p: PathFormula) -> bool:
    if p.kind == "next" or p.kind == "globally":
        return p.children[0].kind == "state"
    if p.kind == "until":
        return p.children[0].kind == "state" and p.children[1].kind == "state"
    return False


def classify(s: StateFormula) -> FragmentInfo:
    """Fragment of a positive-form formula; forall_trivial marks the absence
    of E/A, which downstream makes the whole translated automaton carry a
    trivial every-play condition and routes emptiness to the Buchi engine."""
    uses_ea = False
    literals = False
    star = False
    for node in iter_state_nodes(s):
        if node.kind in ("exists", "forall", "prob_pos", "prob_one"):
            if node.kind in ("exists", "forall"):
                uses_ea = True
            assert node.path is not None
            if node.path.kind == "automaton":
                literals = True
            elif not _ctl_shaped(node.path):
                star = True
    if star:
        shape = "CTLstar"
    elif literals:
        shape = "ECTL"
    else:
        shape = "CTL"
    return FragmentInfo(shape, uses_ea, not uses_ea)


# ------------------------------------------------------------------- walks

def iter_state_nodes(s: StateFormula) -> Iterator[StateFormula]:
    """Every distinct state-formula node reachable from s, preorder."""
    seen: set[int] = set()
    stack = [s]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(reversed(node.children))
        if node.path is not None:
            for sub in _iter_path_nodes(node.path):
                stack.extend(_path_state_members(sub))


def _iter_path_nodes(p: PathFormula) -> Iterator[PathFormula]:
    seen: set[int] = set()
    stack = [p]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(reversed(node.children))


def _path_state_members(p: PathFormula) -> tuple[StateFormula, ...]:
    if p.kind == "state":
        return (p.state,)  # type: ignore[return-value]
    if p.kind == "automaton":
        return p.arguments
    return ()


def state_leaves(p: PathFormula) -> tuple[StateFormula, ...]:
    """Distinct state formulas at the leaves of a path formula, in
    left-to-right first-occurrence order; these are the claims a valuation
    assigns."""
    if p.kind == "automaton":
        return tuple(dict.fromkeys(p.arguments))
    out: dict[int, StateFormula] = {}

    def walk(node: PathFormula) -> None:
        if node.kind == "state":
            assert node.state is not None
            out.setdefault(id(node.state), node.state)
            return
        for child in node.children:
            walk(child)

    walk(p)
    return tuple(out.values())


def alphabet_of(s: StateFormula) -> frozenset[str]:
    letters: set[str] = set()
    for node in iter_state_nodes(s):
        if node.kind == "letter":
            letters.add(node.letter)  # type: ignore[arg-type]
    return frozenset(letters)


def dag_size(s: StateFormula) -> int:
    """Number of distinct nodes, state and path together."""
    count = 0
    seen_paths: set[int] = set()
    for node in iter_state_nodes(s):
        count += 1
        if node.path is not None and id(node.path) not in seen_paths:
            for sub in _iter_path_nodes(node.path):
                if id(sub) not in seen_paths:
                    seen_paths.add(id(sub))
                    count += 1
    return count


# ---------------------------------------------------------------- rendering

def _render_letter(name: str) -> str:
    return "@delay" if name == DELAY_LETTER else name


def format_state(s: StateFormula, parent: int = 0) -> str:
    # parent precedence: 0 none, 1 inside or, 2 inside and
    kind = s.kind
    if kind == "true":
        return "true"
    if kind == "false":
        return "false"
    if kind == "letter":
        return _render_letter(s.letter)  # type: ignore[arg-type]
    if kind == "not":
        return "!" + format_state(s.children[0], 3)
    if kind == "and":
        text = " & ".join(format_state(c, 2) for c in s.children)
        return f"({text})" if parent > 2 else text
    if kind == "or":
        text = " | ".join(format_state(c, 1) for c in s.children)
        return f"({text})" if parent > 1 else text
    head = {"exists": "E", "forall": "A", "prob_pos": "P>0", "prob_one": "P=1"}[kind]
    return f"{head}({format_path(s.path)})"  # type: ignore[arg-type]


def format_path(p: PathFormula, parent: int = 0) -> str:
    # parent precedence: 0 none, 1 inside or, 2 inside and, 3 inside until/unary
    kind = p.kind
    if kind == "state":
        return format_state(p.state, parent)  # type: ignore[arg-type]
    if kind == "not":
        return "!" + format_path(p.children[0], 4)
    if kind == "and":
        text = " & ".join(format_path(c, 2) for c in p.children)
        return f"({text})" if parent > 2 else text
    if kind == "or":
        text = " | ".join(format_path(c, 1) for c in p.children)
        return f"({text})" if parent > 1 else text
    if kind == "next":
        return "X " + format_path(p.children[0], 4)
    if kind == "globally":
        return "G " + format_path(p.children[0], 4)
    if kind == "until":
        left, right = p.children
        if left.kind == "state" and left.state.kind == "true":  # type: ignore[union-attr]
            return "F " + format_path(right, 4)
        text = f"{format_path(left, 4)} U {format_path(right, 3)}"
        return f"({text})" if parent > 3 else text
    parts = [format_state(a) for a in p.arguments]
    bang = "!" if p.complement else ""
    return f"{bang}auto{{{_render_dba(p.automaton)}}}({', '.join(parts)})"  # type: ignore[arg-type]


def _render_dba(dba: BuchiWordAutomaton) -> str:
    sections = [
        "states " + " ".join(dba.states),
        "init " + dba.initial,
        "acc " + " ".join(q for q in dba.states if q in dba.accepting),
    ]
    for src, mask, dst in sorted(dba.transitions):
        bits = format(mask, f"0{dba.arity}b")[::-1] if dba.arity else ""
        sections.append(f"{src} -> {dst} on {bits}")
    return "; ".join(sections) + ";"
