"""Compilation of alternating nonzero automata into non-deterministic ones.

The alternating automaton is turned into a letterless split-only automaton
that walks a guessed run tree.  Where the alternating automaton branches
existentially the new automaton guesses, on the fly, the tree letter of
every node together with one declared transition per controllable state,
and it certifies the guessed run with three bookkeeping devices:

- arrival indexes: each state reachable at a node under the guessed
  choices receives a small integer, inherited through splits and local
  moves or allocated fresh, so that a branch can tell which plays survive
  forever (their index eventually stabilizes) and which keep dying off;
- a record memory whose largest recurring state reveals, per arrival
  index, whether the largest automaton state recurring on the surviving
  play lies in the almost-sure and sure acceptance sets.  The general
  memory is a last-appearance record over (index, interval) pairs; when
  inside every cycle-bearing component the states outside an acceptance
  set all order below the states inside it, the verdict degrades to "the
  set is visited infinitely often, one index value at a time", and the
  record is swapped for constant-size round-robin trackers;
- a positivity witness: per node a guessed active set and edge set plus an
  ordered list of pending obligations, each obligation tracking one play
  that must demonstrate a positive way of staying inside the positive
  acceptance set; a signal fires whenever the oldest obligation is
  discharged, and acceptance demands the signal fire infinitely often.

A product state stores what one tree node inherits from its parent: the
seed indexes carried through the parent's splits, the index values the
parent used, the record memory after the parent's injection batch, the
pending obligations routed into this direction, the active-set members the
parent's splits force, and two flags (entered through a flagged edge, and
the parent's batch contained the fired signal).  Expanding a state guesses
everything about the node itself, checks the witness closure conditions,
and emits one split per consistent guess; the node's index map and witness
sets exist only inside the expansion.  The pure per-node steps are exposed
separately (index_init, index_step, lar_update, witness_step) and share
the expansion's internals.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Iterator

from .automata import (
    AlternatingAutomaton,
    BuchiTarget,
    LimsupSet,
    LimitedChoiceViolations,
    LocalLoopWitness,
    NonzeroAutomaton,
    StateId,
    check_limited_choice,
    check_nll,
    normalize_nonzero,
    transition_graph,
    validate,
)
from .errors import (
    AutomatonStructureError,
    CapExceeded,
    IndexOverflow,
    MalformedGuess,
    RejectedGuess,
)
from .graphs import topological_order

# A record symbol is an (index, state) pair; (index, -1) marks an index
# value that just left the image, and TOP is the witness signal.  TOP must
# order after every feasible pair under the fixed symbol order.
Symbol = tuple[int, int]
TOP: Symbol = (1 << 30, 1 << 30)

# Raw guess enumeration per materialized state is bounded by this multiple
# of the state cap, so degenerate guess spaces fail fast instead of hanging.
_WORK_PER_STATE = 64

# Cache-miss sentinel; ``None`` is a meaningful cached value.
_MISS: Any = object()


@dataclass(frozen=True)
class IndexMap:
    """Arrival indexes of one tree node, per automaton state; None marks
    states that no play of the guessed choices reaches at this node."""

    values: tuple[int | None, ...]

    def of(self, q: StateId) -> int | None:
        return self.values[q]

    def image(self) -> frozenset[int]:
        return frozenset(v for v in self.values if v is not None)

    def finite(self) -> tuple[tuple[StateId, int], ...]:
        return tuple(
            (q, v) for q, v in enumerate(self.values) if v is not None
        )


@dataclass(frozen=True)
class StrategyLabel:
    """One node of the guessed run: the tree letter plus one declared move
    per controllable state, locals encoded (target,), splits (left, right)."""

    letter: str
    eve_choice: tuple[tuple[StateId, tuple[StateId, ...]], ...]

    def choice(self, q: StateId) -> tuple[StateId, ...] | None:
        for state, move in self.eve_choice:
            if state == q:
                return move
        return None


@dataclass(frozen=True)
class LarState:
    """Last-appearance record: symbols most recent first, the 1-based old
    position of the last moved symbol, and the largest intermediate memory
    state of the current injection batch as an order key."""

    symbols: tuple[Symbol, ...]
    hit: int
    step_max: tuple[int, tuple[Symbol, ...]]


LAR_EMPTY = LarState((), 0, (0, ()))


def lar_update(l: LarState, batch: tuple[Symbol, ...]) -> LarState:
    """Inject a batch of symbols: each moves to the front, recording how far
    back it sat; unseen symbols count as coming from beyond the tail.  The
    order key of a memory state is (hit, sorted moved prefix), and step_max
    keeps the largest key reached while the batch was injected."""
    symbols = list(l.symbols)
    hit = l.hit
    best = (0, ())
    for sym in batch:
        if sym in symbols:
            pos = symbols.index(sym)
            del symbols[pos]
            hit = pos + 1
        else:
            hit = len(symbols) + 1
        symbols.insert(0, sym)
        key = (hit, tuple(sorted(symbols[:hit])))
        if key > best:
            best = key
    return LarState(tuple(symbols), hit, best)


def lar_recurring(key: tuple[int, tuple[Symbol, ...]]) -> frozenset[Symbol]:
    """Symbols decoded as recurring from the largest recurring memory key."""
    return frozenset(key[1])


@dataclass(frozen=True)
class TrackState:
    """Constant-size record memory for suffix-clean automata: one
    round-robin pointer per tracked acceptance set walks the index-value
    slots plus a final fired slot, the sticky flags bank an unpaired cycle
    of one tracker until the other completes its own, and code is the key
    emitted this step (3 paired cycles, 2 almost-sure only, 1 sure only)."""

    ptr_one: int
    ptr_all: int
    flag_one: bool
    flag_all: bool
    code: int

    @property
    def step_max(self) -> tuple[int, tuple[int, int, bool, bool]]:
        return (
            self.code,
            (self.ptr_one, self.ptr_all, self.flag_one, self.flag_all),
        )


_TRACK_INIT = TrackState(0, 0, False, False, 0)


def _track_step(
    t: TrackState, batch: tuple[Symbol, ...], nslots: int, two: bool
) -> TrackState:
    """Advance the trackers through one injection batch.  A value's slot
    passes when the value is absent, reborn, or visited inside the set this
    step; the final slot passes on the fired signal; passing every slot is
    one cycle.  A branch whose pointer keeps cycling certifies every index
    value it ever waits on, and a stuck pointer marks a value whose play
    settled outside the set."""
    live: set[int] = set()
    reborn: set[int] = set()
    good_one: set[int] = set()
    good_all: set[int] = set()
    fired = False
    for k, i in batch:
        if (k, i) == TOP:
            fired = True
        elif i < 0:
            reborn.add(k)
        else:
            live.add(k)
            if i & 2:
                good_one.add(k)
            if i & 1:
                good_all.add(k)

    def spin(ptr: int, good: set[int]) -> tuple[int, bool]:
        for _ in range(nslots):
            if ptr == nslots - 1:
                if not fired:
                    return ptr, False
                return 0, True
            if ptr in live and ptr not in good and ptr not in reborn:
                return ptr, False
            ptr += 1
        return ptr, False

    p1, w1 = spin(t.ptr_one, good_one)
    if not two:
        return TrackState(p1, 0, False, False, 2 if w1 else 0)
    pa, wa = spin(t.ptr_all, good_all)
    f1, fa = t.flag_one, t.flag_all
    if w1 and wa:
        code = 3
    elif w1:
        if fa:
            code, fa = 3, False
        else:
            code, f1 = 2, True
    elif wa:
        if f1:
            code, f1 = 3, False
        else:
            code, fa = 1, True
    else:
        code = 0
    return TrackState(p1, pa, f1, fa, code)


@dataclass(frozen=True)
class WitnessState:
    """Positivity data of one node: guessed active states, guessed edge
    directions, and the ordered pending obligations."""

    w_set: frozenset[StateId]
    e_set: frozenset[int]
    p_list: tuple[StateId, ...]


@dataclass(frozen=True)
class WitnessGuess:
    """Everything witness_step needs about the crossing into one child: per
    obligation a direction and a successor, plus the child's own label and
    guessed active and edge sets."""

    assignments: tuple[tuple[StateId, int, StateId], ...]
    child_label: StrategyLabel
    child_w: frozenset[StateId]
    child_e: frozenset[int]


@dataclass(frozen=True, eq=False)
class ProductState:
    """What one tree node inherits from its parent; see the module
    docstring.  The error sink keeps every field empty."""

    seeds: tuple[tuple[StateId, int], ...]
    parent_used: tuple[int, ...]
    lar: LarState | TrackState
    pending: tuple[StateId, ...]
    forced_w: tuple[StateId, ...]
    entered_positive: bool
    fired: bool
    error: bool = False
    # Interning hashes every constructed state at least once; the hash is
    # computed eagerly and equality starts with it.
    _h: int = field(init=False, repr=False, default=0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_h", hash((
            self.seeds,
            self.parent_used,
            self.lar,
            self.pending,
            self.forced_w,
            self.entered_positive,
            self.fired,
            self.error,
        )))

    def __hash__(self) -> int:
        return self._h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, ProductState):
            return NotImplemented
        return (
            self._h == other._h
            and self.seeds == other.seeds
            and self.parent_used == other.parent_used
            and self.lar == other.lar
            and self.pending == other.pending
            and self.forced_w == other.forced_w
            and self.entered_positive == other.entered_positive
            and self.fired == other.fired
            and self.error == other.error
        )


ERROR_STATE = ProductState((), (), LAR_EMPTY, (), (), False, False, True)

# Sink for nodes where every play has settled in the neutral region: no
# seeds, the fired signal recurring, and counted as positively entered so
# flagged regions may end there.  Its record memory is a fixed point of
# injecting the signal alone.
ACCEPT_STATE = ProductState(
    (), (), LarState((TOP,), 1, (1, (TOP,))), (), (), True, True, False
)

# Observer hook for the index-range invariant: tests install a callable
# receiving (value, ceiling) on every index assignment.
_INDEX_OBSERVER: Callable[[int, int], None] | None = None


class _View:
    """One fully guessed node: letter, choices, reachable states, indexes,
    and everything the witness machinery asks about them."""

    __slots__ = (
        "letter",
        "choice",
        "reach",
        "idx",
        "image",
        "used_out",
        "z",
        "zset",
        "z_risky",
        "eve_splits",
        "child_seeds",
        "batch_plain",
        "batch_fired",
        "transient_v",
        "probe_cache",
        "cl_cache",
        "wfam_cache",
        "fpair_cache",
    )

    def __init__(self) -> None:
        self.probe_cache: dict[
            StateId, tuple[tuple[tuple[int, StateId], ...], bool]
        ] = {}
        self.cl_cache: dict[StateId, frozenset[StateId] | None] = {}
        self.wfam_cache: dict[
            frozenset[StateId], tuple[frozenset[StateId], ...]
        ] = {}
        self.fpair_cache: dict[
            tuple[frozenset[StateId], tuple[int, ...]],
            tuple[tuple[StateId, ...], tuple[StateId, ...]] | None,
        ] = {}


class _Engine:
    """Static tables and memoized node construction for one automaton."""

    def __init__(self, a: AlternatingAutomaton) -> None:
        diag = validate(a)
        if not diag.is_complete:
            raise AutomatonStructureError(
                f"automaton is incomplete: no move for {diag.missing_moves[0]}"
            )
        self.graph = transition_graph(a)
        cm = check_limited_choice(a, self.graph)
        if isinstance(cm, LimitedChoiceViolations):
            raise AutomatonStructureError(
                "automaton is not limited-choice: "
                f"{cm.splits_from_adam or cm.ambiguous}"
            )
        loop = check_nll(a)
        if isinstance(loop, LocalLoopWitness):
            raise AutomatonStructureError(
                f"single-letter local cycle on {loop.letter!r}: {loop.cycle}"
            )
        self.a = a
        self.ceiling = 2 * a.state_count
        self.canonical = {(q, x): t for q, x, t in cm.moves}
        self.adam_locals: dict[tuple[StateId, str], tuple[StateId, ...]] = {}
        self.eve_moves: dict[
            tuple[StateId, str], tuple[tuple[StateId, ...], ...]
        ] = {}
        for q in a.states():
            for letter in a.alphabet:
                if a.is_adam(q):
                    self.adam_locals[(q, letter)] = tuple(
                        sorted(t for kind, *rest in a.moves(q, letter)
                               for t in rest if kind == "local")
                    )
                else:
                    self.eve_moves[(q, letter)] = tuple(
                        sorted((tuple(rest) for kind, *rest
                                in a.moves(q, letter)), key=lambda m: (len(m), m))
                    )
        # Record symbols carry membership intervals instead of states: the
        # acceptance decode only reads whether the largest state recurring
        # with an index lies in the almost-sure and sure sets.  The states
        # a given index value revisits forever all sit in one strongly
        # connected component (the sequence of holders of a value is itself
        # a play), so interval ids only have to grow along each component's
        # internal order and encode the membership signature; components
        # may share ids, and states outside cycles can never recur, so they
        # take the id of their signature at level zero.
        def sig_rank(q: StateId) -> int:
            return 2 * (q in a.f_one) + (q in a.f_forall)

        interval_of: list[int] = [0] * a.state_count
        members: dict[int, list[StateId]] = {}
        for q in a.states():
            c = self.graph.component_of[q]
            if c in self.graph.nontrivial:
                members.setdefault(c, []).append(q)
            else:
                interval_of[q] = sig_rank(q)
        level_ranks: list[list[int]] = []
        for group in members.values():
            ranks: list[int] = []
            for q in sorted(group):
                r = sig_rank(q)
                if not ranks or ranks[-1] != r:
                    ranks.append(r)
                interval_of[q] = 4 * (len(ranks) - 1) + r
            level_ranks.append(ranks)
        self.interval_of = tuple(interval_of)
        # When every cycle-bearing component lists, along its internal
        # order, all its states outside an acceptance set before any state
        # inside it, the largest state recurring at an index value lies in
        # the set iff the value is visited inside the set infinitely often,
        # so the round-robin trackers replace the full record memory.  The
        # sure set only needs a tracker when some play could leave it.
        self.two_families = a.f_forall != frozenset(a.states())

        def suffix_clean(bit: int) -> bool:
            for ranks in level_ranks:
                seen = False
                for r in ranks:
                    good = bool(r & bit)
                    if seen and not good:
                        return False
                    seen = seen or good
            return True

        self.fast = suffix_clean(2) and (
            not self.two_families or suffix_clean(1)
        )
        self.nslots = self.ceiling + 2
        # States that cannot reach the complement of the positive set can
        # always be kept active, so obligations on them discharge for free.
        bad = set(a.states()) - set(a.f_pos)
        rev: dict[StateId, set[StateId]] = {q: set() for q in a.states()}
        for src, _, dst in self.graph.edges:
            rev[dst].add(src)
        stack = list(bad)
        while stack:
            q = stack.pop()
            for p in rev[q]:
                if p not in bad:
                    bad.add(p)
                    stack.append(p)
        self.always_pos = frozenset(a.states()) - frozenset(bad)
        # Neutral states satisfy every acceptance condition no matter what
        # happens after them: inside both the almost-sure and sure sets,
        # absorbing within the neutral region, and positive members never
        # leave the positive neutral part.  Plays settling there are
        # dropped from all bookkeeping; a node whose plays all settled is
        # the dedicated accepting sink.
        targets_of: dict[StateId, set[StateId]] = {
            q: {t for letter in a.alphabet
                for _, *rest in a.moves(q, letter) for t in rest}
            for q in a.states()
        }
        s = set(a.f_one & a.f_forall)
        while True:
            s_pos = s & a.f_pos
            drop = [
                q for q in s
                if not targets_of[q] <= (s_pos if q in a.f_pos else s)
            ]
            if not drop:
                break
            s -= set(drop)
        self.neutral = frozenset(s)
        self.pos_neutral = frozenset(s) & a.f_pos
        # When no move leaves the positive set from inside it, positive
        # persistence holds for every run tree, so the one guess that keeps
        # everything active and both edges flagged dominates all others.
        self.pos_closed = all(
            q not in a.f_pos or t in a.f_pos
            for q in a.states()
            for letter in a.alphabet
            for _, *rest in a.moves(q, letter)
            for t in rest
        )
        # A play stuck where the almost-sure set is unreachable keeps its
        # index value bad forever, and the branches through any node carry
        # positive measure, so one such seed already refutes the whole run
        # tree; with a nontrivial sure set the same holds for every branch.
        # Guesses whose reachable set contains such a state are dropped.
        rev_t: dict[StateId, list[StateId]] = {q: [] for q in a.states()}
        for q, ts in targets_of.items():
            for t in ts:
                rev_t[t].append(q)

        def coreach(goal: frozenset[StateId]) -> set[StateId]:
            hit = set(goal)
            stack = list(goal)
            while stack:
                for p in rev_t[stack.pop()]:
                    if p not in hit:
                        hit.add(p)
                        stack.append(p)
            return hit

        doomed = set(a.states()) - coreach(a.f_one)
        if self.two_families:
            doomed |= set(a.states()) - coreach(a.f_forall)
        self.doomed = frozenset(doomed)
        self._assign_memo: dict[
            tuple[tuple[StateId, ...], str],
            tuple[tuple[tuple[tuple[StateId, tuple[StateId, ...]], ...],
                        tuple[StateId, ...]], ...],
        ] = {}
        self._view_memo: dict[
            tuple[tuple[tuple[StateId, int], ...], tuple[int, ...], str],
            tuple[_View, ...],
        ] = {}
        self._mem_memo: dict[
            tuple[LarState | TrackState, tuple[Symbol, ...]],
            LarState | TrackState,
        ] = {}
        if self.fast:
            self.init_mem: LarState | TrackState = _TRACK_INIT
            self.accept_state = ProductState(
                (), (),
                TrackState(0, 0, False, False,
                           3 if self.two_families else 2),
                (), (), True, True, False,
            )
            self.error_state = ProductState(
                (), (), _TRACK_INIT, (), (), False, False, True
            )
        else:
            self.init_mem = LAR_EMPTY
            self.accept_state = ACCEPT_STATE
            self.error_state = ERROR_STATE

    # ------------------------------------------------------ node guessing

    def assignments(
        self, seed_states: tuple[StateId, ...], letter: str
    ) -> tuple[tuple[tuple[tuple[StateId, tuple[StateId, ...]], ...],
                     tuple[StateId, ...]], ...]:
        """All ways to pick one declared move per reachable controllable
        state, with reachability closed under those picks and every
        uncontrollable local move."""
        key = (seed_states, letter)
        got = self._assign_memo.get(key)
        if got is not None:
            return got
        a = self.a
        out: list[tuple[tuple[tuple[StateId, tuple[StateId, ...]], ...],
                        tuple[StateId, ...]]] = []

        def grow(
            decided: dict[StateId, tuple[StateId, ...]],
            frontier: list[StateId],
            reach: set[StateId],
        ) -> None:
            while frontier:
                q = frontier.pop()
                if a.is_adam(q):
                    for t in self.adam_locals[(q, letter)]:
                        if t not in reach and t not in self.neutral:
                            reach.add(t)
                            frontier.append(t)
                else:
                    for move in self.eve_moves[(q, letter)]:
                        nxt = dict(decided)
                        nxt[q] = move
                        reach2 = set(reach)
                        front2 = list(frontier)
                        if (len(move) == 1 and move[0] not in reach2
                                and move[0] not in self.neutral):
                            reach2.add(move[0])
                            front2.append(move[0])
                        grow(nxt, front2, reach2)
                    return
            out.append((tuple(sorted(decided.items())), tuple(sorted(reach))))

        grow({}, list(seed_states), set(seed_states))
        got = tuple(out)
        self._assign_memo[key] = got
        return got

    def views(
        self,
        seeds: tuple[tuple[StateId, int], ...],
        parent_used: tuple[int, ...],
        letter: str,
    ) -> tuple[_View, ...]:
        key = (seeds, parent_used, letter)
        got = self._view_memo.get(key)
        if got is None:
            seed_min: dict[StateId, int] = {}
            for q, k in seeds:
                seed_min[q] = min(k, seed_min.get(q, k))
            got = tuple(
                self._make_view(letter, dict(choice), reach, seed_min,
                                parent_used)
                for choice, reach in self.assignments(
                    tuple(sorted(seed_min)), letter)
                if self.doomed.isdisjoint(reach)
            )
            self._view_memo[key] = got
        return got

    def _make_view(
        self,
        letter: str,
        choice: dict[StateId, tuple[StateId, ...]],
        reach: tuple[StateId, ...],
        seed_min: dict[StateId, int],
        parent_used: tuple[int, ...],
    ) -> _View:
        v = _View()
        v.letter = letter
        v.choice = choice
        v.reach = reach
        v.idx, fresh = self._index_for(letter, choice, reach, seed_min,
                                       set(parent_used))
        v.image = frozenset(v.idx.values())
        v.used_out = tuple(sorted(v.image))
        v.z = tuple(q for q in reach if q in self.a.f_pos)
        v.zset = frozenset(v.z)
        v.z_risky = tuple(q for q in v.z if q not in self.always_pos)
        v.eve_splits = tuple(
            (q, m[0], m[1]) for q, m in sorted(choice.items()) if len(m) == 2
        )
        mins: tuple[dict[StateId, int], dict[StateId, int]] = ({}, {})
        for q, left, right in v.eve_splits:
            k = v.idx[q]
            for d, t in ((0, left), (1, right)):
                if t in self.neutral:
                    continue
                if t not in mins[d] or k < mins[d][t]:
                    mins[d][t] = k
        v.child_seeds = (
            tuple(sorted(mins[0].items())),
            tuple(sorted(mins[1].items())),
        )
        # A value marker announces a reused index: a value revived by a
        # fresh allocation cannot extend the plays that held it before, so
        # a recurring marker disconnects the value's recurring visits.
        core = {(k, self.interval_of[q]) for q, k in v.idx.items()}
        core |= {(k, -1) for k in fresh}
        v.batch_plain = tuple(sorted(core))
        v.batch_fired = v.batch_plain + (TOP,)
        v.transient_v = {}
        for q in reach:
            if self.a.is_adam(q):
                targets: tuple[StateId, ...] = self.adam_locals[(q, letter)]
            else:
                targets = choice[q]
            v.transient_v[q] = not any(
                self.graph.same_class(q, t) for t in targets
            )
        return v

    def _index_for(
        self,
        letter: str,
        choice: dict[StateId, tuple[StateId, ...]],
        reach: tuple[StateId, ...],
        seed_min: dict[StateId, int],
        used: set[int],
    ) -> tuple[dict[StateId, int], tuple[int, ...]]:
        """Assign arrival indexes in dependency order: the minimum over the
        canonical predecessors and the inherited seed, or the smallest value
        unused at this node and its parent.  Also reports the values that
        were allocated fresh."""
        in_reach = set(reach)
        succ: dict[StateId, list[StateId]] = {q: [] for q in reach}
        preds: dict[StateId, list[StateId]] = {q: [] for q in reach}
        for q in reach:
            if self.a.is_adam(q):
                succ[q] = [t for t in self.adam_locals[(q, letter)]
                           if t in in_reach]
                t = self.canonical.get((q, letter))
                if t is not None and t in in_reach:
                    preds[t].append(q)
            else:
                m = choice[q]
                if len(m) == 1 and m[0] in in_reach:
                    succ[q] = [m[0]]
                    preds[m[0]].append(q)
        idx: dict[StateId, int] = {}
        fresh: list[int] = []
        for q in topological_order(sorted(reach), lambda s: succ[s]):
            cands = [idx[p] for p in preds[q]]
            if q in seed_min:
                cands.append(seed_min[q])
            if cands:
                value = min(cands)
            else:
                value = 0
                while value in used:
                    value += 1
                if value > self.ceiling:
                    raise IndexOverflow(
                        f"fresh index {value} exceeds 2|Q|={self.ceiling}"
                    )
                fresh.append(value)
            if _INDEX_OBSERVER is not None:
                _INDEX_OBSERVER(value, self.ceiling)
            idx[q] = value
            used.add(value)
        return idx, tuple(fresh)

    # --------------------------------------------------- witness machinery

    def probe(
        self, view: _View, q: StateId
    ) -> tuple[tuple[tuple[int, StateId], ...], bool]:
        """Walk the positive canonical plays from q inside the node: collect
        the split continuations staying positive, and report whether the
        walk can reach a vertex with no same-class successor or enter the
        positive neutral region (either discharges the obligation)."""
        got = view.probe_cache.get(q)
        if got is None:
            got = _probe(self, view.choice, view.letter, q,
                         view.transient_v.get, self.pos_neutral)
            view.probe_cache[q] = got
        return got

    def close_w(
        self, view: _View, seed: frozenset[StateId]
    ) -> frozenset[StateId] | None:
        """Forward closure of an active-set seed under controllable chosen
        locals and canonical locals; None when it leaves the positive set.
        Positive neutral targets stay positive forever on their own and are
        not collected."""
        out = set(seed)
        stack = list(seed)
        while stack:
            q = stack.pop()
            if self.a.is_adam(q):
                t = self.canonical.get((q, view.letter))
                targets = () if t is None else (t,)
            else:
                m = view.choice[q]
                targets = m if len(m) == 1 else ()
            for t in targets:
                if t not in out and t not in self.pos_neutral:
                    if t not in view.zset:
                        return None
                    out.add(t)
                    stack.append(t)
        return frozenset(out)

    def mem(
        self, m: LarState | TrackState, batch: tuple[Symbol, ...]
    ) -> LarState | TrackState:
        key = (m, batch)
        got = self._mem_memo.get(key)
        if got is None:
            if self.fast:
                got = _track_step(m, batch, self.nslots, self.two_families)
            else:
                got = lar_update(m, batch)
            self._mem_memo[key] = got
        return got

    # ------------------------------------------------------- expansion

    def expand(
        self, p: ProductState
    ) -> Iterator[tuple[ProductState, ProductState]]:
        if p.error:
            yield (p, p)
            return
        if p == self.accept_state or p == ACCEPT_STATE:
            yield (p, p)
            return
        if not p.seeds:
            yield (self.error_state, self.error_state)
            return
        live = tuple((q, k) for q, k in p.seeds if q not in self.neutral)
        if not live:
            yield (self.accept_state, self.accept_state)
            return
        forced = frozenset(p.forced_w)
        # Distinct guesses, including guesses under different node views,
        # often determine identical child pairs; a pair is built once per
        # determining signature.
        emitted: set[tuple] = set()
        for letter in self.a.alphabet:
            for view in self.views(live, p.parent_used, letter):
                if not forced <= view.zset:
                    continue
                if self.pos_closed:
                    mem2 = self.mem(p.lar, view.batch_fired)
                    sig = (id(mem2), view.child_seeds, view.used_out)
                    if sig in emitted:
                        continue
                    emitted.add(sig)
                    yield (
                        self._child(view, 0, mem2, (), (), True, True),
                        self._child(view, 1, mem2, (), (), True, True),
                    )
                    continue
                base = self.close_w(view, forced)
                if base is None:
                    continue
                for w in self._w_family(view, base):
                    survivors, fired = _settle(
                        p.pending,
                        [q for q in view.z_risky if q not in w],
                        lambda e: (e in w or e in self.always_pos
                                   or self.probe(view, e)[1]),
                    )
                    probes = [self.probe(view, e)[0] for e in survivors]
                    if any(not cand for cand in probes):
                        continue
                    batch = view.batch_fired if fired else view.batch_plain
                    mem2 = self.mem(p.lar, batch)
                    head = (id(mem2), view.child_seeds, view.used_out, fired)
                    for eset in _edge_options(w, p.entered_positive):
                        fpair = self._forced_pair(view, w, eset)
                        if fpair is None:
                            continue
                        for combo in itertools.product(*probes):
                            pend0 = tuple(s for b, s in combo if b == 0)
                            pend1 = tuple(s for b, s in combo if b == 1)
                            sig = (head, eset, fpair, pend0, pend1)
                            if sig in emitted:
                                continue
                            emitted.add(sig)
                            yield (
                                self._child(view, 0, mem2, pend0, fpair[0],
                                            0 in eset, fired),
                                self._child(view, 1, mem2, pend1, fpair[1],
                                            1 in eset, fired),
                            )

    def _w_family(
        self, view: _View, base: frozenset[StateId]
    ) -> tuple[frozenset[StateId], ...]:
        """All distinct active-set guesses above a forced base: the base
        plus any union of single-state closures of at-risk positive
        states."""
        got = view.wfam_cache.get(base)
        if got is not None:
            return got
        gen_cl: list[frozenset[StateId]] = []
        for c in view.z_risky:
            if c in base:
                continue
            cl = view.cl_cache.get(c, _MISS)
            if cl is _MISS:
                cl = self.close_w(view, frozenset((c,)))
                view.cl_cache[c] = cl
            if cl is not None:
                gen_cl.append(cl)
        seen: set[frozenset[StateId]] = set()
        fam: list[frozenset[StateId]] = []
        for bits in range(1 << len(gen_cl)):
            w = base
            for i, cl in enumerate(gen_cl):
                if bits >> i & 1:
                    w = w | cl
            if w not in seen:
                seen.add(w)
                fam.append(w)
        got = tuple(fam)
        view.wfam_cache[base] = got
        return got

    def _forced_pair(
        self, view: _View, w: frozenset[StateId], eset: tuple[int, ...]
    ) -> tuple[tuple[StateId, ...], tuple[StateId, ...]] | None:
        key = (w, eset)
        got = view.fpair_cache.get(key, _MISS)
        if got is not _MISS:
            return got
        out: list[tuple[StateId, ...]] = []
        res: tuple[tuple[StateId, ...], tuple[StateId, ...]] | None
        for d in (0, 1):
            if d not in eset:
                out.append(())
                continue
            targets = {
                (left, right)[d]
                for q, left, right in view.eve_splits
                if q in w
            }
            if not targets <= self.a.f_pos:
                view.fpair_cache[key] = None
                return None
            out.append(tuple(sorted(targets - self.pos_neutral)))
        res = (out[0], out[1])
        view.fpair_cache[key] = res
        return res

    def _child(
        self,
        view: _View,
        d: int,
        mem2: LarState | TrackState,
        pending: tuple[StateId, ...],
        forced: tuple[StateId, ...],
        entered: bool,
        fired: bool,
    ) -> ProductState:
        # No seeds means every play split into the neutral region in this
        # direction, which also rules out crossing obligations and forced
        # active states.
        if not view.child_seeds[d]:
            return self.accept_state
        return ProductState(
            seeds=view.child_seeds[d],
            parent_used=view.used_out,
            lar=mem2,
            pending=pending,
            forced_w=forced,
            entered_positive=entered,
            fired=fired,
        )


@lru_cache(maxsize=16)
def _engine(a: AlternatingAutomaton) -> _Engine:
    return _Engine(a)


def _probe(
    eng: _Engine,
    choice: dict[StateId, tuple[StateId, ...]],
    letter: str,
    start: StateId,
    transient_of: Callable[[StateId], bool | None],
    skip: frozenset[StateId] = frozenset(),
) -> tuple[tuple[tuple[int, StateId], ...], bool]:
    seen = {start}
    stack = [start]
    cands: set[tuple[int, StateId]] = set()
    touched = False
    while stack:
        q = stack.pop()
        trans = transient_of(q)
        if trans is None:
            trans = _vertex_transient(eng, choice, letter, q)
        if trans:
            touched = True
        if eng.a.is_adam(q):
            t = eng.canonical.get((q, letter))
            targets: tuple[StateId, ...] = () if t is None else (t,)
        else:
            m = choice.get(q)
            if m is None:
                raise ValueError(
                    f"label provides no move for state {q} on {letter!r}"
                )
            if len(m) == 2:
                for d in (0, 1):
                    if m[d] in skip:
                        touched = True
                    elif m[d] in eng.a.f_pos:
                        cands.add((d, m[d]))
                targets = ()
            else:
                targets = m
        for t in targets:
            if t in skip:
                touched = True
            elif t in eng.a.f_pos and t not in seen:
                seen.add(t)
                stack.append(t)
    return tuple(sorted(cands)), touched


def _vertex_transient(
    eng: _Engine,
    choice: dict[StateId, tuple[StateId, ...]],
    letter: str,
    q: StateId,
) -> bool:
    if eng.a.is_adam(q):
        targets: tuple[StateId, ...] = eng.adam_locals[(q, letter)]
    else:
        m = choice.get(q)
        if m is None:
            raise ValueError(
                f"label provides no move for state {q} on {letter!r}"
            )
        targets = m
    return not any(eng.graph.same_class(q, t) for t in targets)


def _settle(
    incoming: tuple[StateId, ...],
    appended: list[StateId],
    discharged: Callable[[StateId], bool],
) -> tuple[tuple[StateId, ...], bool]:
    """List mechanics at one node: append the new obligations, drop
    duplicates keeping the first copy, fire the signal when there is
    nothing pending or the oldest entry is discharged, and remove every
    discharged entry."""
    merged = list(dict.fromkeys(list(incoming) + appended))
    fired = not merged or discharged(merged[0])
    return tuple(e for e in merged if not discharged(e)), fired


def _edge_options(
    w: frozenset[StateId], entered_positive: bool
) -> tuple[tuple[int, ...], ...]:
    # An active set needs an edge, and so does a node entered through one
    # (a flagged edge with no flagged continuation can never be thick).
    if w or entered_positive:
        return ((0,), (1,), (0, 1))
    return ((0,), (1,), (0, 1), ())


# --------------------------------------------------------------- pure ops

def _label_choice(
    a: AlternatingAutomaton, label: StrategyLabel
) -> dict[StateId, tuple[StateId, ...]]:
    choice: dict[StateId, tuple[StateId, ...]] = {}
    for q, move in label.eve_choice:
        if a.is_adam(q):
            raise ValueError(f"label assigns a move to uncontrollable {q}")
        declared = {
            tuple(rest) for _, *rest in a.moves(q, label.letter)
        }
        if move not in declared:
            raise ValueError(
                f"label assigns undeclared transition {move} to state {q}"
            )
        choice[q] = move
    return choice


def index_init(
    a: AlternatingAutomaton, label: StrategyLabel, q_init: StateId
) -> IndexMap:
    """Arrival indexes of the root node: the entry state gets 0, the rest
    follow the closure of the label's choices."""
    return index_step(
        a,
        IndexMap(tuple(None for _ in a.states())),
        label,
        0,
        label,
        _root=q_init,
    )


def index_step(
    a: AlternatingAutomaton,
    parent: IndexMap,
    parent_label: StrategyLabel,
    direction: int,
    child_label: StrategyLabel,
    _root: StateId | None = None,
) -> IndexMap:
    """Arrival indexes of one child node, seeded by the parent's splits in
    the given direction and closed under the child label's choices."""
    eng = _engine(a)
    parent_choice = _label_choice(a, parent_label)
    seed_min: dict[StateId, int] = {}
    if _root is not None:
        seed_min[_root] = 0
    for q, k in parent.finite():
        move = parent_choice.get(q)
        if move is not None and len(move) == 2:
            t = move[direction]
            seed_min[t] = min(k, seed_min.get(t, k))
    choice = _label_choice(a, child_label)
    reach = set(seed_min)
    stack = list(seed_min)
    while stack:
        q = stack.pop()
        if a.is_adam(q):
            targets: tuple[StateId, ...] = eng.adam_locals[
                (q, child_label.letter)
            ]
        else:
            move = choice.get(q)
            if move is None:
                raise ValueError(
                    f"label provides no move for reachable state {q}"
                )
            targets = move if len(move) == 1 else ()
        for t in targets:
            if t not in reach:
                reach.add(t)
                stack.append(t)
    idx, _ = eng._index_for(
        child_label.letter, choice, tuple(sorted(reach)), seed_min,
        set(parent.image()),
    )
    return IndexMap(tuple(idx.get(q) for q in a.states()))


def witness_step(
    a: AlternatingAutomaton,
    w: WitnessState,
    label: StrategyLabel,
    direction: int,
    child_index: IndexMap,
    guesses: WitnessGuess,
) -> tuple[WitnessState, bool]:
    """Step the positivity data across one tree edge: validate the guessed
    obligation moves against the positive canonical closure, enforce the
    active-set closure conditions, and run the list mechanics at the child.
    Raises RejectedGuess on closure violations (the product transition
    routes to the error sink) and MalformedGuess on invalid plays."""
    eng = _engine(a)
    choice = _label_choice(a, label)
    for q in sorted(w.w_set):
        if a.is_adam(q):
            t = eng.canonical.get((q, label.letter))
            targets: tuple[StateId, ...] = () if t is None else (t,)
        else:
            m = choice.get(q)
            targets = m if m is not None and len(m) == 1 else ()
        for t in targets:
            if t not in w.w_set:
                raise RejectedGuess(
                    f"active set not closed: {q} moves to {t}"
                )
    if direction in w.e_set:
        for q in sorted(w.w_set):
            m = choice.get(q)
            if not a.is_adam(q) and m is not None and len(m) == 2:
                if m[direction] not in guesses.child_w:
                    raise RejectedGuess(
                        f"split from active {q} leaves the child active set"
                    )
    child_z = frozenset(
        q for q, _ in child_index.finite() if q in a.f_pos
    )
    if not guesses.child_w <= child_z:
        raise RejectedGuess("child active set outside the positive states")
    if guesses.child_w and not guesses.child_e:
        raise RejectedGuess("nonempty child active set without an edge")
    if tuple(q for q, _, _ in guesses.assignments) != w.p_list:
        raise MalformedGuess("assignments must follow the pending list")
    child_choice = _label_choice(a, guesses.child_label)
    incoming: list[StateId] = []
    for q, b, s in guesses.assignments:
        cands, _ = _probe(eng, choice, label.letter, q, lambda _q: None)
        if (b, s) not in cands:
            raise MalformedGuess(
                f"no positive canonical play from {q} to child {b} state {s}"
            )
        if b == direction:
            incoming.append(s)
    survivors, fired = _settle(
        tuple(incoming),
        [q for q in sorted(child_z) if q not in guesses.child_w],
        lambda e: (e in guesses.child_w
                   or _probe(eng, child_choice,
                             guesses.child_label.letter, e,
                             lambda _q: None)[1]),
    )
    return WitnessState(guesses.child_w, guesses.child_e, survivors), fired


def product_initial(a: AlternatingAutomaton) -> ProductState:
    """The state of the root before its own guesses: the entry state is the
    only seed, at index 0."""
    eng = _engine(a)
    return ProductState(
        seeds=((a.initial, 0),),
        parent_used=(),
        lar=eng.init_mem,
        pending=(),
        forced_w=(),
        entered_positive=False,
        fired=False,
    )


def product_successors(
    a: AlternatingAutomaton, p: ProductState
) -> set[tuple[ProductState, ProductState]]:
    """All split successors of one product state; the error sink loops."""
    return set(_engine(a).expand(p))


def materialize(a: AlternatingAutomaton, cap: int) -> NonzeroAutomaton:
    """Breadth-first closure of the product construction into a letterless
    nonzero automaton, interning states by value, capped at cap states.

    States are ordered by their record-memory key so the largest state
    recurring on a branch decodes the recurring symbols; acceptance reads
    that decoding: almost-sure and sure membership require the witness
    signal among the recurring symbols and the surviving automaton states
    inside the respective acceptance set, the positive set collects states
    entered through flagged edges, and when the automaton constrains every
    play trivially the sure condition degrades to visiting fired states
    infinitely often."""
    eng = _engine(a)
    if not validate(a).is_normalized:
        raise AutomatonStructureError(
            "materialize requires a normalized automaton"
        )
    init = product_initial(a)
    ids: dict[ProductState, int] = {init: 0}
    order: list[ProductState] = [init]
    keys: list[tuple] = [_state_key(init)]
    queue: deque[ProductState] = deque([init])
    splits: set[tuple[int, int, int]] = set()
    budget = _WORK_PER_STATE * max(cap, 1)
    work = 0
    while queue:
        p = queue.popleft()
        src = ids[p]
        for left, right in eng.expand(p):
            work += 1
            if work > budget:
                raise CapExceeded(cap, len(queue))
            lid = ids.get(left)
            if lid is None:
                if len(order) >= cap:
                    raise CapExceeded(cap, len(queue) + 1)
                lid = len(order)
                ids[left] = lid
                order.append(left)
                keys.append(_state_key(left))
                queue.append(left)
            rid = ids.get(right)
            if rid is None:
                if len(order) >= cap:
                    raise CapExceeded(cap, len(queue) + 1)
                rid = len(order)
                ids[right] = rid
                order.append(right)
                keys.append(_state_key(right))
                queue.append(right)
            # Branch acceptance is symmetric in the two children, so splits
            # are stored in one canonical orientation.
            if keys[rid] < keys[lid]:
                lid, rid = rid, lid
            splits.add((src, lid, rid))
    ranked_ids = sorted(range(len(order)), key=keys.__getitem__)
    ranked = [order[i] for i in ranked_ids]
    renum = {i: rank for rank, i in enumerate(ranked_ids)}
    whole = a.f_forall == frozenset(a.states())
    f_one: set[int] = set()
    f_pos: set[int] = set()
    sure_states: set[int] = set()
    # Interval ids encode 4*level + 2*(in f_one) + (in f_forall).
    for rank, p in enumerate(ranked):
        if eng.fast:
            code = p.lar.code if isinstance(p.lar, TrackState) else 0
            one_ok = code in (2, 3)
            all_ok = code in (1, 3)
        else:
            has_top, survivors = _profile(p.lar.step_max)
            one_ok = has_top and all(i & 2 for i in survivors)
            all_ok = has_top and all(i & 1 for i in survivors)
        if one_ok:
            f_one.add(rank)
        if p.entered_positive:
            f_pos.add(rank)
        if (p.fired if whole else all_ok):
            sure_states.add(rank)
    sure = (BuchiTarget if whole else LimsupSet)(frozenset(sure_states))
    names = tuple(
        "start" if p is init else f"p{rank}"
        for rank, p in enumerate(ranked)
    )
    return normalize_nonzero(NonzeroAutomaton(
        names=names,
        initial=renum[0],
        f_one=frozenset(f_one),
        f_pos=frozenset(f_pos),
        sure=sure,
        splits=tuple(sorted(
            (renum[s], renum[l], renum[r]) for s, l, r in splits
        )),
    ))


def _state_key(p: ProductState) -> tuple:
    mem = p.lar
    if isinstance(mem, LarState):
        memkey = (mem.step_max, mem.symbols, mem.hit)
    else:
        memkey = (mem.step_max, (), 0)
    return (
        memkey,
        p.error,
        p.seeds,
        p.parent_used,
        p.pending,
        p.forced_w,
        p.entered_positive,
        p.fired,
    )


def _profile(
    key: tuple[int, tuple[Symbol, ...]]
) -> tuple[bool, frozenset[int]]:
    """Decode a record-memory key: whether the witness signal recurs, and
    the largest membership interval per recurring index value."""
    prefix = frozenset(key[1])
    best: dict[int, int] = {}
    for sym in prefix:
        if sym == TOP:
            continue
        k, i = sym
        if i >= 0 and (k, -1) not in prefix:
            best[k] = max(best.get(k, -1), i)
    return TOP in prefix, frozenset(best.values())
