"""Emptiness of non-deterministic nonzero automata.

Non-emptiness with a Büchi sure condition is witnessed by a state set W
containing the initial state together with two positional policies on W: one
almost-sure and positive for the probabilistic conditions, one surely winning
the Büchi direction game.  The engine computes the largest fixpoint of
W ↦ Y(X(W)), where X keeps the union of almost-sure policy domains inside W
and Y keeps Eve's winning region of the Büchi game on X(W).

For a general limsup sure condition only a bounded, explicitly experimental
witness enumeration is provided; it reports nonempty or unknown, never empty.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from .automata import BuchiTarget, LimsupSet, NonzeroAutomaton, StateId
from .errors import BoundExceeded, NotBuchiError
from .graphs import reachable, strongly_connected_components


# ----------------------------------------------------------------- policies

@dataclass(frozen=True)
class Policy:
    """Positional choice of one split per domain state, closed in the domain."""

    domain: frozenset[StateId]
    choice: tuple[tuple[StateId, StateId, StateId], ...]
    _map: dict[StateId, tuple[StateId, StateId]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        for q, left, right in self.choice:
            if q in self._map:
                raise ValueError(f"two choices for state {q}")
            self._map[q] = (left, right)

    def pick(self, q: StateId) -> tuple[StateId, StateId]:
        return self._map[q]


@dataclass(frozen=True)
class PolicyChain:
    """The Markov chain induced by a policy: from q, both split endpoints are
    taken with probability one half each."""

    policy: Policy
    ergodic_classes: tuple[frozenset[StateId], ...]

    def successors(self, q: StateId) -> tuple[StateId, ...]:
        left, right = self.policy.pick(q)
        return (left,) if left == right else (left, right)


def policy_is_valid(a: NonzeroAutomaton, p: Policy) -> bool:
    if {q for q, _, _ in p.choice} != p.domain:
        return False
    declared = set(a.splits)
    for q, left, right in p.choice:
        if left not in p.domain or right not in p.domain:
            return False
        if (q, left, right) not in declared:
            return False
    return True


def induced_chain(p: Policy) -> PolicyChain:
    succ = {q: sorted(set(p.pick(q))) for q in p.domain}
    classes = []
    for comp in strongly_connected_components(
        sorted(p.domain), lambda q: succ[q]
    ):
        members = set(comp)
        if all(d in members for q in comp for d in succ[q]):
            classes.append(frozenset(members))
    return PolicyChain(p, tuple(classes))


def is_almost_sure_policy(
    p: Policy, f_one: frozenset[StateId], f_pos: frozenset[StateId]
) -> bool:
    """Almost-sure: the maximal state of every ergodic class lies in f_one.
    Positive: every positive domain state has a chain path inside the
    positive set to an ergodic class contained in it."""
    chain = induced_chain(p)
    for cls in chain.ergodic_classes:
        if max(cls) not in f_one:
            return False
    positive = p.domain & f_pos
    ok: set[StateId] = set()
    for cls in chain.ergodic_classes:
        if cls <= f_pos:
            ok |= cls
    into: dict[StateId, list[StateId]] = {}
    for q in positive:
        for d in chain.successors(q):
            into.setdefault(d, []).append(q)
    frontier = list(ok)
    while frontier:
        x = frontier.pop()
        for q in into.get(x, ()):
            if q not in ok:
                ok.add(q)
                frontier.append(q)
    return positive <= ok


# --------------------------------------------------------- MDP sub-solvers

class _Arena:
    """Split incidence for one automaton: distinct splits grouped by source
    and by endpoint, so region-restricted scans touch only incident splits
    and never the whole transition table."""

    __slots__ = ("a", "out", "einc")

    def __init__(self, a: NonzeroAutomaton) -> None:
        self.a = a
        self.out: list[list[tuple[StateId, StateId]]] = [
            sorted(set(a.choices(q))) for q in a.states()
        ]
        einc: list[list[tuple[StateId, StateId, StateId]]] = [
            [] for _ in a.states()
        ]
        for q in a.states():
            for left, right in self.out[q]:
                split = (q, left, right)
                einc[left].append(split)
                if right != left:
                    einc[right].append(split)
        self.einc = einc


def _admissible(
    a: NonzeroAutomaton, region: frozenset[StateId]
) -> dict[StateId, list[tuple[StateId, StateId]]]:
    """Per state, the splits whose both endpoints stay in the region."""
    return {
        q: sorted(
            (left, right)
            for left, right in set(a.choices(q))
            if left in region and right in region
        )
        for q in region
    }


def _end_components(
    arena: _Arena, group: set[StateId]
) -> list[set[StateId]]:
    """Maximal sets in which some split of every member keeps both endpoints
    inside and whose members are mutually reachable through such splits."""
    out = arena.out
    result: list[set[StateId]] = []
    work = [set(group)]
    while work:
        g = work.pop()
        succ: dict[StateId, set[StateId]] = {}
        complete = True
        for q in g:
            inside = {
                x
                for left, right in out[q]
                if left in g and right in g
                for x in (left, right)
            }
            if not inside:
                complete = False
            succ[q] = inside
        if not complete:
            core = {q for q in g if succ[q]}
            if core:
                work.append(core)
            continue
        comps = strongly_connected_components(sorted(g), lambda q: succ[q])
        if len(comps) == 1:
            result.append(g)
        else:
            work.extend(set(c) for c in comps)
    return result


def _good_components(
    arena: _Arena, body: set[StateId], f_one: frozenset[StateId]
) -> list[tuple[set[StateId], StateId]]:
    """End components whose maximal state lies in f_one, paired with that
    maximum; their union equals the union of every end component inside the
    body with an f_one maximum.  A component failing the test sheds its
    maximum and is re-decomposed, so each decomposition runs on a shrinking
    group instead of once per f_one member."""
    found: list[tuple[set[StateId], StateId]] = []
    work = [set(body)]
    while work:
        g = work.pop()
        for comp in _end_components(arena, g):
            top = max(comp)
            if top in f_one:
                found.append((comp, top))
            else:
                comp.discard(top)
                if comp:
                    work.append(comp)
    found.sort(key=lambda pair: (pair[1], min(pair[0])))
    return found


def _good_states(
    arena: _Arena, region: set[StateId], positive_only: bool
) -> set[StateId]:
    """Union of end components inside the region whose maximal state is in
    f_one; with positive_only, components must also sit inside f_pos."""
    a = arena.a
    body = region & a.f_pos if positive_only else region
    out: set[StateId] = set()
    for comp, _ in _good_components(arena, body, a.f_one):
        out |= comp
    return out


def _prob_attractor(
    arena: _Arena, region: set[StateId], seeds: set[StateId]
) -> set[StateId]:
    """States reaching the seeds with positive probability while every used
    split keeps both endpoints in the region."""
    inner = set(seeds) & region
    frontier = list(inner)
    einc = arena.einc
    while frontier:
        x = frontier.pop()
        for q, left, right in einc[x]:
            if (
                q in region
                and q not in inner
                and left in region
                and right in region
            ):
                inner.add(q)
                frontier.append(q)
    return inner


def _almost_sure_reach(
    arena: _Arena, region: set[StateId], target: set[StateId]
) -> set[StateId]:
    """States from which the controller reaches the target with probability
    one while keeping every intermediate split inside the shrinking region."""
    outer = set(region)
    while True:
        inner = _prob_attractor(arena, outer, target)
        if len(inner) == len(outer):
            return outer
        outer = inner


def largest_as_domain(
    a: NonzeroAutomaton, restriction: frozenset[StateId]
) -> frozenset[StateId]:
    """The union of all almost-sure policy domains inside the restriction:
    prune states without internal splits, keep the almost-sure region for
    reaching good end components, and prune positive states that cannot reach
    a positive good component through the positive set, until stable."""
    return frozenset(_largest_as_domain(_Arena(a), set(restriction)))


def _largest_as_domain(arena: _Arena, region: set[StateId]) -> set[StateId]:
    a = arena.a
    out, einc = arena.out, arena.einc
    while True:
        kept = {
            q
            for q in region
            if any(l in region and r in region for l, r in out[q])
        }
        good = _good_states(arena, kept, positive_only=False)
        surely = _almost_sure_reach(arena, kept, good)
        positive_body = surely & a.f_pos
        ok = _good_states(arena, surely, positive_only=True)
        frontier = list(ok)
        while frontier:
            x = frontier.pop()
            for q, left, right in einc[x]:
                if (
                    q in positive_body
                    and q not in ok
                    and left in surely
                    and right in surely
                ):
                    ok.add(q)
                    frontier.append(q)
        trimmed = surely - (positive_body - ok)
        if trimmed == region:
            return region
        region = trimmed


def extract_almost_sure_policy(
    a: NonzeroAutomaton, domain: frozenset[StateId]
) -> Policy:
    """Build one almost-sure policy on an X-stable domain: positive good
    components first, then transit choices for the remaining positive states,
    then plain good components and almost-sure-reach choices for the rest.
    Lexicographically smallest qualifying split on every tie."""
    arena = _Arena(a)
    out, einc = arena.out, arena.einc
    domain = frozenset(domain)
    choice: dict[StateId, tuple[StateId, StateId]] = {}

    def assign_component(component: set[StateId], top: StateId) -> None:
        # Inside the component every state can bend towards an already
        # assigned state; one coin branch then makes progress, so the top
        # recurs almost surely and dominates every ergodic class in here.
        if top not in choice:
            choice[top] = next(
                (l, r)
                for l, r in out[top]
                if l in component and r in component
            )
        queue = deque(sorted(q for q in component if q in choice))
        while queue:
            x = queue.popleft()
            for q, left, right in einc[x]:
                if (
                    q in component
                    and q not in choice
                    and left in component
                    and right in component
                ):
                    choice[q] = next(
                        (l, r)
                        for l, r in out[q]
                        if l in component
                        and r in component
                        and (l in choice or r in choice)
                    )
                    queue.append(q)
        assert component <= choice.keys(), "end component not attractor-covered"

    def sweep_components(body: frozenset[StateId]) -> None:
        for component, top in _good_components(arena, set(body), a.f_one):
            if not component <= choice.keys():
                assign_component(component, top)

    def sweep_reach(eligible: frozenset[StateId], through_positive: bool) -> None:
        queue = deque(
            sorted(
                x for x in choice if not through_positive or x in a.f_pos
            )
        )
        while queue:
            x = queue.popleft()
            for q, left, right in einc[x]:
                if q not in eligible or q in choice:
                    continue
                if left not in domain or right not in domain:
                    continue
                choice[q] = next(
                    (l, r)
                    for l, r in out[q]
                    if l in domain
                    and r in domain
                    and any(
                        e in choice
                        and (not through_positive or e in a.f_pos)
                        for e in (l, r)
                    )
                )
                if not through_positive or q in a.f_pos:
                    queue.append(q)

    sweep_components(domain & a.f_pos)
    sweep_reach(domain & a.f_pos, through_positive=True)
    assert domain & a.f_pos <= choice.keys(), "positive state left unassigned"
    sweep_components(domain)
    sweep_reach(domain, through_positive=False)
    assert set(choice) == set(domain), "domain state left unassigned"
    policy = Policy(
        frozenset(domain),
        tuple(sorted((q, l, r) for q, (l, r) in choice.items())),
    )
    assert is_almost_sure_policy(policy, a.f_one, a.f_pos)
    return policy


def buchi_game_region(
    a: NonzeroAutomaton, restriction: frozenset[StateId], target: frozenset[StateId]
) -> tuple[frozenset[StateId], Policy]:
    """Eve picks any split with both endpoints inside the restriction (loses
    when none exists), the adversary picks the direction, and Eve wins when
    the target recurs.  Returns her winning region and one winning policy."""
    return _buchi_game(_Arena(a), restriction, target)


def _buchi_game(
    arena: _Arena, restriction: frozenset[StateId], target: frozenset[StateId]
) -> tuple[frozenset[StateId], Policy]:
    out, einc = arena.out, arena.einc
    outer = set(restriction)
    base: set[StateId] = set()
    depth: dict[StateId, int] = {}
    while True:
        base = {
            q
            for q in outer
            if q in target
            and any(l in outer and r in outer for l, r in out[q])
        }
        # Attractor layers to the base; a state joins one round after both
        # endpoints of some admissible split have joined.
        depth = {q: 0 for q in base}
        cur = set(base)
        frontier = base
        d = 0
        while frontier:
            d += 1
            joined: set[StateId] = set()
            for x in frontier:
                for q, left, right in einc[x]:
                    if (
                        q in outer
                        and q not in cur
                        and q not in joined
                        and left in cur
                        and right in cur
                    ):
                        joined.add(q)
            for q in joined:
                depth[q] = d
            cur |= joined
            frontier = joined
        if len(cur) == len(outer):
            break
        outer = cur

    choice: dict[StateId, tuple[StateId, StateId]] = {}
    for q in sorted(outer):
        if q in base:
            pick = next(
                ((l, r) for l, r in out[q] if l in outer and r in outer),
                None,
            )
        else:
            dq = depth[q]
            pick = next(
                (
                    (l, r)
                    for l, r in out[q]
                    if depth.get(l, dq) < dq and depth.get(r, dq) < dq
                ),
                None,
            )
        assert pick is not None, "winning state without a winning split"
        choice[q] = pick
    policy = Policy(
        frozenset(outer),
        tuple(sorted((q, l, r) for q, (l, r) in choice.items())),
    )
    return frozenset(outer), policy


# ----------------------------------------------------------------- verdicts

@dataclass(frozen=True)
class EmptinessReport:
    nonempty: bool
    fixpoint_trace: tuple[
        tuple[frozenset[StateId], frozenset[StateId], frozenset[StateId]], ...
    ]
    witness: tuple[frozenset[StateId], Policy, Policy] | None


@dataclass(frozen=True)
class Unknown:
    reason: str


def _reachable_states(a: NonzeroAutomaton) -> frozenset[StateId]:
    def succ(q: StateId) -> list[StateId]:
        return [x for left, right in a.choices(q) for x in (left, right)]

    return frozenset(reachable([a.initial], succ))


def _sure_play_violation(a: NonzeroAutomaton, p: Policy) -> bool:
    """Whether some infinite play of the policy chain, started anywhere in
    the domain, violates the sure condition; decided by cycle analysis."""
    succ = {q: sorted(set(p.pick(q))) for q in p.domain}
    states = sorted(p.domain)
    if isinstance(a.sure, BuchiTarget):
        avoid = [q for q in states if q not in a.sure.states]
        for comp in strongly_connected_components(
            avoid, lambda q: [d for d in succ[q] if d not in a.sure.states]
        ):
            if len(comp) > 1 or comp[0] in succ[comp[0]]:
                return True
        return False
    # A play with limsup v exists iff some cycle through v stays below v;
    # the play is violating iff that v is outside the limsup set.
    for v in states:
        if v in a.sure.states:
            continue
        below = [q for q in states if q <= v]
        for comp in strongly_connected_components(
            below, lambda q: [d for d in succ[q] if d <= v]
        ):
            if v in comp and (len(comp) > 1 or v in succ[v]):
                return True
    return False


def verify_witness(
    a: NonzeroAutomaton,
    domain: frozenset[StateId],
    sigma1: Policy,
    sigma2: Policy,
) -> bool:
    """Re-check a non-emptiness witness against the characterization: both
    policies live on the domain, the first is almost-sure and positive, the
    second surely wins from the initial state."""
    if a.initial not in domain:
        return False
    if sigma1.domain != domain or sigma2.domain != domain:
        return False
    if not policy_is_valid(a, sigma1) or not policy_is_valid(a, sigma2):
        return False
    if not is_almost_sure_policy(sigma1, a.f_one, a.f_pos):
        return False
    return not _sure_play_violation(a, sigma2)


def emptiness_buchi(a: NonzeroAutomaton) -> EmptinessReport:
    """Largest-fixpoint decision for a Büchi sure condition, restricted to
    the reachable states.  Nonempty iff the initial state survives; the
    returned witness re-checks against verify_witness."""
    if not isinstance(a.sure, BuchiTarget):
        raise NotBuchiError("sure condition is not a Büchi target")
    target = a.sure.states
    arena = _Arena(a)
    region = _reachable_states(a)
    trace = []
    while True:
        stable = frozenset(_largest_as_domain(arena, set(region)))
        winning, sigma2 = _buchi_game(arena, stable, target)
        trace.append((region, stable, winning))
        if winning == region:
            break
        region = winning
    if a.initial not in region:
        return EmptinessReport(False, tuple(trace), None)
    sigma1 = extract_almost_sure_policy(a, region)
    return EmptinessReport(True, tuple(trace), (region, sigma1, sigma2))


def emptiness_general_experimental(
    a: NonzeroAutomaton, bound: int = 12
) -> EmptinessReport | Unknown:
    """Bounded witness enumeration for any sure condition: guess the domain,
    build the almost-sure policy when one exists, and search the sure-game
    policies exhaustively.  Sound for nonempty only."""
    if a.state_count > bound:
        raise BoundExceeded(
            f"{a.state_count} states exceed the experimental bound {bound}"
        )
    reach = _reachable_states(a)
    others = sorted(reach - {a.initial})
    for dropped in range(len(others) + 1):
        for removed in itertools.combinations(others, dropped):
            domain = frozenset(reach - set(removed))
            if largest_as_domain(a, domain) != domain:
                continue
            sigma1 = extract_almost_sure_policy(a, domain)
            splits_of = _admissible(a, domain)
            if any(not splits_of[q] for q in domain):
                continue
            states = sorted(domain)
            for picks in itertools.product(*(splits_of[q] for q in states)):
                sigma2 = Policy(
                    domain,
                    tuple(
                        (q, l, r) for q, (l, r) in zip(states, picks)
                    ),
                )
                if not _sure_play_violation(a, sigma2):
                    return EmptinessReport(
                        True, (), (domain, sigma1, sigma2)
                    )
    return Unknown("no witness found within the experimental enumeration")
