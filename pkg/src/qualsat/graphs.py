"""Deterministic graph routines shared by the automaton and emptiness engines.

Functions take an explicit node sequence plus a successor callback instead of
an adjacency object, so the same code runs on transition graphs, Markov chain
supports and product frontiers. Output order follows input order everywhere,
which keeps state numbering and golden files reproducible.
"""

from __future__ import annotations

import heapq
from typing import Callable, Hashable, Iterable, Iterator, Sequence, TypeVar

T = TypeVar("T", bound=Hashable)


def strongly_connected_components(
    nodes: Sequence[T], successors: Callable[[T], Iterable[T]]
) -> list[list[T]]:
    """Tarjan's algorithm, iterative so deep product graphs cannot blow the
    recursion limit.

    Components come out in reverse topological order: every edge leaving a
    component points into a component emitted earlier.
    """
    index: dict[T, int] = {}
    low: dict[T, int] = {}
    on_stack: set[T] = set()
    stack: list[T] = []
    components: list[list[T]] = []
    counter = 0

    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work: list[tuple[T, Iterator[T]]] = [(root, iter(tuple(successors(root))))]
        while work:
            node, edges = work[-1]
            descended = False
            for succ in edges:
                if succ not in index:
                    index[succ] = low[succ] = counter
                    counter += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(tuple(successors(succ)))))
                    descended = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if descended:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                component: list[T] = []
                while True:
                    member = stack.pop()
                    on_stack.remove(member)
                    component.append(member)
                    if member == node:
                        break
                components.append(component)
    return components


def condensation(
    nodes: Sequence[T], successors: Callable[[T], Iterable[T]]
) -> tuple[dict[T, int], list[list[T]]]:
    """Component id per node; ids follow the reverse topological emission
    order of strongly_connected_components."""
    components = strongly_connected_components(nodes, successors)
    component_of = {
        node: number for number, members in enumerate(components) for node in members
    }
    return component_of, components


def topological_order(
    nodes: Sequence[T], successors: Callable[[T], Iterable[T]]
) -> list[T]:
    """Kahn's algorithm with ties resolved by input position.

    Raises ValueError if the graph has a cycle; edge targets must be listed
    in `nodes`.
    """
    position = {node: i for i, node in enumerate(nodes)}
    if len(position) != len(nodes):
        raise ValueError("duplicate nodes")
    indegree = {node: 0 for node in nodes}
    adjacency: dict[T, list[T]] = {node: [] for node in nodes}
    for node in nodes:
        for succ in successors(node):
            adjacency[node].append(succ)
            indegree[succ] += 1
    ready = [position[node] for node in nodes if indegree[node] == 0]
    heapq.heapify(ready)
    order: list[T] = []
    while ready:
        node = nodes[heapq.heappop(ready)]
        order.append(node)
        for succ in adjacency[node]:
            indegree[succ] -= 1
            if indegree[succ] == 0:
                heapq.heappush(ready, position[succ])
    if len(order) != len(nodes):
        raise ValueError("graph has a cycle")
    return order


def reachable(
    roots: Iterable[T], successors: Callable[[T], Iterable[T]]
) -> list[T]:
    """Breadth-first closure, deduplicated, in visit order."""
    seen: set[T] = set()
    order: list[T] = []
    frontier: list[T] = []
    for root in roots:
        if root not in seen:
            seen.add(root)
            order.append(root)
            frontier.append(root)
    while frontier:
        next_frontier: list[T] = []
        for node in frontier:
            for succ in successors(node):
                if succ not in seen:
                    seen.add(succ)
                    order.append(succ)
                    next_frontier.append(succ)
        frontier = next_frontier
    return order
