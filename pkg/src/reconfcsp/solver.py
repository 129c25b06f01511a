"""Exact maxmin-reconfiguration oracle for small instances.

States are assignments encoded as mixed-radix integers; reachability at a
satisfied-count threshold is a breadth-first search, and the maxmin value is
the largest threshold at which the endpoints stay connected.  `dfs_maxmin`
is a deliberately independent second implementation used to cross-check the
primary one; keep the two from sharing code.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .constants import DEFAULT_BUDGET
from .core import (
    Assignment,
    ConstraintGraph,
    InstanceError,
    ReconfInstance,
    ReconfigSequence,
    Value,
    value,
)
from .seeding import stream


@dataclass(frozen=True)
class MaxminResult:
    optimum: Value
    witness: ReconfigSequence | None


class BudgetExceededError(InstanceError):
    """The assignment space is too large for exhaustive search."""


def state_space_size(graph: ConstraintGraph) -> int:
    size = 1
    for v in graph.vertices:
        size *= graph.alphabet_of(v)
    return size


def _check_budget(graph: ConstraintGraph, budget: int) -> None:
    if state_space_size(graph) > budget:
        raise BudgetExceededError(
            f"instance too large for exact search: {state_space_size(graph)} "
            f"states exceed budget {budget}"
        )


class _Space:
    """Mixed-radix encoding plus incremental satisfied-edge counting."""

    def __init__(self, graph: ConstraintGraph):
        self.graph = graph
        self.vertices = graph.vertices
        self.sizes = [graph.alphabet_of(v) for v in self.vertices]
        self.strides = []
        acc = 1
        for size in self.sizes:
            self.strides.append(acc)
            acc *= size
        index = graph.vertex_index
        self.edge_coords = [tuple(index[v] for v in edge) for edge in graph.edges]
        self.accepts = list(graph.accepts)
        self.incidence: list[list[int]] = [[] for _ in self.vertices]
        for j, coords in enumerate(self.edge_coords):
            for i in set(coords):
                self.incidence[i].append(j)

    def encode(self, symbols: tuple[int, ...]) -> int:
        return sum(s * stride for s, stride in zip(symbols, self.strides))

    def decode(self, state: int) -> tuple[int, ...]:
        out = []
        for size in self.sizes:
            out.append(state % size)
            state //= size
        return tuple(out)

    def from_assignment(self, psi: Assignment) -> tuple[int, ...]:
        return tuple(psi.values[v] for v in self.vertices)

    def to_assignment(self, symbols: tuple[int, ...]) -> Assignment:
        return Assignment(dict(zip(self.vertices, symbols)))

    def edge_ok(self, j: int, symbols: tuple[int, ...]) -> bool:
        return tuple(symbols[i] for i in self.edge_coords[j]) in self.accepts[j]

    def count(self, symbols: tuple[int, ...]) -> int:
        return sum(1 for j in range(len(self.edge_coords)) if self.edge_ok(j, symbols))

    def count_after_move(
        self, symbols: tuple[int, ...], count: int, vertex: int, symbol: int
    ) -> tuple[tuple[int, ...], int]:
        moved = list(symbols)
        moved[vertex] = symbol
        moved_t = tuple(moved)
        for j in self.incidence[vertex]:
            count += self.edge_ok(j, moved_t) - self.edge_ok(j, symbols)
        return moved_t, count


def reachable_at_threshold(
    instance: ReconfInstance, k: int, budget: int = DEFAULT_BUDGET
) -> tuple[bool, ReconfigSequence | None]:
    """BFS over assignments satisfying at least k hyperedges.

    Returns (True, shortest witness sequence) when the target is reachable,
    (False, None) otherwise.  Never approximates: a state space above the
    budget raises instead.
    """
    graph = instance.graph
    if not graph.edges:
        raise InstanceError("no constraints: graph has an empty hyperedge list")
    _check_budget(graph, budget)
    space = _Space(graph)
    ini = space.from_assignment(instance.psi_ini)
    tar = space.from_assignment(instance.psi_tar)
    if space.count(ini) < k or space.count(tar) < k:
        return False, None
    ini_id, tar_id = space.encode(ini), space.encode(tar)
    parents: dict[int, int] = {ini_id: -1}
    queue: deque[tuple[int, tuple[int, ...], int]] = deque([(ini_id, ini, space.count(ini))])
    while queue and tar_id not in parents:
        state_id, symbols, count = queue.popleft()
        for vertex in range(len(space.vertices)):
            current = symbols[vertex]
            for symbol in range(space.sizes[vertex]):
                if symbol == current:
                    continue
                nxt_id = state_id + (symbol - current) * space.strides[vertex]
                if nxt_id in parents:
                    continue
                nxt, nxt_count = space.count_after_move(symbols, count, vertex, symbol)
                if nxt_count < k:
                    continue
                parents[nxt_id] = state_id
                if nxt_id == tar_id:
                    queue.clear()
                    break
                queue.append((nxt_id, nxt, nxt_count))
            else:
                continue
            break
    if tar_id not in parents:
        return False, None
    chain = []
    cursor = tar_id
    while cursor != -1:
        chain.append(cursor)
        cursor = parents[cursor]
    chain.reverse()
    steps = tuple(space.to_assignment(space.decode(s)) for s in chain)
    return True, ReconfigSequence(steps)


def maxmin_value(instance: ReconfInstance, budget: int = DEFAULT_BUDGET) -> MaxminResult:
    """Largest k/|E| with the endpoints connected through >=k-satisfying states."""
    graph = instance.graph
    total = len(graph.edges)
    if total == 0:
        raise InstanceError("no constraints: graph has an empty hyperedge list")
    if instance.psi_ini == instance.psi_tar:
        v = value(graph, instance.psi_ini)
        return MaxminResult(v, ReconfigSequence((instance.psi_ini,)))
    _check_budget(graph, budget)
    upper = min(value(graph, instance.psi_ini).satisfied, value(graph, instance.psi_tar).satisfied)
    # Threshold 0 is always reachable: single-vertex moves connect everything.
    best_k = 0
    ok, best_witness = reachable_at_threshold(instance, 0, budget)
    assert ok
    lo, hi = 0, upper
    while lo < hi:
        mid = (lo + hi + 1) // 2
        ok, witness = reachable_at_threshold(instance, mid, budget)
        if ok:
            best_k, best_witness = mid, witness
            lo = mid
        else:
            hi = mid - 1
    return MaxminResult(Value(best_k, total), best_witness)


def dfs_maxmin(instance: ReconfInstance, limit: int = 4096) -> Value:
    """Independent oracle: depth-first enumeration of paths with bottleneck relaxation.

    Explores every reconfiguration path (pruning only continuations that
    cannot improve the recorded bottleneck for a state), so it agrees with
    full sequence enumeration.  Intentionally shares no machinery with the
    BFS-threshold search above.
    """
    graph = instance.graph
    if not graph.edges:
        raise InstanceError("no constraints: graph has an empty hyperedge list")
    if state_space_size(graph) > limit:
        raise BudgetExceededError(
            f"instance too large for exact search: {state_space_size(graph)} states exceed {limit}"
        )
    names = list(graph.vertices)
    sizes = {v: graph.alphabet_of(v) for v in names}

    def count_satisfied(assign: dict[str, int]) -> int:
        hit = 0
        for edge, acc in zip(graph.edges, graph.accepts):
            if tuple(assign[v] for v in edge) in acc:
                hit += 1
        return hit

    start = dict(instance.psi_ini.values)
    goal = dict(instance.psi_tar.values)
    start_key = tuple(start[v] for v in names)
    goal_key = tuple(goal[v] for v in names)
    values: dict[tuple[int, ...], int] = {}

    def val(key: tuple[int, ...]) -> int:
        if key not in values:
            values[key] = count_satisfied(dict(zip(names, key)))
        return values[key]

    best: dict[tuple[int, ...], int] = {start_key: val(start_key)}
    stack = [start_key]
    while stack:
        key = stack.pop()
        bottleneck = best[key]
        for i, v in enumerate(names):
            for symbol in range(sizes[v]):
                if symbol == key[i]:
                    continue
                nxt = key[:i] + (symbol,) + key[i + 1 :]
                nb = min(bottleneck, val(nxt))
                if nb > best.get(nxt, -1):
                    best[nxt] = nb
                    stack.append(nxt)
    # Single-vertex moves connect the whole space, so the goal is always relaxed.
    return Value(best[goal_key], len(graph.edges))


def random_adversarial_sequence(
    instance: ReconfInstance, seed: int, steps: int = 32
) -> ReconfigSequence:
    """Seeded scramble-then-repair walk from psi_ini to psi_tar.

    The walk first performs `steps` random single-vertex changes, then fixes
    the remaining disagreements with psi_tar in a seeded order.  Output is a
    valid sequence with the requested endpoints, identical for equal seeds.
    """
    rng = stream(seed, "adversarial-walk")
    graph = instance.graph
    names = list(graph.vertices)
    walk = [instance.psi_ini]
    current = instance.psi_ini
    for _ in range(steps):
        v = rng.choice(names)
        size = graph.alphabet_of(v)
        if size < 2:
            continue
        symbol = rng.randrange(size - 1)
        if symbol >= current.values[v]:
            symbol += 1
        current = current.with_value(v, symbol)
        walk.append(current)
    order = list(names)
    rng.shuffle(order)
    for v in order:
        if current.values[v] != instance.psi_tar.values[v]:
            current = current.with_value(v, instance.psi_tar.values[v])
            walk.append(current)
    return ReconfigSequence(tuple(walk))
