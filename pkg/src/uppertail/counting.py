"""Exact copy counting in host graphs.

Labelled copies are injective vertex maps preserving pattern edges (non-edges
of the pattern are unconstrained).  The counter backtracks over pattern
vertices in a greedy connected order that maximizes back-degree, intersecting
host adjacency bitsets; counts are plain Python ints so divisibility
assertions stay exact.  Closed forms are used for stars, both as fast paths
and as independent oracles in the tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ResourceBudgetError, ValidationError
from .graphs import HostGraph, PatternGraph, automorphism_count, validate_vertex_set
from .patterns import QhMember, fractional_independence_number

DEFAULT_NODE_BUDGET = 50_000_000


def _search_order(pattern: PatternGraph, first: Sequence[int] = ()) -> list[int]:
    """Greedy connected ordering: each next vertex maximizes the number of
    already-placed neighbors (ties broken by degree, then index)."""
    n = pattern.vertex_count
    order = list(first)
    placed = set(order)
    while len(order) < n:
        best = None
        best_key = None
        for v in range(n):
            if v in placed:
                continue
            back = sum(1 for u in pattern.neighbors(v) if u in placed)
            key = (back, pattern.degree(v), -v)
            if best_key is None or key > best_key:
                best, best_key = v, key
        order.append(best)
        placed.add(best)
    return order


class _Budget:
    __slots__ = ("remaining",)

    def __init__(self, limit: Optional[int]):
        self.remaining = DEFAULT_NODE_BUDGET if limit is None else limit

    def spend(self, amount: int = 1) -> None:
        self.remaining -= amount
        if self.remaining < 0:
            raise ResourceBudgetError("counting budget exceeded")


def _count_with_order(
    pattern: PatternGraph,
    host: HostGraph,
    order: list[int],
    pinned: dict[int, int],
    budget: _Budget,
    side_masks: Optional[dict[int, int]] = None,
) -> int:
    """Backtracking count; ``pinned`` fixes images of the leading vertices of
    ``order`` and ``side_masks`` optionally restricts each pattern vertex to a
    host bitset."""
    n_host = host.vertex_count
    if not host.uses_bitsets:
        return _count_with_order_sets(pattern, host, order, pinned, budget, side_masks)
    full = (1 << n_host) - 1
    degrees = host.degrees()
    pat_deg = pattern.degrees()
    position = {v: i for i, v in enumerate(order)}
    back_neighbors = [
        [u for u in pattern.neighbors(v) if position[u] < position[v]] for v in order
    ]
    images = [0] * pattern.vertex_count  # indexed by order position
    used_mask = 0
    start = 0
    for v, w in pinned.items():
        pos = position[v]
        images[pos] = w
        used_mask |= 1 << w
        start = max(start, pos + 1)

    def recurse(pos: int) -> int:
        nonlocal used_mask
        if pos == len(order):
            return 1
        v = order[pos]
        candidates = full & ~used_mask
        for u in back_neighbors[pos]:
            candidates &= host.neighbors_mask(images[position[u]])
            if not candidates:
                return 0
        if side_masks is not None and v in side_masks:
            candidates &= side_masks[v]
        total = 0
        need = pat_deg[v]
        while candidates:
            low = candidates & -candidates
            w = low.bit_length() - 1
            candidates ^= low
            budget.spend()
            if degrees[w] < need:
                continue
            images[pos] = w
            used_mask |= low
            total += recurse(pos + 1)
            used_mask ^= low
        return total

    return recurse(start)


def _count_with_order_sets(pattern, host, order, pinned, budget, side_masks):
    """Adjacency-set fallback for hosts above the bitset limit."""
    position = {v: i for i, v in enumerate(order)}
    back_neighbors = [
        [u for u in pattern.neighbors(v) if position[u] < position[v]] for v in order
    ]
    images = [0] * pattern.vertex_count
    used: set[int] = set()
    start = 0
    for v, w in pinned.items():
        pos = position[v]
        images[pos] = w
        used.add(w)
        start = max(start, pos + 1)
    pat_deg = pattern.degrees()

    def recurse(pos: int) -> int:
        if pos == len(order):
            return 1
        v = order[pos]
        backs = back_neighbors[pos]
        if backs:
            cands = set(host.neighbors(images[position[backs[0]]]))
            for u in backs[1:]:
                cands &= set(host.neighbors(images[position[u]]))
        else:
            cands = set(range(host.vertex_count))
        cands -= used
        if side_masks is not None and v in side_masks:
            cands &= side_masks[v]
        total = 0
        for w in sorted(cands):
            budget.spend()
            if host.degree(w) < pat_deg[v]:
                continue
            images[pos] = w
            used.add(w)
            total += recurse(pos + 1)
            used.discard(w)
        return total

    return recurse(start)


def count_labelled(pattern: PatternGraph, host: HostGraph, budget: Optional[int] = None) -> int:
    """Number of injective edge-preserving maps from the pattern into the host."""
    if pattern.vertex_count > host.vertex_count:
        return 0
    order = _search_order(pattern)
    return _count_with_order(pattern, host, order, {}, _Budget(budget))


def count_labelled_using_edge(
    pattern: PatternGraph,
    host: HostGraph,
    edge: tuple[int, int],
    budget: Optional[int] = None,
) -> int:
    """Copies whose image contains the given host edge.

    A copy's image contains the edge through exactly one pattern edge in
    exactly one orientation, so summing pinned counts over pattern edges and
    orientations counts each qualifying copy once.
    """
    u, v = edge
    if not host.has_edge(u, v):
        raise ValidationError(f"edge ({u},{v}) not in host graph")
    shared = _Budget(budget)
    total = 0
    for x, y in pattern.sorted_edges():
        for a, b in ((u, v), (v, u)):
            order = _search_order(pattern, first=[x, y])
            total += _count_with_order(pattern, host, order, {x: a, y: b}, shared)
    return total


def star_count_using_edge(r: int, host: HostGraph, edge: tuple[int, int]) -> int:
    """Closed form for stars: the center sits at one endpoint, one arm is the
    edge, and the remaining arms choose distinct other neighbors."""
    u, v = edge
    if not host.has_edge(u, v):
        raise ValidationError(f"edge ({u},{v}) not in host graph")
    du, dv = host.degree(u), host.degree(v)
    return r * _falling(du - 1, r - 1) + r * _falling(dv - 1, r - 1)


def count_restricted(
    member: QhMember,
    host: HostGraph,
    part_u: Sequence[int],
    part_v: Sequence[int],
    budget: Optional[int] = None,
) -> int:
    """Labelled copies of a crossing subgraph with the full-degree side mapped
    into U (hence the other side into V)."""
    set_u = set(validate_vertex_set(host, part_u))
    set_v = set(validate_vertex_set(host, part_v))
    if set_u & set_v:
        raise ValidationError("U and V overlap")
    if not set_u or not set_v:
        return 0
    sub, index = member.as_pattern()
    if host.uses_bitsets:
        mask_u = sum(1 << w for w in set_u)
        mask_v = sum(1 << w for w in set_v)
        side_masks = {
            index[x]: (mask_u if x in member.a_side else mask_v)
            for x in member.vertices
        }
    else:
        side_masks = {
            index[x]: (set_u if x in member.a_side else set_v)
            for x in member.vertices
        }
    order = _search_order(sub)
    return _count_with_order(sub, host, order, {}, _Budget(budget), side_masks)


def count_unlabelled(pattern: PatternGraph, host: HostGraph, budget: Optional[int] = None) -> int:
    """Labelled count divided by the automorphism count; divisibility is
    asserted because a failure always means a counting bug."""
    labelled = count_labelled(pattern, host, budget)
    aut = automorphism_count(pattern)
    quotient, remainder = divmod(labelled, aut)
    assert remainder == 0, "labelled count must be divisible by automorphism count"
    return quotient


def _falling(n: int, k: int) -> int:
    if k < 0 or n < k:
        return 0
    out = 1
    for i in range(k):
        out *= n - i
    return out


def star_count_exact(r: int, host: HostGraph) -> int:
    """Sum over vertices of the falling factorial of the degree."""
    if r < 2:
        raise ValidationError("star arm count must be at least 2")
    return sum(_falling(d, r) for d in host.degrees())


def star_global_bound_check(t: int, host: HostGraph) -> bool:
    """Whether the star count is at most e(G)^t."""
    if t < 2:
        raise ValidationError("star arm count must be at least 2")
    return star_count_exact(t, host) <= host.edge_count**t


def embedding_upper_bound(pattern: PatternGraph, host: HostGraph) -> int:
    """floor((2 e(G))^(v - alpha*) n^(2 alpha* - v)), evaluated exactly.

    alpha* is half-integral, so the square of the bound is an integer and the
    floor comes from an integer square root.  Always dominates the labelled
    count.
    """
    alpha = fractional_independence_number(pattern).value
    v = pattern.vertex_count
    two_a = int(2 * (v - alpha))
    two_b = int(2 * (2 * alpha - v))
    squared = (2 * host.edge_count) ** two_a * host.vertex_count**two_b
    return math.isqrt(squared)


def conditional_expected_count(
    pattern: PatternGraph,
    n: int,
    p: float,
    planted: Optional[HostGraph] = None,
    budget: Optional[int] = None,
) -> float:
    """Expected labelled count conditioned on a planted subgraph being present.

    Sums p^(number of pattern edges falling outside the planted graph) over
    all injective placements; exact enumeration, so only for small n.
    """
    if not 0 <= p <= 1:
        raise ValidationError("p must lie in [0, 1]")
    if planted is not None and planted.vertex_count != n:
        raise ValidationError("planted graph must have n vertices")
    v = pattern.vertex_count
    if v > n:
        return 0.0
    injections = _falling(n, v)
    limit = DEFAULT_NODE_BUDGET if budget is None else budget
    if injections > limit:
        raise ResourceBudgetError("conditional expectation enumeration exceeds budget")
    edge_list = pattern.sorted_edges()
    histogram = [0] * (len(edge_list) + 1)
    for image in itertools.permutations(range(n), v):
        missing = 0
        if planted is not None:
            for x, y in edge_list:
                if not planted.has_edge(image[x], image[y]):
                    missing += 1
        else:
            missing = len(edge_list)
        histogram[missing] += 1
    return float(sum(cnt * p**k for k, cnt in enumerate(histogram) if cnt))


@dataclass(frozen=True)
class PlantedSearchResult:
    value: float
    witness: HostGraph
    family: str  # "hub", "clique", or "empty"
    size: int


def _hub_host(n: int, m: int) -> HostGraph:
    return HostGraph(n, [(i, j) for i in range(m) for j in range(m, n)])


def _clique_host(n: int, m: int) -> HostGraph:
    return HostGraph(n, itertools.combinations(range(m), 2))


def phi_planted_search(
    pattern: PatternGraph,
    n: int,
    p: float,
    delta: float,
    budget: Optional[int] = None,
) -> PlantedSearchResult:
    """Cheapest planting among hubs K_{m,n-m} and cliques K_m whose
    conditional expected count clears (1 + delta) times the unconditioned one.

    Both families are scanned over all sizes (hub edge sets are not nested in
    m, so no bisection); plantings already costing more than the best
    feasible value found so far are skipped.  The result is an upper bound on
    the planted variational value, not claimed optimal.
    """
    if not 0 < p < 1:
        raise ValidationError("p must lie in (0, 1)")
    if delta < 0:
        raise ValidationError("delta must be nonnegative")
    base = conditional_expected_count(pattern, n, p, None, budget)
    target = (1 + delta) * base
    if delta == 0:
        return PlantedSearchResult(0.0, HostGraph.empty(n), "empty", 0)

    log_inv_p = math.log(1 / p)
    best: Optional[PlantedSearchResult] = None
    for family, builder, sizes in (
        ("hub", _hub_host, range(1, n)),
        ("clique", _clique_host, range(2, n + 1)),
    ):
        for m in sizes:
            witness = builder(n, m)
            value = witness.edge_count * log_inv_p
            if best is not None and value >= best.value:
                continue
            if conditional_expected_count(pattern, n, p, witness, budget) >= target:
                best = PlantedSearchResult(value, witness, family, m)
    if best is None:
        raise ValidationError("constraint unsatisfiable even at the complete graph")
    return best


def _copy_edge_sets(pattern: PatternGraph, host: HostGraph, budget: Optional[int]) -> list[frozenset]:
    """Distinct unlabelled copies, each as a frozenset of host edges."""
    order = _search_order(pattern)
    shared = _Budget(budget)
    copies: set[frozenset] = set()
    edge_list = pattern.sorted_edges()
    n_host = host.vertex_count
    images: dict[int, int] = {}
    used: set[int] = set()

    def recurse(pos: int) -> None:
        if pos == len(order):
            copies.add(
                frozenset(
                    (min(images[x], images[y]), max(images[x], images[y]))
                    for x, y in edge_list
                )
            )
            return
        v = order[pos]
        backs = [u for u in pattern.neighbors(v) if u in images]
        candidates = None
        for u in backs:
            neigh = set(host.neighbors(images[u]))
            candidates = neigh if candidates is None else candidates & neigh
        if candidates is None:
            candidates = set(range(n_host))
        for w in sorted(candidates - used):
            shared.spend()
            images[v] = w
            used.add(w)
            recurse(pos + 1)
            used.discard(w)
            del images[v]

    recurse(0)
    return sorted(copies, key=sorted)


def _connected_subset_count(adjacency: list[set[int]], size: int) -> int:
    """Number of connected vertex subsets of the given size (ESU-style
    extension enumeration: each subset found exactly once)."""
    count = 0
    n = len(adjacency)

    def extend(subset: set[int], extension: set[int], root: int) -> None:
        nonlocal count
        if len(subset) == size:
            count += 1
            return
        ext = sorted(extension)
        while ext:
            w = ext.pop()
            new_extension = {x for x in ext} | {
                x for x in adjacency[w] if x > root and x not in subset and x not in extension
            }
            subset.add(w)
            extend(subset, new_extension, root)
            subset.discard(w)

    for v in range(n):
        extend({v}, {u for u in adjacency[v] if u > v}, v)
    return count


def cluster_count(
    pattern: PatternGraph,
    host: HostGraph,
    s: int,
    connected_only: bool = False,
    copy_cap: int = 5000,
    budget: Optional[int] = None,
) -> int:
    """Number of s-sets of distinct copies, each sharing a host edge with
    another copy in the set.

    Nodes of the intersection graph are unlabelled copies; two copies are
    adjacent when they share at least one host edge.  The default counts
    s-sets whose induced intersection subgraph has minimum degree >= 1 (the
    literal reading); ``connected_only`` switches to connected s-sets.
    """
    if s < 2 or s > 4:
        raise ValidationError("cluster size must be between 2 and 4")
    copies = _copy_edge_sets(pattern, host, budget)
    if len(copies) > copy_cap:
        raise ResourceBudgetError(f"too many copies ({len(copies)} > {copy_cap})")

    by_edge: dict[tuple[int, int], list[int]] = {}
    for idx, edge_set in enumerate(copies):
        for e in edge_set:
            by_edge.setdefault(e, []).append(idx)
    adjacency: list[set[int]] = [set() for _ in copies]
    for group in by_edge.values():
        for i, j in itertools.combinations(group, 2):
            adjacency[i].add(j)
            adjacency[j].add(i)

    if s == 2 or s == 3 or connected_only:
        # For s <= 3, minimum degree >= 1 on s vertices forces connectivity.
        return _connected_subset_count(adjacency, s)

    connected4 = _connected_subset_count(adjacency, 4)
    # Remaining min-degree >= 1 shapes on 4 vertices: an induced perfect
    # matching (two disjoint intersection edges, nothing between them).
    edges = [(i, j) for i in range(len(copies)) for j in adjacency[i] if j > i]
    if len(edges) ** 2 > 40_000_000:
        raise ResourceBudgetError("intersection graph too dense for s = 4")
    matchings = 0
    for (a, b), (c, d) in itertools.combinations(edges, 2):
        if len({a, b, c, d}) < 4:
            continue
        if (
            c not in adjacency[a]
            and d not in adjacency[a]
            and c not in adjacency[b]
            and d not in adjacency[b]
        ):
            matchings += 1
    return connected4 + matchings
