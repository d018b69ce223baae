"""Graph representations and elementary predicates.

Two graph types live here.  ``PatternGraph`` is a small fixed motif (the
graph whose copies get counted); it is capped at 12 vertices so that exact
automorphism and fractional-independence enumerations stay cheap.
``HostGraph`` is the graph being counted over; adjacency is stored as bitset
rows (Python ints) up to ``BITSET_LIMIT`` vertices and as sorted neighbor
sets above that, behind one interface.  Both types are immutable after
construction and safe to share across threads.

Vertices are dense 0-based integers.  File loaders re-index arbitrary labels
and return the mapping.
"""

from __future__ import annotations

import itertools
from collections import deque
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import ValidationError

# Above this size, host adjacency switches from bitset rows to neighbor sets.
BITSET_LIMIT = 10_000

# Exact automorphism / fractional-independence enumeration cap.
PATTERN_VERTEX_CAP = 12


def _normalize_edges(vertex_count: int, edges: Iterable[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    out = set()
    for u, v in edges:
        u, v = int(u), int(v)  # numpy ints would overflow bitset shifts
        if not (0 <= u < vertex_count and 0 <= v < vertex_count):
            raise ValidationError(f"edge ({u},{v}) out of range for {vertex_count} vertices")
        if u == v:
            raise ValidationError(f"self-loop at vertex {u}")
        e = (u, v) if u < v else (v, u)
        out.add(e)
    return frozenset(out)


class PatternGraph:
    """A small motif: labeled vertices 0..v-1 plus an undirected edge set."""

    __slots__ = ("vertex_count", "edges", "_degrees", "_adj_masks")

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int]]):
        if vertex_count < 1:
            raise ValidationError("pattern needs at least one vertex")
        self.vertex_count = int(vertex_count)
        self.edges = _normalize_edges(self.vertex_count, edges)
        deg = [0] * self.vertex_count
        masks = [0] * self.vertex_count
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
            masks[u] |= 1 << v
            masks[v] |= 1 << u
        self._degrees = tuple(deg)
        self._adj_masks = tuple(masks)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return self._degrees[v]

    def degrees(self) -> tuple[int, ...]:
        return self._degrees

    def adjacency_mask(self, v: int) -> int:
        return self._adj_masks[v]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges or (v, u) in self.edges

    def neighbors(self, v: int) -> list[int]:
        m = self._adj_masks[v]
        return [i for i in range(self.vertex_count) if (m >> i) & 1]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PatternGraph)
            and self.vertex_count == other.vertex_count
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.vertex_count, self.edges))

    def __repr__(self) -> str:
        return f"PatternGraph(v={self.vertex_count}, e={sorted(self.edges)})"


class HostGraph:
    """An n-vertex graph with O(1) adjacency tests and per-vertex degrees."""

    __slots__ = ("vertex_count", "_rows", "_adj", "_edge_count")

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int]] = ()):
        if vertex_count < 1:
            raise ValidationError("host graph needs at least one vertex")
        self.vertex_count = int(vertex_count)
        norm = _normalize_edges(self.vertex_count, edges)
        self._edge_count = len(norm)
        if self.vertex_count <= BITSET_LIMIT:
            rows = [0] * self.vertex_count
            for u, v in norm:
                rows[u] |= 1 << v
                rows[v] |= 1 << u
            self._rows = rows
            self._adj = None
        else:
            adj: list[set[int]] = [set() for _ in range(self.vertex_count)]
            for u, v in norm:
                adj[u].add(v)
                adj[v].add(u)
            self._rows = None
            self._adj = adj

    @classmethod
    def empty(cls, n: int) -> "HostGraph":
        return cls(n, ())

    @classmethod
    def complete(cls, n: int) -> "HostGraph":
        return cls(n, itertools.combinations(range(n), 2))

    @classmethod
    def from_pattern(cls, pattern: PatternGraph) -> "HostGraph":
        return cls(pattern.vertex_count, pattern.edges)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    @property
    def uses_bitsets(self) -> bool:
        return self._rows is not None

    def degree(self, v: int) -> int:
        if self._rows is not None:
            return self._rows[v].bit_count()
        return len(self._adj[v])

    def degrees(self) -> list[int]:
        if self._rows is not None:
            return [r.bit_count() for r in self._rows]
        return [len(s) for s in self._adj]

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        if self._rows is not None:
            return (self._rows[u] >> v) & 1 == 1
        return v in self._adj[u]

    def neighbors_mask(self, v: int) -> int:
        """Bitset of neighbors (available in bitset mode only)."""
        if self._rows is None:
            raise ValidationError("neighbors_mask unavailable above the bitset limit")
        return self._rows[v]

    def neighbors(self, v: int) -> list[int]:
        if self._rows is not None:
            return _bits(self._rows[v])
        return sorted(self._adj[v])

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for u in range(self.vertex_count):
            for v in self.neighbors(u):
                if v > u:
                    out.append((u, v))
        return out

    def without_edges(self, removed: Iterable[tuple[int, int]]) -> "HostGraph":
        gone = {(min(e), max(e)) for e in removed}
        kept = [e for e in self.edges() if e not in gone]
        return HostGraph(self.vertex_count, kept)

    def subgraph_on(self, keep: Iterable[int]) -> "HostGraph":
        """Same vertex set, only edges with both endpoints in ``keep``."""
        keep_set = set(keep)
        kept = [(u, v) for u, v in self.edges() if u in keep_set and v in keep_set]
        return HostGraph(self.vertex_count, kept)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HostGraph)
            and self.vertex_count == other.vertex_count
            and set(self.edges()) == set(other.edges())
        )

    def __repr__(self) -> str:
        return f"HostGraph(n={self.vertex_count}, e={self._edge_count})"


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def validate_vertex_set(graph, vertices: Sequence[int]) -> tuple[int, ...]:
    """Check indices are in range and distinct; returns them as a tuple."""
    seen = set()
    for v in vertices:
        if not 0 <= v < graph.vertex_count:
            raise ValidationError(f"vertex {v} out of range")
        if v in seen:
            raise ValidationError(f"duplicate vertex {v}")
        seen.add(v)
    return tuple(vertices)


# ---------------------------------------------------------------------------
# Elementary predicates and derived pattern metadata
# ---------------------------------------------------------------------------

def max_degree(pattern: PatternGraph) -> int:
    """Maximum vertex degree of a pattern with at least one edge."""
    if pattern.edge_count == 0:
        raise ValidationError("no edges")
    return max(pattern.degrees())


def is_regular(pattern: PatternGraph) -> bool:
    degs = pattern.degrees()
    return min(degs) == max(degs)


def star_arms(pattern: PatternGraph) -> Optional[int]:
    """r if the pattern is the r-armed star with r >= 2, else None."""
    n = pattern.vertex_count
    if n < 3 or pattern.edge_count != n - 1:
        return None
    degs = sorted(pattern.degrees())
    if degs[-1] == n - 1 and all(d == 1 for d in degs[:-1]):
        return n - 1
    return None


def is_connected(graph) -> bool:
    """Breadth-first reachability from vertex 0 (works for both graph kinds)."""
    n = graph.vertex_count
    if n == 1:
        return True
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in graph.neighbors(u):
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


def is_bipartite_with_parts(graph) -> Optional[tuple[tuple[int, ...], tuple[int, ...]]]:
    """A 2-coloring (part0, part1) covering all vertices, or None.

    Isolated vertices land in part0.
    """
    n = graph.vertex_count
    color = [-1] * n
    for start in range(n):
        if color[start] != -1:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in graph.neighbors(u):
                if color[v] == -1:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    return None
    part0 = tuple(v for v in range(n) if color[v] == 0)
    part1 = tuple(v for v in range(n) if color[v] == 1)
    return part0, part1


def automorphism_count(pattern: PatternGraph) -> int:
    """|Aut(H)| by backtracking over adjacency-preserving bijections.

    Candidates are pruned by degree; patterns are capped at
    ``PATTERN_VERTEX_CAP`` vertices.
    """
    n = pattern.vertex_count
    if n > PATTERN_VERTEX_CAP:
        raise ValidationError("pattern too large")
    degs = pattern.degrees()
    masks = pattern._adj_masks
    # Map vertices in decreasing-degree order so mismatches surface early.
    order = sorted(range(n), key=lambda v: -degs[v])
    image = [-1] * n
    used = 0
    count = 0

    def extend(pos: int) -> None:
        nonlocal used, count
        if pos == n:
            count += 1
            return
        u = order[pos]
        for w in range(n):
            if (used >> w) & 1 or degs[w] != degs[u]:
                continue
            ok = True
            for q in range(pos):
                a = order[q]
                if ((masks[u] >> a) & 1) != ((masks[w] >> image[a]) & 1):
                    ok = False
                    break
            if ok:
                image[u] = w
                used |= 1 << w
                extend(pos + 1)
                used ^= 1 << w
        image[u] = -1

    extend(0)
    return count


def is_strictly_balanced(pattern: PatternGraph) -> bool:
    """True iff e(H[S])/|S| < e_H/v_H for every proper S with an edge.

    Density maxima over subgraphs are attained at induced subgraphs, so
    checking vertex subsets suffices.  Requires a connected pattern.
    """
    if pattern.edge_count == 0:
        raise ValidationError("no edges")
    if not is_connected(pattern):
        raise ValidationError("strict balancedness is defined for connected patterns")
    n = pattern.vertex_count
    target = Fraction(pattern.edge_count, n)
    edge_list = pattern.sorted_edges()
    for size in range(2, n):
        for subset in itertools.combinations(range(n), size):
            inside = set(subset)
            e_in = sum(1 for u, v in edge_list if u in inside and v in inside)
            if e_in >= 1 and Fraction(e_in, size) >= target:
                return False
    return True


def induced_subgraph(graph, vertices: Sequence[int]):
    """Induced subgraph relabeled to 0..|S|-1; returns (graph, mapping).

    ``mapping[i]`` is the original index of new vertex ``i``.  The result has
    the same kind as the input.
    """
    verts = validate_vertex_set(graph, vertices)
    index = {v: i for i, v in enumerate(verts)}
    edges = []
    for i, u in enumerate(verts):
        for j in range(i + 1, len(verts)):
            if graph.has_edge(u, verts[j]):
                edges.append((i, index[verts[j]]))
    if isinstance(graph, PatternGraph):
        return PatternGraph(len(verts), edges), verts
    return HostGraph(len(verts), edges), verts


def cross_subgraph(graph: HostGraph, part_u: Sequence[int], part_v: Sequence[int]) -> HostGraph:
    """Subgraph on the same vertex set keeping only U-V crossing edges."""
    set_u = set(validate_vertex_set(graph, part_u))
    set_v = set(validate_vertex_set(graph, part_v))
    if set_u & set_v:
        raise ValidationError("U and V overlap")
    edges = [
        (a, b)
        for a, b in graph.edges()
        if (a in set_u and b in set_v) or (a in set_v and b in set_u)
    ]
    return HostGraph(graph.vertex_count, edges)


def cross_edge_count(graph: HostGraph, part_u: Sequence[int], part_v: Sequence[int]) -> int:
    return cross_subgraph(graph, part_u, part_v).edge_count


# ---------------------------------------------------------------------------
# Standard small patterns and the shorthand / file loaders
# ---------------------------------------------------------------------------

def star(r: int) -> PatternGraph:
    """K_{1,r}: vertex 0 is the center."""
    if r < 1:
        raise ValidationError("star needs at least one arm")
    return PatternGraph(r + 1, [(0, i) for i in range(1, r + 1)])


def path(k: int) -> PatternGraph:
    """P_k on k vertices."""
    if k < 1:
        raise ValidationError("path needs at least one vertex")
    return PatternGraph(k, [(i, i + 1) for i in range(k - 1)])


def cycle(k: int) -> PatternGraph:
    if k < 3:
        raise ValidationError("cycle needs at least three vertices")
    return PatternGraph(k, [(i, (i + 1) % k) for i in range(k)])


def clique(k: int) -> PatternGraph:
    if k < 1:
        raise ValidationError("clique needs at least one vertex")
    return PatternGraph(k, itertools.combinations(range(k), 2))


def biclique(a: int, b: int) -> PatternGraph:
    if a < 1 or b < 1:
        raise ValidationError("biclique parts must be nonempty")
    return PatternGraph(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def pattern_from_shorthand(spec: str) -> PatternGraph:
    """Parse ``star:r``, ``path:k``, ``cycle:k``, ``clique:k``,
    ``biclique:a,b``, or ``file:<path>``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "star":
            return star(int(arg))
        if kind == "path":
            return path(int(arg))
        if kind == "cycle":
            return cycle(int(arg))
        if kind == "clique":
            return clique(int(arg))
        if kind == "biclique":
            a, b = arg.split(",")
            return biclique(int(a), int(b))
        if kind == "file":
            host, _ = load_edge_list(arg)
            return PatternGraph(host.vertex_count, host.edges())
    except ValidationError:
        raise
    except (ValueError, OSError) as exc:
        raise ValidationError(f"bad pattern spec {spec!r}: {exc}") from None
    raise ValidationError(f"unknown pattern kind {kind!r}")


def load_edge_list(path_name: str):
    """Load the edge-list text format.

    First line ``n <N>``, then one ``u v`` pair per line; ``#`` starts a
    comment.  Labels outside 0..N-1 (or non-numeric labels) are re-indexed in
    order of first appearance.  Returns ``(HostGraph, mapping)`` where
    ``mapping`` maps original label to assigned index.
    """
    with open(path_name, "r", encoding="utf-8") as handle:
        lines = handle.readlines()
    n = None
    raw_edges: list[tuple[str, str]] = []
    for line in lines:
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise ValidationError("edge-list file must start with 'n <N>'")
            n = int(parts[1])
            if n < 1:
                raise ValidationError("vertex count must be positive")
            continue
        if len(parts) != 2:
            raise ValidationError(f"bad edge line: {text!r}")
        raw_edges.append((parts[0], parts[1]))
    if n is None:
        raise ValidationError("empty edge-list file")

    def dense(tok: str) -> Optional[int]:
        try:
            value = int(tok)
        except ValueError:
            return None
        return value if 0 <= value < n else None

    if all(dense(a) is not None and dense(b) is not None for a, b in raw_edges):
        mapping = {str(i): i for i in range(n)}
        edges = [(int(a), int(b)) for a, b in raw_edges]
    else:
        mapping = {}
        for a, b in raw_edges:
            for tok in (a, b):
                if tok not in mapping:
                    if len(mapping) == n:
                        raise ValidationError("more labels than declared vertices")
                    mapping[tok] = len(mapping)
        edges = [(mapping[a], mapping[b]) for a, b in raw_edges]
    return HostGraph(n, edges), mapping
