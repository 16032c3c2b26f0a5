"""Connected trivalent Feynman graphs with leaves: enumeration, canonical forms and |Aut|.

A graph is stored at the vertex level (leaves per vertex, self-loops per vertex, edge
multiplicities) in canonical vertex order; the dart layout used for evaluation is
derived from that order.
"""

import math
from collections import Counter
from collections.abc import Iterator
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Literal

import networkx as nx

from .config import check_caps
from .exceptions import ValidationError

MarkKind = Literal["leaf", "edge"]


@dataclass(frozen=True)
class Mark:
    """A marked leaf at ``vertices[0]`` or a marked internal edge between ``vertices``."""

    kind: MarkKind
    vertices: tuple[int, ...]


@dataclass(frozen=True)
class DartLayout:
    """Darts 3u, 3u+1, 3u+2 belong to vertex u; dart 3V + i is leaf i."""

    vertex_count: int
    leaf_count: int
    partner: tuple[int, ...]
    marked_darts: tuple[int, ...] = ()

    def vertex_darts(self, u: int) -> tuple[int, int, int]:
        return (3 * u, 3 * u + 1, 3 * u + 2)

    def leaf_dart(self, i: int) -> int:
        return 3 * self.vertex_count + i

    def owner(self, dart: int) -> int:
        """Vertex index of a vertex dart, or -1 - i for leaf i."""
        if dart < 3 * self.vertex_count:
            return dart // 3
        return -1 - (dart - 3 * self.vertex_count)

    def internal_edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a, b in enumerate(self.partner) if a < b and b < 3 * self.vertex_count]

    def leaf_edges(self) -> list[tuple[int, int]]:
        """(vertex dart, leaf dart) pairs in leaf order."""
        return [(self.partner[self.leaf_dart(i)], self.leaf_dart(i)) for i in range(self.leaf_count)]


@dataclass(frozen=True)
class FeynmanGraph:
    vertex_leaves: tuple[int, ...]
    self_loops: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]
    mark: Mark | None = None

    @property
    def vertex_count(self) -> int:
        return len(self.vertex_leaves)

    @property
    def leaf_count(self) -> int:
        return sum(self.vertex_leaves)

    @property
    def edge_count(self) -> int:
        """Number of internal edges."""
        return sum(self.self_loops) + sum(m for _, _, m in self.edges)

    @property
    def loops(self) -> int:
        return self.edge_count - self.vertex_count + 1

    @property
    def has_tadpole(self) -> bool:
        return any(self.self_loops)

    @cached_property
    def encoding(self) -> str:
        parts = [f"{c}.{s}" for c, s in zip(self.vertex_leaves, self.self_loops, strict=True)]
        text = ",".join(parts) + "|" + ",".join(f"{u}-{v}x{m}" for u, v, m in self.edges)
        if self.mark is not None:
            text += f"|{self.mark.kind[0].upper()}" + "-".join(str(u) for u in self.mark.vertices)
        return text

    @cached_property
    def layout(self) -> DartLayout:
        V = self.vertex_count
        partner = [-1] * (3 * V + self.leaf_count)
        free = [3 * u for u in range(V)]
        marked: tuple[int, ...] = ()

        def take(u: int) -> int:
            dart = free[u]
            free[u] += 1
            return dart

        leaf = 0
        for u in range(V):
            for _ in range(self.vertex_leaves[u]):
                a, b = take(u), 3 * V + leaf
                partner[a], partner[b] = b, a
                if self.mark == Mark("leaf", (u,)) and not marked:
                    marked = (a, b)
                leaf += 1
            for _ in range(self.self_loops[u]):
                a, b = take(u), take(u)
                partner[a], partner[b] = b, a
                if self.mark == Mark("edge", (u, u)) and not marked:
                    marked = (a, b)
        for u, v, m in self.edges:
            for _ in range(m):
                a, b = take(u), take(v)
                partner[a], partner[b] = b, a
                if self.mark == Mark("edge", (u, v)) and not marked:
                    marked = (a, b)
        return DartLayout(V, self.leaf_count, tuple(partner), marked)


# ---------------------------------------------------------------------------
# canonical form


@dataclass
class _RawGraph:
    leaves: list[int]
    loops: list[int]
    edges: Counter
    mark: Mark | None = None

    def labels(self) -> list[tuple[int, int, int, int]]:
        out = []
        for u in range(len(self.leaves)):
            marked_leaf = int(self.mark == Mark("leaf", (u,)))
            marked_loop = int(self.mark == Mark("edge", (u, u)))
            out.append((self.leaves[u] - marked_leaf, marked_leaf, self.loops[u] - marked_loop, marked_loop))
        return out

    def adjacency(self) -> list[dict[int, tuple[int, int]]]:
        adj: list[dict[int, tuple[int, int]]] = [{} for _ in self.leaves]
        for (u, v), m in self.edges.items():
            if not m:
                continue
            marked = int(self.mark is not None and self.mark.kind == "edge" and self.mark.vertices == (u, v))
            adj[u][v] = adj[v][u] = (m - marked, marked)
        return adj


def _rank(values: list) -> list[int]:
    order = {v: i for i, v in enumerate(sorted(set(values)))}
    return [order[v] for v in values]


def _refine(colors: list, adj: list[dict[int, tuple[int, int]]]) -> list[int]:
    colors = _rank(colors)
    while True:
        signature = [(colors[u], tuple(sorted((colors[w], m) for w, m in adj[u].items()))) for u in range(len(colors))]
        refined = _rank(signature)
        if len(set(refined)) == len(set(colors)):
            return refined
        colors = refined


def _canonical_search(raw: _RawGraph) -> tuple[tuple, list[int], int]:
    """Minimal encoding over refined vertex orderings, one optimal ordering and the count of optimal ones."""
    labels = raw.labels()
    adj = raw.adjacency()
    V = len(labels)
    best: list = [None, None, 0]

    def encode(order: list[int]) -> tuple:
        rows = tuple(labels[u] for u in order)
        cells = tuple(adj[order[i]].get(order[j], (0, 0)) for i in range(V) for j in range(i + 1, V))
        return rows, cells

    def visit(colors: list) -> None:
        refined = _refine(colors, adj)
        counts = Counter(refined)
        if len(counts) == V:
            order = sorted(range(V), key=refined.__getitem__)
            code = encode(order)
            if best[0] is None or code < best[0]:
                best[:] = [code, order, 1]
            elif code == best[0]:
                best[2] += 1
            return
        target = min(c for c, k in counts.items() if k > 1)
        for v in (u for u in range(V) if refined[u] == target):
            visit([(c, 0 if u == v else 1) for u, c in enumerate(refined)])

    if V:
        visit(labels)
    else:
        best[:] = [((), ()), [], 1]
    return best[0], best[1], best[2]


def _kernel_order(raw: _RawGraph) -> int:
    """Dart automorphisms fixing every vertex: permutations of leaves, parallel edges and loop flips."""
    total = 1
    for c, _, s, marked_loop in raw.labels():
        total *= math.factorial(c) * math.factorial(s) * 2**s * 2**marked_loop
    for u, adj in enumerate(raw.adjacency()):
        for w, (m, _) in adj.items():
            if u < w:
                total *= math.factorial(m)
    return total


def _canonicalize(raw: _RawGraph) -> tuple[FeynmanGraph, int]:
    _, order, vertex_aut = _canonical_search(raw)
    position = {u: i for i, u in enumerate(order)}
    leaves = tuple(raw.leaves[u] for u in order)
    loops = tuple(raw.loops[u] for u in order)
    edges = []
    for (u, v), m in raw.edges.items():
        if m:
            a, b = sorted((position[u], position[v]))
            edges.append((a, b, m))
    mark = None
    if raw.mark is not None:
        mark = Mark(raw.mark.kind, tuple(sorted(position[u] for u in raw.mark.vertices)))
    graph = FeynmanGraph(leaves, loops, tuple(sorted(edges)), mark)
    return graph, vertex_aut * _kernel_order(raw)


def _raw(graph: FeynmanGraph) -> _RawGraph:
    edges = Counter({(u, v): m for u, v, m in graph.edges})
    return _RawGraph(list(graph.vertex_leaves), list(graph.self_loops), edges, graph.mark)


def canonical_form(graph: FeynmanGraph) -> FeynmanGraph:
    return _canonicalize(_raw(graph))[0]


def automorphism_order(graph: FeynmanGraph) -> int:
    return _canonicalize(_raw(graph))[1]


def relabel(graph: FeynmanGraph, permutation: list[int]) -> FeynmanGraph:
    """The same graph with vertex u renamed to ``permutation[u]`` (not canonical)."""
    V = graph.vertex_count
    leaves = [0] * V
    loops = [0] * V
    for u in range(V):
        leaves[permutation[u]] = graph.vertex_leaves[u]
        loops[permutation[u]] = graph.self_loops[u]
    edges = tuple(
        (*sorted((permutation[u], permutation[v])), m) for u, v, m in graph.edges
    )
    mark = None
    if graph.mark is not None:
        mark = Mark(graph.mark.kind, tuple(sorted(permutation[u] for u in graph.mark.vertices)))
    return FeynmanGraph(tuple(leaves), tuple(loops), edges, mark)  # type: ignore[arg-type]


def from_matching(vertex_count: int, leaf_count: int, partner: list[int] | tuple[int, ...]) -> FeynmanGraph:
    """Vertex-level graph of a dart matching in the ``DartLayout`` numbering (not canonical)."""
    V = vertex_count
    if len(partner) != 3 * V + leaf_count:
        raise ValidationError(f"Matching has {len(partner)} darts, expected {3 * V + leaf_count}")
    leaves = [0] * V
    loops = [0] * V
    edges: Counter = Counter()
    for a, b in enumerate(partner):
        if partner[b] != a or a == b:
            raise ValidationError(f"Dart pairing is not a fixed-point-free involution at dart {a}")
        if a > b:
            continue
        if b >= 3 * V:
            if a >= 3 * V:
                raise ValidationError("Two leaves joined directly")
            leaves[a // 3] += 1
        elif a // 3 == b // 3:
            loops[a // 3] += 1
        else:
            edges[(a // 3, b // 3)] += 1
    return FeynmanGraph(tuple(leaves), tuple(loops), tuple((u, v, m) for (u, v), m in sorted(edges.items())))


def to_networkx(graph: FeynmanGraph) -> nx.MultiGraph:
    """Multigraph with ``kind`` node attributes ('vertex' or 'leaf') and a ``marked`` edge attribute."""
    G = nx.MultiGraph()
    layout = graph.layout
    for u in range(graph.vertex_count):
        G.add_node(("v", u), kind="vertex")
    for i in range(graph.leaf_count):
        G.add_node(("l", i), kind="leaf")
    marked = set(layout.marked_darts)
    for a, b in enumerate(layout.partner):
        if a < b:
            ends = [("v", layout.owner(d)) if layout.owner(d) >= 0 else ("l", -1 - layout.owner(d)) for d in (a, b)]
            G.add_edge(*ends, marked=a in marked)
    return G


def is_connected(graph: FeynmanGraph) -> bool:
    if graph.vertex_count == 0:
        return False
    G = nx.MultiGraph()
    G.add_nodes_from(range(graph.vertex_count))
    G.add_edges_from((u, v) for u, v, _ in graph.edges)
    return nx.is_connected(G)


# ---------------------------------------------------------------------------
# enumeration


def vertex_count_for(loops: int, leaves: int) -> int | None:
    """Number of trivalent vertices of a connected (l, n) graph, or None if there is none."""
    if loops == 0:
        return leaves - 2 if leaves >= 3 else None
    V = 2 * (loops - 1) + leaves
    return V if V >= 1 else None


def _configurations(V: int, n: int, tadpoles: bool) -> Iterator[_RawGraph]:
    rem = [3] * V
    leaves = [0] * V
    loops = [0] * V
    edges: Counter = Counter()

    def walk(leaves_left: int) -> Iterator[_RawGraph]:
        u = next((x for x in range(V) if rem[x]), None)
        if u is None:
            if not leaves_left:
                yield _RawGraph(list(leaves), list(loops), Counter(edges))
            return
        if leaves_left:
            leaves[u] += 1
            rem[u] -= 1
            yield from walk(leaves_left - 1)
            leaves[u] -= 1
            rem[u] += 1
        if tadpoles and rem[u] >= 2:
            loops[u] += 1
            rem[u] -= 2
            yield from walk(leaves_left)
            loops[u] -= 1
            rem[u] += 2
        fresh_seen = False
        for w in range(u + 1, V):
            if not rem[w]:
                continue
            if rem[w] == 3:
                if fresh_seen:
                    continue
                fresh_seen = True
            edges[(u, w)] += 1
            rem[u] -= 1
            rem[w] -= 1
            yield from walk(leaves_left)
            edges[(u, w)] -= 1
            rem[u] += 1
            rem[w] += 1

    yield from walk(n)


def enumerate_graphs(loops: int, leaves: int, include_tadpoles: bool = False) -> list[tuple[FeynmanGraph, int]]:
    """One representative per isomorphism class with |Aut|, sorted by encoding."""
    check_caps(loops, leaves)
    return graph_classes(loops, leaves, include_tadpoles)


def graph_classes(loops: int, leaves: int, include_tadpoles: bool = False) -> list[tuple[FeynmanGraph, int]]:
    """enumerate_graphs without the cap check, for orders derived from already checked caps."""
    V = vertex_count_for(loops, leaves)
    if V is None:
        return []
    classes: dict[str, tuple[FeynmanGraph, int]] = {}
    for raw in _configurations(V, leaves, include_tadpoles):
        raw.edges = Counter({k: m for k, m in raw.edges.items() if m})
        graph, aut = _canonicalize(raw)
        if graph.encoding in classes or not is_connected(graph):
            continue
        classes[graph.encoding] = (graph, aut)
    return [classes[key] for key in sorted(classes)]


def mark_candidates(graph: FeynmanGraph, kind: MarkKind) -> list[FeynmanGraph]:
    """The graph with one leaf (or one internal edge) marked, one entry per vertex or vertex pair."""
    out = []
    if kind == "leaf":
        for u, c in enumerate(graph.vertex_leaves):
            if c:
                out.append(FeynmanGraph(graph.vertex_leaves, graph.self_loops, graph.edges, Mark("leaf", (u,))))
        return out
    for u, s in enumerate(graph.self_loops):
        if s:
            out.append(FeynmanGraph(graph.vertex_leaves, graph.self_loops, graph.edges, Mark("edge", (u, u))))
    for u, v, _ in graph.edges:
        out.append(FeynmanGraph(graph.vertex_leaves, graph.self_loops, graph.edges, Mark("edge", (u, v))))
    return out


def enumerate_marked_graphs(
    loops: int,
    leaves: int,
    kind: MarkKind | None = None,
    include_tadpoles: bool = False,
) -> list[tuple[FeynmanGraph, int]]:
    """Graphs with one leaf or one internal edge marked, mark orbits deduplicated; |Aut| of the marked graph."""
    kinds: tuple[MarkKind, ...] = (kind,) if kind else ("leaf", "edge")
    classes: dict[str, tuple[FeynmanGraph, int]] = {}
    for graph, _ in enumerate_graphs(loops, leaves, include_tadpoles):
        for k in kinds:
            for candidate in mark_candidates(graph, k):
                marked, aut = _canonicalize(_raw(candidate))
                classes.setdefault(marked.encoding, (marked, aut))
    return [classes[key] for key in sorted(classes)]


# ---------------------------------------------------------------------------
# labeled counts


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def _all_matchings(V: int, n: int) -> int:
    """Labeled dart matchings of V vertices and n leaves with no leaf joined to a leaf."""
    free = 3 * V - n
    if free < 0 or free % 2:
        return 0
    return math.perm(3 * V, n) * _double_factorial(free - 1)


def _connected_counts(max_vertices: int, max_leaves: int) -> dict[tuple[int, int], int]:
    """Connected labeled counts from the logarithm of the exponential generating function."""
    series = {
        (V, n): Fraction(_all_matchings(V, n), math.factorial(V) * math.factorial(n))
        for V in range(max_vertices + 1)
        for n in range(max_leaves + 1)
        if (V, n) != (0, 0)
    }
    series = {k: v for k, v in series.items() if v}

    def mul(a: dict, b: dict) -> dict:
        out: dict[tuple[int, int], Fraction] = {}
        for (v1, n1), x in a.items():
            for (v2, n2), y in b.items():
                key = (v1 + v2, n1 + n2)
                if key[0] <= max_vertices and key[1] <= max_leaves:
                    out[key] = out.get(key, Fraction(0)) + x * y
        return out

    log: dict[tuple[int, int], Fraction] = {}
    power = dict(series)
    for k in range(1, max_vertices + max_leaves + 1):
        for key, value in power.items():
            log[key] = log.get(key, Fraction(0)) + Fraction((-1) ** (k + 1), k) * value
        power = mul(power, series)
        if not power:
            break
    return {
        key: int(value * math.factorial(key[0]) * math.factorial(key[1])) for key, value in log.items() if value
    }


def labeled_matching_count(loops: int, leaves: int) -> int:
    """Dart matchings of labeled vertices and leaves that give connected (l, n) graphs, tadpoles included."""
    V = vertex_count_for(loops, leaves)
    if V is None:
        return 0
    return _connected_counts(V, leaves).get((V, leaves), 0)


def count_matchings_exhaustively(loops: int, leaves: int, max_darts: int = 14) -> int:
    """Brute-force version of ``labeled_matching_count`` for small graphs."""
    V = vertex_count_for(loops, leaves)
    if V is None:
        return 0
    darts = 3 * V + leaves
    if darts > max_darts:
        raise ValidationError(f"{darts} darts is beyond exhaustive reach (max {max_darts})")
    partner = [-1] * darts
    count = 0

    def walk() -> None:
        nonlocal count
        a = next((d for d in range(darts) if partner[d] < 0), None)
        if a is None:
            if is_connected(from_matching(V, leaves, partner)):
                count += 1
            return
        for b in range(a + 1, darts):
            if partner[b] >= 0 or (a >= 3 * V and b >= 3 * V):
                continue
            partner[a], partner[b] = b, a
            walk()
            partner[a] = partner[b] = -1

    walk()
    return count


def labeling_group_order(graph: FeynmanGraph) -> int:
    return math.factorial(graph.vertex_count) * 6**graph.vertex_count * math.factorial(graph.leaf_count)


def vacuum_weight_series(max_loops: int) -> dict[int, Fraction]:
    """Sum of 1/|Aut| over connected vacuum graphs (tadpoles included) for l = 2 .. max_loops."""
    check_caps(max_loops, 0)
    out = {}
    if max_loops < 2:
        return out
    max_vertices = 2 * (max_loops - 1)
    counts = _connected_counts(max_vertices, 0)
    for loops in range(2, max_loops + 1):
        V = 2 * (loops - 1)
        out[loops] = Fraction(counts.get((V, 0), 0), math.factorial(V) * 6**V)
    return out


def dump_lines(rows: list[tuple[FeynmanGraph, int]]) -> list[str]:
    """Graph dump lines ``l n V E encoding aut``."""
    return [
        f"{g.loops} {g.leaf_count} {g.vertex_count} {g.edge_count} {g.encoding} {aut}" for g, aut in rows
    ]
