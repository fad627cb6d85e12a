"""Action graphs of A*B stored as pairs of factor actions on a vertex set.

A graph on ``N`` vertices is two integer arrays: ``a_action[x]`` is the
permutation by which element ``x`` of A moves the vertices, likewise
``b_action`` for B.  Row 0 is always the identity.  Labelled edges are a
derived view: vertex ``p`` has one outgoing edge ``p -> a_action[x][p]``
labelled ``x`` for every nonidentity ``x``; walking an edge backwards applies
the inverse element.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .groups import Permutation, StructuralError, ValidationResult, Violation, cycle_lengths, orbit_labels
from .words import FACTORS, FreeProduct, Syllable, Word


@dataclass(frozen=True, eq=False)
class ActionGraph:
    product: FreeProduct
    a_action: np.ndarray = field(repr=False)
    b_action: np.ndarray = field(repr=False)
    vertex_names: tuple[str, ...] | None = None
    regions: np.ndarray | None = field(default=None, repr=False)
    markers: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        for tag, arr in (("A", self.a_action), ("B", self.b_action)):
            arr = np.array(arr, dtype=np.int64)
            order = self.product.factor(tag).order
            if arr.ndim != 2 or arr.shape[0] != order:
                raise StructuralError(f"factor {tag}: expected {order} rows of images, got shape {arr.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, f"{tag.lower()}_action", arr)
        if self.a_action.shape[1] != self.b_action.shape[1]:
            raise StructuralError("factor actions are on vertex sets of different sizes")
        if self.regions is not None:
            reg = np.array(self.regions, dtype=np.int64)
            reg.flags.writeable = False
            object.__setattr__(self, "regions", reg)

    @classmethod
    def from_maps(cls, product: FreeProduct, n: int, a_map: dict, b_map: dict, **extra) -> ActionGraph:
        """Build from ``{element: images}`` for every nonidentity element of each factor."""
        rows = {}
        for tag, mapping in (("A", a_map), ("B", b_map)):
            group = product.factor(tag)
            arr = np.tile(np.arange(n), (group.order, 1))
            for x in range(1, group.order):
                if x not in mapping:
                    raise StructuralError(f"factor {tag}: no permutation for element {x}")
                img = mapping[x].images if isinstance(mapping[x], Permutation) else mapping[x]
                if len(img) != n:
                    raise StructuralError(f"factor {tag}, element {x}: {len(img)} images for {n} vertices")
                arr[x] = img
            rows[tag] = arr
        return cls(product, rows["A"], rows["B"], **extra)

    @property
    def n_vertices(self) -> int:
        return self.a_action.shape[1]

    def action(self, tag: str) -> np.ndarray:
        return self.a_action if tag == "A" else self.b_action

    def apply(self, v: int, syllable: Syllable) -> int:
        tag, x = syllable
        return int(self.action(tag)[x, v])

    @cached_property
    def neighbors(self) -> list[list[int]]:
        """Distinct vertices one labelled edge away (either direction), loops dropped."""
        stacked = np.vstack([self.a_action[1:], self.b_action[1:]]).T
        out = []
        for v, row in enumerate(stacked.tolist()):
            out.append(sorted(set(row) - {v}))
        return out

    def factor_orbits(self, tag: str) -> np.ndarray:
        """Least vertex of each vertex's factor component (valid for group actions)."""
        return self.action(tag).min(axis=0)


# -- validation ---------------------------------------------------------------

def validate(g: ActionGraph, require_free: bool = False) -> ValidationResult:
    """Check that both factors act by homomorphisms with regular orbits.

    Stops at the first broken law; the violation names the factor, the
    element(s) and a witnessing vertex.  With ``require_free`` every
    nonidentity element must also move every vertex.
    """
    n = g.n_vertices
    ident = np.arange(n)
    for tag in FACTORS:
        group = g.product.factor(tag)
        act = g.action(tag)
        for x in range(group.order):
            row = act[x]
            if n and (row.min() < 0 or row.max() >= n):
                v = int(np.flatnonzero((row < 0) | (row >= n))[0])
                return _fail("permutation", f"{tag}: image of vertex {v} under {x} is out of range",
                             factor=tag, element=x, vertex=v, image=int(row[v]))
            counts = np.bincount(row, minlength=n)
            if (counts != 1).any():
                target = int(np.flatnonzero(counts > 1)[0])
                sources = [int(s) for s in np.flatnonzero(row == target)[:2]]
                return _fail("permutation", f"{tag}: element {x} sends {sources} to the same vertex {target}",
                             factor=tag, element=x, vertices=sources, image=target)
        if not np.array_equal(act[0], ident):
            v = int(np.flatnonzero(act[0] != ident)[0])
            return _fail("identity", f"{tag}: the identity moves vertex {v}", factor=tag, element=0, vertex=v)
        table = group.array
        for x in range(1, group.order):
            for y in range(1, group.order):
                # acting by x then y must equal acting by x*y
                lhs = act[y][act[x]]
                rhs = act[table[x, y]]
                if not np.array_equal(lhs, rhs):
                    v = int(np.flatnonzero(lhs != rhs)[0])
                    return _fail("homomorphism",
                                 f"{tag}: vertex {v} under {x} then {y} reaches {lhs[v]}, "
                                 f"but {x}*{y}={table[x, y]} sends it to {rhs[v]}",
                                 factor=tag, element=x, other=y, vertex=v)
        labels = g.factor_orbits(tag)
        sizes = np.bincount(labels, minlength=n)
        for x in range(1, group.order):
            fixed = act[x] == ident
            if require_free and fixed.any():
                v = int(np.flatnonzero(fixed)[0])
                return _fail("free", f"{tag}: element {x} fixes vertex {v}", factor=tag, element=x, vertex=v)
            per_orbit = np.bincount(labels, weights=fixed, minlength=n).astype(np.int64)
            bad = np.flatnonzero((per_orbit > 0) & (per_orbit < sizes))
            if len(bad):
                orbit = int(bad[0])
                members = labels == orbit
                fixed_v = int(np.flatnonzero(members & fixed)[0])
                moved_v = int(np.flatnonzero(members & ~fixed)[0])
                return _fail("regularity",
                             f"{tag}: element {x} fixes vertex {fixed_v} but moves {moved_v} in the same orbit",
                             factor=tag, element=x, orbit=orbit, fixed_vertex=fixed_v, moved_vertex=moved_v)
    return ValidationResult()


def _fail(law: str, message: str, **witness) -> ValidationResult:
    return ValidationResult((Violation(law, witness, message),))


# -- words acting on vertices -------------------------------------------------

def word_images(g: ActionGraph, w: Sequence[Syllable]) -> np.ndarray:
    images = np.arange(g.n_vertices)
    for tag, x in w:
        images = g.action(tag)[x][images]
    return images


def word_permutation(g: ActionGraph, w: Sequence[Syllable]) -> Permutation:
    return Permutation(word_images(g, w))


def act_word(g: ActionGraph, v: int, w: Sequence[Syllable]) -> int:
    for syllable in w:
        v = g.apply(v, syllable)
    return v


def image_order(g: ActionGraph, w: Sequence[Syllable]) -> int:
    lengths = np.unique(cycle_lengths(word_images(g, w)))
    return math.lcm(*lengths.tolist()) if len(lengths) else 1


class Step(NamedTuple):
    """Traversal of the edge labelled ``syllable`` at ``vertex``: forwards from it, or backwards into it."""

    vertex: int
    syllable: Syllable
    forward: bool = True


def path_label(g: ActionGraph, path: Sequence[Step]) -> Word:
    product = g.product
    label = []
    here = None
    for i, (v, (tag, x), forward) in enumerate(path):
        if here is not None and v != here:
            raise ValueError(f"step {i} starts at {v} but the previous step ended at {here}")
        if forward:
            label.append((tag, x))
            here = int(g.action(tag)[x, v])
        else:
            inv = product.factor(tag).inverse(x)
            label.append((tag, inv))
            here = int(g.action(tag)[inv, v])
    return product.reduce(label)


# -- distances ----------------------------------------------------------------

def bfs_distances(g: ActionGraph, source: int, max_depth: int | None = None) -> dict[int, int]:
    nbrs = g.neighbors
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        d = dist[v]
        if max_depth is not None and d >= max_depth:
            continue
        for w in nbrs[v]:
            if w not in dist:
                dist[w] = d + 1
                queue.append(w)
    return dist


def shortest_path(g: ActionGraph, p: int, q: int) -> list[int] | None:
    nbrs = g.neighbors
    parent = {p: None}
    queue = deque([p])
    while queue:
        v = queue.popleft()
        if v == q:
            path = []
            while v is not None:
                path.append(v)
                v = parent[v]
            return path[::-1]
        for w in nbrs[v]:
            if w not in parent:
                parent[w] = v
                queue.append(w)
    return None


def distance(g: ActionGraph, p: int, q: int) -> int | None:
    """Edge count of a shortest undirected path, or ``None`` when unreachable."""
    path = shortest_path(g, p, q)
    return None if path is None else len(path) - 1


# -- u-cycles -----------------------------------------------------------------

@dataclass(frozen=True)
class UCycleRecord:
    word: Word
    start: int
    edge_count: int
    vertices: tuple[int, ...] = field(repr=False)

    @property
    def length(self) -> int:
        return self.edge_count // len(self.word)


def _require_cyclic(g: ActionGraph, w: Sequence[Syllable]) -> Word:
    w = tuple(w)
    if len(w) < 2 or not g.product.is_cyclically_reduced(w):
        raise ValueError("u-cycles need a cyclically reduced word with at least two syllables")
    return w


def cycle_from(g: ActionGraph, w: Sequence[Syllable], start: int) -> UCycleRecord:
    w = _require_cyclic(g, w)
    verts = []
    v = start
    while True:
        for s in w:
            verts.append(v)
            v = g.apply(v, s)
        if v == start:
            break
    return UCycleRecord(w, start, len(verts), tuple(verts))


def enumerate_u_cycles(g: ActionGraph, w: Sequence[Syllable]) -> list[UCycleRecord]:
    """One record per orbit of the word's permutation, started at the orbit's least vertex."""
    w = _require_cyclic(g, w)
    labels = orbit_labels(word_images(g, w))
    starts = np.flatnonzero(labels == np.arange(g.n_vertices))
    return [cycle_from(g, w, int(s)) for s in starts]


def u_cycle_lengths(g: ActionGraph, w: Sequence[Syllable]) -> dict[int, int]:
    """Orbit start -> cycle length, without materialising the vertex sequences."""
    labels = orbit_labels(word_images(g, w))
    counts = np.bincount(labels, minlength=g.n_vertices)
    starts = np.flatnonzero(counts)
    return dict(zip(starts.tolist(), counts[starts].tolist()))


class NearVertices(NamedTuple):
    near: bool
    witness: dict | None = None


def has_l_near_vertices(g: ActionGraph, cycle: UCycleRecord, l: int) -> NearVertices:
    """Is some pair of cycle positions closer than ``min(l+1, |i-j|, n-|i-j|)``?"""
    verts = cycle.vertices
    n = len(verts)
    positions: dict[int, list[int]] = {}
    for i, v in enumerate(verts):
        positions.setdefault(v, []).append(i)
    balls: dict[int, dict[int, int]] = {}
    for i, v in enumerate(verts):
        if v not in balls:
            balls[v] = bfs_distances(g, v, max_depth=l)
        for u, d in balls[v].items():
            for j in positions.get(u, ()):
                if j <= i:
                    continue
                sep = j - i
                if d < min(l + 1, sep, n - sep):
                    path = shortest_path(g, v, u)
                    return NearVertices(True, {"positions": [i, j], "vertices": [v, u],
                                               "distance": d, "path": path})
    return NearVertices(False)


# -- girth --------------------------------------------------------------------

class GirthResult(NamedTuple):
    girth: int | None          # None means "greater than limit"
    witness: Word | None
    vertex: int | None
    limit: int


GIRTH_SEMANTICS = ("dead", "closing")


def syllable_girth(g: ActionGraph, limit: int, semantics: str = "dead") -> GirthResult:
    """Least syllable length ``<= limit`` of a nonunit reduced word the action kills.

    ``semantics="dead"`` counts words acting as the identity on every vertex.
    ``semantics="closing"`` counts words fixing at least one vertex; that
    girth is never larger, so passing it is the stronger certificate, and it
    also says the graph looks like a tree within that radius.  On
    vertex-transitive graphs (Cayley graphs) the two agree.
    """
    if semantics == "dead":
        return _dead_girth(g, limit)
    if semantics == "closing":
        return _closing_girth(g, limit)
    raise ValueError(f"unknown girth semantics {semantics!r}; expected one of {GIRTH_SEMANTICS}")


def _dead_girth(g: ActionGraph, limit: int) -> GirthResult:
    """Enumerate reduced words by length, carrying their images along."""
    n = g.n_vertices
    ident = np.arange(n)
    syllables = g.product.syllables()
    layer = [((), ident)]
    for length in range(1, limit + 1):
        nxt = []
        for word, img in layer:
            for s in syllables:
                if word and word[-1][0] == s[0]:
                    continue
                w_img = g.action(s[0])[s[1]][img]
                w = word + (s,)
                if np.array_equal(w_img, ident):
                    return GirthResult(length, w, None, limit)
                nxt.append((w, w_img))
        layer = nxt
    return GirthResult(None, None, None, limit)


def _closing_girth(g: ActionGraph, limit: int) -> GirthResult:
    """Length 1 means some nonidentity factor element fixes a vertex.  Otherwise
    the search is for a shortest cycle in the incidence multigraph whose nodes
    are factor components and whose edges are vertices; a cycle of ``2t``
    edges is a cyclically reduced closed word with ``2t`` syllables.
    """
    if limit < 1:
        return GirthResult(None, None, None, limit)
    ident = np.arange(g.n_vertices)
    for tag in FACTORS:
        act = g.action(tag)
        for x in range(1, act.shape[0]):
            fixed = np.flatnonzero(act[x] == ident)
            if len(fixed):
                return GirthResult(1, ((tag, x),), int(fixed[0]), limit)

    n = g.n_vertices
    _, a_node = np.unique(g.factor_orbits("A"), return_inverse=True)
    _, b_node = np.unique(g.factor_orbits("B"), return_inverse=True)
    n_a = int(a_node.max()) + 1 if n else 0
    b_node = b_node + n_a
    n_nodes = n_a + (int(b_node.max()) - n_a + 1 if n else 0)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_nodes)]
    for v, (x, y) in enumerate(zip(a_node.tolist(), b_node.tolist())):
        adj[x].append((v, y))
        adj[y].append((v, x))

    best_len = limit + 1
    best = None
    for root in range(n_nodes):
        dist = {root: 0}
        parent = {root: (None, None)}  # node -> (edge vertex, previous node)
        queue = deque([root])
        while queue:
            x = queue.popleft()
            if 2 * dist[x] >= best_len:
                break
            for v, y in adj[x]:
                if v == parent[x][0]:
                    continue
                if y not in dist:
                    dist[y] = dist[x] + 1
                    parent[y] = (v, x)
                    queue.append(y)
                else:
                    length = dist[x] + dist[y] + 1
                    if length < best_len:
                        best_len = length
                        best = (root, x, y, v, dict(parent))
    if best is None:
        return GirthResult(None, None, None, limit)

    root, x, y, v_close, parent = best

    def chain(node):
        nodes, edges = [node], []
        while parent[node][0] is not None:
            edge, node = parent[node]
            edges.append(edge)
            nodes.append(node)
        return nodes[::-1], edges[::-1]  # from root

    nx, ex = chain(x)
    ny, ey = chain(y)
    c = 0
    while c + 1 < len(nx) and c + 1 < len(ny) and nx[c + 1] == ny[c + 1] and ex[c] == ey[c]:
        c += 1
    # cycle: nx[c] -> ... -> x -(v_close)- y -> ... -> ny[c]
    edges = ex[c:] + [v_close] + ey[c:][::-1]
    nodes = nx[c:] + ny[c:][::-1][:-1]   # nodes[i] sits between edges[i-1] and edges[i]
    word = []
    k = len(edges)
    for i in range(k):
        src, dst = edges[i], edges[(i + 1) % k]
        node = nodes[(i + 1) % k]
        tag = "A" if node < n_a else "B"
        col = g.action(tag)[:, src]
        word.append((tag, int(np.flatnonzero(col == dst)[0])))
    word = tuple(word)
    if act_word(g, edges[0], word) != edges[0] or not g.product.is_cyclically_reduced(word):
        raise AssertionError("girth witness failed to close")
    # rotations and the inverse close up too; report the least of them
    inv = g.product.inverse(word)
    word = min(w[i:] + w[:i] for w in (word, inv) for i in range(k))
    start = int(np.flatnonzero(word_images(g, word) == np.arange(n))[0])
    return GirthResult(len(word), word, start, limit)


# -- export -------------------------------------------------------------------

def to_dot(g: ActionGraph, name: str = "G") -> str:
    """DOT text: one node per vertex, one labelled edge per (vertex, nonidentity element)."""
    product = g.product
    names = g.vertex_names or tuple(str(v) for v in range(g.n_vertices))
    highlighted = set()
    if g.markers:
        for verts in g.markers.values():
            highlighted.update(int(v) for v in np.atleast_1d(verts))
    lines = [f"digraph {_dot_id(name)} {{"]

    def node_line(v, indent):
        style = ' style=filled fillcolor="gold"' if v in highlighted else ""
        return f'{indent}v{v} [label="{names[v]}"{style}];'

    if g.regions is not None:
        for r in np.unique(g.regions).tolist():
            lines.append(f"  subgraph cluster_{r} {{")
            lines.append(f'    label="region {r}";')
            for v in np.flatnonzero(g.regions == r).tolist():
                lines.append(node_line(v, "    "))
            lines.append("  }")
    else:
        for v in range(g.n_vertices):
            lines.append(node_line(v, "  "))
    for tag in FACTORS:
        group = product.factor(tag)
        color = "blue" if tag == "A" else "red"
        act = g.action(tag)
        for v in range(g.n_vertices):
            for x in range(1, group.order):
                lines.append(f'  v{v} -> v{int(act[x, v])} [label="{group.name_of(x)}" color={color}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_id(name: str) -> str:
    return '"' + name.replace('"', r"\"") + '"'
