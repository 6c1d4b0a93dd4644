"""The marked k-gon and its reduction to a weighted graph.

Edge j of the k-gon runs from vertex j to vertex j+1 (mod k) and carries the
block of the partition that contains slot j. The reduction merges pair-marked
edges into weighted edges (each weight-w edge stands for a product of w
matrices built from the pair kernel) until only crossing pairs are left.
Blocks of size >= 3 are carried along untouched.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .partitions import Partition

Block = tuple[int, ...]


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int
    weight: int = 0
    mark: Block | None = None

    def to_dict(self) -> dict:
        return {"id": self.id, "tail": self.tail, "head": self.head,
                "weight": self.weight, "mark": list(self.mark) if self.mark else None}


@dataclass(frozen=True)
class PairingGraph:
    k: int
    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]
    marks: tuple[Block, ...]

    def as_weighted(self) -> "WeightedGraph":
        return WeightedGraph(self.k, self.edges, self.marks)


@dataclass(frozen=True)
class WeightedGraph:
    k: int
    edges: tuple[Edge, ...]
    remaining_marks: tuple[Block, ...]

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(e.tail for e in self.edges)

    @property
    def weights(self) -> tuple[int, ...]:
        return tuple(e.weight for e in self.edges)

    @property
    def remaining_pairs(self) -> tuple[Block, ...]:
        return tuple(b for b in self.remaining_marks if len(b) == 2)

    def total_weight(self) -> int:
        return sum(e.weight for e in self.edges)

    def is_single_loop(self) -> bool:
        return len(self.edges) == 1 and self.edges[0].tail == self.edges[0].head

    def edge_by_id(self, eid: int) -> Edge:
        for e in self.edges:
            if e.id == eid:
                return e
        raise KeyError(eid)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "vertices": list(self.vertices),
            "edges": [e.to_dict() for e in self.edges],
            "remaining_marks": [list(b) for b in self.remaining_marks],
        }


@dataclass(frozen=True)
class TraceStep:
    kind: str                    # "I", "II" or "III"
    consumed: tuple[int, ...]    # edge ids, in cyclic order
    removed: tuple[int, ...]     # vertex labels
    created: int                 # id of the new edge
    weight: int
    obj: str                     # "T", "product" or "T~"
    pair: Block | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "consumed": list(self.consumed), "removed": list(self.removed),
                "created": self.created, "weight": self.weight, "object": self.obj,
                "pair": list(self.pair) if self.pair else None}


@dataclass
class ReductionTrace:
    steps: list[TraceStep] = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def kinds(self) -> list[str]:
        return [s.kind for s in self.steps]

    def to_dict(self) -> dict:
        return {"steps": [s.to_dict() for s in self.steps]}


OBJECTS = {"I": "T", "II": "product", "III": "T~"}


def build_kgon(p: Partition) -> PairingGraph:
    k = p.k
    # first-traversal order of the blocks; equals sorting by smallest slot
    marks = tuple(sorted(p.blocks, key=min))
    edges = tuple(Edge(j, j, j % k + 1, 0, p.block_of(j)) for j in range(1, k + 1))
    return PairingGraph(k, tuple(range(1, k + 1)), edges, marks)


def _next_id(g: WeightedGraph, trace: ReductionTrace | None = None) -> int:
    used = [e.id for e in g.edges] + [g.k]
    if trace is not None:
        used += [s.created for s in trace.steps]
    return max(used) + 1


def _merge_run(edges: tuple[Edge, ...], start: int, count: int, new_id: int, weight: int):
    """Replace `count` cyclically consecutive edges from `start` by one weighted edge.
    Returns the new edge tuple and the labels of the removed inner vertices."""
    m = len(edges)
    run = [edges[(start + i) % m] for i in range(count)]
    removed = tuple(e.head for e in run[:-1])
    new = Edge(new_id, run[0].tail, run[-1].head, weight, None)
    if start + count <= m:
        out = edges[:start] + (new,) + edges[start + count:]
    else:
        out = edges[(start + count) % m:start] + (new,)
    return out, removed, new


def _drop_mark(marks: tuple[Block, ...], block: Block) -> tuple[Block, ...]:
    out = list(marks)
    out.remove(block)
    return tuple(out)


def _as_weighted(g) -> WeightedGraph:
    return g.as_weighted() if isinstance(g, PairingGraph) else g


def _apply_I(g: WeightedGraph, trace: ReductionTrace, block: Block) -> WeightedGraph:
    """Merge the two edges of `block` if they are adjacent; otherwise return g."""
    m = len(g.edges)
    pos = {e.id: i for i, e in enumerate(g.edges)}
    if block[0] not in pos or block[1] not in pos:
        return g
    i, j = pos[block[0]], pos[block[1]]
    if (i + 1) % m == j:
        start = i
    elif (j + 1) % m == i:
        start = j
    else:
        return g
    nid = _next_id(g, trace)
    consumed = (g.edges[start].id, g.edges[(start + 1) % m].id)
    edges, removed, _ = _merge_run(g.edges, start, 2, nid, 1)
    trace.steps.append(TraceStep("I", consumed, removed, nid, 1, OBJECTS["I"], block))
    return WeightedGraph(g.k, edges, _drop_mark(g.remaining_marks, block))


def _step_I(g: WeightedGraph, trace: ReductionTrace) -> WeightedGraph:
    for block in g.remaining_pairs:
        g = _apply_I(g, trace, block)
    return g


def _find_step_II(g: WeightedGraph) -> int | None:
    """Position of the first edge of the weighted pair meeting at the smallest vertex label."""
    m = len(g.edges)
    if m < 2:
        return None
    best = None
    for i in range(m):
        a, b = g.edges[i], g.edges[(i + 1) % m]
        if a.weight > 0 and b.weight > 0:
            if best is None or a.head < g.edges[best].head:
                best = i
    return best


def _apply_II(g: WeightedGraph, trace: ReductionTrace, i: int) -> WeightedGraph:
    m = len(g.edges)
    a, b = g.edges[i], g.edges[(i + 1) % m]
    nid = _next_id(g, trace)
    edges, removed, new = _merge_run(g.edges, i, 2, nid, a.weight + b.weight)
    trace.steps.append(TraceStep("II", (a.id, b.id), removed, nid, new.weight, OBJECTS["II"]))
    return WeightedGraph(g.k, edges, g.remaining_marks)


def _find_step_III(g: WeightedGraph) -> int | None:
    """Position of the first weighted edge flanked by both edges of one pair."""
    m = len(g.edges)
    if m < 3:
        return None
    for i in range(m):
        e = g.edges[i]
        prev, nxt = g.edges[i - 1], g.edges[(i + 1) % m]
        if (e.weight > 0 and prev.weight == 0 and nxt.weight == 0
                and prev.mark is not None and len(prev.mark) == 2
                and prev.mark == nxt.mark and prev.id != nxt.id):
            return i
    return None


def _apply_III(g: WeightedGraph, trace: ReductionTrace, i: int) -> WeightedGraph:
    m = len(g.edges)
    prev, e, nxt = g.edges[i - 1], g.edges[i], g.edges[(i + 1) % m]
    nid = _next_id(g, trace)
    edges, removed, new = _merge_run(g.edges, (i - 1) % m, 3, nid, e.weight + 1)
    trace.steps.append(TraceStep("III", (prev.id, e.id, nxt.id), removed, nid, new.weight,
                                 OBJECTS["III"], prev.mark))
    return WeightedGraph(g.k, edges, _drop_mark(g.remaining_marks, prev.mark))


def _step_II(g: WeightedGraph, trace: ReductionTrace) -> WeightedGraph:
    while (i := _find_step_II(g)) is not None:
        g = _apply_II(g, trace, i)
    return g


def _step_III(g: WeightedGraph, trace: ReductionTrace) -> WeightedGraph:
    while (i := _find_step_III(g)) is not None:
        g = _apply_III(g, trace, i)
    return g


def step_I(g: PairingGraph | WeightedGraph, trace: ReductionTrace | None = None) -> WeightedGraph:
    """Merge every pair whose two edges are adjacent into a weight-1 edge, in C(pi) order."""
    return _step_I(_as_weighted(g), trace if trace is not None else ReductionTrace())


def step_II(g: WeightedGraph, trace: ReductionTrace | None = None) -> WeightedGraph:
    """Join adjacent weighted edges at the smallest vertex label until none are adjacent."""
    return _step_II(_as_weighted(g), trace if trace is not None else ReductionTrace())


def step_III(g: WeightedGraph, trace: ReductionTrace | None = None) -> WeightedGraph:
    """Absorb a pair flanking a weighted edge into that edge, until no site remains."""
    return _step_III(_as_weighted(g), trace if trace is not None else ReductionTrace())


def reduce(g: PairingGraph | Partition, observer=None) -> tuple[WeightedGraph, ReductionTrace]:
    """Full reduction: Step I once, then Steps II and III alternately until neither applies.

    `observer(graph, step)` is called after every elementary rewrite, if given.
    """
    if isinstance(g, Partition):
        g = build_kgon(g)
    trace = ReductionTrace()
    w = g.as_weighted()

    def note(graph):
        if observer is not None:
            observer(graph, trace.steps[-1])

    for block in w.remaining_pairs:
        before = len(trace)
        w = _apply_I(w, trace, block)
        if len(trace) > before:
            note(w)
    while True:
        changed = False
        while (i := _find_step_II(w)) is not None:
            w = _apply_II(w, trace, i)
            note(w)
            changed = True
        while (i := _find_step_III(w)) is not None:
            w = _apply_III(w, trace, i)
            note(w)
            changed = True
        if not changed:
            break
    return w, trace


def replay(g: PairingGraph | WeightedGraph, trace: ReductionTrace) -> WeightedGraph:
    """Re-apply a recorded trace; raises if a step does not fit the graph."""
    w = _as_weighted(g)
    for st in trace:
        m = len(w.edges)
        pos = {e.id: i for i, e in enumerate(w.edges)}
        start = pos[st.consumed[0]]
        for off, eid in enumerate(st.consumed):
            if w.edges[(start + off) % m].id != eid:
                raise ValueError(f"trace step {st} does not match the graph")
        edges, removed, _ = _merge_run(w.edges, start, len(st.consumed), st.created, st.weight)
        if removed != st.removed:
            raise ValueError(f"trace step {st} removes {removed}")
        marks = w.remaining_marks if st.pair is None else _drop_mark(w.remaining_marks, st.pair)
        w = WeightedGraph(w.k, edges, marks)
    return w


def conservation_value(g: WeightedGraph | PairingGraph) -> int:
    """Sum of weights plus remaining pairs; equals k/2 throughout a pairing reduction."""
    if isinstance(g, PairingGraph):
        g = g.as_weighted()
    return g.total_weight() + len(g.remaining_pairs)


def is_terminal(g: WeightedGraph) -> bool:
    return _find_step_II(g) is None and _find_step_III(g) is None


def check_terminal_invariant(g: WeightedGraph) -> bool:
    """Pairings-only termination shape: no adjacent edges share a pair, weighted edges only
    touch paired edges, and an empty mark list means a single loop of weight k/2."""
    m = len(g.edges)
    if not g.remaining_marks:
        return g.is_single_loop() and g.edges[0].weight * 2 == g.k
    for i in range(m):
        a, b = g.edges[i], g.edges[(i + 1) % m]
        if a.mark is not None and a.mark == b.mark:
            return False
        if a.weight > 0 and b.weight > 0:
            return False
    return True


@dataclass(frozen=True)
class TupleSubgraph:
    type: int
    weighted: tuple[int, ...]   # ids of the weighted edges involved
    block: Block

    def to_dict(self) -> dict:
        return {"type": self.type, "weighted": list(self.weighted), "block": list(self.block)}


def classify_tuple_adjacency(g: WeightedGraph) -> list[TupleSubgraph]:
    """Label each weighted edge sitting between two edges of one 3-block.

    type 1: the three block edges and the weighted edge form one contiguous run;
    type 3: two weighted edges alternate with the three block edges;
    type 2: the remaining block edge lies elsewhere on the cycle.
    A type-3 site is reported once for its pair of weighted edges.
    """
    m = len(g.edges)
    out: list[TupleSubgraph] = []
    seen3: set[tuple[int, ...]] = set()
    for i, e in enumerate(g.edges):
        if e.weight == 0 or m < 4:
            continue
        prev, nxt = g.edges[i - 1], g.edges[(i + 1) % m]
        if prev.mark is None or len(prev.mark) != 3 or prev.mark != nxt.mark or prev.id == nxt.id:
            continue
        block = prev.mark
        third = next(x for x in block if x not in (prev.id, nxt.id))
        pos = {x.id: j for j, x in enumerate(g.edges)}
        if third not in pos:
            continue
        pt = pos[third]
        kind = None
        for sign in (1, -1):
            mid = g.edges[(i + 2 * sign) % m]
            if pt == (i + 3 * sign) % m and mid.weight > 0:
                key = tuple(sorted((e.id, mid.id)))
                if key in seen3:
                    kind = 0
                else:
                    seen3.add(key)
                    out.append(TupleSubgraph(3, key, block))
                    kind = 3
                break
        if kind is not None:
            continue
        if pt in ((i + 2) % m, (i - 2) % m):
            out.append(TupleSubgraph(1, (e.id,), block))
        else:
            out.append(TupleSubgraph(2, (e.id,), block))
    return out


_STYLES = ["solid", "dashed", "dotted", "bold", "tapered"]
_COLORS = ["black", "blue", "red", "darkgreen", "purple", "orange", "brown", "teal"]


def to_dot(g: WeightedGraph | PairingGraph, name: str = "G") -> str:
    """Circular DOT layout: one node per vertex, weighted edges labelled by weight,
    paired edges styled by their mark block."""
    w = _as_weighted(g)
    marks = g.marks if isinstance(g, PairingGraph) else w.remaining_marks
    style = {b: i for i, b in enumerate(marks)}
    lines = [f'graph "{name}" {{', "  layout=circo;", "  node [shape=circle];"]
    for v in w.vertices:
        lines.append(f'  a{v} [label="a{v}"];')
    for e in w.edges:
        if e.weight > 0:
            attrs = f'label="{e.weight}", penwidth=2, color=gray40'
        else:
            c = style.get(e.mark, 0)
            attrs = (f'label="e{e.id}", style={_STYLES[c % len(_STYLES)]}, '
                     f'color={_COLORS[c % len(_COLORS)]}')
        lines.append(f"  a{e.tail} -- a{e.head} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(obj) -> str:
    return json.dumps(obj.to_dict(), sort_keys=True, indent=1)
