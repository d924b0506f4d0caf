"""Decomposition of a network into reduced biconnected components.

Pipeline: collapse pendant trees, split into biconnected blocks, keep the
blocks that contain a cycle, fold everything hanging off a block into the
currents of its attachment nodes, then lift degree-2 nodes until the
topological minor remains. Each lifted edge remembers the original path it
stands for as a :class:`Chain`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import networkx as nx

from .network import Edge, Network, Node, node_key


class DecompositionError(RuntimeError):
    pass


class CycleCapExceeded(DecompositionError):
    pass


DEFAULT_CYCLE_CAP = 10_000
CYCLE_STRATEGIES = ("all-simple-cycles", "basis-with-virtual-edges")


@dataclass(frozen=True)
class Block:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    @property
    def nontrivial(self) -> bool:
        return len(self.edges) >= len(self.nodes)


@dataclass(frozen=True)
class Chain:
    """Original path behind one reduced edge ``u - v``.

    ``internal`` lists the lifted nodes from the u-end to the v-end and
    ``resistances[j]`` is the segment between internal node j and j+1
    (position 0 is the u-end, position k+1 the v-end).
    """
    u: str
    v: str
    internal: tuple[str, ...]
    resistances: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.internal)

    @property
    def path(self) -> tuple[str, ...]:
        return (self.u, *self.internal, self.v)

    def reversed(self) -> Chain:
        return Chain(self.v, self.u, self.internal[::-1], self.resistances[::-1])


@dataclass(frozen=True)
class ReducedComponent:
    """A non-trivial biconnected component G_C together with its minor G_0."""
    index: int
    original: Network          # G_C; the component root is flagged as root and carries no load
    nodes: tuple[str, ...]     # reduced nodes
    chains: tuple[Chain, ...]  # one per reduced edge, u before v in node order
    root: str

    @cached_property
    def minor_adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {n: [] for n in self.nodes}
        for c in self.chains:
            adj[c.u].append(c.v)
            adj[c.v].append(c.u)
        for nbrs in adj.values():
            nbrs.sort(key=node_key)
        return adj

    @cached_property
    def chain_index(self) -> dict[frozenset[str], int]:
        return {frozenset((c.u, c.v)): i for i, c in enumerate(self.chains)}

    def chain_between(self, a: str, b: str) -> Chain:
        """The chain of reduced edge a-b, oriented from a to b."""
        c = self.chains[self.chain_index[frozenset((a, b))]]
        return c if c.u == a else c.reversed()

    @property
    def currents(self) -> dict[str, float]:
        return {n.id: n.load_current for n in self.original.nodes}

    def stats(self) -> dict[str, int]:
        return {
            "nodes_gc": len(self.original.nodes),
            "nodes_g0": len(self.nodes),
            "edges_gc": len(self.original.edges),
            "edges_g0": len(self.chains),
        }


# -- pendant trees and blocks ----------------------------------------------------

def collapse_pendant_trees(net: Network) -> Network:
    """Strip degree-1 non-root nodes repeatedly, pushing their load onto the neighbour."""
    adj = {n: set(nbrs) for n, nbrs in net.adjacency().items()}
    current = {n.id: n.load_current for n in net.nodes}
    root = net.root
    leaves = sorted((n for n in adj if len(adj[n]) == 1 and n != root), key=node_key)
    removed: set[str] = set()
    while leaves:
        nxt = []
        for leaf in leaves:
            if leaf in removed or len(adj[leaf]) != 1:
                continue
            (nbr,) = adj[leaf]
            current[nbr] += current[leaf]
            adj[nbr].discard(leaf)
            adj[leaf].clear()
            removed.add(leaf)
            if len(adj[nbr]) == 1 and nbr != root:
                nxt.append(nbr)
        leaves = sorted(set(nxt) - removed, key=node_key)
    nodes = [Node(n.id, current[n.id], n.is_root) for n in net.nodes if n.id not in removed]
    edges = [e for e in net.edges if e.u not in removed and e.v not in removed]
    return Network(nodes, edges)


def biconnected_components(net: Network) -> tuple[list[Block], list[str]]:
    """Maximal biconnected blocks (ordered by smallest node) and articulation points."""
    g = nx.Graph()
    g.add_nodes_from(net.node_ids)
    emap = net.edge_map()
    order = {e.key: i for i, e in enumerate(net.edges)}
    g.add_edges_from((e.u, e.v) for e in net.edges)
    blocks = []
    for comp in nx.biconnected_component_edges(g):
        edges = sorted((emap[frozenset(p)] for p in comp), key=lambda e: order[e.key])
        nodes = sorted({n for e in edges for n in (e.u, e.v)}, key=node_key)
        blocks.append(Block(tuple(nodes), tuple(edges)))
    blocks.sort(key=lambda b: node_key(b.nodes[0]))
    arts = sorted(nx.articulation_points(g), key=node_key)
    return blocks, arts


def filter_nontrivial(blocks: list[Block]) -> list[Block]:
    return [b for b in blocks if b.nontrivial]


def select_root(block: Block | ReducedComponent | Network, net: Network) -> str:
    """Block node closest (in hops, over the whole network) to the supply node."""
    if isinstance(block, Block):
        candidates = block.nodes
    elif isinstance(block, ReducedComponent):
        candidates = block.nodes
    else:
        candidates = block.node_ids
    dist = net.distances_from(net.root)
    reachable = [n for n in candidates if n in dist]
    if not reachable:
        raise DecompositionError(f"component {candidates[:5]} is unreachable from the supply node")
    return min(reachable, key=lambda n: (dist[n], node_key(n)))


def component_network(net: Network, block: Block, root: str) -> Network:
    """G_C of ``block``: each node carries everything that hangs off it outside the block.

    Removing the block's edges splits ``net`` into pieces holding exactly one
    block node each; the piece of a non-root node feeds through that node.
    """
    inside = {e.key for e in block.edges}
    parent = {n: n for n in net.node_ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in net.edges:
        if e.key not in inside:
            parent[find(e.u)] = find(e.v)
    piece_current: dict[str, float] = {}
    for n in net.nodes:
        r = find(n.id)
        piece_current[r] = piece_current.get(r, 0.0) + n.load_current
    pieces = [find(n) for n in block.nodes]
    if len(set(pieces)) != len(pieces):
        raise DecompositionError("block nodes share an outside piece; not a maximal block")
    nodes = [
        Node(n, 0.0 if n == root else piece_current[find(n)], n == root)
        for n in block.nodes
    ]
    return Network(nodes, block.edges)


def merge_equivalent_nodes(gc: Network) -> Network:
    """Merge node pairs with identical neighbour sets, summing their load.

    A merge that would produce a parallel edge or a self-loop changes the set
    of spanning trees, so such pairs are left alone.
    """
    while True:
        adj = {n: set(v) for n, v in gc.adjacency().items()}
        ids = sorted(adj, key=node_key)
        pair = None
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                if gc.node(a).is_root or gc.node(b).is_root:
                    continue
                if adj[a] - {b} != adj[b] - {a}:
                    continue
                if adj[a] - {b} or b in adj[a]:
                    continue  # merged node would get parallel edges / a loop
                pair = (a, b)
                break
            if pair:
                break
        if pair is None:
            return gc
        a, b = pair
        nodes = [Node(a, gc.node(a).load_current + gc.node(b).load_current, False)
                 if n.id == a else n for n in gc.nodes if n.id != b]
        edges = [Edge(a if e.u == b else e.u, a if e.v == b else e.v, e.resistance, e.switchable)
                 for e in gc.edges]
        gc = Network(nodes, edges)


def reduce_to_minor(gc: Network, root: str, index: int = 0) -> ReducedComponent:
    """Lift degree-2 nodes (lowest id first, never the root) until none is liftable.

    A degree-2 node whose two neighbours are already adjacent stays, so the
    minor never gains parallel edges.
    """
    chains: dict[frozenset[str], Chain] = {}
    for e in gc.edges:
        u, v = sorted((e.u, e.v), key=node_key)
        chains[e.key] = Chain(u, v, (), (e.resistance,))
    adj = {n: set(v) for n, v in gc.adjacency().items()}

    def oriented(a, b):
        c = chains[frozenset((a, b))]
        return c if c.u == a else c.reversed()

    while True:
        eligible = [
            n for n in adj
            if n != root and len(adj[n]) == 2 and _not_adjacent(adj, *adj[n])
        ]
        if not eligible:
            break
        n = min(eligible, key=node_key)
        x, y = sorted(adj[n], key=node_key)
        left, right = oriented(x, n), oriented(n, y)
        merged = Chain(x, y, left.internal + (n,) + right.internal,
                       left.resistances + right.resistances)
        del chains[frozenset((x, n))], chains[frozenset((n, y))]
        chains[frozenset((x, y))] = merged
        adj[x].discard(n)
        adj[y].discard(n)
        adj[x].add(y)
        adj[y].add(x)
        del adj[n]

    nodes = tuple(sorted(adj, key=node_key))
    ordered = sorted(chains.values(), key=lambda c: (node_key(c.u), node_key(c.v)))
    return ReducedComponent(index, gc, nodes, tuple(ordered), root)


def _not_adjacent(adj, a, b) -> bool:
    return b not in adj[a]


def decompose(net: Network) -> list[ReducedComponent]:
    """All reduced non-trivial components of ``net``, in block order."""
    core = collapse_pendant_trees(net)
    blocks, _ = biconnected_components(core)
    out = []
    for i, block in enumerate(filter_nontrivial(blocks)):
        root = select_root(block, net)
        gc = merge_equivalent_nodes(component_network(core, block, root))
        out.append(reduce_to_minor(gc, root, i))
    return out


# -- cycles ------------------------------------------------------------------------

@dataclass(frozen=True)
class Cycle:
    nodes: tuple[str, ...]
    kind: str  # "simple", "basis" or "composite-blocker"

    @cached_property
    def edges(self) -> frozenset[frozenset[str]]:
        return _cycle_edges(self.nodes)


@dataclass(frozen=True)
class CompositeBlocker:
    """Composite cycle ``cycle`` = ``first`` XOR ``second``, which share one path a..b.

    ``route_first`` runs a -> b along ``first`` off the shared path and
    ``route_second`` runs b -> a along ``second``; their union is the composite.
    """
    cycle: int
    first: int
    second: int
    route_first: tuple[str, ...]
    route_second: tuple[str, ...]


@dataclass(frozen=True)
class CycleSet:
    strategy: str
    cycles: tuple[Cycle, ...]
    blockers: tuple[CompositeBlocker, ...] = ()

    def count(self, kind: str) -> int:
        return sum(c.kind == kind for c in self.cycles)


def _cycle_edges(seq) -> frozenset[frozenset[str]]:
    return frozenset(frozenset((seq[i], seq[(i + 1) % len(seq)])) for i in range(len(seq)))


def _canonical(seq: list[str], rank: dict[str, int]) -> tuple[str, ...]:
    i = min(range(len(seq)), key=lambda j: rank[seq[j]])
    rot = seq[i:] + seq[:i]
    if rank[rot[-1]] < rank[rot[1]]:
        rot = [rot[0]] + rot[1:][::-1]
    return tuple(rot)


def simple_cycles(adj: dict[str, list[str]], cap: int = DEFAULT_CYCLE_CAP) -> list[tuple[str, ...]]:
    """Every simple cycle of an undirected simple graph, each once, canonical order."""
    order = sorted(adj, key=node_key)
    rank = {n: i for i, n in enumerate(order)}
    out: list[tuple[str, ...]] = []
    for s in order:
        path = [s]
        on_path = {s}
        stack = [iter([m for m in adj[s] if rank[m] > rank[s]])]
        while stack:
            m = next(stack[-1], None)
            if m is None:
                stack.pop()
                on_path.discard(path.pop())
                continue
            if m in on_path:
                continue
            path.append(m)
            on_path.add(m)
            if len(path) >= 3 and s in adj[m] and rank[path[1]] < rank[m]:
                out.append(tuple(path))
                if len(out) > cap:
                    raise CycleCapExceeded(f"more than {cap} simple cycles; use the basis strategy")
            stack.append(iter([w for w in adj[m] if rank[w] > rank[s]]))
    out.sort(key=lambda c: (len(c), [rank[n] for n in c]))
    return out


def fundamental_cycles(adj: dict[str, list[str]], root: str) -> list[tuple[str, ...]]:
    """Fundamental cycle basis of a depth-first spanning tree grown from ``root``."""
    order = sorted(adj, key=node_key)
    rank = {n: i for i, n in enumerate(order)}
    parent = {root: None}
    depth = {root: 0}
    tree: set[frozenset[str]] = set()
    stack = [(root, iter(adj[root]))]
    while stack:
        n, it = stack[-1]
        m = next(it, None)
        if m is None:
            stack.pop()
        elif m not in parent:
            parent[m] = n
            depth[m] = depth[n] + 1
            tree.add(frozenset((n, m)))
            stack.append((m, iter(adj[m])))
    chords = sorted(
        {tuple(sorted((a, b), key=rank.get)) for a in adj for b in adj[a]
         if frozenset((a, b)) not in tree},
        key=lambda p: (rank[p[0]], rank[p[1]]),
    )
    out = []
    for a, b in chords:
        up_a, up_b = [a], [b]
        x, y = a, b
        while depth[x] > depth[y]:
            x = parent[x]
            up_a.append(x)
        while depth[y] > depth[x]:
            y = parent[y]
            up_b.append(y)
        while x != y:
            x, y = parent[x], parent[y]
            up_a.append(x)
            up_b.append(y)
        seq = up_a + up_b[-2::-1]  # a .. lca .. b, closed by the chord b-a
        out.append(_canonical(seq, rank))
    return out


def _path_endpoints(edges: frozenset[frozenset[str]]):
    """Endpoints of ``edges`` if they form one simple path, else None."""
    deg: dict[str, int] = {}
    for e in edges:
        for n in e:
            deg[n] = deg.get(n, 0) + 1
    ends = [n for n, d in deg.items() if d == 1]
    if any(d > 2 for d in deg.values()) or len(ends) != 2:
        return None
    if len(deg) != len(edges) + 1:
        return None  # a path plus disjoint cycles
    return ends


def _walk(edges: frozenset[frozenset[str]], start: str, end: str) -> tuple[str, ...] | None:
    nbrs: dict[str, list[str]] = {}
    for e in edges:
        a, b = tuple(e)
        nbrs.setdefault(a, []).append(b)
        nbrs.setdefault(b, []).append(a)
    seq = [start]
    prev = None
    while seq[-1] != end:
        nxt = [m for m in nbrs.get(seq[-1], []) if m != prev]
        if not nxt:
            return None
        prev = seq[-1]
        seq.append(nxt[0])
        if len(seq) > len(edges) + 1:
            return None
    return tuple(seq) if len(seq) == len(edges) + 1 else None


def _is_simple_cycle(edges: frozenset[frozenset[str]]) -> bool:
    deg: dict[str, int] = {}
    for e in edges:
        for n in e:
            deg[n] = deg.get(n, 0) + 1
    if not edges or any(d != 2 for d in deg.values()):
        return False
    return len(deg) == len(edges) and _walk(edges - {next(iter(edges))}, *next(iter(edges))) is not None


def _combine(c1: Cycle, c2: Cycle):
    shared = c1.edges & c2.edges
    if not shared:
        return None
    ends = _path_endpoints(shared)
    if ends is None:
        return None
    xor = c1.edges ^ c2.edges
    if not _is_simple_cycle(xor):
        return None
    a, b = sorted(ends, key=node_key)
    r1 = _walk(c1.edges - shared, a, b)
    r2 = _walk(c2.edges - shared, b, a)
    if r1 is None or r2 is None:
        return None
    return xor, r1, r2


def cycle_set(rc: ReducedComponent, strategy: str = "all-simple-cycles",
              cap: int = DEFAULT_CYCLE_CAP) -> CycleSet:
    """Cycles used by the cycle constraints.

    ``all-simple-cycles`` enumerates every simple cycle of the minor.
    ``basis-with-virtual-edges`` starts from a depth-first fundamental basis
    and closes it under "XOR of two known cycles sharing one path", recording
    a :class:`CompositeBlocker` for each new cycle; that closure reaches every
    simple cycle, each blocked through a virtual edge instead of a long product.
    """
    adj = rc.minor_adjacency
    if strategy == "all-simple-cycles":
        return CycleSet(strategy, tuple(Cycle(c, "simple") for c in simple_cycles(adj, cap)))
    if strategy != "basis-with-virtual-edges":
        raise ValueError(f"unknown cycle strategy {strategy!r}")
    rank = {n: i for i, n in enumerate(sorted(adj, key=node_key))}
    cycles = [Cycle(c, "basis") for c in fundamental_cycles(adj, rc.root)]
    known = {c.edges for c in cycles}
    blockers = []
    i = 0
    while i < len(cycles):
        for j in range(i):
            hit = _combine(cycles[j], cycles[i])
            if hit is None or hit[0] in known:
                continue
            xor, r1, r2 = hit
            seq = _canonical(list(r1) + list(r2[1:-1]), rank)
            known.add(xor)
            cycles.append(Cycle(seq, "composite-blocker"))
            blockers.append(CompositeBlocker(len(cycles) - 1, j, i, r1, r2))
            if len(cycles) > cap:
                raise CycleCapExceeded(f"more than {cap} blocked cycles")
        i += 1
    return CycleSet(strategy, tuple(cycles), tuple(blockers))


def check_component(rc: ReducedComponent) -> None:
    """Raise if a reduced component breaks its structural invariants."""
    if rc.root not in rc.nodes:
        raise DecompositionError(f"root {rc.root} is not a reduced node")
    if len(rc.chains) < len(rc.nodes):
        raise DecompositionError("minor has no cycle")
    covered = list(rc.nodes) + [n for c in rc.chains for n in c.internal]
    if sorted(covered, key=node_key) != sorted(rc.original.node_ids, key=node_key):
        raise DecompositionError("reduced nodes and chain interiors do not partition G_C")
