"""Classical ground truth for a reduced component.

Radial configurations are enumerated directly on the minor (spanning trees
crossed with an open-segment choice on every open chain), expanded to the
original component and scored by exact subtree-current accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .formulation import Configuration
from .hubo import BinaryPolynomial
from .network import node_key
from .reduce import ReducedComponent

DEFAULT_CONFIG_CAP = 10_000_000
MAX_EXHAUSTIVE_VARS = 24
TIE_REL = 1e-12


class OracleError(RuntimeError):
    pass


class EnumerationCapExceeded(OracleError):
    pass


@dataclass(frozen=True)
class RadialConfig:
    """Spanning arborescence of G_C towards the component root, as child -> parent."""
    parent: tuple[tuple[str, str], ...]  # sorted by child

    @classmethod
    def of(cls, parent: dict[str, str]) -> RadialConfig:
        return cls(tuple(sorted(parent.items(), key=lambda kv: node_key(kv[0]))))

    @property
    def parents(self) -> dict[str, str]:
        return dict(self.parent)

    @property
    def closed_edges(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset(p) for p in self.parent)


@dataclass(frozen=True)
class OptimalResult:
    config: RadialConfig
    minor: Configuration
    loss: float
    ties: bool
    n_configurations: int


# -- spanning trees of the minor ---------------------------------------------------

def minor_spanning_trees(rc: ReducedComponent) -> Iterator[frozenset[int]]:
    """Chain-index sets forming spanning trees of G_0, by include/exclude recursion.

    Chain order fixes the enumeration order: trees containing chain 0 come
    first, and so on.
    """
    nodes = list(rc.nodes)
    pos = {n: i for i, n in enumerate(nodes)}
    ends = [(pos[c.u], pos[c.v]) for c in rc.chains]
    m, n = len(ends), len(nodes)

    def find(par, x):
        while par[x] != x:
            x = par[x]
        return x

    def connected_with(excluded_from: int, chosen: list[int]) -> bool:
        par = list(range(n))
        comps = n
        for i in chosen + list(range(excluded_from, m)):
            a, b = find(par, ends[i][0]), find(par, ends[i][1])
            if a != b:
                par[a] = b
                comps -= 1
        return comps == 1

    def rec(i: int, chosen: list[int], par: list[int]):
        if len(chosen) == n - 1:
            yield frozenset(chosen)
            return
        if i == m:
            return
        a, b = find(par, ends[i][0]), find(par, ends[i][1])
        if a != b:
            p2 = list(par)
            p2[a] = b
            yield from rec(i + 1, chosen + [i], p2)
        if connected_with(i + 1, chosen):
            yield from rec(i + 1, chosen, par)

    if n == 1:
        yield frozenset()
        return
    yield from rec(0, [], list(range(n)))


def kirchhoff_tree_count(adj: dict[str, list[str]]) -> int:
    """Spanning-tree count of a simple graph by the matrix-tree theorem."""
    nodes = sorted(adj, key=node_key)
    if len(nodes) <= 1:
        return 1
    idx = {v: i for i, v in enumerate(nodes)}
    lap = np.zeros((len(nodes), len(nodes)))
    for v, nbrs in adj.items():
        for w in nbrs:
            lap[idx[v], idx[w]] -= 1
            lap[idx[v], idx[v]] += 1
    return int(round(np.linalg.det(lap[1:, 1:])))


def _orient(rc: ReducedComponent, tree: frozenset[int]) -> frozenset[tuple[str, str]]:
    adj: dict[str, list[str]] = {n: [] for n in rc.nodes}
    for i in sorted(tree):
        c = rc.chains[i]
        adj[c.u].append(c.v)
        adj[c.v].append(c.u)
    arcs, seen, queue = set(), {rc.root}, [rc.root]
    while queue:
        p = queue.pop(0)
        for q in adj[p]:
            if q not in seen:
                seen.add(q)
                arcs.add((p, q))
                queue.append(q)
    return frozenset(arcs)


def configuration_count(rc: ReducedComponent) -> int:
    total = 0
    for tree in minor_spanning_trees(rc):
        prod = 1
        for i, c in enumerate(rc.chains):
            if i not in tree:
                prod *= c.k + 1
        total += prod
    return total


def minor_configurations(rc: ReducedComponent, cap: int = DEFAULT_CONFIG_CAP) -> Iterator[Configuration]:
    """Every radial state at minor level, deterministic order."""
    count = configuration_count(rc)
    if count > cap:
        raise EnumerationCapExceeded(f"component {rc.index}: {count} configurations exceed cap {cap}")
    for tree in minor_spanning_trees(rc):
        closed = _orient(rc, tree)
        open_chains = [i for i in range(len(rc.chains)) if i not in tree]
        yield from _positions(closed, open_chains, rc, 0, ())


def _positions(closed, open_chains, rc, j, acc):
    if j == len(open_chains):
        yield Configuration(closed, acc)
        return
    ci = open_chains[j]
    for b in range(rc.chains[ci].k + 1):
        yield from _positions(closed, open_chains, rc, j + 1, acc + ((ci, b),))


def expand(rc: ReducedComponent, cfg: Configuration) -> RadialConfig:
    """Parent map on G_C for a minor-level configuration."""
    parent: dict[str, str] = {}
    for p, q in cfg.closed:
        path = rc.chain_between(p, q).path
        for a, b in zip(path, path[1:]):
            parent[b] = a
    for ci, b in cfg.open_positions:
        path = rc.chains[ci].path
        k = len(path) - 2
        for i in range(1, b + 1):
            parent[path[i]] = path[i - 1]
        for i in range(b + 1, k + 1):
            parent[path[i]] = path[i + 1]
    return RadialConfig.of(parent)


def contract(rc: ReducedComponent, config: RadialConfig) -> Configuration:
    """Inverse of ``expand``."""
    parents = config.parents
    closed, positions = set(), []
    for ci, c in enumerate(rc.chains):
        path = c.path
        segs = [parents.get(b) == a or parents.get(a) == b for a, b in zip(path, path[1:])]
        if all(segs):
            if parents.get(path[1]) == path[0]:
                closed.add((c.u, c.v))
            else:
                closed.add((c.v, c.u))
        else:
            positions.append((ci, segs.index(False)))
    return Configuration(frozenset(closed), tuple(positions))


def enumerate_configurations(rc: ReducedComponent, cap: int = DEFAULT_CONFIG_CAP) -> Iterator[RadialConfig]:
    for cfg in minor_configurations(rc, cap):
        yield expand(rc, cfg)


def _resistances(rc: ReducedComponent) -> dict[frozenset[str], float]:
    return {e.key: e.resistance for e in rc.original.edges}


def radial_losses(config: RadialConfig, rc: ReducedComponent, _res=None) -> float:
    """Sum of R * I^2 over tree edges, subtree currents accumulated leaves first."""
    res = _res or _resistances(rc)
    parents = config.parents
    current = dict(rc.currents)
    depth = {rc.root: 0}

    def d(n):
        if n not in depth:
            depth[n] = d(parents[n]) + 1
        return depth[n]

    loss = 0.0
    for n in sorted(parents, key=lambda n: (-d(n), node_key(n))):
        p = parents[n]
        i = current[n]
        loss += res[frozenset((n, p))] * i * i
        current[p] += i
    return loss


def optimal_configuration(rc: ReducedComponent, cap: int = DEFAULT_CONFIG_CAP) -> OptimalResult:
    """Minimum-loss configuration; the first one in enumeration order wins ties."""
    res = _resistances(rc)
    best = None
    ties = False
    n = 0
    for cfg in minor_configurations(rc, cap):
        n += 1
        rcfg = expand(rc, cfg)
        loss = radial_losses(rcfg, rc, res)
        if best is None or loss < best[2] - TIE_REL * abs(best[2]):
            best, ties = (rcfg, cfg, loss), False
        elif abs(loss - best[2]) <= TIE_REL * abs(best[2]):
            ties = True
    if best is None:
        raise OracleError("no configuration found")
    return OptimalResult(best[0], best[1], best[2], ties, n)


def exhaustive_hubo_min(h: BinaryPolynomial, n: int | None = None) -> tuple[tuple[int, ...], float]:
    """Global minimum over all assignments by a dense subset-sum transform.

    Ties go to the lexicographically smallest assignment (x_0 compared first).
    """
    n = len(h.variables) if n is None else n
    if n > MAX_EXHAUSTIVE_VARS:
        raise OracleError(f"{n} variables exceed the exhaustive limit of {MAX_EXHAUSTIVE_VARS}")
    vals = np.zeros(1 << n)
    for m, c in h.terms.items():
        vals[m] += c
    for i in range(n):
        v = vals.reshape(-1, 2, 1 << i)
        v[:, 1, :] += v[:, 0, :]
    best = vals.min()
    cand = np.flatnonzero(vals <= best + 1e-9 * max(1.0, abs(best)))
    rev = np.zeros_like(cand)
    for i in range(n):
        rev |= ((cand >> i) & 1) << (n - 1 - i)
    arg = int(cand[rev.argmin()])
    return tuple((arg >> i) & 1 for i in range(n)), float(vals[arg])
