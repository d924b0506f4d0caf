"""Shared fixtures builders for the test-suite (not a test module)."""

import random

import numpy as np

from hubo_dnr.network import Edge, Network, Node
from hubo_dnr.reduce import decompose


def triangle(chain_node=False, currents=(1.0, 1.0), r=1.0):
    """Root r with loads a, b; optionally the a-b line passes through a third load c."""
    nodes = [Node("r", 0.0, True), Node("a", currents[0]), Node("b", currents[1])]
    edges = [Edge("r", "a", r), Edge("r", "b", r)]
    if chain_node:
        nodes.append(Node("c", 1.0))
        edges += [Edge("a", "c", r), Edge("c", "b", r)]
    else:
        edges.append(Edge("a", "b", r))
    return Network(nodes, edges)


def random_network(rng: random.Random, minor_nodes=(3, 5), extra_edges=(0, 3), max_internal=3,
                   pendants=2):
    """A supplied feeder whose only loop structure is one random 2-connected block.

    The block is a Hamiltonian cycle plus random chords on ``n`` nodes, with
    every line subdivided by up to ``max_internal`` load nodes.
    """
    n = rng.randint(*minor_nodes)
    core = [f"m{i}" for i in range(n)]
    pairs = [(core[i], core[(i + 1) % n]) for i in range(n)] if n > 2 else []
    chords = [(a, b) for i, a in enumerate(core) for b in core[i + 2:] if (a, b) != (core[0], core[-1])]
    rng.shuffle(chords)
    pairs += chords[:rng.randint(*extra_edges)]

    nodes = [Node("s", 0.0, True), Node("f", round(rng.uniform(0.5, 3), 3))]
    nodes += [Node(c, round(rng.uniform(0.5, 10), 3)) for c in core]
    edges = [Edge("s", "f", round(rng.uniform(0.1, 2), 3)), Edge("f", rng.choice(core), 0.3)]
    serial = 0
    for a, b in pairs:
        path = [a]
        for _ in range(rng.randint(0, max_internal)):
            serial += 1
            nid = f"t{serial}"
            nodes.append(Node(nid, round(rng.uniform(0.0, 10), 3)))
            path.append(nid)
        path.append(b)
        for x, y in zip(path, path[1:]):
            edges.append(Edge(x, y, round(rng.uniform(0.05, 2), 3)))
    for j in range(pendants):
        nid = f"p{j}"
        nodes.append(Node(nid, round(rng.uniform(0.5, 5), 3)))
        edges.append(Edge(rng.choice([n.id for n in nodes[:-1]]), nid, round(rng.uniform(0.1, 1), 3)))
    return Network(nodes, edges)


def random_components(seed, count, max_vars=22, max_minor_edges=12, max_internal=3,
                      strategy="all-simple-cycles", **kw):
    """Reduced components that satisfy the size limits; deterministic for a seed."""
    from hubo_dnr.formulation import build_variables

    rng = random.Random(seed)
    out = []
    while len(out) < count:
        net = random_network(rng, max_internal=max_internal, **kw)
        rcs = decompose(net)
        if len(rcs) != 1:
            continue
        rc = rcs[0]
        if len(rc.chains) > max_minor_edges or max(c.k for c in rc.chains) > max_internal:
            continue
        if len(build_variables(rc, strategy)) > max_vars:
            continue
        out.append(rc)
    return out


def dense_values(poly, n):
    """Values of a polynomial at all 2^n assignments (bit i of the index = variable i)."""
    vals = np.zeros(1 << n)
    for m, c in poly.terms.items():
        vals[m] += c
    for i in range(n):
        v = vals.reshape(-1, 2, 1 << i)
        v[:, 1, :] += v[:, 0, :]
    return vals


def multi_block(blocks=3, ring=4, seed=0):
    """``blocks`` rings of ``ring`` nodes hung one after another off the supply."""
    rng = random.Random(seed)
    nodes, edges = [Node("s", 0.0, True)], []
    anchor = "s"
    for b in range(blocks):
        ids = [f"b{b}n{i}" for i in range(ring)]
        nodes += [Node(i, round(rng.uniform(1, 20), 2)) for i in ids]
        edges.append(Edge(anchor, ids[0], round(rng.uniform(0.1, 1), 3)))
        edges += [Edge(x, y, round(rng.uniform(0.1, 1), 3)) for x, y in zip(ids, ids[1:] + ids[:1])]
        anchor = ids[ring // 2]
    return Network(nodes, edges)
