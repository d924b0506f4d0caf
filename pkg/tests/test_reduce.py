import time

import networkx as nx
import pytest

from helpers import random_network, triangle
from hubo_dnr.network import Edge, Network, Node, load_ieee33
from hubo_dnr.reduce import (CycleCapExceeded, biconnected_components, check_component, collapse_pendant_trees,
                             component_network, cycle_set, decompose, filter_nontrivial, merge_equivalent_nodes,
                             select_root, simple_cycles)


def net_of(root, loads, edges):
    nodes = [Node(root, 0.0, True)] + [Node(n, c) for n, c in loads.items()]
    return Network(nodes, [Edge(u, v, 1.0) for u, v in edges])


def K4(extra=()):
    return net_of("s", {"a": 1, "b": 1, "c": 1, "d": 1},
                  [("s", "a"), ("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"), ("c", "d"), *extra])


def theta():
    # x and y joined by three internally disjoint two-hop paths
    return net_of("s", {"x": 1, "y": 1, "p": 1, "q": 1, "t": 1},
                  [("s", "x"), ("x", "p"), ("p", "y"), ("x", "q"), ("q", "y"), ("x", "t"), ("t", "y")])


# -- pendant trees ---------------------------------------------------------------------

def test_star_collapses_to_root():
    net = net_of("r", {"a": 1, "b": 2, "c": 3}, [("r", "a"), ("r", "b"), ("r", "c")])
    out = collapse_pendant_trees(net)
    assert [n.id for n in out.nodes] == ["r"]
    assert out.node("r").load_current == 6
    assert decompose(net) == []


def test_leaf_current_moves_to_attachment():
    net = triangle()
    net = Network(list(net.nodes) + [Node("l", 2.0)], list(net.edges) + [Edge("a", "l", 1.0)])
    out = collapse_pendant_trees(net)
    assert out.node("a").load_current == 3.0
    assert len(out.edges) == 3


def test_cycle_is_fixpoint():
    net = triangle()
    assert collapse_pendant_trees(net) == net


# -- blocks ------------------------------------------------------------------------------

def test_two_triangles_share_articulation():
    net = net_of("r", {"a": 1, "c": 1, "d": 1, "e": 1},
                 [("r", "a"), ("a", "c"), ("r", "c"), ("c", "d"), ("d", "e"), ("c", "e")])
    blocks, arts = biconnected_components(net)
    assert len(blocks) == 2 and arts == ["c"]
    assert all(b.nontrivial for b in blocks)


def test_bridge_is_trivial_block():
    blocks, _ = biconnected_components(net_of("r", {"a": 1}, [("r", "a")]))
    assert len(blocks) == 1 and not blocks[0].nontrivial
    assert filter_nontrivial(blocks) == []


def test_filter_keeps_only_meshed():
    net = net_of("s", {"r": 0.5, "a": 1, "b": 1}, [("s", "r"), ("r", "a"), ("a", "b"), ("r", "b")])
    blocks, _ = biconnected_components(net)
    kept = filter_nontrivial(blocks)
    assert [b.nodes for b in kept] == [("a", "b", "r")]


def test_tree_has_no_components():
    assert filter_nontrivial(biconnected_components(net_of("r", {"a": 1, "b": 1}, [("r", "a"), ("a", "b")]))[0]) == []


# -- roots and component currents ----------------------------------------------------------

def test_root_of_triangle_containing_supply():
    assert decompose(triangle())[0].root == "r"


def test_far_triangle_roots_at_articulation():
    net = net_of("r", {"a": 1, "c": 1, "d": 1, "e": 1},
                 [("r", "a"), ("a", "c"), ("r", "c"), ("c", "d"), ("d", "e"), ("c", "e")])
    roots = [rc.root for rc in decompose(net)]
    assert roots == ["r", "c"]


def test_component_currents_include_downstream_pieces():
    net = net_of("r", {"a": 1, "c": 1, "d": 1, "e": 1},
                 [("r", "a"), ("a", "c"), ("r", "c"), ("c", "d"), ("d", "e"), ("c", "e")])
    first, second = decompose(net)
    # the far triangle (3 A including c) is fed through c
    assert first.currents == {"r": 0.0, "a": 1.0, "c": 3.0}
    assert second.currents == {"c": 0.0, "d": 1.0, "e": 1.0}


def test_component_current_conservation_random():
    import random
    rng = random.Random(3)
    for _ in range(50):
        net = random_network(rng)
        for rc in decompose(net):
            if rc.root == net.root:
                assert sum(rc.currents.values()) == pytest.approx(net.total_current)


def test_select_root_prefers_nearest_then_id():
    net = net_of("s", {"a": 1, "b": 1, "c": 1}, [("s", "a"), ("s", "b"), ("a", "b"), ("b", "c"), ("a", "c")])
    block = filter_nontrivial(biconnected_components(collapse_pendant_trees(net))[0])[0]
    assert select_root(block, net) == "s"
    net2 = net_of("s", {"f": 1, "a": 1, "b": 1, "c": 1}, [("s", "f"), ("f", "b"), ("f", "a"), ("a", "b"),
                                                         ("b", "c"), ("a", "c")])
    assert decompose(net2)[0].root == "f"


# -- node merging and lifting ----------------------------------------------------------------

def test_triangle_not_merged():
    gc = component_network(triangle(), biconnected_components(triangle())[0][0], "r")
    assert merge_equivalent_nodes(gc) == gc


def test_four_cycle_merge_refused():
    # a and b both see exactly {r, s}; merging them would create parallel r-ab-s paths
    net = net_of("r", {"a": 1, "s": 1, "b": 1}, [("r", "a"), ("a", "s"), ("s", "b"), ("b", "r")])
    gc = component_network(net, biconnected_components(net)[0][0], "r")
    assert merge_equivalent_nodes(gc) == gc


def test_single_lift():
    # m is the lowest id, so it is lifted first; x and y then see adjacent neighbours
    net = net_of("r", {"m": 1, "x": 1, "y": 1}, [("r", "m"), ("m", "x"), ("x", "y"), ("r", "y")])
    (rc,) = decompose(net)
    assert rc.nodes == ("r", "x", "y")
    c = rc.chain_between("r", "x")
    assert c.internal == ("m",) and len(c.resistances) == 2


def test_lift_refused_when_neighbours_adjacent():
    (rc,) = decompose(net_of("r", {"a": 1, "b": 1}, [("r", "a"), ("a", "b"), ("r", "b")]))
    assert rc.nodes == ("a", "b", "r")
    assert all(c.k == 0 for c in rc.chains)


def test_chain_resistances_follow_path():
    net = Network([Node("r", 0, True), Node("m", 1), Node("n", 1), Node("x", 1), Node("y", 1)],
                  [Edge("r", "m", 0.1), Edge("m", "n", 0.2), Edge("n", "x", 0.3), Edge("x", "y", 1), Edge("r", "y", 1)])
    (rc,) = decompose(net)
    c = rc.chain_between("x", "r")
    assert c.path == ("x", "n", "m", "r")
    assert c.resistances == (0.3, 0.2, 0.1)
    assert c.reversed().reversed() == c


def test_minor_degree_two_only_when_neighbours_adjacent():
    import random
    rng = random.Random(11)
    for _ in range(100):
        for rc in decompose(random_network(rng)):
            check_component(rc)
            adj = rc.minor_adjacency
            for n, nbrs in adj.items():
                if len(nbrs) == 2 and n != rc.root:
                    assert nbrs[1] in adj[nbrs[0]]


def test_minor_spanning_trees_match_original_count():
    # every spanning tree of G_C is a tree of the minor plus one open segment per open chain
    import random
    from hubo_dnr.oracle import configuration_count, kirchhoff_tree_count
    rng = random.Random(5)
    for _ in range(60):
        for rc in decompose(random_network(rng)):
            assert configuration_count(rc) == kirchhoff_tree_count(rc.original.adjacency())


def test_ieee33_reduction():
    t = time.perf_counter()
    (rc,) = decompose(load_ieee33())
    assert time.perf_counter() - t < 1.0
    assert rc.stats() == {"nodes_gc": 32, "nodes_g0": 9, "edges_gc": 36, "edges_g0": 13}
    assert rc.root == "2"
    assert rc.nodes == ("2", "3", "6", "8", "9", "12", "15", "21", "29")


# -- cycles --------------------------------------------------------------------------------

def brute_force_cycles(adj):
    """Edge sets of all simple cycles via networkx on the undirected graph."""
    g = nx.Graph([(a, b) for a in adj for b in adj[a]])
    return {frozenset(frozenset(e) for e in zip(c, c[1:] + c[:1])) for c in nx.simple_cycles(g)}


def test_triangle_cycles_both_strategies():
    (rc,) = decompose(triangle())
    assert len(cycle_set(rc, "all-simple-cycles").cycles) == 1
    cs = cycle_set(rc, "basis-with-virtual-edges")
    assert len(cs.cycles) == 1 and cs.count("basis") == 1


def test_k4_cycles():
    (rc,) = decompose(K4())
    assert len(cycle_set(rc, "all-simple-cycles").cycles) == 7
    cs = cycle_set(rc, "basis-with-virtual-edges")
    assert cs.count("basis") == 3
    assert {c.edges for c in cs.cycles} == brute_force_cycles(rc.minor_adjacency)


def test_theta_cycles():
    (rc,) = decompose(theta())
    assert len(cycle_set(rc, "all-simple-cycles").cycles) == 3
    cs = cycle_set(rc, "basis-with-virtual-edges")
    assert (cs.count("basis"), cs.count("composite-blocker")) == (2, 1)
    assert len(cs.blockers) == 1


def test_strategies_cover_same_cycles_random():
    import random
    rng = random.Random(8)
    for _ in range(40):
        for rc in decompose(random_network(rng, minor_nodes=(4, 6), extra_edges=(1, 5))):
            ref = brute_force_cycles(rc.minor_adjacency)
            assert {c.edges for c in cycle_set(rc, "all-simple-cycles").cycles} == ref
            assert {c.edges for c in cycle_set(rc, "basis-with-virtual-edges").cycles} == ref


def test_simple_cycles_cap():
    adj = {n: [m for m in "abcdef" if m != n] for n in "abcdef"}  # K6: 197 cycles
    assert len(simple_cycles(adj)) == 197
    with pytest.raises(CycleCapExceeded):
        simple_cycles(adj, cap=100)


def test_ieee33_cycle_counts():
    (rc,) = decompose(load_ieee33())
    assert len(cycle_set(rc).cycles) == len(brute_force_cycles(rc.minor_adjacency)) == 26
    cs = cycle_set(rc, "basis-with-virtual-edges")
    assert cs.count("basis") == 5 and len(cs.cycles) == 26
