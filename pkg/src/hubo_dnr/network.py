"""Electrical graph model of a distribution grid and its file formats.

A :class:`Network` is a set of nodes drawing constant load currents and a set
of undirected lines with resistances. Exactly one node is the supply point.
"""

from __future__ import annotations

import csv
import io
import json
import re
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable


class NetworkError(ValueError):
    """Raised when a network description is malformed or violates an invariant."""

    def __init__(self, message: str, violations: list[Violation] | None = None):
        super().__init__(message)
        self.violations = violations or []


@dataclass(frozen=True)
class Node:
    id: str
    load_current: float = 0.0
    is_root: bool = False


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    resistance: float
    switchable: bool = True

    @property
    def key(self) -> frozenset[str]:
        return frozenset((self.u, self.v))

    def other(self, n: str) -> str:
        return self.v if n == self.u else self.u


@dataclass(frozen=True)
class Violation:
    kind: str
    element: str
    detail: str = ""

    def __str__(self) -> str:
        s = f"{self.kind}: {self.element}"
        return f"{s} ({self.detail})" if self.detail else s


def node_key(node_id: str) -> tuple:
    """Natural sort key, so that ``"2" < "10"`` and ``"a2" < "a10"``."""
    return tuple(
        (0, int(tok), "") if tok.isdigit() else (1, 0, tok)
        for tok in re.findall(r"\d+|\D+", node_id)
    )


@dataclass(frozen=True)
class Network:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "_index", {n.id: n for n in self.nodes})

    def node(self, node_id: str) -> Node:
        return self._index[node_id]

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._index

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    @property
    def root(self) -> str:
        roots = [n.id for n in self.nodes if n.is_root]
        if len(roots) != 1:
            raise NetworkError(f"network has {len(roots)} roots, expected 1")
        return roots[0]

    @property
    def total_current(self) -> float:
        return sum(n.load_current for n in self.nodes)

    def adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
        for nbrs in adj.values():
            nbrs.sort(key=node_key)
        return adj

    def edge_map(self) -> dict[frozenset[str], Edge]:
        return {e.key: e for e in self.edges}

    def distances_from(self, source: str) -> dict[str, int]:
        """Hop distances by breadth-first search from ``source``."""
        adj = self.adjacency()
        dist = {source: 0}
        queue = deque([source])
        while queue:
            n = queue.popleft()
            for m in adj[n]:
                if m not in dist:
                    dist[m] = dist[n] + 1
                    queue.append(m)
        return dist


def validate(net: Network) -> list[Violation]:
    """Check every structural invariant; an empty list means the network is valid."""
    out: list[Violation] = []
    seen: set[str] = set()
    for n in net.nodes:
        if n.id in seen:
            out.append(Violation("DuplicateNode", n.id))
        seen.add(n.id)
        if not n.load_current >= 0:
            out.append(Violation("NegativeCurrent", n.id, f"{n.load_current} A"))

    roots = [n for n in net.nodes if n.is_root]
    if not roots:
        out.append(Violation("NoRoot", "network"))
    elif len(roots) > 1:
        out.append(Violation("MultipleRoots", ",".join(n.id for n in roots)))
    for r in roots:
        if r.load_current != 0:
            out.append(Violation("RootHasLoad", r.id, f"{r.load_current} A"))

    pairs: set[frozenset[str]] = set()
    good_edges = []
    for e in net.edges:
        name = f"{e.u}-{e.v}"
        if e.u not in seen or e.v not in seen:
            missing = e.u if e.u not in seen else e.v
            out.append(Violation("UnknownEndpoint", name, f"no node {missing!r}"))
            continue
        if e.u == e.v:
            out.append(Violation("SelfLoop", name))
            continue
        if e.key in pairs:
            out.append(Violation("DuplicateEdge", name))
        pairs.add(e.key)
        if not e.resistance > 0:
            out.append(Violation("NonPositiveResistance", name, f"{e.resistance} ohm"))
        good_edges.append(e)

    if seen:
        adj: dict[str, list[str]] = {i: [] for i in seen}
        for e in good_edges:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
        start = net.nodes[0].id
        reached = {start}
        stack = [start]
        while stack:
            for m in adj[stack.pop()]:
                if m not in reached:
                    reached.add(m)
                    stack.append(m)
        unreached = [n.id for n in net.nodes if n.id not in reached]
        if unreached:
            out.append(Violation("Disconnected", ",".join(unreached[:10]),
                                 f"{len(unreached)} node(s) unreachable from {start!r}"))
    return out


def checked(net: Network) -> Network:
    violations = validate(net)
    if violations:
        raise NetworkError("; ".join(map(str, violations)), violations)
    return net


# -- serialization -------------------------------------------------------------

_NODE_KEYS = {"id", "current_a", "root"}
_EDGE_KEYS = {"u", "v", "resistance_ohm", "switchable"}


def _exact(value, kind, where):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise NetworkError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if kind is bool:
        if not isinstance(value, bool):
            raise NetworkError(f"{where}: expected true/false, got {value!r}")
        return value
    if not isinstance(value, str) or not value:
        raise NetworkError(f"{where}: expected a non-empty string, got {value!r}")
    return value


def _from_json(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"line {exc.lineno} col {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or set(doc) != {"nodes", "edges"}:
        raise NetworkError("top level must be an object with exactly 'nodes' and 'edges'")
    nodes, edges = [], []
    for i, raw in enumerate(doc["nodes"]):
        where = f"nodes[{i}]"
        if not isinstance(raw, dict):
            raise NetworkError(f"{where}: expected an object")
        extra = set(raw) - _NODE_KEYS
        if extra:
            raise NetworkError(f"{where}: unknown key(s) {sorted(extra)}")
        if "id" not in raw:
            raise NetworkError(f"{where}: missing 'id'")
        nodes.append(Node(
            _exact(raw["id"], str, f"{where}.id"),
            _exact(raw.get("current_a", 0.0), float, f"{where}.current_a"),
            _exact(raw.get("root", False), bool, f"{where}.root"),
        ))
    for i, raw in enumerate(doc["edges"]):
        where = f"edges[{i}]"
        if not isinstance(raw, dict):
            raise NetworkError(f"{where}: expected an object")
        extra = set(raw) - _EDGE_KEYS
        if extra:
            raise NetworkError(f"{where}: unknown key(s) {sorted(extra)}")
        for k in ("u", "v", "resistance_ohm"):
            if k not in raw:
                raise NetworkError(f"{where}: missing {k!r}")
        edges.append(Edge(
            _exact(raw["u"], str, f"{where}.u"),
            _exact(raw["v"], str, f"{where}.v"),
            _exact(raw["resistance_ohm"], float, f"{where}.resistance_ohm"),
            _exact(raw.get("switchable", True), bool, f"{where}.switchable"),
        ))
    return Network(nodes, edges)


def _csv_rows(text: str, header: list[str], name: str) -> Iterable[tuple[int, dict]]:
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines())
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise NetworkError(f"{name}: empty file")
    reader = csv.reader([ln for _, ln in lines])
    got = [h.strip() for h in next(reader)]
    if got != header:
        raise NetworkError(f"{name}:{lines[0][0]}: header must be {','.join(header)}")
    for (lineno, _), row in zip(lines[1:], reader):
        if len(row) != len(header):
            raise NetworkError(f"{name}:{lineno}: expected {len(header)} fields, got {len(row)}")
        yield lineno, dict(zip(header, (c.strip() for c in row)))


def _csv_float(s: str, where: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise NetworkError(f"{where}: not a number: {s!r}") from None


def _csv_bool(s: str, where: str) -> bool:
    lowered = s.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no", ""):
        return False
    raise NetworkError(f"{where}: not a boolean: {s!r}")


def _from_csv(nodes_text: str, edges_text: str) -> Network:
    nodes = [
        Node(r["id"], _csv_float(r["current_a"], f"nodes.csv:{ln}"),
             _csv_bool(r["root"], f"nodes.csv:{ln}"))
        for ln, r in _csv_rows(nodes_text, ["id", "current_a", "root"], "nodes.csv")
    ]
    edges = [
        Edge(r["u"], r["v"], _csv_float(r["resistance_ohm"], f"edges.csv:{ln}"),
             _csv_bool(r["switchable"], f"edges.csv:{ln}"))
        for ln, r in _csv_rows(edges_text, ["u", "v", "resistance_ohm", "switchable"], "edges.csv")
    ]
    return Network(nodes, edges)


def parse_network(source: str | tuple[str, str], fmt: str = "json") -> Network:
    """Parse and validate a network.

    Args:
        source: JSON text, or a ``(nodes_csv, edges_csv)`` pair of texts for ``fmt="csv"``.
        fmt: ``"json"`` or ``"csv"``.

    Raises:
        NetworkError: on syntax errors (with line/field location) or invariant violations.
    """
    if fmt == "json":
        net = _from_json(source)
    elif fmt == "csv":
        nodes_text, edges_text = source
        net = _from_csv(nodes_text, edges_text)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return checked(net)


def to_json(net: Network) -> str:
    doc = {
        "nodes": [{"id": n.id, "current_a": n.load_current, "root": n.is_root} for n in net.nodes],
        "edges": [{"u": e.u, "v": e.v, "resistance_ohm": e.resistance, "switchable": e.switchable}
                  for e in net.edges],
    }
    return json.dumps(doc, indent=1) + "\n"


def to_csv(net: Network) -> tuple[str, str]:
    nbuf, ebuf = io.StringIO(), io.StringIO()
    nw = csv.writer(nbuf, lineterminator="\n")
    nw.writerow(["id", "current_a", "root"])
    for n in net.nodes:
        nw.writerow([n.id, repr(n.load_current), str(n.is_root).lower()])
    ew = csv.writer(ebuf, lineterminator="\n")
    ew.writerow(["u", "v", "resistance_ohm", "switchable"])
    for e in net.edges:
        ew.writerow([e.u, e.v, repr(e.resistance), str(e.switchable).lower()])
    return nbuf.getvalue(), ebuf.getvalue()


def _data_text(*parts: str) -> str:
    return resources.files("hubo_dnr").joinpath("data", *parts).read_text()


def load_ieee33() -> Network:
    """The 33-bus Baran-Wu feeder with its five tie lines; bus 1 is the supply."""
    return parse_network((_data_text("ieee33", "nodes.csv"), _data_text("ieee33", "edges.csv")), "csv")


BUILTIN_SYNTHETIC = ("arnhem-like-0", "arnhem-like-1", "arnhem-like-2")


def load_builtin(name: str) -> Network:
    if name == "ieee33":
        return load_ieee33()
    if name in BUILTIN_SYNTHETIC:
        return parse_network(_data_text("synthetic", f"{name}.json"), "json")
    raise NetworkError(f"unknown built-in network {name!r}")


def load_network(path: str | Path) -> Network:
    """Load a built-in name, a ``.json`` file, or a directory with ``nodes.csv``/``edges.csv``."""
    p = Path(path)
    if not p.exists() and str(path) in ("ieee33", *BUILTIN_SYNTHETIC):
        return load_builtin(str(path))
    if p.is_dir():
        return parse_network(((p / "nodes.csv").read_text(), (p / "edges.csv").read_text()), "csv")
    return parse_network(p.read_text(), "json")
