"""HUBO for loss-minimal radial reconfiguration of one reduced component.

Variables
    ``e[u,v]``  reduced edge u-v closed with u the parent of v (none point into the root)
    ``d[c:i]``  internal node i of chain c draws its current from the chain's u-end
    ``w[b:o]``  virtual arc of composite blocker b in orientation o (basis strategy only)

On a zero-penalty assignment the arc variables form a spanning arborescence of
the minor, the prefix variables of every open chain are ``1..1 0..0`` (the
boundary is the open segment) and every virtual arc equals the product of the
route it stands for.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .hubo import (BinaryPolynomial, Variables, add_all, implies_penalty, interaction_penalty,
                   linear_sum_penalty, mask_of)
from .reduce import (DEFAULT_CYCLE_CAP, CycleSet, ReducedComponent, check_component, cycle_set)

DEFAULT_PATH_CAP = 100_000
PENALTY_FAMILIES = ("vertex", "edge", "cycle", "path", "implies")
FAMILIES = PENALTY_FAMILIES + ("loss",)


class FormulationError(ValueError):
    pass


class PathCapExceeded(FormulationError):
    pass


class InfeasibleAssignment(FormulationError):
    pass


@dataclass(frozen=True)
class Weights:
    vertex: float = 1.0
    edge: float = 1.0
    cycle: float = 1.0
    path: float = 1.0
    implies: float = 1.0
    loss: float = 1.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise ValueError(f"weight {k} must be positive, got {v}")

    @classmethod
    def penalties(cls, value: float, loss: float = 1.0) -> Weights:
        return cls(value, value, value, value, value, loss)

    @classmethod
    def defaults(cls, rc: ReducedComponent) -> Weights:
        """Every penalty weight = 1 + (total current)^2 * (total resistance).

        That bound exceeds the loss of any radial configuration, so the
        minimiser of the assembled HUBO is always feasible.
        """
        total_i = rc.original.total_current
        total_r = sum(e.resistance for e in rc.original.edges)
        return cls.penalties(1.0 + total_i ** 2 * total_r)

    @classmethod
    def from_json(cls, text: str) -> Weights:
        doc = json.loads(text)
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown weight(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in doc.items()})


class VariableRegistry:
    """Binary variables of one component, in a fixed deterministic order."""

    def __init__(self, rc: ReducedComponent, cycles: CycleSet):
        self.rc = rc
        self.cycles = cycles
        self.variables = Variables()
        self.arc: dict[tuple[str, str], int] = {}
        self.prefix: dict[tuple[int, int], int] = {}
        self.virtual: dict[tuple[int, int], int] = {}
        self._cache: dict[str, BinaryPolynomial] = {}
        for c in rc.chains:
            for a, b in ((c.u, c.v), (c.v, c.u)):
                if b != rc.root:
                    self.arc[a, b] = self.variables.add(f"e[{a},{b}]")
        for ci, c in enumerate(rc.chains):
            for i in range(1, c.k + 1):
                self.prefix[ci, i] = self.variables.add(f"d[{c.u}-{c.v}:{i}]")
        for bi in range(len(cycles.blockers)):
            for o in (0, 1):
                self.virtual[bi, o] = self.variables.add(f"w[{bi}:{o}]")

    def __len__(self) -> int:
        return len(self.variables)

    def zero(self) -> BinaryPolynomial:
        return BinaryPolynomial(self.variables)

    def const(self, c: float) -> BinaryPolynomial:
        return BinaryPolynomial.constant(self.variables, c)

    def x(self, i: int) -> BinaryPolynomial:
        return BinaryPolynomial.var(self.variables, i)

    def in_arcs(self, v: str) -> list[int]:
        return [self.arc[u, v] for u in self.rc.minor_adjacency[v] if (u, v) in self.arc]

    def route_arcs(self, route) -> list[int] | None:
        """Arc ids along a node route, or None if some arc is structurally absent."""
        ids = []
        for a, b in zip(route, route[1:]):
            if (a, b) not in self.arc:
                return None
            ids.append(self.arc[a, b])
        return ids

    def family_sizes(self) -> dict[str, int]:
        return {"arc": len(self.arc), "prefix": len(self.prefix), "virtual": len(self.virtual)}


def build_variables(rc: ReducedComponent, strategy: str = "all-simple-cycles",
                    cycle_cap: int = DEFAULT_CYCLE_CAP) -> VariableRegistry:
    check_component(rc)
    fixed = [f"{e.u}-{e.v}" for e in rc.original.edges if not e.switchable]
    if fixed:
        raise FormulationError(f"component {rc.index}: non-switchable line(s) {', '.join(fixed)} "
                               "inside a meshed component are not supported")
    return VariableRegistry(rc, cycle_set(rc, strategy, cycle_cap))


# -- constraint families ----------------------------------------------------------

def vertex_constraints(reg: VariableRegistry) -> BinaryPolynomial:
    """Every non-root reduced node has exactly one parent."""
    v = reg.variables
    return add_all(v, (linear_sum_penalty(v, reg.in_arcs(n)) for n in reg.rc.nodes if n != reg.rc.root))


def edge_constraints(reg: VariableRegistry) -> BinaryPolynomial:
    """At most one orientation of each reduced edge."""
    v = reg.variables
    out = reg.zero()
    for c in reg.rc.chains:
        if (c.u, c.v) in reg.arc and (c.v, c.u) in reg.arc:
            out.iadd_scaled(interaction_penalty(v, [reg.arc[c.u, c.v], reg.arc[c.v, c.u]]))
    return out


def _blocker_routes(reg: VariableRegistry, bi: int, o: int):
    b = reg.cycles.blockers[bi]
    if o == 0:
        return b.route_first, b.route_second
    return b.route_first[::-1], b.route_second[::-1]


def cycle_blocking(reg: VariableRegistry) -> BinaryPolynomial:
    """Forbid each directed traversal of the blocked cycles."""
    v = reg.variables
    out = reg.zero()
    for cyc in reg.cycles.cycles:
        if cyc.kind == "composite-blocker":
            continue
        closed = cyc.nodes + cyc.nodes[:1]
        for route in (closed, closed[::-1]):
            ids = reg.route_arcs(route)
            if ids is not None:
                out.iadd_scaled(interaction_penalty(v, ids))
    for bi in range(len(reg.cycles.blockers)):
        for o in (0, 1):
            _, closing = _blocker_routes(reg, bi, o)
            ids = reg.route_arcs(closing)
            if ids is not None:
                out.iadd_scaled(interaction_penalty(v, [reg.virtual[bi, o], *ids]))
    return out


def virtual_linkage(reg: VariableRegistry) -> BinaryPolynomial:
    """Tie each virtual arc to the product of the arcs of the route it replaces."""
    v = reg.variables
    out = reg.zero()
    for (bi, o), w in reg.virtual.items():
        forward, _ = _blocker_routes(reg, bi, o)
        ids = reg.route_arcs(forward)
        if ids is not None:
            out.iadd_scaled(implies_penalty(v, ids, w))
        for a, b in zip(forward, forward[1:]):
            if (a, b) in reg.arc:
                out.iadd_scaled(implies_penalty(v, [w], reg.arc[a, b]))
            else:
                out.iadd_scaled(reg.x(w))  # route can never close: pin w to 0
    return out


def cycle_constraints(reg: VariableRegistry) -> BinaryPolynomial:
    return cycle_blocking(reg) + virtual_linkage(reg)


def prefix_monotonicity(reg: VariableRegistry) -> BinaryPolynomial:
    """``d[i+1] => d[i]`` along every chain."""
    v = reg.variables
    out = reg.zero()
    for ci, c in enumerate(reg.rc.chains):
        for i in range(1, c.k):
            out.iadd_scaled(implies_penalty(v, [reg.prefix[ci, i + 1]], reg.prefix[ci, i]))
    return out


def arc_prefix_linkage(reg: VariableRegistry) -> BinaryPolynomial:
    """A closed chain is fed entirely from its parent end."""
    v = reg.variables
    out = reg.zero()
    for ci, c in enumerate(reg.rc.chains):
        for i in range(1, c.k + 1):
            d = reg.prefix[ci, i]
            if (c.u, c.v) in reg.arc:
                out.iadd_scaled(implies_penalty(v, [reg.arc[c.u, c.v]], d))
            if (c.v, c.u) in reg.arc:
                out.iadd_scaled(implies_penalty(v, [reg.arc[c.v, c.u]], d, negated=True))
    return out


def path_constraints(reg: VariableRegistry) -> BinaryPolynomial:
    return prefix_monotonicity(reg) + arc_prefix_linkage(reg)


# -- loss ------------------------------------------------------------------------

def _walk_paths(reg: VariableRegistry, u: str, v: str, cap: int):
    """Yield ``(w, mask)`` for every simple directed path v -> w avoiding u, arc e[u,v] included."""
    adj = reg.rc.minor_adjacency
    start = 1 << reg.arc[u, v]
    yield v, start
    count = 1
    stack = [(v, start, iter(adj[v]))]
    on_path = {u, v}
    while stack:
        n, mask, it = stack[-1]
        m = next(it, None)
        if m is None:
            stack.pop()
            on_path.discard(n)
            continue
        if m in on_path or (n, m) not in reg.arc:
            continue
        nm = mask | (1 << reg.arc[n, m])
        count += 1
        if count > cap:
            raise PathCapExceeded(f"more than {cap} downstream paths below arc {u}->{v}; "
                                  "use counting mode")
        yield m, nm
        on_path.add(m)
        stack.append((m, nm, iter(adj[m])))


def downstream_indicator(reg: VariableRegistry, arc: tuple[str, str], w: str,
                         cap: int = DEFAULT_PATH_CAP) -> BinaryPolynomial:
    """1 on a radial assignment exactly when ``w`` lies below the closed arc ``arc``."""
    u, v = arc
    if w == reg.rc.root:
        raise ValueError("the component root is never downstream")
    if arc not in reg.arc:
        raise ValueError(f"no arc variable for {u}->{v}")
    terms: dict[int, float] = {}
    for node, mask in _walk_paths(reg, u, v, cap):
        if node == w:
            terms[mask] = terms.get(mask, 0.0) + 1.0
    return BinaryPolynomial(reg.variables, terms)


def attributed_current(reg: VariableRegistry, w: str) -> BinaryPolynomial:
    """Current of reduced node ``w`` plus the chain nodes it feeds, in amperes."""
    key = f"attr:{w}"
    if key in reg._cache:
        return reg._cache[key]
    cur = reg.rc.currents
    out = reg.const(cur[w])
    for ci, c in enumerate(reg.rc.chains):
        if w not in (c.u, c.v):
            continue
        for i, n in enumerate(c.internal, start=1):
            d = reg.x(reg.prefix[ci, i])
            out.iadd_scaled(d if w == c.u else 1.0 - d, cur[n])
    reg._cache[key] = out
    return out


def through_current(reg: VariableRegistry, u: str, v: str,
                    cap: int = DEFAULT_PATH_CAP) -> BinaryPolynomial:
    """Current entering reduced node v over the closed arc u->v (0 when the arc is open)."""
    if (u, v) not in reg.arc:
        return reg.zero()
    out = reg.zero()
    for w, mask in _walk_paths(reg, u, v, cap):
        path = BinaryPolynomial(reg.variables, {mask: 1.0})
        out.iadd_scaled(path * attributed_current(reg, w))
    return out


def loss_objective(reg: VariableRegistry, cap: int = DEFAULT_PATH_CAP) -> BinaryPolynomial:
    """Ohmic loss sum of R * I^2 over every segment of G_C, as a multilinear polynomial."""
    cur = reg.rc.currents
    out = reg.zero()
    for ci, c in enumerate(reg.rc.chains):
        t_uv = through_current(reg, c.u, c.v, cap)
        t_vu = through_current(reg, c.v, c.u, cap)
        r_total = sum(c.resistances)
        out.iadd_scaled(t_uv.square(), r_total)
        out.iadd_scaled(t_vu.square(), r_total)
        d = [reg.x(reg.prefix[ci, i]) for i in range(1, c.k + 1)]
        currents = [cur[n] for n in c.internal]
        for j, r in enumerate(c.resistances):
            # fed from the u-end beyond segment j / from the v-end up to segment j
            fwd = add_all(reg.variables, (d[i].scale(currents[i]) for i in range(j, c.k)))
            back = add_all(reg.variables, ((1.0 - d[i]).scale(currents[i]) for i in range(j)))
            if fwd.terms:
                out.iadd_scaled(fwd.square() + (fwd * t_uv).scale(2.0), r)
            if back.terms:
                out.iadd_scaled(back.square() + (back * t_vu).scale(2.0), r)
    return out


def segment_currents(reg: VariableRegistry, chain_index: int, cap: int = DEFAULT_PATH_CAP):
    """``[(U_j, V_j)]``: current through segment j toward the v-end and toward the u-end."""
    c = reg.rc.chains[chain_index]
    cur = reg.rc.currents
    t_uv = through_current(reg, c.u, c.v, cap)
    t_vu = through_current(reg, c.v, c.u, cap)
    d = [reg.x(reg.prefix[chain_index, i]) for i in range(1, c.k + 1)]
    out = []
    for j in range(c.k + 1):
        fwd = add_all(reg.variables, (d[i].scale(cur[c.internal[i]]) for i in range(j, c.k)))
        back = add_all(reg.variables, ((1.0 - d[i]).scale(cur[c.internal[i]]) for i in range(j)))
        out.append((fwd + t_uv, back + t_vu))
    return out


# -- assembly -------------------------------------------------------------------

@dataclass
class HuboModel:
    registry: VariableRegistry
    weights: Weights
    families: dict[str, BinaryPolynomial]
    total: BinaryPolynomial = field(repr=False)

    @property
    def penalty(self) -> BinaryPolynomial:
        """Unweighted sum of all feasibility penalties."""
        return add_all(self.registry.variables, (self.families[f] for f in PENALTY_FAMILIES))

    def term_counts(self) -> dict[str, int]:
        counts = {f: p.term_count() for f, p in self.families.items()}
        counts["sum_of_families"] = sum(counts[f] for f in FAMILIES)
        counts["total"] = self.total.term_count()
        counts["total_degree_ge2"] = sum(1 for m in self.total.terms if m.bit_count() >= 2)
        return counts


def build_families(reg: VariableRegistry, path_cap: int = DEFAULT_PATH_CAP) -> dict[str, BinaryPolynomial]:
    """The six summands, mapped to their weights as documented in the README."""
    return {
        "vertex": vertex_constraints(reg),
        "edge": edge_constraints(reg),
        "cycle": cycle_blocking(reg),
        "path": prefix_monotonicity(reg),
        "implies": arc_prefix_linkage(reg) + virtual_linkage(reg),
        "loss": loss_objective(reg, path_cap),
    }


def assemble(rc: ReducedComponent, reg: VariableRegistry | None = None, weights: Weights | None = None,
             strategy: str = "all-simple-cycles", path_cap: int = DEFAULT_PATH_CAP,
             cycle_cap: int = DEFAULT_CYCLE_CAP) -> HuboModel:
    reg = reg or build_variables(rc, strategy, cycle_cap)
    weights = weights or Weights.defaults(rc)
    fams = build_families(reg, path_cap)
    total = reg.zero()
    for f in FAMILIES:
        total.iadd_scaled(fams[f], getattr(weights, f))
    return HuboModel(reg, weights, fams, total)


# -- feasibility and decoding -----------------------------------------------------------

@dataclass(frozen=True)
class Configuration:
    """Closed reduced edges as (parent, child) arcs and open-segment index per open chain."""
    closed: frozenset[tuple[str, str]]
    open_positions: tuple[tuple[int, int], ...]  # sorted (chain index, segment index)


def _penalties(reg: VariableRegistry) -> list[BinaryPolynomial]:
    if "penalties" not in reg._cache:
        reg._cache["penalties"] = [vertex_constraints(reg), edge_constraints(reg), cycle_blocking(reg),
                                   prefix_monotonicity(reg), arc_prefix_linkage(reg) + virtual_linkage(reg)]
    return reg._cache["penalties"]


def _as_mask(reg: VariableRegistry, assignment) -> int:
    if isinstance(assignment, int):
        return assignment
    if isinstance(assignment, dict):
        return mask_of(i for i, b in assignment.items() if b)
    if len(assignment) != len(reg):
        raise ValueError(f"assignment has {len(assignment)} values, registry has {len(reg)}")
    return mask_of(i for i, b in enumerate(assignment) if b)


def is_feasible(reg: VariableRegistry, assignment) -> bool:
    ones = _as_mask(reg, assignment)
    return all(p.evaluate(ones) == 0 for p in _penalties(reg))


def decode(reg: VariableRegistry, assignment) -> Configuration:
    ones = _as_mask(reg, assignment)
    if not is_feasible(reg, ones):
        raise InfeasibleAssignment("assignment violates at least one penalty family")
    closed = frozenset(a for a, i in reg.arc.items() if ones >> i & 1)
    positions = []
    for ci, c in enumerate(reg.rc.chains):
        if (c.u, c.v) in closed or (c.v, c.u) in closed:
            continue
        b = max((i for i in range(1, c.k + 1) if ones >> reg.prefix[ci, i] & 1), default=0)
        positions.append((ci, b))
    return Configuration(closed, tuple(positions))


def encode(reg: VariableRegistry, cfg: Configuration) -> int:
    """Bitmask of the unique zero-penalty assignment for ``cfg``."""
    ones = mask_of(reg.arc[a] for a in cfg.closed)
    opened = dict(cfg.open_positions)
    for ci, c in enumerate(reg.rc.chains):
        if ci in opened:
            fed = opened[ci]
        elif (c.u, c.v) in cfg.closed:
            fed = c.k
        else:
            fed = 0
        ones |= mask_of(reg.prefix[ci, i] for i in range(1, fed + 1))
    for (bi, o), w in reg.virtual.items():
        ids = reg.route_arcs(_blocker_routes(reg, bi, o)[0])
        if ids is not None and all(ones >> i & 1 for i in ids):
            ones |= 1 << w
    return ones
