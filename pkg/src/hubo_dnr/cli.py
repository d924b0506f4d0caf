"""``dnr`` command line: decomposition, HUBO construction, counts, QRE and baselines."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import qre
from .formulation import DEFAULT_PATH_CAP, FormulationError, Weights, assemble
from .network import BUILTIN_SYNTHETIC, NetworkError, load_network, node_key
from .oracle import DEFAULT_CONFIG_CAP, OracleError, optimal_configuration
from .reduce import CYCLE_STRATEGIES, DEFAULT_CYCLE_CAP, DecompositionError, ReducedComponent, decompose
from .spin import DEFAULT_MEMORY_BUDGET, IsingSummary, counting_mode

TABLE_HEADER = ["component", "nodes_gc", "nodes_g0", "edges_gc", "edges_g0", "interactions",
                "logical_qubits", "logical_rotation_gates", "pauli_terms", "interactions_degree_ge2",
                "max_term_weight", "exact_counts", "ref_interactions", "ref_logical_qubits",
                "ref_logical_rotation_gates", "ratio_interactions", "ratio_logical_qubits",
                "ratio_logical_rotation_gates"]

# published (interactions, logical qubits, rotation gates) for networks of the same shape
REFERENCE_COUNTS = {
    "ieee33": (33_616, 667, 59_296),
    "arnhem-like-0": (42, 14, 94),
    "arnhem-like-1": (150, 17, 272),
    "arnhem-like-2": (607, 53, 1_110),
}

HANDLED = (NetworkError, DecompositionError, FormulationError, qre.EstimationError, OracleError,
           ValueError, OSError)


class UsageError(Exception):
    pass


@dataclasses.dataclass(frozen=True)
class RunConfig:
    input: str
    outdir: Path
    weights: dict | None = None
    cycle_strategy: str = CYCLE_STRATEGIES[0]
    cycle_cap: int = DEFAULT_CYCLE_CAP
    path_cap: int = DEFAULT_PATH_CAP
    config_cap: int = DEFAULT_CONFIG_CAP
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    profiles: str | None = None
    budget: float = qre.DEFAULT_BUDGET
    fmt: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        for name in ("cycle_cap", "path_cap", "config_cap", "memory_budget", "jobs"):
            if getattr(self, name) <= 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if not 0 < self.budget < 1:
            raise UsageError("--budget must lie in (0, 1)")

    @property
    def label(self) -> str:
        if self.input is None:
            return "manual"
        p = Path(self.input)
        return self.input if not p.exists() else p.stem


def component_weights(rc: ReducedComponent, overrides: dict | None) -> Weights:
    w = Weights.defaults(rc)
    return dataclasses.replace(w, **overrides) if overrides else w


def load_weights(path: str) -> dict:
    """Weight overrides; components keep their data-dependent defaults for missing keys."""
    text = Path(path).read_text()
    try:
        Weights.from_json(text)  # rejects unknown names and non-positive values
    except (ValueError, TypeError, AttributeError) as exc:
        raise UsageError(f"{path}: {exc}") from None
    return {k: float(v) for k, v in json.loads(text).items()}


# -- per-component work (runs in worker processes for --jobs > 1) ----------------------

def _model(rc: ReducedComponent, cfg: RunConfig):
    return assemble(rc, weights=component_weights(rc, cfg.weights), strategy=cfg.cycle_strategy,
                    path_cap=cfg.path_cap, cycle_cap=cfg.cycle_cap)


def _counts_job(args) -> dict:
    rc, cfg = args
    model = _model(rc, cfg)
    summary = counting_mode(model.total, cfg.memory_budget)
    tc = model.term_counts()
    return {"component": rc.index, "stats": rc.stats(), "summary": summary.to_dict(),
            "term_counts": tc, "variables": model.registry.family_sizes(),
            "weights": dataclasses.asdict(model.weights)}


def _hubo_job(args) -> dict:
    rc, cfg = args
    model = _model(rc, cfg)
    return {"component": rc.index, "variables": list(model.registry.variables.names),
            "hubo": model.total.serialize(), "term_counts": model.term_counts(),
            "weights": dataclasses.asdict(model.weights)}


def _solve_job(args) -> dict:
    rc, cfg = args
    res = optimal_configuration(rc, cfg.config_cap)
    closed = sorted((sorted(e, key=node_key) for e in res.config.closed_edges),
                    key=lambda e: (node_key(e[0]), node_key(e[1])))
    return {
        "component": rc.index,
        "optimal_config": {
            "closed_edges": [list(e) for e in closed],
            "closed_minor_arcs": [list(a) for a in sorted(res.minor.closed,
                                                          key=lambda a: (node_key(a[0]), node_key(a[1])))],
            "open_positions": [{"chain": f"{rc.chains[ci].u}-{rc.chains[ci].v}", "segment": b}
                               for ci, b in res.minor.open_positions],
        },
        "loss_w": res.loss,
        "n_configurations": res.n_configurations,
        "ties": res.ties,
    }


def _run(job, rcs: list[ReducedComponent], cfg: RunConfig) -> list[dict]:
    work = [(rc, cfg) for rc in rcs]
    if cfg.jobs == 1 or len(work) == 1:
        return [job(w) for w in work]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(job, work))  # map keeps input order


# -- report formatting ---------------------------------------------------------------

def _ratio(ours: int, ref: int | None) -> str:
    return "" if ref is None else f"{ours / ref:.6g}"


def table_rows(label: str, results: list[dict]) -> list[list]:
    rows = []
    ref = REFERENCE_COUNTS.get(label) if len(results) == 1 else None
    for r in results:
        s, st, tc = r["summary"], r["stats"], r["term_counts"]
        refs = ref or (None, None, None)
        ours = (s["hubo_interactions"], s["logical_qubits"], s["rotation_gates_one_layer"])
        rows.append([f"{label}:{r['component']}", st["nodes_gc"], st["nodes_g0"], st["edges_gc"],
                     st["edges_g0"], *ours, s["pauli_terms"], tc["total_degree_ge2"],
                     s["max_term_weight"], str(s["exact"]).lower(),
                     *("" if x is None else x for x in refs),
                     *(_ratio(o, x) for o, x in zip(ours, refs))])
    return rows


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _qre_estimates(label: str, results: list[dict], cfg: RunConfig):
    profiles = qre.load_profiles(cfg.profiles)
    if not profiles:
        raise UsageError("no hardware profiles given")
    rows, docs = [], []
    for r in results:
        s = IsingSummary.from_dict(r["summary"])
        est = qre.tradeoff_region(s, profiles, cfg.budget)
        name = f"{label}:{r['component']}"
        rows.extend(qre.qre_rows(name, s, est))
        docs.append({"component": name, "exact_counts": s.exact,
                     "estimates": [qre.estimate_dict(e) for e in est]})
    return rows, docs


# -- commands --------------------------------------------------------------------------

class Outputs:
    """Files written by one command; removed again if the command fails."""

    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.written: list[Path] = []

    def write(self, name: str, text: str) -> Path:
        self.outdir.mkdir(parents=True, exist_ok=True)
        p = self.outdir / name
        self.written.append(p)
        p.write_text(text)
        return p

    def rollback(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)


def _components(cfg: RunConfig, select: int | None = None) -> list[ReducedComponent]:
    rcs = decompose(load_network(cfg.input))
    if select is not None:
        rcs = [rc for rc in rcs if rc.index == select]
        if not rcs:
            raise UsageError(f"no non-trivial component with index {select}")
    return rcs


def cmd_decompose(cfg: RunConfig, out: Outputs, args) -> None:
    rcs = _components(cfg, args.component)
    doc = {"input": cfg.label, "components": [
        {"component": rc.index, "root": rc.root, "stats": rc.stats(), "minor_nodes": list(rc.nodes),
         "chains": [{"u": c.u, "v": c.v, "internal": list(c.internal), "resistances": list(c.resistances)}
                    for c in rc.chains]}
        for rc in rcs]}
    if cfg.fmt == "json":
        out.write("decomposition.json", _json(doc))
    else:
        rows = [[f"{cfg.label}:{rc.index}", *rc.stats().values()] for rc in rcs]
        out.write("decomposition.csv", _csv(["component", "nodes_gc", "nodes_g0", "edges_gc", "edges_g0"], rows))
    for rc in rcs:
        s = rc.stats()
        print(f"component {rc.index}: root {rc.root}, G_C {s['nodes_gc']}/{s['edges_gc']}, "
              f"G_0 {s['nodes_g0']}/{s['edges_g0']} (nodes/edges)")


def cmd_build_hubo(cfg: RunConfig, out: Outputs, args) -> None:
    for r in _run(_hubo_job, _components(cfg, args.component), cfg):
        i = r["component"]
        out.write(f"hubo_{i}.txt", r["hubo"])
        out.write(f"variables_{i}.txt", "\n".join(r["variables"]) + "\n")
        out.write(f"hubo_{i}.json", _json({k: r[k] for k in ("component", "term_counts", "weights")}))
        print(f"component {i}: {len(r['variables'])} variables, {r['term_counts']['total']} terms")


def cmd_counts(cfg: RunConfig, out: Outputs, args) -> None:
    results = _run(_counts_job, _components(cfg, args.component), cfg)
    out.write("counts.json", _json({"input": cfg.label, "components": results}))
    out.write("counts.csv", _csv(TABLE_HEADER, table_rows(cfg.label, results)))
    for r in results:
        print(json.dumps(r["summary"]))


def _summaries_for_qre(cfg: RunConfig, args) -> tuple[str, list[dict]]:
    if args.qubits is not None or args.rotations is not None:
        if args.qubits is None or args.rotations is None:
            raise UsageError("--qubits and --rotations go together")
        pauli = args.rotations - 2 * args.qubits
        if args.qubits <= 0 or pauli < 0:
            raise UsageError("need qubits > 0 and rotations >= 2 * qubits")
        s = IsingSummary.of(args.qubits, pauli, exact=True)
        return "manual", [{"component": 0, "summary": s.to_dict()}]
    if args.counts:
        doc = json.loads(Path(args.counts).read_text())
        return doc["input"], doc["components"]
    if cfg.input is None:
        raise UsageError("qre needs --input, --counts or --qubits/--rotations")
    return cfg.label, _run(_counts_job, _components(cfg, args.component), cfg)


def cmd_qre(cfg: RunConfig, out: Outputs, args) -> None:
    label, results = _summaries_for_qre(cfg, args)
    rows, docs = _qre_estimates(label, results, cfg)
    if cfg.fmt == "json":
        out.write("qre.json", _json(docs))
    else:
        out.write("qre.csv", _csv(qre.QRE_CSV_HEADER, rows))
    for row in rows[::3]:
        print(f"{row[0]} {row[1]}: d={row[2]} physical_qubits={row[4]} runtime={row[6]} s")


def cmd_solve_classical(cfg: RunConfig, out: Outputs, args) -> None:
    results = _run(_solve_job, _components(cfg, args.component), cfg)
    out.write("solution.json", _json({"input": cfg.label, "components": results}))
    for r in results:
        print(f"component {r['component']}: loss {r['loss_w']:.6g} W over "
              f"{r['n_configurations']} configurations{' (ties)' if r['ties'] else ''}")


def cmd_report(cfg: RunConfig, out: Outputs, args) -> None:
    results = _run(_counts_job, _components(cfg, None if args.all else args.component), cfg)
    rows = table_rows(cfg.label, results)
    qrows, qdocs = _qre_estimates(cfg.label, results, cfg)
    if cfg.fmt == "json":
        out.write("table1.json", _json([dict(zip(TABLE_HEADER, r)) for r in rows]))
        out.write("qre.json", _json(qdocs))
    else:
        out.write("table1.csv", _csv(TABLE_HEADER, rows))
        out.write("qre.csv", _csv(qre.QRE_CSV_HEADER, qrows))
    for r in rows:
        print(", ".join(f"{h}={v}" for h, v in zip(TABLE_HEADER[:8], r[:8])))
        if r[15] != "":
            print(f"  deviation vs reference: interactions x{r[15]}, qubits x{r[16]}, rotations x{r[17]}")


COMMANDS = {
    "decompose": cmd_decompose,
    "build-hubo": cmd_build_hubo,
    "counts": cmd_counts,
    "qre": cmd_qre,
    "solve-classical": cmd_solve_classical,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-i", "--input", help=f"network: .json file, CSV directory, or one of "
                                              f"{', '.join(('ieee33',) + BUILTIN_SYNTHETIC)}")
    common.add_argument("-o", "--outdir", default="out", help="output directory (default: out)")
    common.add_argument("--weights", metavar="FILE", help="JSON object of penalty/loss weights")
    common.add_argument("--cycle-strategy", choices=CYCLE_STRATEGIES, default=CYCLE_STRATEGIES[0])
    common.add_argument("--cycle-cap", type=int, default=DEFAULT_CYCLE_CAP)
    common.add_argument("--path-cap", type=int, default=DEFAULT_PATH_CAP)
    common.add_argument("--config-cap", type=int, default=DEFAULT_CONFIG_CAP)
    common.add_argument("--memory-budget", type=int, default=DEFAULT_MEMORY_BUDGET, metavar="BYTES")
    common.add_argument("--profiles", metavar="FILE", help="JSON array of hardware profiles")
    common.add_argument("--budget", type=float, default=qre.DEFAULT_BUDGET, metavar="EPS",
                        help="total error budget (default: %(default)s)")
    common.add_argument("--jobs", type=int, default=1, metavar="N")
    common.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    common.add_argument("--component", type=int, help="only this component index")

    parser = argparse.ArgumentParser(prog="dnr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "report":
            p.add_argument("--all", action="store_true", help="every non-trivial component (default)")
        if name == "qre":
            p.add_argument("--counts", metavar="FILE", help="counts.json from a previous `dnr counts`")
            p.add_argument("--qubits", type=int, help="logical qubits of a hand-specified summary")
            p.add_argument("--rotations", type=int, help="rotation gates of a hand-specified summary")
    return parser


def _module_of(exc: BaseException) -> str:
    mod = type(exc).__module__.rsplit(".", 1)[-1]
    return mod if mod in ("network", "reduce", "hubo", "formulation", "spin", "qre", "oracle") else "cli"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Outputs(Path(args.outdir))
    try:
        if args.input is None and args.command != "qre":
            raise UsageError("--input is required")
        cfg = RunConfig(
            input=args.input, outdir=Path(args.outdir),
            weights=load_weights(args.weights) if args.weights else None,
            cycle_strategy=args.cycle_strategy, cycle_cap=args.cycle_cap, path_cap=args.path_cap,
            config_cap=args.config_cap, memory_budget=args.memory_budget, profiles=args.profiles,
            budget=args.budget, fmt=args.fmt, jobs=args.jobs)
        COMMANDS[args.command](cfg, out, args)
    except UsageError as exc:
        out.rollback()
        parser.print_usage(sys.stderr)
        print(f"dnr: usage error: {exc}", file=sys.stderr)
        return 2
    except HANDLED as exc:
        out.rollback()
        print(f"dnr {args.command}: error in {_module_of(exc)}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
