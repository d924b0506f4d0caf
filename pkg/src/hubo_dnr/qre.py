"""Parametric surface-code resource model for one optimisation layer.

The error budget is split evenly into a logical-error share, a rotation
synthesis share and a reserve. Rotations run one after another, one logical
cycle each, with their T states supplied by factories running alongside;
``t_count`` is that factory demand.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

from .spin import IsingSummary

MAX_DISTANCE = 99
DEFAULT_BUDGET = 1e-3
DEFAULT_LAYOUT_OVERHEAD = 2.0
QRE_CSV_HEADER = ["component", "profile", "code_distance", "logical_qubits", "physical_qubits",
                  "t_count", "runtime_s", "exact_counts"]


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class HardwareProfile:
    name: str
    t_gate: float
    t_meas: float
    p_phys: float
    p_threshold: float = 0.01
    code_prefactor_a: float = 0.03
    cycle_gate_factor: int = 4
    cycle_meas_factor: int = 2
    synth_a: float = 0.53
    synth_b: float = 5.3
    family: str = "gate-based"

    def __post_init__(self):
        if not (self.t_gate > 0 and self.t_meas > 0):
            raise EstimationError(f"{self.name}: gate and measurement times must be positive")
        if not 0 < self.p_phys < self.p_threshold:
            raise EstimationError(f"{self.name}: need 0 < p_phys < p_threshold")
        if self.family not in ("gate-based", "majorana"):
            raise EstimationError(f"{self.name}: unknown family {self.family!r}")

    def cycle_time(self, d: int) -> float:
        """Duration of one logical cycle at distance ``d``, in seconds."""
        return d * (self.cycle_gate_factor * self.t_gate + self.cycle_meas_factor * self.t_meas)

    def logical_error_rate(self, d: int) -> float:
        return self.code_prefactor_a * (self.p_phys / self.p_threshold) ** ((d + 1) / 2)


@dataclass(frozen=True)
class PhysicalEstimate:
    profile: str
    code_distance: int
    logical_qubits: int
    physical_qubits: int
    t_count: int
    logical_cycles: int
    runtime: float
    error_budget_used: float


def load_profiles(path: str | Path | None = None) -> list[HardwareProfile]:
    if path is None:
        where, text = "built-in profiles", resources.files("hubo_dnr").joinpath("data", "profiles.json").read_text()
    else:
        where, text = str(path), Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EstimationError(f"{where}: {exc}") from None
    if not isinstance(doc, list):
        raise EstimationError(f"{where}: expected a JSON array of profiles")
    out = []
    for i, p in enumerate(doc):
        try:
            out.append(HardwareProfile(**p))
        except TypeError as exc:
            raise EstimationError(f"{where}[{i}]: {exc}") from None
    return out


def _check(s: IsingSummary, budget: float) -> None:
    if s.logical_qubits <= 0 or s.rotation_gates_one_layer <= 0:
        raise EstimationError("empty circuit: nothing to estimate")
    if not 0 < budget < 1:
        raise EstimationError(f"error budget must lie in (0, 1), got {budget}")


def t_per_rotation(s: IsingSummary, prof: HardwareProfile, budget: float) -> int:
    rot = s.rotation_gates_one_layer
    return math.ceil(prof.synth_a * math.log2(rot / (budget / 3)) + prof.synth_b)


def logical_cycles(s: IsingSummary) -> int:
    return s.rotation_gates_one_layer


def required_code_distance(s: IsingSummary, prof: HardwareProfile, budget: float = DEFAULT_BUDGET) -> int:
    """Smallest odd d >= 3 whose accumulated logical failure stays within a third of ``budget``."""
    _check(s, budget)
    volume = s.logical_qubits * logical_cycles(s)
    for d in range(3, MAX_DISTANCE + 1, 2):
        if volume * prof.logical_error_rate(d) <= budget / 3:
            return d
    raise EstimationError(f"{prof.name}: no code distance <= {MAX_DISTANCE} meets budget {budget}")


def physical_estimate(s: IsingSummary, prof: HardwareProfile, budget: float = DEFAULT_BUDGET,
                      layout_overhead: float = DEFAULT_LAYOUT_OVERHEAD,
                      distance: int | None = None) -> PhysicalEstimate:
    d = required_code_distance(s, prof, budget) if distance is None else distance
    if d % 2 == 0 or d < 3:
        raise EstimationError(f"code distance must be odd and >= 3, got {d}")
    cycles = logical_cycles(s)
    logical_err = s.logical_qubits * cycles * prof.logical_error_rate(d)
    return PhysicalEstimate(
        profile=prof.name,
        code_distance=d,
        logical_qubits=s.logical_qubits,
        physical_qubits=math.ceil(2 * d * d * s.logical_qubits * layout_overhead),
        t_count=s.rotation_gates_one_layer * t_per_rotation(s, prof, budget),
        logical_cycles=cycles,
        runtime=cycles * prof.cycle_time(d),
        error_budget_used=logical_err + budget / 3,
    )


def tradeoff_region(s: IsingSummary, profiles: list[HardwareProfile], budget: float = DEFAULT_BUDGET,
                    layout_overhead: float = DEFAULT_LAYOUT_OVERHEAD) -> list[PhysicalEstimate]:
    """Per profile: the minimal distance and two over-distanced points (d+2, d+4)."""
    if not profiles:
        raise EstimationError("at least one hardware profile is required")
    out = []
    for prof in profiles:
        d = required_code_distance(s, prof, budget)
        out.extend(physical_estimate(s, prof, budget, layout_overhead, dd) for dd in (d, d + 2, d + 4))
    return out


def qre_rows(component: str, s: IsingSummary, estimates: list[PhysicalEstimate]) -> list[list]:
    return [[component, e.profile, e.code_distance, e.logical_qubits, e.physical_qubits,
             e.t_count, f"{e.runtime:.6e}", str(s.exact).lower()] for e in estimates]


def to_csv(rows: list[list], header: list[str] = QRE_CSV_HEADER) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def estimate_dict(e: PhysicalEstimate) -> dict:
    return asdict(e)
