"""Resource estimation, analytic fidelity lower bounds and the surface-code
distance gap for biased noise."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .circuit import Circuit, Role, conditional_count, depth, fired_conditionals


@dataclass(frozen=True)
class GateCost:
    t_count: int
    t_depth: int
    total_depth: int

    @property
    def clifford_depth(self) -> int:
        return self.total_depth - self.t_depth


def _default_table() -> dict[str, GateCost]:
    clifford = GateCost(0, 0, 1)
    return {
        "X": clifford, "Z": clifford, "CX": clifford, "CZ": clifford,
        "SWAP": GateCost(0, 0, 3),          # three CNOTs
        "Toffoli": GateCost(7, 3, 10),
        "CSWAP": GateCost(7, 3, 12),
    }


@dataclass
class DecompositionCosts:
    """Clifford+T cost per gate kind.

    MCX with c controls is costed as ``mcx_toffolis_per_control * (c - 1)``
    Toffolis run back to back (a clean-ancilla ladder, compute and uncompute).
    """
    table: dict[str, GateCost] = field(default_factory=_default_table)
    mcx_toffolis_per_control: int = 2

    def cost(self, kind: str, ncontrols: int = 0) -> GateCost:
        if kind == "MCX":
            n = self.mcx_toffolis_per_control * (ncontrols - 1)
            t = self.table["Toffoli"]
            return GateCost(n * t.t_count, n * t.t_depth, n * t.total_depth)
        return self.table[kind]


DEFAULT_COSTS = DecompositionCosts()


@dataclass(frozen=True)
class ResourceReport:
    qubits: int
    depth: int
    t_count: int
    t_depth: int
    clifford_depth: int
    cc_worst: int
    cc_mean: float
    ir_depth: int = 0
    roles: dict = field(default_factory=dict, compare=False)

    def as_row(self) -> dict:
        return {"qubits": self.qubits, "depth": self.depth, "tCount": self.t_count,
                "tDepth": self.t_depth, "cliffordDepth": self.clifford_depth,
                "ccWorst": self.cc_worst, "ccMean": self.cc_mean}


def _weighted_depth(circuit: Circuit, weights: Sequence[int]) -> int:
    ready = [0] * circuit.width
    for g, w in zip(circuit.gates, weights):
        qs = g.qubits
        t = max((ready[q] for q in qs), default=0) + w
        for q in qs:
            ready[q] = t
    return max(ready, default=0)


def resources(circuit: Circuit, memories: Optional[Iterable[Sequence[int]]] = None,
              costs: DecompositionCosts = DEFAULT_COSTS) -> ResourceReport:
    """Structural cost of ``circuit`` after Clifford+T decomposition.

    ``depth``, ``t_depth`` and ``clifford_depth`` are critical-path lengths
    where each gate occupies its operands for its decomposed depth, T layers
    and non-T layers respectively.  ``cc_worst`` counts every conditioned
    gate; ``cc_mean`` averages the fired ones over ``memories`` (equal to
    ``cc_worst`` when no memories are given).
    """
    per_gate = [costs.cost(g.kind, len(g.controls)) for g in circuit.gates]
    t_count = sum(c.t_count for c in per_gate)
    total = _weighted_depth(circuit, [c.total_depth for c in per_gate])
    t_depth = _weighted_depth(circuit, [c.t_depth for c in per_gate])
    cliff = _weighted_depth(circuit, [c.clifford_depth for c in per_gate])
    worst = conditional_count(circuit)
    if memories is None:
        mean = float(worst)
    else:
        fired = [fired_conditionals(circuit, mem) for mem in memories]
        mean = float(np.mean(fired)) if fired else float(worst)
    census = {r.value: 0 for r in Role}
    for r in circuit.roles:
        census[r.value] += 1
    return ResourceReport(circuit.width, total, t_count, t_depth, cliff, worst, mean,
                          depth(circuit), census)


def classical_ctrl_samples(arch: str, m: int, k: int, opts, memories) -> list[int]:
    """Fired conditional-gate count per memory, re-synthesizing each time.

    Needed because the lazy-swapping circuit depends on the data.
    """
    from .synth import synthesize
    out = []
    for mem in memories:
        c = synthesize(arch, m, k, mem, opts)
        out.append(fired_conditionals(c, mem))
    return out


def lazy_expected_ccount(m: int, k: int) -> float:
    """Exact mean fired writes of lazy swapping over uniform data.

    Each of the 2**k rounds plus the closing unload writes a vector whose
    entries are independent fair bits.
    """
    return ((1 << k) + 1) * (1 << m) / 2


def estimate(arch: str, m: int, k: int, opts=(), samples: int = 100, seed: int = 0,
             costs: DecompositionCosts = DEFAULT_COSTS) -> ResourceReport:
    """Resources of one synthesized instance plus the cc mean over random data."""
    from .synth import MemoryData, synthesize
    mems = [MemoryData.random(m + k, (seed, i)) for i in range(max(samples, 1))]
    circ = synthesize(arch, m, k, mems[0], opts)
    rep = resources(circ, costs=costs)
    fired = classical_ctrl_samples(arch, m, k, opts, mems)
    worst = max(rep.cc_worst, max(fired))
    return ResourceReport(rep.qubits, rep.depth, rep.t_count, rep.t_depth,
                          rep.clifford_depth, worst, float(np.mean(fired)), rep.ir_depth,
                          rep.roles)


# ---------------------------------------------------------------- fits

def fit_r2(xs: Sequence[float], ys: Sequence[float], degree: int) -> float:
    """Coefficient of determination of a least-squares polynomial fit."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    coef = np.polyfit(x, y, degree)
    resid = y - np.polyval(coef, x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 1.0
    return 1.0 - float(np.sum(resid ** 2)) / ss_tot


def loading_depth(m: int, pipeline: bool) -> int:
    """ASAP depth of the address-loading stage alone."""
    from .synth import QramConfig, loading_circuit
    opts = ["pipeline"] if pipeline else []
    return depth(loading_circuit(QramConfig.of(m, 0, opts)))


# ---------------------------------------------------------------- bounds

BOUND_ARCHS = ("BB_phase", "BB_bit", "VirtualZ", "VirtualX", "SQC")
_ALIASES = {a.lower(): a for a in BOUND_ARCHS}
_ALIASES.update({"bbphase": "BB_phase", "bbbit": "BB_bit", "virtual_z": "VirtualZ",
                 "virtual_x": "VirtualX"})


def bound_arch(name: str) -> str:
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown bound family {name!r}; choose from {BOUND_ARCHS}") from None


def fidelity_bound(arch: str, epsilon: float, m: int, k: int = 0) -> float:
    """Analytic query-fidelity lower bound, clamped at 0."""
    arch = bound_arch(arch)
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if m < 1 or k < 0:
        raise ValueError("m >= 1 and k >= 0 are required")
    if arch == "BB_phase":
        loss = 4 * epsilon * m * m
    elif arch == "BB_bit":
        loss = 8 * epsilon * m * m
    elif arch == "VirtualZ":
        loss = 8 * epsilon * (m + 1) * 2 ** k * (k + m)
    elif arch == "VirtualX":
        loss = 8 * epsilon * (m + 1) * 2 ** k * (k + 2 ** m)
    else:
        loss = epsilon * k * 2 ** k
    return max(0.0, 1 - loss)


def code_distance_gap(p: float, p_th: float, m: int, k: int) -> float:
    """d_x - d_z (per unit of log-scaled distance) that equalizes X and Z fidelity."""
    if p <= 0:
        raise ValueError("physical error rate p must be positive")
    if p >= p_th:
        raise ValueError("p must be below threshold p_th")
    if m < 1 or k < 0:
        raise ValueError("m >= 1 and k >= 0 are required")
    return math.log((k + m) / (k + 2 ** m)) / math.log(p / p_th)
