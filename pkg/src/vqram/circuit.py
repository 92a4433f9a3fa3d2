"""Gate set, circuit container, ASAP depth and the JSON wire format.

Every gate kind here is a permutation of computational basis states with a
phase in {1, -1} (Pauli Y injected by the noise layer adds +-i), which is what
lets the path simulator keep a constant number of terms.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

SCHEMA_VERSION = 1


class Role(str, Enum):
    ADDRESS = "Address"
    BUS = "Bus"
    ROUTER = "Router"
    ROUTER_DATA = "RouterData"
    DATA_NODE = "DataNode"
    ROUTING_ANCILLA = "RoutingAncilla"
    UNUSED = "Unused"


# kind -> (number of controls or None for "at least one", number of targets)
ARITY = {
    "X": (0, 1),
    "Z": (0, 1),
    "CX": (1, 1),
    "CZ": (1, 1),
    "SWAP": (0, 2),
    "CSWAP": (1, 2),
    "Toffoli": (2, 1),
    "MCX": (None, 1),
}
KINDS = tuple(ARITY)


@dataclass(frozen=True)
class Condition:
    """Gate fires only when memory[bit] == value."""
    bit: int
    value: int


@dataclass(frozen=True)
class Gate:
    kind: str
    controls: tuple[int, ...] = ()
    targets: tuple[int, ...] = ()
    cond: Optional[Condition] = None

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    def arity_problem(self) -> Optional[str]:
        if self.kind not in ARITY:
            return f"unknown gate kind {self.kind!r}"
        nc, nt = ARITY[self.kind]
        if len(self.targets) != nt:
            return f"{self.kind} expects {nt} target(s), got {len(self.targets)}"
        if nc is None:
            if len(self.controls) < 1:
                return "MCX needs at least one control"
        elif len(self.controls) != nc:
            return f"{self.kind} expects {nc} control(s), got {len(self.controls)}"
        return None


def x(q): return Gate("X", (), (q,))
def z(q): return Gate("Z", (), (q,))
def cx(c, t): return Gate("CX", (c,), (t,))
def cz(a, b): return Gate("CZ", (a,), (b,))
def swap(a, b): return Gate("SWAP", (), (a, b))
def cswap(c, a, b): return Gate("CSWAP", (c,), (a, b))
def toffoli(c1, c2, t): return Gate("Toffoli", (c1, c2), (t,))


def mcx(controls: Sequence[int], t: int) -> Gate:
    """Multi-controlled X using the narrowest named kind for the control count."""
    controls = tuple(controls)
    if len(controls) == 0:
        return x(t)
    if len(controls) == 1:
        return cx(controls[0], t)
    if len(controls) == 2:
        return toffoli(controls[0], controls[1], t)
    return Gate("MCX", controls, (t,))


def conditioned(g: Gate, bit: int, value: int = 1) -> Gate:
    return Gate(g.kind, g.controls, g.targets, Condition(bit, value))


@dataclass(frozen=True)
class Circuit:
    """Ordered gates over role-tagged qubits.

    ``layout`` is optional metadata from the synthesizers (named qubits, tree
    coordinates); it is not part of the wire format and not compared.
    """
    width: int
    roles: tuple[Role, ...]
    gates: tuple[Gate, ...] = ()
    memory_size: int = 0
    layout: dict = field(default_factory=dict, compare=False, repr=False)

    def qubits_with(self, role: Role) -> list[int]:
        return [q for q, r in enumerate(self.roles) if r == role]

    @property
    def address_qubits(self) -> list[int]:
        """Address register, most significant bit first."""
        return self.qubits_with(Role.ADDRESS)

    @property
    def bus(self) -> int:
        b = self.qubits_with(Role.BUS)
        if len(b) != 1:
            raise ValueError(f"circuit has {len(b)} bus qubits, expected 1")
        return b[0]

    def __len__(self):
        return len(self.gates)


class CircuitBuilder:
    """Mutable helper for the synthesizers; ``build`` freezes the result."""

    def __init__(self, memory_size: int = 0):
        self.roles: list[Role] = []
        self.gates: list[Gate] = []
        self.memory_size = memory_size
        self.names: dict[str, int] = {}

    def qubit(self, role: Role, name: Optional[str] = None) -> int:
        q = len(self.roles)
        self.roles.append(role)
        if name is not None:
            self.names[name] = q
        return q

    def add(self, *gates: Gate):
        self.gates.extend(gates)

    def extend(self, gates: Iterable[Gate]):
        self.gates.extend(gates)

    def build(self, **layout) -> Circuit:
        meta = {"names": dict(self.names)}
        meta.update(layout)
        return Circuit(len(self.roles), tuple(self.roles), tuple(self.gates),
                       self.memory_size, meta)


# ---------------------------------------------------------------- validation

@dataclass
class ValidationResult:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(circuit: Circuit) -> ValidationResult:
    res = ValidationResult()
    if len(circuit.roles) != circuit.width:
        res.violations.append(
            f"role table length {len(circuit.roles)} != width {circuit.width}")
    for i, g in enumerate(circuit.gates):
        problem = g.arity_problem()
        if problem:
            res.violations.append(f"gate {i}: {problem}")
        qs = g.qubits
        for q in qs:
            if not (0 <= q < circuit.width):
                res.violations.append(f"gate {i}: out-of-range operand {q}")
        if len(set(qs)) != len(qs):
            res.violations.append(f"gate {i}: duplicate operand")
        if g.cond is not None:
            if not (0 <= g.cond.bit < circuit.memory_size):
                res.violations.append(
                    f"gate {i}: condition bit {g.cond.bit} >= memorySize {circuit.memory_size}")
            if g.cond.value not in (0, 1):
                res.violations.append(f"gate {i}: condition value must be 0 or 1")
    return res


# ---------------------------------------------------------------- depth

def asap_layers(circuit: Circuit) -> list[int]:
    """Layer index (0-based) of every gate under greedy ASAP placement.

    Conditioned gates always take their slot, fired or not.
    """
    ready = [0] * circuit.width
    layers = []
    for g in circuit.gates:
        qs = g.qubits
        layer = max((ready[q] for q in qs), default=0)
        for q in qs:
            ready[q] = layer + 1
        layers.append(layer)
    return layers


def depth(circuit: Circuit) -> int:
    return max((l + 1 for l in asap_layers(circuit)), default=0)


def gate_counts(circuit: Circuit) -> dict[str, int]:
    out: dict[str, int] = {}
    for g in circuit.gates:
        out[g.kind] = out.get(g.kind, 0) + 1
    return out


# ---------------------------------------------------------------- binding

def bind(circuit: Circuit, memory: Sequence[int]) -> Circuit:
    """Resolve classical conditions against ``memory``.

    Gates whose condition fails are dropped; the others lose their condition.
    """
    if circuit.memory_size and len(memory) < circuit.memory_size:
        raise ValueError(
            f"memory has {len(memory)} bits, circuit references {circuit.memory_size}")
    gates = []
    for g in circuit.gates:
        if g.cond is None:
            gates.append(g)
        elif int(memory[g.cond.bit]) == g.cond.value:
            gates.append(Gate(g.kind, g.controls, g.targets))
    return Circuit(circuit.width, circuit.roles, tuple(gates), 0, circuit.layout)


def fired_conditionals(circuit: Circuit, memory: Sequence[int]) -> int:
    return sum(1 for g in circuit.gates
               if g.cond is not None and int(memory[g.cond.bit]) == g.cond.value)


def conditional_count(circuit: Circuit) -> int:
    return sum(1 for g in circuit.gates if g.cond is not None)


# ---------------------------------------------------------------- JSON

class SchemaError(ValueError):
    pass


def to_dict(circuit: Circuit) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "width": circuit.width,
        "memorySize": circuit.memory_size,
        "roles": [r.value for r in circuit.roles],
        "gates": [
            {
                "kind": g.kind,
                "controls": list(g.controls),
                "targets": list(g.targets),
                "cond": None if g.cond is None else {"bit": g.cond.bit, "value": g.cond.value},
            }
            for g in circuit.gates
        ],
    }


def serialize(circuit: Circuit) -> bytes:
    check = validate(circuit)
    if not check.ok:
        raise SchemaError("refusing to serialize an invalid circuit: "
                          + "; ".join(check.violations[:3]))
    # fixed key order from to_dict, compact separators, one gate per line
    d = to_dict(circuit)
    head = {k: d[k] for k in ("version", "width", "memorySize", "roles")}
    text = json.dumps(head, separators=(",", ":"))[:-1]
    gates = ",\n".join(json.dumps(g, separators=(",", ":")) for g in d["gates"])
    text += ',"gates":[' + ("\n" + gates + "\n" if gates else "") + "]}\n"
    return text.encode("utf-8")


def _int_list(v, what) -> tuple[int, ...]:
    if not isinstance(v, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in v):
        raise SchemaError(f"{what} must be a list of integers")
    return tuple(v)


def from_dict(d: dict) -> Circuit:
    if not isinstance(d, dict):
        raise SchemaError("document must be a JSON object")
    if d.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {d.get('version')!r}")
    for key in ("width", "memorySize", "roles", "gates"):
        if key not in d:
            raise SchemaError(f"missing field {key!r}")
    width, msize = d["width"], d["memorySize"]
    if not isinstance(width, int) or width < 0 or not isinstance(msize, int) or msize < 0:
        raise SchemaError("width and memorySize must be nonnegative integers")
    try:
        roles = tuple(Role(r) for r in d["roles"])
    except (ValueError, TypeError) as e:
        raise SchemaError(f"bad role: {e}") from None
    gates = []
    if not isinstance(d["gates"], list):
        raise SchemaError("gates must be a list")
    for i, gd in enumerate(d["gates"]):
        if not isinstance(gd, dict):
            raise SchemaError(f"gate {i} is not an object")
        kind = gd.get("kind")
        if kind not in ARITY:
            raise SchemaError(f"gate {i}: unknown kind {kind!r}")
        controls = _int_list(gd.get("controls"), f"gate {i} controls")
        targets = _int_list(gd.get("targets"), f"gate {i} targets")
        c = gd.get("cond")
        cond = None
        if c is not None:
            if (not isinstance(c, dict) or not isinstance(c.get("bit"), int)
                    or c.get("value") not in (0, 1)):
                raise SchemaError(f"gate {i}: malformed cond")
            cond = Condition(c["bit"], c["value"])
        gates.append(Gate(kind, controls, targets, cond))
    circ = Circuit(width, roles, tuple(gates), msize)
    check = validate(circ)
    if not check.ok:
        raise SchemaError("; ".join(check.violations[:5]))
    return circ


def deserialize(data: bytes | str) -> Circuit:
    try:
        d = json.loads(data)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not JSON: {e}") from None
    return from_dict(d)
