import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vqram import dense
from vqram.circuit import (ARITY, Circuit, CircuitBuilder, Condition, Gate, Role, SchemaError,
                           asap_layers, bind, conditioned, cx, depth, deserialize, from_dict,
                           gate_counts, mcx, serialize, swap, to_dict, validate, x)
from vqram.synth import MemoryData, QramConfig, synth_virtual


def _circ(width, gates, msize=0):
    return Circuit(width, (Role.ROUTER,) * width, tuple(gates), msize)


def test_empty_circuit_is_valid_and_has_depth_zero():
    c = _circ(0, [])
    assert validate(c).ok
    assert depth(c) == 0


def test_duplicate_operand_is_reported():
    c = _circ(4, [Gate("CX", (3,), (3,))])
    res = validate(c)
    assert not res.ok
    assert any("duplicate operand" in v for v in res.violations)


@pytest.mark.parametrize("gate, fragment", [
    (Gate("CX", (0,), (5,)), "out-of-range"),
    (Gate("SWAP", (), (0,)), "expects 2 target"),
    (Gate("MCX", (), (1,)), "at least one control"),
    (conditioned(x(0), 4), "condition bit 4"),
])
def test_violations(gate, fragment):
    res = validate(_circ(3, [gate], msize=4))
    assert any(fragment in v for v in res.violations), res.violations


def test_role_table_length_mismatch():
    c = Circuit(2, (Role.BUS,), ())
    assert any("role table" in v for v in validate(c).violations)


def test_virtual_output_validates():
    c = synth_virtual(QramConfig.of(2, 1, "all"), MemoryData.random(3, 0))
    assert validate(c).ok


def test_disjoint_cx_share_a_layer():
    assert depth(_circ(4, [cx(0, 1), cx(2, 3)])) == 1
    assert asap_layers(_circ(3, [cx(0, 1), cx(1, 2), x(0)])) == [0, 1, 1]


def test_conditioned_gates_occupy_a_layer():
    c = _circ(2, [conditioned(x(0), 0, 1), x(0)], msize=1)
    assert depth(c) == 2


def test_depth_never_decreases_when_appending():
    rng = np.random.default_rng(3)
    gates = []
    last = 0
    for _ in range(200):
        a, b = rng.choice(6, 2, replace=False)
        gates.append(cx(int(a), int(b)) if rng.random() < 0.5 else x(int(a)))
        d = depth(_circ(6, gates))
        assert d >= last
        last = d


def test_mcx_picks_narrowest_kind():
    assert mcx([], 0).kind == "X"
    assert mcx([1], 0).kind == "CX"
    assert mcx([1, 2], 0).kind == "Toffoli"
    assert mcx([1, 2, 3], 0).kind == "MCX"


def test_gate_counts():
    assert gate_counts(_circ(3, [cx(0, 1), cx(1, 2), x(0)])) == {"CX": 2, "X": 1}


def test_bind_drops_non_firing_gates():
    c = _circ(2, [conditioned(x(0), 0, 1), conditioned(x(1), 1, 0), cx(0, 1)], msize=2)
    b = bind(c, [0, 0])
    assert [g.kind for g in b.gates] == ["X", "CX"]
    assert all(g.cond is None for g in b.gates)


def _support_permutes(kind):
    """Every basis state maps to one basis state with a +-1 phase."""
    nc, nt = ARITY[kind]
    nc = 2 if nc is None else nc
    w = nc + nt
    g = Gate(kind, tuple(range(nc)), tuple(range(nc, w)))
    images = set()
    for i in range(1 << w):
        psi = np.zeros(1 << w, dtype=complex)
        psi[i] = 1
        out = dense.apply_gate(psi, g.kind, g.controls, g.targets)
        nz = np.flatnonzero(np.abs(out) > 1e-12)
        assert len(nz) == 1
        assert abs(abs(out[nz[0]]) - 1) < 1e-12
        assert np.round(out[nz[0]], 12) in (1, -1, 1j, -1j)
        images.add(int(nz[0]))
    return len(images) == 1 << w


@pytest.mark.parametrize("kind", list(ARITY))
def test_one_to_one_closure(kind):
    assert _support_permutes(kind)


# ---------------------------------------------------------------- serialization

def test_empty_circuit_serializes_to_minimal_document():
    text = serialize(_circ(0, []))
    assert text == b'{"version":1,"width":0,"memorySize":0,"roles":[],"gates":[]}\n'


def test_serialization_is_stable_and_round_trips():
    for m, k in itertools.product(range(1, 5), range(3)):
        c = synth_virtual(QramConfig.of(m, k, "recycle,pipeline"), MemoryData.random(m + k, m))
        data = serialize(c)
        back = deserialize(data)
        assert back == c
        assert serialize(back) == data


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d["gates"].append({"kind": "H", "controls": [], "targets": [0], "cond": None}),
     "unknown kind"),
    (lambda d: d.update(version=2), "version"),
    (lambda d: d["gates"].append({"kind": "CX", "controls": [0], "targets": ["a"], "cond": None}),
     "integers"),
    (lambda d: d["gates"].append({"kind": "CX", "controls": [0], "targets": [0], "cond": None}),
     "duplicate"),
    (lambda d: d["gates"].append({"kind": "X", "controls": [], "targets": [0],
                                  "cond": {"bit": 0, "value": 2}}), "cond"),
])
def test_deserialize_rejects(mutate, fragment):
    d = to_dict(_circ(2, [cx(0, 1)], msize=1))
    mutate(d)
    with pytest.raises(SchemaError, match=fragment):
        from_dict(d)


def test_deserialize_rejects_non_json():
    with pytest.raises(SchemaError):
        deserialize(b"not json")


_KINDS = ["X", "Z", "CX", "CZ", "SWAP", "CSWAP", "Toffoli", "MCX"]


@st.composite
def valid_circuits(draw):
    width = draw(st.integers(4, 8))
    msize = draw(st.integers(0, 4))
    roles = tuple(draw(st.lists(st.sampled_from(list(Role)), min_size=width, max_size=width)))
    gates = []
    for _ in range(draw(st.integers(0, 20))):
        kind = draw(st.sampled_from(_KINDS))
        nc, nt = ARITY[kind]
        nc = draw(st.integers(1, 3)) if nc is None else nc
        qs = draw(st.permutations(range(width)))[:nc + nt]
        cond = None
        if msize and draw(st.booleans()):
            cond = Condition(draw(st.integers(0, msize - 1)), draw(st.integers(0, 1)))
        gates.append(Gate(kind, tuple(qs[:nc]), tuple(qs[nc:]), cond))
    return Circuit(width, roles, tuple(gates), msize)


@settings(max_examples=200, deadline=None)
@given(valid_circuits())
def test_round_trip_on_random_valid_circuits(c):
    assert validate(c).ok
    assert deserialize(serialize(c)) == c


def test_builder_records_names():
    b = CircuitBuilder(memory_size=2)
    a = b.qubit(Role.ADDRESS, "a0")
    t = b.qubit(Role.BUS, "bus")
    b.add(swap(a, t))
    c = b.build(arch="demo")
    assert c.layout["names"] == {"a0": 0, "bus": 1}
    assert c.layout["arch"] == "demo"
    assert c.bus == 1 and c.address_qubits == [0]
