"""Brute-force dense state-vector reference.

Deliberately naive and independent from ``pathsim``: the whole 2**width vector
is stored and every gate is applied as an index permutation over ``arange``.
Only meant for small circuits (width <= 22) used as a test oracle.
"""
from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .circuit import Circuit

MAX_WIDTH = 22


def _bit(idx: np.ndarray, q: int) -> np.ndarray:
    return (idx >> q) & 1


def basis_index(bits: dict[int, int]) -> int:
    return sum(v << q for q, v in bits.items())


def apply_gate(state: np.ndarray, kind: str, controls: Sequence[int],
               targets: Sequence[int]) -> np.ndarray:
    idx = np.arange(state.size, dtype=np.int64)
    fire = np.ones(state.size, dtype=bool)
    for c in controls:
        fire &= _bit(idx, c).astype(bool)
    phase = np.ones(state.size, dtype=complex)
    new = idx.copy()
    if kind in ("X", "CX", "Toffoli", "MCX"):
        t = targets[0]
        new = np.where(fire, idx ^ (1 << t), idx)
    elif kind in ("Z", "CZ"):
        t = targets[0]
        phase = np.where(fire & _bit(idx, t).astype(bool), -1.0, 1.0).astype(complex)
    elif kind in ("SWAP", "CSWAP"):
        a, b = targets
        differ = _bit(idx, a) != _bit(idx, b)
        flip = fire & differ
        new = np.where(flip, idx ^ ((1 << a) | (1 << b)), idx)
    else:
        raise ValueError(f"dense oracle cannot apply {kind}")
    out = np.zeros_like(state)
    out[new] = state * phase
    return out


def apply_pauli(state: np.ndarray, q: int, pauli: str) -> np.ndarray:
    idx = np.arange(state.size, dtype=np.int64)
    b = _bit(idx, q).astype(bool)
    if pauli == "X":
        return apply_gate(state, "X", (), (q,))
    if pauli == "Z":
        return state * np.where(b, -1.0, 1.0)
    if pauli == "Y":
        # Y = i X Z
        return 1j * apply_gate(state * np.where(b, -1.0, 1.0), "X", (), (q,))
    raise ValueError(pauli)


def simulate(circuit: Circuit, state: np.ndarray, memory: Optional[Sequence[int]] = None,
             events: Iterable[tuple[int, int, str]] = ()) -> np.ndarray:
    """Evolve a dense vector; ``events`` are (after_gate, qubit, pauli)."""
    if circuit.width > MAX_WIDTH:
        raise ValueError(f"width {circuit.width} too large for the dense oracle")
    if state.size != 1 << circuit.width:
        raise ValueError("state size does not match circuit width")
    by_gate: dict[int, list] = {}
    for g, q, p in events:
        by_gate.setdefault(g, []).append((q, p))
    psi = np.asarray(state, dtype=complex)
    for q, p in by_gate.get(-1, []):
        psi = apply_pauli(psi, q, p)
    for i, g in enumerate(circuit.gates):
        if g.cond is None or int(memory[g.cond.bit]) == g.cond.value:
            psi = apply_gate(psi, g.kind, g.controls, g.targets)
        for q, p in by_gate.get(i, []):
            psi = apply_pauli(psi, q, p)
    return psi


def query_input(circuit: Circuit, amplitudes: dict[int, complex]) -> np.ndarray:
    """Dense vector sum_i a_i |i>_A with every other qubit zero."""
    addr = circuit.address_qubits
    n = len(addr)
    psi = np.zeros(1 << circuit.width, dtype=complex)
    for i, a in amplitudes.items():
        bits = {addr[j]: (i >> (n - 1 - j)) & 1 for j in range(n)}
        psi[basis_index(bits)] += a
    return psi


def query_target(circuit: Circuit, amplitudes: dict[int, complex],
                 memory: Sequence[int]) -> np.ndarray:
    """Dense vector sum_i a_i |i>_A |x_i>_B with every ancilla zero."""
    addr = circuit.address_qubits
    n = len(addr)
    bus = circuit.bus
    psi = np.zeros(1 << circuit.width, dtype=complex)
    for i, a in amplitudes.items():
        bits = {addr[j]: (i >> (n - 1 - j)) & 1 for j in range(n)}
        bits[bus] = int(memory[i])
        psi[basis_index(bits)] += a
    return psi


def overlap_sq(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)
