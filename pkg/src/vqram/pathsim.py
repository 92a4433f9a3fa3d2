"""Feynman-path simulation of one-to-one circuits with Monte Carlo Pauli noise.

A path state is a set of (bitstring, amplitude) terms.  Every gate maps a
bitstring to exactly one bitstring times a phase, so the number of terms never
changes.  Internally a batch of terms (and of shots) is stored column-wise as
bit planes: one row of packed uint64 words per qubit, plus two planes holding
the phase exponent of i (mod 4).  A SWAP only relabels rows.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .circuit import Circuit, asap_layers, bind

ALL = np.uint64(0xFFFFFFFFFFFFFFFF)
PAULIS = ("X", "Y", "Z")
RNG_NAME = "numpy.PCG64 via SeedSequence([seed, shot])"
THREADS_ENV = "VQRAM_THREADS"


# ---------------------------------------------------------------- data types

@dataclass
class PathState:
    """Sparse state: basis bitstring (int, bit q = qubit q) -> amplitude."""
    width: int
    terms: dict = field(default_factory=dict)

    def norm_sq(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.terms.values())

    def __len__(self):
        return len(self.terms)

    @classmethod
    def basis(cls, width: int, bits: int = 0) -> "PathState":
        return cls(width, {bits: 1.0 + 0j})

    @classmethod
    def from_address(cls, circuit: Circuit, address) -> "PathState":
        """sum_i a_i |i>_A with bus and ancillae in |0>."""
        amps = getattr(address, "amplitudes", address)
        addr = circuit.address_qubits
        n = len(addr)
        terms = {}
        for i, a in amps.items():
            if not 0 <= i < (1 << n):
                raise ValueError(f"address {i} out of range for {n} address qubits")
            key = 0
            for j, q in enumerate(addr):
                if (i >> (n - 1 - j)) & 1:
                    key |= 1 << q
            terms[key] = complex(a)
        return cls(circuit.width, terms)

    def bit(self, key: int, q: int) -> int:
        return (key >> q) & 1


@dataclass(frozen=True)
class NoiseModel:
    """Pauli channel: ``mode`` is "gate" (after each gate, per operand) or
    "qubit" (every qubit at every ASAP layer)."""
    mode: str = "gate"
    epsilon: float = 0.0
    bias: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.mode not in ("gate", "qubit"):
            raise ValueError(f"noise mode must be 'gate' or 'qubit', got {self.mode!r}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in [0, 1]")
        if len(self.bias) != 3 or any(p < 0 for p in self.bias):
            raise ValueError("bias must be three nonnegative probabilities")
        if abs(sum(self.bias) - 1.0) > 1e-9:
            raise ValueError("bias components must sum to 1")

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        """``MODE:EPSILON:BIAS`` e.g. ``gate:1e-3:z``; BIAS is x, y, z,
        depol, or ``px/py/pz``."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"noise spec {text!r} is not MODE:EPSILON:BIAS")
        mode, eps, bias = parts
        mode = {"gatebased": "gate", "qubitbased": "qubit"}.get(mode.lower(), mode.lower())
        return cls(mode, float(eps), parse_bias(bias))

    def label(self) -> str:
        return f"{self.mode}:{self.epsilon:g}:{bias_label(self.bias)}"


def parse_bias(text: str) -> tuple[float, float, float]:
    named = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0),
             "depol": (1 / 3, 1 / 3, 1 / 3), "depolarizing": (1 / 3, 1 / 3, 1 / 3)}
    t = text.strip().lower()
    if t in named:
        return named[t]
    try:
        vals = tuple(float(v) for v in t.split("/"))
    except ValueError:
        raise ValueError(f"bad bias {text!r}") from None
    if len(vals) != 3:
        raise ValueError(f"bias {text!r} needs three components px/py/pz")
    s = sum(vals)
    if s <= 0:
        raise ValueError("bias components must not all be zero")
    return tuple(v / s for v in vals)


def bias_label(bias) -> str:
    for name, b in (("x", (1, 0, 0)), ("y", (0, 1, 0)), ("z", (0, 0, 1))):
        if tuple(bias) == b:
            return name
    if np.allclose(bias, 1 / 3):
        return "depol"
    return "/".join(f"{p:g}" for p in bias)


@dataclass(frozen=True)
class NoiseTrace:
    """Injected Paulis as (after_gate, qubit, pauli); after_gate -1 = before gate 0."""
    events: tuple = ()

    def __len__(self):
        return len(self.events)


@dataclass(frozen=True)
class FidelityEstimate:
    mean: float
    stderr: float
    shots: int
    seed: int
    rng: str = RNG_NAME

    def as_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "shots": self.shots,
                "seed": self.seed, "rng": self.rng}


# ---------------------------------------------------------------- noise sampling

class _Slots:
    """Where a noise model may strike in a given (bound) circuit."""

    def __init__(self, circuit: Circuit, mode: str):
        if mode == "gate":
            gi, qs = [], []
            for i, g in enumerate(circuit.gates):
                for q in g.qubits:
                    gi.append(i)
                    qs.append(q)
            self.gate = np.array(gi, dtype=np.int64)
            self.qubit = np.array(qs, dtype=np.int64)
            self.size = len(gi)
        else:
            layers = asap_layers(circuit)
            n_layers = max(layers, default=-1) + 1
            w = circuit.width
            # last gate index on qubit q at layer <= L, or -1
            table = np.full((n_layers, w), -1, dtype=np.int64)
            last = np.full(w, -1, dtype=np.int64)
            by_layer: list[list[tuple[int, int]]] = [[] for _ in range(n_layers)]
            for i, (g, l) in enumerate(zip(circuit.gates, layers)):
                for q in g.qubits:
                    by_layer[l].append((q, i))
            for l in range(n_layers):
                for q, i in by_layer[l]:
                    last[q] = i
                table[l] = last
            self.gate = table.reshape(-1)
            self.qubit = np.tile(np.arange(w, dtype=np.int64), n_layers)
            self.size = n_layers * w


def _shot_rng(seed: int, shot: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(shot)])


def _sample(slots: _Slots, model: NoiseModel, rng: np.random.Generator) -> NoiseTrace:
    if model.epsilon == 0 or slots.size == 0:
        return NoiseTrace(())
    hits = int(rng.binomial(slots.size, model.epsilon))
    if hits == 0:
        return NoiseTrace(())
    where = np.sort(rng.choice(slots.size, size=hits, replace=False))
    kinds = rng.choice(3, size=hits, p=np.asarray(model.bias, dtype=float))
    ev = sorted(zip(slots.gate[where].tolist(), where.tolist(),
                    slots.qubit[where].tolist(), kinds.tolist()))
    return NoiseTrace(tuple((g, q, PAULIS[p]) for g, _, q, p in ev))


def sample_trace(model: NoiseModel, circuit: Circuit, seed) -> NoiseTrace:
    """One Monte Carlo realization; deterministic in ``seed`` (int or (seed, shot))."""
    rng = np.random.default_rng(seed)
    return _sample(_Slots(circuit, model.mode), model, rng)


# ---------------------------------------------------------------- packed engine

def _pack_columns(cols: np.ndarray, words: int) -> np.ndarray:
    """bool (W, T) -> uint64 (W, words), column t at bit t (little endian)."""
    W, T = cols.shape
    padded = np.zeros((W, words * 64), dtype=bool)
    padded[:, :T] = cols
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64).reshape(W, words)


def _unpack_columns(planes: np.ndarray, T: int) -> np.ndarray:
    W = planes.shape[0]
    u8 = np.ascontiguousarray(planes).view(np.uint8).reshape(W, -1)
    return np.unpackbits(u8, axis=1, bitorder="little")[:, :T].astype(bool)


def _keys_to_bits(keys: Sequence[int], width: int) -> np.ndarray:
    nbytes = max(1, (width + 7) // 8)
    raw = b"".join(int(k).to_bytes(nbytes, "little") for k in keys)
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(len(keys), nbytes)
    bits = np.unpackbits(arr, axis=1, bitorder="little")[:, :width]
    return bits.T.astype(bool)


def _bits_to_keys(bits: np.ndarray) -> list[int]:
    W, T = bits.shape
    packed = np.packbits(bits.T, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


class _Engine:
    """Gate kernels over packed planes; ``row[q]`` is the plane holding qubit q."""

    def __init__(self, planes: np.ndarray, lo: np.ndarray, hi: np.ndarray):
        self.p, self.lo, self.hi = planes, lo, hi
        self.row = list(range(planes.shape[0]))

    def gate(self, kind: str, controls, targets):
        p, row = self.p, self.row
        if kind == "SWAP":
            a, b = targets
            row[a], row[b] = row[b], row[a]
        elif kind == "CX":
            p[row[targets[0]]] ^= p[row[controls[0]]]
        elif kind == "X":
            p[row[targets[0]]] ^= ALL
        elif kind == "CSWAP":
            ra, rb = row[targets[0]], row[targets[1]]
            d = (p[ra] ^ p[rb]) & p[row[controls[0]]]
            p[ra] ^= d
            p[rb] ^= d
        elif kind in ("Toffoli", "MCX"):
            m = p[row[controls[0]]].copy()
            for c in controls[1:]:
                m &= p[row[c]]
            p[row[targets[0]]] ^= m
        elif kind == "Z":
            self.hi ^= p[row[targets[0]]]
        elif kind == "CZ":
            self.hi ^= p[row[controls[0]]] & p[row[targets[0]]]
        else:
            raise ValueError(f"unsupported gate kind {kind}")

    def pauli(self, q: int, pauli: str, sl: slice):
        r = self.row[q]
        if pauli == "X":
            self.p[r, sl] ^= ALL
        elif pauli == "Z":
            self.hi[sl] ^= self.p[r, sl]
        else:  # Y = i X Z
            self.hi[sl] ^= self.p[r, sl]
            self.p[r, sl] ^= ALL
            self.hi[sl] ^= self.lo[sl]
            self.lo[sl] ^= ALL

    def planes(self) -> np.ndarray:
        return self.p[self.row]


def _compile(circuit: Circuit) -> list[tuple]:
    return [(g.kind, g.controls, g.targets) for g in circuit.gates]


def _run(program, engine: _Engine, events_at: dict[int, list]):
    for q, pauli, sl in events_at.get(-1, ()):
        engine.pauli(q, pauli, sl)
    for i, op in enumerate(program):
        if op is not None:
            engine.gate(*op)
        ev = events_at.get(i)
        if ev:
            for q, pauli, sl in ev:
                engine.pauli(q, pauli, sl)


def _compile_resolved(circuit: Circuit, memory) -> list:
    """Program aligned with the circuit's gate indices; non-firing gates are None."""
    prog = []
    for g in circuit.gates:
        if g.cond is not None:
            if memory is None:
                raise ValueError("circuit has classically conditioned gates; memory is required")
            if int(memory[g.cond.bit]) != g.cond.value:
                prog.append(None)
                continue
        prog.append((g.kind, g.controls, g.targets))
    return prog


def _resolve(circuit: Circuit, memory) -> Circuit:
    if any(g.cond is not None for g in circuit.gates):
        if memory is None:
            raise ValueError("circuit has classically conditioned gates; memory is required")
        return bind(circuit, memory)
    return circuit


def _phase_exponent(lo: np.ndarray, hi: np.ndarray, T: int) -> np.ndarray:
    l = _unpack_columns(lo[None, :], T)[0].astype(np.int64)
    h = _unpack_columns(hi[None, :], T)[0].astype(np.int64)
    return l + 2 * h


I_POW = np.array([1, 1j, -1, -1j])


def apply(circuit: Circuit, state: PathState, trace: Optional[NoiseTrace] = None,
          memory=None) -> PathState:
    """Push every term through the circuit (and the trace's Paulis)."""
    if state.width != circuit.width:
        raise ValueError(f"state width {state.width} != circuit width {circuit.width}")
    program = _compile_resolved(circuit, memory)
    keys = list(state.terms)
    T = len(keys)
    if T == 0:
        return PathState(circuit.width, {})
    words = (T + 63) // 64
    planes = _pack_columns(_keys_to_bits(keys, circuit.width), words)
    eng = _Engine(planes, np.zeros(words, np.uint64), np.zeros(words, np.uint64))
    events_at: dict[int, list] = {}
    full = slice(0, words)
    for g, q, p in (trace.events if trace else ()):
        if not (-1 <= g < len(program)) or not (0 <= q < circuit.width) or p not in PAULIS:
            raise ValueError(f"trace event {(g, q, p)} out of range")
        events_at.setdefault(g, []).append((q, p, full))
    _run(program, eng, events_at)
    out_bits = _unpack_columns(eng.planes(), T)
    phase = _phase_exponent(eng.lo, eng.hi, T)
    amps = np.array([state.terms[k] for k in keys], dtype=complex) * I_POW[phase % 4]
    out = {}
    for key, a in zip(_bits_to_keys(out_bits), amps):
        out[key] = complex(a)
    return PathState(circuit.width, out)


def oracle_output(address, memory, circuit: Circuit) -> PathState:
    """sum_i a_i |i>_A |x_i>_B with all other qubits zero, built directly."""
    amps = getattr(address, "amplitudes", address)
    addr = circuit.address_qubits
    n = len(addr)
    bus = circuit.bus
    terms = {}
    for i, a in amps.items():
        key = 0
        for j, q in enumerate(addr):
            if (i >> (n - 1 - j)) & 1:
                key |= 1 << q
        if int(memory[i]):
            key |= 1 << bus
        terms[key] = complex(a)
    return PathState(circuit.width, terms)


def inner(a: PathState, b: PathState) -> complex:
    if a.width != b.width:
        raise ValueError(f"width mismatch {a.width} vs {b.width}")
    small, large, flip = (a, b, False) if len(a) <= len(b) else (b, a, True)
    acc = 0j
    for k, v in small.terms.items():
        w = large.terms.get(k)
        if w is not None:
            acc += (v.conjugate() * w) if not flip else (w.conjugate() * v)
    return acc


def fidelity(a: PathState, b: PathState) -> float:
    return float(abs(inner(a, b)) ** 2)


# ---------------------------------------------------------------- shots

def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


class _Reference:
    """Noiseless output of a fixed input, kept in packed form for fast overlaps."""

    def __init__(self, program, width: int, keys: list[int], amps: np.ndarray):
        self.T = len(keys)
        self.words = (self.T + 63) // 64
        self.input_planes = _pack_columns(_keys_to_bits(keys, width), self.words)
        self.amps = amps
        self.weight = np.abs(amps) ** 2
        eng = _Engine(self.input_planes.copy(), np.zeros(self.words, np.uint64),
                      np.zeros(self.words, np.uint64))
        _run(program, eng, {})
        self.planes = eng.planes()
        self.phase = _phase_exponent(eng.lo, eng.hi, self.T)
        self.values = self.amps * I_POW[self.phase % 4]
        bits = _unpack_columns(self.planes, self.T)
        packed = np.packbits(bits.T, axis=1, bitorder="little")
        self.index = {row.tobytes(): t for t, row in enumerate(packed)}

    def fidelity(self, planes: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
        T = self.T
        diff = np.bitwise_or.reduce(planes ^ self.planes, axis=0)
        mismatch = _unpack_columns(diff[None, :], T)[0]
        phase = _phase_exponent(lo, hi, T)
        noisy_vals = self.amps * I_POW[phase % 4]
        matched = ~mismatch
        acc = complex(np.sum(np.conj(self.values[matched]) * noisy_vals[matched]))
        if mismatch.any():
            cols = np.flatnonzero(mismatch)
            bits = _unpack_columns(planes, T)[:, cols]
            packed = np.packbits(bits.T, axis=1, bitorder="little")
            for c, row in zip(cols, packed):
                t = self.index.get(row.tobytes())
                if t is not None:
                    acc += np.conj(self.values[t]) * noisy_vals[c]
        return min(1.0, float(abs(acc) ** 2))


def _batch_fidelities(program, ref: _Reference, traces: list[NoiseTrace]) -> list[float]:
    B, wps = len(traces), ref.words
    planes = np.tile(ref.input_planes, (1, B))
    eng = _Engine(planes, np.zeros(B * wps, np.uint64), np.zeros(B * wps, np.uint64))
    events_at: dict[int, list] = {}
    for s, tr in enumerate(traces):
        sl = slice(s * wps, (s + 1) * wps)
        for g, q, p in tr.events:
            events_at.setdefault(g, []).append((q, p, sl))
    _run(program, eng, events_at)
    final = eng.planes()
    out = []
    for s in range(B):
        sl = slice(s * wps, (s + 1) * wps)
        out.append(ref.fidelity(final[:, sl], eng.lo[sl], eng.hi[sl]))
    return out


def shot_fidelities(circuit: Circuit, input_state, memory, model: NoiseModel, shots: int,
                    seed: int, threads: Optional[int] = None,
                    batch_words: int = 2048) -> np.ndarray:
    """Per-shot fidelities; shot s uses the generator seeded by (seed, s)."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    bound = _resolve(circuit, memory)
    if not isinstance(input_state, PathState):
        input_state = PathState.from_address(circuit, input_state)
    if input_state.width != circuit.width:
        raise ValueError(f"input width {input_state.width} != circuit width {circuit.width}")
    program = _compile(bound)
    keys = list(input_state.terms)
    amps = np.array([input_state.terms[k] for k in keys], dtype=complex)
    ref = _Reference(program, circuit.width, keys, amps)
    slots = _Slots(bound, model.mode)
    traces = [_sample(slots, model, _shot_rng(seed, s)) for s in range(shots)]
    fids = np.ones(shots)
    noisy = [s for s in range(shots) if traces[s].events]
    per_batch = max(1, batch_words // ref.words)
    batches = [noisy[i:i + per_batch] for i in range(0, len(noisy), per_batch)]

    def work(idx):
        return idx, _batch_fidelities(program, ref, [traces[s] for s in idx])

    threads = threads or default_threads()
    if threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, batches))
    else:
        results = [work(b) for b in batches]
    for idx, vals in results:
        fids[idx] = vals
    return fids


def summarize(fids: np.ndarray, seed: int) -> FidelityEstimate:
    shots = len(fids)
    mean = math.fsum(fids) / shots
    if shots > 1:
        var = math.fsum((f - mean) ** 2 for f in fids) / (shots - 1)
        stderr = math.sqrt(var / shots)
    else:
        stderr = 0.0
    return FidelityEstimate(mean, stderr, shots, int(seed))


def run_shots(circuit: Circuit, input_state, memory, model: NoiseModel, shots: int,
              seed: int, threads: Optional[int] = None) -> FidelityEstimate:
    """Monte Carlo fidelity estimate against the noiseless output of the same input.

    Conditions are resolved against ``memory`` before noise is sampled, so a
    classically controlled gate that does not fire contributes no error
    locations.  Results do not depend on ``threads``.
    """
    fids = shot_fidelities(circuit, input_state, memory, model, shots, seed, threads)
    return summarize(fids, seed)
