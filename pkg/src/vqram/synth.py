"""Query-circuit synthesizers: virtual QRAM plus SQC, bucket-brigade and Select-Swap.

Address conventions shared by every synthesizer:

* the address register is the list of ``Role.ADDRESS`` qubits in index order,
  most significant bit first;
* memory cell ``i = p * 2**m + t``: the top ``k`` bits give the segment ``p``
  (SQC controls), the low ``m`` bits the offset ``t`` inside the router tree;
* router node ``(v, j)`` sits at level ``v`` with heap index ``j``; a router
  holding 1 sends traffic to child ``2j + 1``; leaf index equals ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .circuit import (Circuit, CircuitBuilder, Gate, Role, conditioned, cswap, cx,
                      mcx, swap, x)


# ---------------------------------------------------------------- inputs

@dataclass(frozen=True)
class QramConfig:
    """One virtual-QRAM instance: ``n = k + m`` address bits, bit encoding."""
    n: int
    k: int
    m: int
    recycle: bool = False
    lazy: bool = False
    pipeline: bool = False
    encoding: str = "bit"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m >= 1 is required (at least one router layer)")
        if self.k < 0:
            raise ValueError("k >= 0 is required")
        if self.n != self.k + self.m:
            raise ValueError(f"n must equal k + m (got n={self.n}, k={self.k}, m={self.m})")
        if self.encoding != "bit":
            raise ValueError("only bit encoding is supported")

    @classmethod
    def of(cls, m: int, k: int = 0, opts: Sequence[str] | str = ()) -> "QramConfig":
        flags = parse_opts(opts)
        return cls(m + k, k, m, **flags)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return 1 << self.k

    @property
    def M(self) -> int:
        return 1 << self.m

    @property
    def opts(self) -> tuple[str, ...]:
        return tuple(o for o, on in (("recycle", self.recycle), ("lazy", self.lazy),
                                     ("pipeline", self.pipeline)) if on)


OPT_NAMES = ("recycle", "lazy", "pipeline")


def parse_opts(opts: Sequence[str] | str) -> dict[str, bool]:
    if isinstance(opts, str):
        opts = [o for o in opts.split(",") if o.strip()]
    opts = [o.strip().lower() for o in opts]
    if "all" in opts:
        opts = list(OPT_NAMES)
    aliases = {"lazyswap": "lazy", "lazy_swap": "lazy", "none": None}
    out = {name: False for name in OPT_NAMES}
    for o in opts:
        o = aliases.get(o, o)
        if o is None:
            continue
        if o not in out:
            raise ValueError(f"unknown optimization {o!r}; choose from {', '.join(OPT_NAMES)}, all")
        out[o] = True
    return out


@dataclass(frozen=True)
class MemoryData:
    bits: tuple[int, ...]

    def __post_init__(self):
        n = len(self.bits)
        if n == 0 or n & (n - 1):
            raise ValueError(f"memory length must be a power of two, got {n}")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("memory bits must be 0 or 1")

    @classmethod
    def of(cls, bits: Sequence[int]) -> "MemoryData":
        return cls(tuple(int(b) for b in bits))

    @classmethod
    def zeros(cls, n: int) -> "MemoryData":
        return cls((0,) * (1 << n))

    @classmethod
    def random(cls, n: int, seed) -> "MemoryData":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(tuple(int(b) for b in rng.integers(0, 2, 1 << n)))

    @property
    def n(self) -> int:
        return len(self.bits).bit_length() - 1

    def __len__(self):
        return len(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __iter__(self):
        return iter(self.bits)

    def segment(self, p: int, m: int) -> tuple[int, ...]:
        M = 1 << m
        return self.bits[p * M:(p + 1) * M]


def _as_memory(memory) -> MemoryData:
    return memory if isinstance(memory, MemoryData) else MemoryData.of(memory)


@dataclass(frozen=True)
class AddressState:
    amplitudes: dict

    def __post_init__(self):
        norm = math.fsum(abs(a) ** 2 for a in self.amplitudes.values())
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"address state not normalized (norm^2 = {norm})")
        if any(i < 0 for i in self.amplitudes):
            raise ValueError("negative address index")

    @classmethod
    def uniform(cls, n: int) -> "AddressState":
        a = 1.0 / math.sqrt(1 << n)
        return cls({i: complex(a) for i in range(1 << n)})

    @classmethod
    def basis(cls, i: int) -> "AddressState":
        return cls({i: 1.0 + 0j})

    @classmethod
    def random(cls, n: int, seed) -> "AddressState":
        """Haar-like random state on the 2**n address basis."""
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        v /= np.linalg.norm(v)
        amps = {i: complex(a) for i, a in enumerate(v)}
        # renormalize with compensated sum so the 1e-12 invariant holds exactly
        s = math.sqrt(math.fsum(abs(a) ** 2 for a in amps.values()))
        return cls({i: a / s for i, a in amps.items()})

    def check_width(self, n: int):
        if any(i >= (1 << n) for i in self.amplitudes):
            raise ValueError(f"address index out of range for {n} address bits")


# ---------------------------------------------------------------- lazy swapping

def lazy_transform(memory, m: int, k: int) -> tuple[list[tuple[int, ...]], tuple[int, ...]]:
    """Per-round write vectors and the final unload vector.

    Round 0 writes segment 0; round p >= 1 toggles segment p XOR segment p-1
    on top of what is already there.  The final unload vector is the XOR of
    all round vectors, which telescopes to the last segment.
    """
    memory = _as_memory(memory)
    if len(memory) != 1 << (m + k):
        raise ValueError(f"memory length {len(memory)} != 2**(m+k) = {1 << (m + k)}")
    segs = [memory.segment(p, m) for p in range(1 << k)]
    rounds = [segs[0]]
    for p in range(1, len(segs)):
        rounds.append(tuple(a ^ b for a, b in zip(segs[p], segs[p - 1])))
    final = tuple(int(b) for b in np.bitwise_xor.reduce(np.array(rounds), axis=0))
    return rounds, final


# ---------------------------------------------------------------- router tree

class _Tree:
    """Router qubits and routing wires for an m-level binary tree.

    Two router styles:

    * two-output (``fork=True``): CSWAP(r, in, right) then SWAP(in, left); the
      input wire is vacated after every hop so a following address bit can
      trail one layer behind (pipelined loading);
    * one-output (``fork=False``): only CSWAP(r, in, right); a left-going bit
      stays on the parent's wire, so the left child shares that wire and every
      address bit must settle before the next one can enter.
    """

    def __init__(self, b: CircuitBuilder, m: int, fork: bool, leaves: bool = False,
                 root_input: Optional[int] = None, wire_role: Role = Role.ROUTER_DATA,
                 routers: Optional[list[list[int]]] = None, tag: str = ""):
        self.m, self.fork = m, fork
        self.place: dict[int, tuple] = {}
        depth = m + 1 if leaves else m
        if root_input is None:
            root_input = b.qubit(wire_role, f"{tag}rin")
        self.place[root_input] = ("node", 0, 0)
        self.inp: list[list[int]] = [[root_input]]
        own_routers = routers is None
        if own_routers:
            routers = []
        for v in range(depth):
            if own_routers and v < m:
                row = [b.qubit(Role.ROUTER, f"r{v}.{j}") for j in range(1 << v)]
                routers.append(row)
                for j, q in enumerate(row):
                    self.place[q] = ("node", v, j)
            if v == 0:
                continue
            wires = []
            for j in range(1 << v):
                if not fork and j % 2 == 0:
                    wires.append(self.inp[v - 1][j // 2])
                else:
                    q = b.qubit(wire_role if v < m else Role.DATA_NODE, f"{tag}w{v}.{j}")
                    self.place[q] = ("node", v, j) if v < m else ("leaf", j)
                    wires.append(q)
            self.inp.append(wires)
        self.r = routers

    @property
    def rin(self) -> int:
        return self.inp[0][0]

    def route_level(self, v: int) -> list[Gate]:
        """Move whatever sits on level-v inputs one level down."""
        gates = []
        for j in range(1 << v):
            r, w = self.r[v][j], self.inp[v][j]
            gates.append(cswap(r, w, self.inp[v + 1][2 * j + 1]))
            if self.fork:
                gates.append(swap(w, self.inp[v + 1][2 * j]))
        return gates

    def route_down(self, levels: int) -> list[Gate]:
        out = []
        for v in range(levels):
            out.extend(self.route_level(v))
        return out

    def load(self, addr: Sequence[int]) -> list[Gate]:
        """Address loading: bit u travels to level u and is stored in its router."""
        out = []
        for u, a in enumerate(addr):
            out.append(swap(a, self.rin))
            out.extend(self.route_down(u))
            out.extend(swap(self.inp[u][j], self.r[u][j]) for j in range(1 << u))
        return out


def _inverse(gates: Sequence[Gate]) -> list[Gate]:
    # every gate kind in the set is an involution
    return list(reversed(gates))


def _select_flips(addr_top: Sequence[int], p: int) -> list[Gate]:
    """X on the segment controls whose bit in ``p`` is 0 (MSB first)."""
    k = len(addr_top)
    return [x(addr_top[q]) for q in range(k) if not (p >> (k - 1 - q)) & 1]


def _add_address(b: CircuitBuilder, n: int) -> list[int]:
    return [b.qubit(Role.ADDRESS, f"a{i}") for i in range(n)]


def _port_places(addr: Sequence[int], bus: int) -> dict[int, tuple]:
    return {q: ("port",) for q in list(addr) + [bus]}


# ---------------------------------------------------------------- virtual QRAM

def synth_virtual(config: QramConfig, memory) -> Circuit:
    """Virtual QRAM query: load once, 2**k retrieval rounds, unload once."""
    memory = _as_memory(memory)
    if len(memory) != config.N:
        raise ValueError(f"memory length {len(memory)} != 2**n = {config.N}")
    m, k, M, K = config.m, config.k, config.M, config.K
    b = CircuitBuilder(memory_size=config.N)
    addr = _add_address(b, config.n)
    bus = b.qubit(Role.BUS, "bus")
    tree = _Tree(b, m, fork=config.pipeline)
    val = [b.qubit(Role.DATA_NODE, f"v{l}") for l in range(M)]
    place = _port_places(addr, bus)
    place.update(tree.place)
    place.update({q: ("leaf", l) for l, q in enumerate(val)})

    # dual-rail activation qubit of each leaf: bottom input wire (even) / bottom router (odd)
    act = []
    for j in range(M // 2):
        act += [tree.inp[m - 1][j], tree.r[m - 1][j]]

    if config.recycle:
        compress = []
        for s in range(m):
            step = 1 << s
            compress += [cx(val[l + step], val[l]) for l in range(0, M, 2 * step)]
        root = val[0]
    else:
        data = [[b.qubit(Role.ROUTER_DATA, f"d{v}.{j}") for j in range(1 << v)]
                for v in range(m)]
        for v, row in enumerate(data):
            place.update({q: ("node", v, j) for j, q in enumerate(row)})
        compress = []
        for j in range(M // 2):
            compress += [cx(val[2 * j], data[m - 1][j]), cx(val[2 * j + 1], data[m - 1][j])]
        for v in range(m - 2, -1, -1):
            for j in range(1 << v):
                compress += [cx(data[v + 1][2 * j], data[v][j]),
                             cx(data[v + 1][2 * j + 1], data[v][j])]
        root = data[0][0]

    load = tree.load(addr[k:])
    token = [x(tree.rin)] + tree.route_down(m - 1)
    activate = [cx(tree.r[m - 1][j], tree.inp[m - 1][j]) for j in range(M // 2)]

    def write(p: int, vec: Sequence[int], always: bool) -> list[Gate]:
        # always=True: data-independent circuit, one conditioned gate per cell
        out = []
        for l in range(M):
            if always:
                out.append(conditioned(swap(act[l], val[l]), p * M + l, 1))
            elif vec[l]:
                out.append(conditioned(swap(act[l], val[l]), p * M + l, memory[p * M + l]))
        return out

    b.extend(load)
    b.extend(token)
    b.extend(activate)
    if config.lazy:
        rounds, final = lazy_transform(memory, m, k)
    for p in range(K):
        flips = _select_flips(addr[:k], p)
        if config.lazy:
            b.extend(write(p, rounds[p], always=False))
        else:
            b.extend(write(p, None, always=True))
        b.extend(flips)
        b.extend(compress)
        b.add(mcx(list(addr[:k]) + [root], bus))
        b.extend(_inverse(compress))
        b.extend(flips)
        if not config.lazy:
            b.extend(write(p, None, always=True))
    if config.lazy:
        b.extend(write(K - 1, final, always=False))
    b.extend(_inverse(activate))
    b.extend(_inverse(token))
    b.extend(_inverse(load))
    return b.build(arch="virtual", m=m, k=k, opts=config.opts, place=place,
                   stages={"load": len(load), "token": len(token)})


def loading_circuit(config: QramConfig) -> Circuit:
    """Only the address-loading stage of ``synth_virtual`` (same qubit layout)."""
    b = CircuitBuilder()
    addr = _add_address(b, config.n)
    b.qubit(Role.BUS, "bus")
    tree = _Tree(b, config.m, fork=config.pipeline)
    b.extend(tree.load(addr[config.k:]))
    return b.build(arch="virtual-load", m=config.m, k=config.k)


# ---------------------------------------------------------------- baselines

def synth_sqc(n: int, memory) -> Circuit:
    """One X-conjugated n-controlled X per memory cell holding 1; no ancillae."""
    memory = _as_memory(memory)
    if len(memory) != 1 << n:
        raise ValueError(f"memory length {len(memory)} != 2**n = {1 << n}")
    b = CircuitBuilder(memory_size=1 << n)
    addr = _add_address(b, n)
    bus = b.qubit(Role.BUS, "bus")
    for i in range(1 << n):
        if memory[i]:
            flips = _select_flips(addr, i)
            b.extend(flips)
            b.add(mcx(addr, bus))
            b.extend(flips)
    return b.build(arch="sqc", m=0, k=n, place=_port_places(addr, bus))


def _bb_body(b: CircuitBuilder, addr_low: Sequence[int], out: int, m: int,
             cell_bit, rin: Optional[int] = None):
    """Bucket-brigade gates reading one segment onto qubit ``out``.

    A |1> marker is routed from ``rin`` to the addressed leaf, the classical
    write moves it to the leaf data rail when the cell holds 1, the marker
    rail is restored and routed back, and the data rail is routed up to
    ``out``.  Returns (gates, placements).
    """
    A = _Tree(b, m, fork=True, leaves=True, root_input=rin, tag="A")
    B = _Tree(b, m, fork=True, leaves=True, root_input=out, routers=A.r, tag="B")
    M = 1 << m
    leaf_a, leaf_v = A.inp[m], B.inp[m]
    load = A.load(addr_low)
    down = [x(A.rin)] + A.route_down(m)
    gates = list(load) + down
    gates += [conditioned(swap(leaf_a[l], leaf_v[l]), cell_bit(l), 1) for l in range(M)]
    gates += [cx(leaf_v[l], leaf_a[l]) for l in range(M)]
    gates += _inverse(down)
    gates += _inverse(B.route_down(m))
    gates += _inverse(load)
    place = dict(A.place)
    place.update({q: p for q, p in B.place.items() if q != out})
    return gates, place


def synth_bb(m: int, memory) -> Circuit:
    """Bucket-brigade QRAM over 2**m cells (bit encoding, dual-rail leaves)."""
    memory = _as_memory(memory)
    if m < 1:
        raise ValueError("m >= 1 is required")
    if len(memory) != 1 << m:
        raise ValueError(f"memory length {len(memory)} != 2**m = {1 << m}")
    b = CircuitBuilder(memory_size=1 << m)
    addr = _add_address(b, m)
    bus = b.qubit(Role.BUS, "bus")
    gates, place = _bb_body(b, addr, bus, m, lambda l: l)
    b.extend(gates)
    place.update(_port_places(addr, bus))
    return b.build(arch="bb", m=m, k=0, place=place)


def synth_sqc_bb(n: int, k: int, memory) -> Circuit:
    """Load-multiple-times hybrid: one full bucket-brigade query per segment."""
    memory = _as_memory(memory)
    m = n - k
    if m < 1 or k < 0:
        raise ValueError("need 0 <= k < n")
    if len(memory) != 1 << n:
        raise ValueError(f"memory length {len(memory)} != 2**n = {1 << n}")
    M = 1 << m
    b = CircuitBuilder(memory_size=1 << n)
    addr = _add_address(b, n)
    bus = b.qubit(Role.BUS, "bus")
    tmp = b.qubit(Role.ROUTER_DATA, "tmp")
    rin = b.qubit(Role.ROUTER_DATA, "Arin")
    place = _port_places(addr, bus)
    first = True
    for p in range(1 << k):
        if first:
            gates, tree_place = _bb_body(b, addr[k:], tmp, m, lambda l, p=p: p * M + l, rin)
            place.update(tree_place)
            first = False
            template = gates
        else:
            # same qubits, different memory bits
            gates = [g if g.cond is None else
                     conditioned(Gate(g.kind, g.controls, g.targets), p * M + (g.cond.bit % M), 1)
                     for g in template]
        flips = _select_flips(addr[:k], p)
        b.extend(gates)
        b.extend(flips)
        b.add(mcx(list(addr[:k]) + [tmp], bus))
        b.extend(flips)
        b.extend(_inverse(gates))
    place[tmp] = ("node", 0, 0)
    return b.build(arch="sqc+bb", m=m, k=k, place=place)


def synth_select_swap(n: int, k: int, memory) -> Circuit:
    """Select-Swap: 2**k select rounds over a 2**(n-k) data register.

    Each round writes one memory segment classically, compresses the
    addressed cell to data qubit 0 with a CSWAP network controlled by
    fanned-out copies of the low address bits, copies it to the bus under the
    segment controls and undoes the network and the write.
    """
    memory = _as_memory(memory)
    m = n - k
    if n < 1 or k < 0 or m < 1:
        raise ValueError("need n >= 1 and 0 <= k < n")
    if len(memory) != 1 << n:
        raise ValueError(f"memory length {len(memory)} != 2**n = {1 << n}")
    M = 1 << m
    b = CircuitBuilder(memory_size=1 << n)
    addr = _add_address(b, n)
    bus = b.qubit(Role.BUS, "bus")
    data = [b.qubit(Role.DATA_NODE, f"D{l}") for l in range(M)]
    place = _port_places(addr, bus)
    place.update({q: ("leaf", l) for l, q in enumerate(data)})

    # controls[s]: copies of offset bit s (LSB = s 0), one per CSWAP on level s
    fanout: list[Gate] = []
    controls = []
    for s in range(m):
        src = addr[n - 1 - s]
        need = M >> (s + 1)
        copies = [src]
        while len(copies) < need:
            grow = min(len(copies), need - len(copies))
            new = [b.qubit(Role.ROUTER_DATA, f"f{s}.{len(copies) + i}") for i in range(grow)]
            fanout += [cx(copies[i], new[i]) for i in range(grow)]
            copies += new
        controls.append(copies)
    network = []
    for s in range(m):
        step = 1 << s
        for idx, l in enumerate(range(0, M, 2 * step)):
            network.append(cswap(controls[s][idx], data[l], data[l + step]))

    b.extend(fanout)
    for p in range(1 << k):
        write = [conditioned(x(data[l]), p * M + l, 1) for l in range(M)]
        flips = _select_flips(addr[:k], p)
        b.extend(write)
        b.extend(network)
        b.extend(flips)
        b.add(mcx(list(addr[:k]) + [data[0]], bus))
        b.extend(flips)
        b.extend(_inverse(network))
        b.extend(write)
    b.extend(_inverse(fanout))
    return b.build(arch="selectswap", m=m, k=k, place=place)


ARCHS = ("virtual", "bb", "sqc", "selectswap", "sqc+bb")


def synthesize(arch: str, m: int, k: int, memory, opts: Sequence[str] | str = ()) -> Circuit:
    """Dispatch by architecture name (the CLI entry point)."""
    if m < 0 or k < 0:
        raise ValueError("m and k must be nonnegative")
    if arch == "virtual":
        return synth_virtual(QramConfig.of(m, k, opts), memory)
    if arch == "bb":
        if k != 0:
            raise ValueError("bb has no segment bits; use k = 0 (or arch sqc+bb)")
        return synth_bb(m, memory)
    if arch == "sqc":
        if m + k < 1:
            raise ValueError("sqc needs at least one address bit")
        return synth_sqc(m + k, memory)
    if arch == "selectswap":
        if m < 1:
            raise ValueError("m >= 1 is required")
        return synth_select_swap(m + k, k, memory)
    if arch == "sqc+bb":
        if m < 1:
            raise ValueError("m >= 1 is required")
        return synth_sqc_bb(m + k, k, memory)
    raise ValueError(f"unknown architecture {arch!r}; choose from {', '.join(ARCHS)}")
