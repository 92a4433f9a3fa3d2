"""H-tree embedding of the router tree into a 2D grid and a routing cost model.

Tree nodes are named like the synthesizers' placement metadata:
``("node", v, j)`` is router j on level v (root is ``("node", 0, 0)``) and
``("leaf", l)`` is data cell l.  Children of router (v, j) are (v+1, 2j) and
(v+1, 2j+1); below the last router level the children are leaves 2j, 2j+1.

Each embedding carries one designated grid path per tree edge plus an exit
path from the root to the grid border.  Address and bus qubits live on a
virtual ``("port",)`` cell just beyond the exit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .circuit import Circuit, asap_layers, depth

ROUTER, DATA, ROUTING, UNUSED = "Router", "DataNode", "RoutingAncilla", "Unused"
PORT = ("port",)

Cell = tuple[int, int]


class Strategy(str, Enum):
    SWAP = "SwapBased"
    TELEPORT = "Teleportation"

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        t = text.strip().lower()
        if t in ("swap", "swapbased", "swap-based"):
            return cls.SWAP
        if t in ("teleport", "teleportation", "tele"):
            return cls.TELEPORT
        raise ValueError(f"unknown routing strategy {text!r}")


C_TEL = 4


@dataclass
class GridEmbedding:
    rows: int
    cols: int
    m: int
    placement: dict[tuple, Cell]
    roles: dict[Cell, str]
    # (parent id, child id) -> cells from parent to child, both ends included
    paths: dict[tuple, list[Cell]] = field(default_factory=dict)
    # root cell first, last cell on the grid border
    exit: list[Cell] = field(default_factory=list)

    def census(self) -> dict[str, int]:
        out = {ROUTER: 0, DATA: 0, ROUTING: 0, UNUSED: 0}
        for r in self.roles.values():
            out[r] += 1
        return out

    def port_cell(self) -> Cell:
        """Virtual cell just outside the border, next to the exit cell."""
        r, c = self.exit[-1]
        if r == self.rows - 1:
            return (r + 1, c)
        if r == 0:
            return (-1, c)
        if c == 0:
            return (r, -1)
        return (r, c + 1)

    def to_dict(self) -> dict:
        inv = {cell: node for node, cell in self.placement.items()}
        cells = []
        for r in range(self.rows):
            for c in range(self.cols):
                node = inv.get((r, c))
                cells.append({"r": r, "c": c, "role": self.roles[(r, c)],
                              "node": None if node is None else list(node)})
        return {"rows": self.rows, "cols": self.cols, "cells": cells}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":")) + "\n"


# ---------------------------------------------------------------- construction

def side(m: int) -> int:
    """Grid side of the even-m square H-tree: s(0) = 1, s(m+2) = 2 s(m) + 1."""
    if m < 0 or m % 2:
        raise ValueError("side() is defined for even m >= 0")
    s = 1
    for _ in range(m // 2):
        s = 2 * s + 1
    return s


def _relabel(node: tuple, levels: int, prefix: int) -> tuple:
    """Id of a subtree node once the subtree hangs ``levels`` below a new root."""
    if node[0] == "leaf":
        return node
    _, v, j = node
    return ("node", v + levels, (prefix << v) + j)


class _Part:
    """Mutable embedding fragment used by the recursion (no role table yet)."""

    def __init__(self, rows, cols, m, placement, paths, exit):
        self.rows, self.cols, self.m = rows, cols, m
        self.placement, self.paths, self.exit = placement, paths, exit

    def moved(self, dr: int, dc: int, flip_rows: bool, levels: int, prefix: int) -> "_Part":
        def f(cell):
            r, c = cell
            if flip_rows:
                r = self.rows - 1 - r
            return (r + dr, c + dc)

        def lab(node):
            if node[0] == "leaf":
                return ("leaf", (prefix << self.m) + node[1])
            return _relabel(node, levels, prefix)

        placement = {lab(n): f(c) for n, c in self.placement.items()}
        paths = {(lab(a), lab(b)): [f(c) for c in p] for (a, b), p in self.paths.items()}
        return _Part(self.rows, self.cols, self.m, placement, paths, [f(c) for c in self.exit])


def _leaf() -> _Part:
    return _Part(1, 1, 0, {("leaf", 0): (0, 0)}, {}, [(0, 0)])


def _root_id(part: _Part, levels: int, prefix: int) -> tuple:
    if part.m == 0:
        return ("leaf", prefix)
    return ("node", levels, prefix)


def _even(m: int) -> _Part:
    if m == 0:
        return _leaf()
    sub = _even(m - 2)
    s = sub.rows
    c = (s - 1) // 2  # column of the sub-root inside a quadrant
    placement: dict = {}
    paths: dict = {}
    root = ("node", 0, 0)
    mid = s
    placement[root] = (mid, mid)
    for child in (0, 1):
        col0 = 0 if child == 0 else s + 1
        child_id = ("node", 1, child)
        child_cell = (mid, col0 + c)
        placement[child_id] = child_cell
        step = 1 if child == 0 else -1
        paths[(root, child_id)] = [(mid, cc) for cc in range(mid, col0 + c - step, -step)]
        for g in (0, 1):
            quad = sub.moved(0 if g == 0 else s + 1, col0, flip_rows=(g == 1),
                             levels=2, prefix=2 * child + g)
            placement.update(quad.placement)
            paths.update(quad.paths)
            sub_root = _root_id(sub, 2, 2 * child + g)
            # quadrant exit runs from its root to the edge facing the centre row
            paths[(child_id, sub_root)] = [child_cell] + list(reversed(quad.exit))
    exit = [(r, mid) for r in range(mid, 2 * s + 1)]
    return _Part(2 * s + 1, 2 * s + 1, m, placement, paths, exit)


def _odd(m: int) -> _Part:
    if m == 1:
        root = ("node", 0, 0)
        placement = {root: (0, 1), ("leaf", 0): (0, 0), ("leaf", 1): (0, 2)}
        paths = {(root, ("leaf", 0)): [(0, 1), (0, 0)], (root, ("leaf", 1)): [(0, 1), (0, 2)]}
        return _Part(1, 3, 1, placement, paths, [(0, 1)])
    sub = _even(m - 1)
    s = sub.rows
    c = (s - 1) // 2
    root = ("node", 0, 0)
    placement = {root: (s, s)}
    paths: dict = {}
    for child in (0, 1):
        col0 = 0 if child == 0 else s + 1
        part = sub.moved(0, col0, flip_rows=False, levels=1, prefix=child)
        placement.update(part.placement)
        paths.update(part.paths)
        step = 1 if child == 0 else -1
        row_cells = [(s, cc) for cc in range(s, col0 + c - step, -step)]
        paths[(root, ("node", 1, child))] = row_cells + list(reversed(part.exit))
    return _Part(s + 1, 2 * s + 1, m, placement, paths, [(s, s)])


def htree_embed(m: int) -> GridEmbedding:
    """H-tree embedding of an m-level router tree with 2**m data cells."""
    if m < 1:
        raise ValueError("m >= 1 is required for an embedding")
    part = _even(m) if m % 2 == 0 else _odd(m)
    roles = {(r, c): UNUSED for r in range(part.rows) for c in range(part.cols)}
    for path in list(part.paths.values()) + [part.exit]:
        for cell in path:
            roles[cell] = ROUTING
    for node, cell in part.placement.items():
        roles[cell] = DATA if node[0] == "leaf" else ROUTER
    return GridEmbedding(part.rows, part.cols, m, part.placement, roles, part.paths, part.exit)


# ---------------------------------------------------------------- verification

def tree_edges(m: int) -> list[tuple]:
    edges = []
    for v in range(m):
        for j in range(1 << v):
            for ch in (2 * j, 2 * j + 1):
                child = ("leaf", ch) if v == m - 1 else ("node", v + 1, ch)
                edges.append((("node", v, j), child))
    return edges


def check_topological_minor(emb: GridEmbedding) -> list[str]:
    """Violations of the topological-minor property (empty list = valid)."""
    bad = []
    m = emb.m
    expected = {("node", v, j) for v in range(m) for j in range(1 << v)}
    expected |= {("leaf", l) for l in range(1 << m)}
    if set(emb.placement) != expected:
        bad.append("placement does not cover exactly the tree nodes")
    cells = list(emb.placement.values())
    if len(set(cells)) != len(cells):
        bad.append("placement is not injective")
    for node, cell in emb.placement.items():
        want = DATA if node[0] == "leaf" else ROUTER
        if emb.roles.get(cell) != want:
            bad.append(f"{node} sits on a {emb.roles.get(cell)} cell")
    logical = set(cells)
    used: dict[Cell, tuple] = {}

    def check_path(name, path, start, end):
        if not path or path[0] != start or path[-1] != end:
            bad.append(f"{name}: path endpoints do not match")
            return
        for a, b in zip(path, path[1:]):
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
                bad.append(f"{name}: path is not grid-connected at {a}->{b}")
                return
        for cell in path[1:-1]:
            if not (0 <= cell[0] < emb.rows and 0 <= cell[1] < emb.cols):
                bad.append(f"{name}: path leaves the grid at {cell}")
            elif cell in logical or emb.roles[cell] not in (ROUTING, UNUSED):
                bad.append(f"{name}: interior cell {cell} is not free")
            elif cell in used:
                bad.append(f"{name}: interior cell {cell} shared with {used[cell]}")
            else:
                used[cell] = name

    for edge in tree_edges(m):
        if edge not in emb.paths:
            bad.append(f"missing path for edge {edge}")
            continue
        a, b = edge
        if a in emb.placement and b in emb.placement:
            check_path(edge, emb.paths[edge], emb.placement[a], emb.placement[b])
    root = emb.placement.get(("node", 0, 0))
    if emb.exit:
        end = emb.exit[-1]
        if not (end[0] in (0, emb.rows - 1) or end[1] in (0, emb.cols - 1)):
            bad.append("root exit does not reach the border")
        check_path("exit", emb.exit + [emb.port_cell()], root, emb.port_cell())
    else:
        bad.append("no root exit path")
    return bad


# ---------------------------------------------------------------- routing

@dataclass(frozen=True)
class RoutingReport:
    strategy: str
    base_depth: int
    extra_depth: int
    extra_ops: int
    mapped_depth: int
    remote_gates: int

    def as_row(self) -> dict:
        return {"strategy": self.strategy, "baseDepth": self.base_depth,
                "extraDepth": self.extra_depth, "extraOps": self.extra_ops,
                "mappedDepth": self.mapped_depth, "remoteGates": self.remote_gates}


def _ancestor(node: tuple, level: int, m: int) -> tuple:
    if node == PORT or level < 0:
        return PORT
    if node[0] == "leaf":
        v, j = m, node[1]
    else:
        _, v, j = node
    if level >= v:
        return node
    return ("node", level, j >> (v - level))


def _level(node: tuple, m: int) -> int:
    if node == PORT:
        return -1
    return m if node[0] == "leaf" else node[1]


class _Distances:
    """Grid distance between tree nodes measured along the designated paths."""

    def __init__(self, emb: GridEmbedding):
        self.m = emb.m
        self.from_port: dict[tuple, int] = {PORT: 0, ("node", 0, 0): len(emb.exit)}
        for (a, b), path in sorted(emb.paths.items(), key=lambda e: _level(e[0][1], emb.m)):
            self.from_port[b] = self.from_port[a] + len(path) - 1

    def __call__(self, a: tuple, b: tuple) -> int:
        if a == b:
            return 0
        la, lb = _level(a, self.m), _level(b, self.m)
        lvl = min(la, lb)
        while _ancestor(a, lvl, self.m) != _ancestor(b, lvl, self.m):
            lvl -= 1
        lca = _ancestor(a, lvl, self.m)
        return self.from_port[a] + self.from_port[b] - 2 * self.from_port[lca]


def gate_distance(nodes: list[tuple], dist: _Distances) -> int:
    d = 0
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            d = max(d, dist(nodes[i], nodes[j]))
    return d


def route(circuit: Circuit, embedding: GridEmbedding, strategy: Strategy | str,
          placement: Optional[dict[int, tuple]] = None, c_tel: int = C_TEL) -> RoutingReport:
    """Cost of running ``circuit`` on the grid; the circuit itself is unchanged.

    A gate whose operands sit d > 1 grid steps apart (along tree paths) costs
    2(d-1) extra SWAP layers and ops under SwapBased, or ``c_tel`` extra layers
    and the same 2(d-1) ops under Teleportation.
    """
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    place = placement if placement is not None else circuit.layout.get("place")
    if place is None:
        raise ValueError("circuit carries no qubit placement")
    for q in range(circuit.width):
        if q not in place:
            raise ValueError(f"qubit {q} has no placed cell")
        node = place[q]
        if node != PORT and node not in embedding.placement:
            raise ValueError(f"qubit {q} is placed on {node}, which is not in the embedding")
    dist = _Distances(embedding)
    cache: dict[tuple, int] = {}
    ready = [0] * circuit.width
    extra_ops = remote = 0
    for g in circuit.gates:
        nodes = tuple(sorted({tuple(place[q]) for q in g.qubits}))
        if nodes not in cache:
            cache[nodes] = gate_distance(list(nodes), dist)
        d = cache[nodes]
        cost = 1
        if d > 1:
            remote += 1
            extra_ops += 2 * (d - 1)
            cost += 2 * (d - 1) if strategy is Strategy.SWAP else c_tel
        start = max((ready[q] for q in g.qubits), default=0)
        for q in g.qubits:
            ready[q] = start + cost
    mapped = max(ready, default=0)
    base = depth(circuit)
    return RoutingReport(strategy.value, base, mapped - base, extra_ops, mapped, remote)


__all__ = ["GridEmbedding", "RoutingReport", "Strategy", "C_TEL", "side", "htree_embed",
           "check_topological_minor", "tree_edges", "route", "asap_layers"]
