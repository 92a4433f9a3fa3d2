"""Command-line front end: ``vqram {synth,sim,map,estimate,bounds,sweep}``.

Exit codes: 0 success, 2 usage or validation error, 3 I/O or schema error.
Tabular output is CSV with a header row (or JSON lines with ``--format json``).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import Optional, Sequence

from . import analysis, mapper, pathsim
from .circuit import SchemaError, conditional_count, deserialize, depth, serialize
from .synth import ARCHS, AddressState, MemoryData, QramConfig, synthesize

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3


class UsageError(ValueError):
    pass


class IOFailure(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers

def parse_int_list(text: str) -> list[int]:
    """``"1..8"``, ``"2,4,6"`` or a mix such as ``"0,2..4"``."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def parse_str_list(text: str) -> list[str]:
    return [p.strip() for p in str(text).split(",") if p.strip()]


def parse_float_list(text: str) -> list[float]:
    return [float(p) for p in parse_str_list(text)]


def read_memory_file(path: str) -> MemoryData:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise IOFailure(f"cannot read memory file {path}: {e}") from None
    text = text.strip()
    try:
        if text.startswith("{") or text.startswith("["):
            doc = json.loads(text)
            bits = doc["bits"] if isinstance(doc, dict) else doc
        else:
            bits = [int(ch) for ch in text if ch in "01"]
        return MemoryData.of(bits)
    except (ValueError, KeyError, TypeError) as e:
        raise IOFailure(f"malformed memory file {path}: {e}") from None


def write_memory_file(path: str, memory: MemoryData, seed=None):
    doc = {"bits": list(memory.bits)}
    if seed is not None:
        doc["seed"] = seed
    _write_text(path, json.dumps(doc) + "\n")


def resolve_memory(spec: str, n: int) -> tuple[MemoryData, Optional[int]]:
    """``zeros``, ``random:SEED`` or a file path; returns (memory, seed)."""
    if spec == "zeros":
        return MemoryData.zeros(n), None
    if spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad memory seed in {spec!r}") from None
        return MemoryData.random(n, seed), seed
    return read_memory_file(spec), None


def parse_input(spec: str, n: int) -> AddressState:
    """``uniform``, ``basis:I`` or ``amps:FILE`` (JSON list of numbers or [re, im])."""
    if spec == "uniform":
        return AddressState.uniform(n)
    if spec.startswith("basis:"):
        i = int(spec.split(":", 1)[1])
        if not 0 <= i < (1 << n):
            raise UsageError(f"basis index {i} out of range for {n} address bits")
        return AddressState.basis(i)
    if spec.startswith("amps:"):
        path = spec.split(":", 1)[1]
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as e:
            raise IOFailure(f"cannot read amplitudes {path}: {e}") from None
        except json.JSONDecodeError as e:
            raise IOFailure(f"malformed amplitudes {path}: {e}") from None
        if isinstance(raw, dict):
            items = [(int(k), v) for k, v in raw.items()]
        else:
            items = list(enumerate(raw))
        amps = {}
        for i, v in items:
            amps[i] = complex(v[0], v[1]) if isinstance(v, list) else complex(v)
        if any(i >= (1 << n) for i in amps):
            raise UsageError(f"amplitude file addresses exceed {n} address bits")
        return AddressState(amps)
    raise UsageError(f"unknown input spec {spec!r}")


def _write_text(path: str, text: str, mode: str = "w"):
    try:
        with open(path, mode) as fh:
            fh.write(text)
    except OSError as e:
        raise IOFailure(f"cannot write {path}: {e}") from None


def format_rows(rows: list[dict], columns: Sequence[str], fmt: str) -> str:
    if fmt == "json":
        return "".join(json.dumps({c: r.get(c) for c in columns}) + "\n" for r in rows)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n",
                       extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({c: _cell(r.get(c)) for c in columns})
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def emit(rows: list[dict], columns: Sequence[str], fmt: str, out: Optional[str],
         append: bool = False):
    text = format_rows(rows, columns, fmt)
    if out is None:
        sys.stdout.write(text)
        return
    if append and fmt == "csv" and os.path.exists(out) and os.path.getsize(out) > 0:
        text = text.split("\n", 1)[1]  # header already present
    _write_text(out, text, "a" if append else "w")


# ---------------------------------------------------------------- commands

def cmd_synth(a) -> int:
    config = QramConfig.of(a.m, a.k, a.opts) if a.arch == "virtual" else None
    memory, seed = resolve_memory(a.memory, a.m + a.k)
    circ = synthesize(a.arch, a.m, a.k, memory, a.opts)
    data = serialize(circ)
    try:
        with open(a.out, "wb") as fh:
            fh.write(data)
    except OSError as e:
        raise IOFailure(f"cannot write {a.out}: {e}") from None
    if seed is not None:
        write_memory_file(a.memory_out or a.out + ".memory.json", memory, seed)
    opts = ",".join(config.opts) if config else "-"
    lines = [f"arch: {a.arch}", f"m: {a.m}", f"k: {a.k}", f"opts: {opts or '-'}",
             f"qubits: {circ.width}", f"depth: {depth(circ)}", f"gates: {len(circ.gates)}",
             f"conditioned: {conditional_count(circ)}"]
    print("\n".join(lines))
    return EXIT_OK


SIM_COLUMNS = ("circuit", "memory", "input", "mode", "epsilon", "bias", "shots", "seed",
               "threads", "width", "gates", "mean", "stderr", "rng")


def cmd_sim(a) -> int:
    try:
        with open(a.circuit, "rb") as fh:
            circ = deserialize(fh.read())
    except OSError as e:
        raise IOFailure(f"cannot read circuit {a.circuit}: {e}") from None
    n = len(circ.address_qubits)
    memory, _ = resolve_memory(a.memory, n)
    if circ.memory_size and len(memory) != circ.memory_size:
        raise UsageError(f"memory has {len(memory)} cells, circuit expects {circ.memory_size}")
    state = parse_input(a.input, n)
    model = pathsim.NoiseModel.parse(a.noise)
    est = pathsim.run_shots(circ, state, memory, model, a.shots, a.seed, a.threads)
    row = {"circuit": a.circuit, "memory": a.memory, "input": a.input, "mode": model.mode,
           "epsilon": model.epsilon, "bias": model.label().split(":")[-1], "shots": a.shots,
           "seed": a.seed, "threads": a.threads or pathsim.default_threads(),
           "width": circ.width, "gates": len(circ.gates)}
    row.update(est.as_dict())
    emit([row], SIM_COLUMNS, a.format, a.out, append=True)
    return EXIT_OK


MAP_COLUMNS = ("m", "strategy", "baseDepth", "extraDepth", "extraOps", "mappedDepth",
               "remoteGates")


def map_rows(m: int, strategies: Sequence[str], k: int = 0, opts="all", c_tel: int = mapper.C_TEL,
             memory: Optional[MemoryData] = None) -> list[dict]:
    memory = memory or MemoryData.zeros(m + k)
    circ = synthesize("virtual", m, k, memory, opts)
    emb = mapper.htree_embed(m)
    rows = []
    for s in strategies:
        rep = mapper.route(circ, emb, s, c_tel=c_tel)
        row = {"m": m, "k": k}
        row.update(rep.as_row())
        rows.append(row)
    return rows


def cmd_map(a) -> int:
    strategies = ["swap", "teleport"] if a.strategy == "both" else [a.strategy]
    memory, _ = resolve_memory(a.memory, a.m + a.k)
    if a.embedding_out:
        _write_text(a.embedding_out, mapper.htree_embed(a.m).to_json())
    rows = map_rows(a.m, strategies, a.k, a.opts, a.c_tel, memory)
    emit(rows, MAP_COLUMNS, a.format, a.out)
    return EXIT_OK


EST_COLUMNS = ("arch", "m", "k", "qubits", "depth", "tCount", "tDepth", "cliffordDepth",
               "ccWorst", "ccMean")


def estimate_row(arch: str, m: int, k: int, opts, samples: int, seed: int) -> dict:
    rep = analysis.estimate(arch, m, k, opts, samples, seed)
    row = {"arch": arch, "m": m, "k": k}
    row.update(rep.as_row())
    return row


def cmd_estimate(a) -> int:
    rows = [estimate_row(a.arch, a.m, a.k, a.opts, a.samples, a.seed)]
    emit(rows, EST_COLUMNS, a.format, a.out)
    return EXIT_OK


BOUND_COLUMNS = ("arch", "model", "epsilon", "m", "k", "bound")
BOUND_MODEL = {"BB_phase": "z", "BB_bit": "z", "VirtualZ": "z", "VirtualX": "x", "SQC": "pauli"}


def cmd_bounds(a) -> int:
    rows = []
    for fam, eps, m, k in product(parse_str_list(a.arch), parse_float_list(a.epsilon),
                                  parse_int_list(a.m), parse_int_list(a.k)):
        fam = analysis.bound_arch(fam)
        rows.append({"arch": fam, "model": BOUND_MODEL[fam], "epsilon": eps, "m": m, "k": k,
                     "bound": analysis.fidelity_bound(fam, eps, m, k)})
    if not rows:
        raise UsageError("empty parameter grid")
    emit(rows, BOUND_COLUMNS, a.format, a.out)
    return EXIT_OK


# ---------------------------------------------------------------- sweep

FID_COLUMNS = ("arch", "m", "k", "opts", "mode", "epsilon", "bias", "shots", "seed",
               "memorySeed", "qubits", "gates", "mean", "stderr", "bound", "error")


def bound_for(arch: str, bias: str, eps: float, m: int, k: int) -> Optional[float]:
    """Analytic floor matching a simulated configuration, if one applies."""
    b = pathsim.parse_bias(bias)
    z_only = b[0] == 0 and b[1] == 0
    if arch == "virtual":
        return analysis.fidelity_bound("VirtualZ" if z_only else "VirtualX", eps, m, k)
    if arch == "bb":
        return analysis.fidelity_bound("BB_bit" if z_only else "VirtualX", eps, m, 0)
    if arch == "sqc":
        return analysis.fidelity_bound("SQC", eps, 1, m + k) if m + k >= 1 else None
    return None


def fidelity_point(arch, m, k, opts, mode, eps, bias, shots, seed, threads=None,
                   memory_dir=None) -> dict:
    mem_seed = [seed, m, k]
    memory = MemoryData.random(m + k, mem_seed)
    if memory_dir:
        write_memory_file(os.path.join(memory_dir, f"memory-n{m + k}-{seed}-{m}-{k}.json"),
                          memory, mem_seed)
    circ = synthesize(arch, m, k, memory, opts)
    model = pathsim.NoiseModel(mode, eps, pathsim.parse_bias(bias))
    est = pathsim.run_shots(circ, AddressState.uniform(m + k), memory, model, shots, seed,
                            threads)
    return {"qubits": circ.width, "gates": len(circ.gates), "mean": est.mean,
            "stderr": est.stderr, "bound": bound_for(arch, bias, eps, m, k)}


def _grid(a, kind: str) -> list[dict]:
    ms, ks = parse_int_list(a.m), parse_int_list(a.k)
    if kind == "fidelity":
        keys = ("arch", "bias", "m", "k", "epsilon", "mode")
        axes = (parse_str_list(a.arch), parse_str_list(a.bias), ms, ks,
                parse_float_list(a.epsilon), parse_str_list(a.mode))
    elif kind == "routing":
        keys = ("strategy", "m", "k")
        axes = (parse_str_list(a.strategy), ms, ks)
    elif kind == "estimate":
        keys = ("arch", "m", "k")
        axes = (parse_str_list(a.arch), ms, ks)
    else:
        keys = ("arch", "epsilon", "m", "k")
        axes = (parse_str_list(a.arch), parse_float_list(a.epsilon), ms, ks)
    return [dict(zip(keys, combo)) for combo in product(*axes)]


def _run_point(kind: str, p: dict, a) -> dict:
    row = dict(p)
    try:
        if kind == "fidelity":
            row.update({"opts": a.opts, "shots": a.shots, "seed": a.seed,
                        "memorySeed": f"{a.seed}/{p['m']}/{p['k']}"})
            row.update(fidelity_point(p["arch"], p["m"], p["k"], a.opts, p["mode"],
                                      p["epsilon"], p["bias"], a.shots, a.seed,
                                      a.threads, a.memory_dir))
        elif kind == "routing":
            rep = map_rows(p["m"], [p["strategy"]], p["k"], a.opts, a.c_tel)[0]
            row.update(rep)
        elif kind == "estimate":
            row.update(estimate_row(p["arch"], p["m"], p["k"], a.opts, a.samples, a.seed))
        else:
            fam = analysis.bound_arch(p["arch"])
            row.update({"arch": fam, "model": BOUND_MODEL[fam],
                        "bound": analysis.fidelity_bound(fam, p["epsilon"], p["m"], p["k"])})
        row["error"] = ""
    except (ValueError, KeyError) as e:
        row["error"] = str(e)
    return row


SWEEP_COLUMNS = {
    "fidelity": FID_COLUMNS,
    "routing": ("m", "k", "strategy", "baseDepth", "extraDepth", "extraOps", "mappedDepth",
                "remoteGates", "error"),
    "estimate": EST_COLUMNS + ("error",),
    "bounds": BOUND_COLUMNS + ("error",),
}

PRESETS = {
    "fig7": {"kind": "fidelity", "arch": "virtual,bb,selectswap", "bias": "x,z", "m": "1..8",
             "k": "0", "epsilon": "1e-3", "mode": "gate"},
    "fig6": {"kind": "routing", "strategy": "swap,teleport", "m": "2,4,6,8", "k": "0"},
    "fig8": {"kind": "fidelity", "arch": "virtual", "bias": "depol", "m": "1,2", "k": "0",
             "epsilon": "1e-3,1e-4,1e-5", "mode": "gate"},
}


def cmd_sweep(a) -> int:
    if a.preset:
        for key, val in PRESETS[a.preset].items():
            if getattr(a, key) is None:
                setattr(a, key, val)
    if a.spec:
        try:
            with open(a.spec) as fh:
                spec = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise IOFailure(f"cannot read sweep spec {a.spec}: {e}") from None
        for key, val in spec.items():
            key = key.replace("-", "_")
            if getattr(a, key, None) is None:
                setattr(a, key, ",".join(map(str, val)) if isinstance(val, list) else val)
    defaults = {"kind": "fidelity", "arch": "virtual", "bias": "z", "m": "2", "k": "0",
                "epsilon": "1e-3", "mode": "gate", "strategy": "swap,teleport"}
    for key, val in defaults.items():
        if getattr(a, key) is None:
            setattr(a, key, val)
    kind = a.kind
    if kind not in SWEEP_COLUMNS:
        raise UsageError(f"unknown sweep kind {kind!r}")
    grid = _grid(a, kind)
    if not grid:
        raise UsageError("empty parameter grid")
    workers = a.workers or 1
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda p: _run_point(kind, p, a), grid))
    else:
        rows = [_run_point(kind, p, a) for p in grid]
    emit(rows, SWEEP_COLUMNS[kind], a.format, a.out)
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} rows, {failed} failed", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vqram", description="Virtual QRAM toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def fmt(sp):
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    s = sub.add_parser("synth", help="synthesize a query circuit")
    s.add_argument("--arch", choices=ARCHS, default="virtual")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--memory", default="zeros", help="FILE, random:SEED or zeros")
    s.add_argument("--memory-out", default=None, help="where to persist a random memory")
    s.add_argument("--opts", default="")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("sim", help="Monte Carlo fidelity of a circuit file")
    s.add_argument("--circuit", required=True)
    s.add_argument("--memory", required=True, help="FILE, random:SEED or zeros")
    s.add_argument("--input", default="uniform", help="uniform, basis:I or amps:FILE")
    s.add_argument("--noise", default="gate:0:z", help="MODE:EPSILON:BIAS")
    s.add_argument("--shots", type=int, default=1024)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=None)
    fmt(s)
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("map", help="H-tree embedding and routing overhead")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--opts", default="all")
    s.add_argument("--memory", default="zeros")
    s.add_argument("--strategy", choices=("swap", "teleport", "both"), default="both")
    s.add_argument("--c-tel", type=int, default=mapper.C_TEL)
    s.add_argument("--embedding-out", default=None)
    fmt(s)
    s.set_defaults(func=cmd_map)

    s = sub.add_parser("estimate", help="resource report")
    s.add_argument("--arch", choices=ARCHS, default="virtual")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--opts", default="")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    fmt(s)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("bounds", help="analytic fidelity lower bounds")
    s.add_argument("--arch", default=",".join(analysis.BOUND_ARCHS))
    s.add_argument("--epsilon", default="1e-3")
    s.add_argument("--m", default="2")
    s.add_argument("--k", default="0")
    fmt(s)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("sweep", help="parameter sweep to CSV/JSON")
    s.add_argument("--preset", choices=sorted(PRESETS), default=None)
    s.add_argument("--spec", default=None, help="JSON file with grid axes")
    s.add_argument("--kind", choices=sorted(SWEEP_COLUMNS), default=None)
    s.add_argument("--arch", default=None)
    s.add_argument("--bias", default=None)
    s.add_argument("--m", default=None)
    s.add_argument("--k", default=None)
    s.add_argument("--epsilon", default=None)
    s.add_argument("--mode", default=None)
    s.add_argument("--strategy", default=None)
    s.add_argument("--opts", default="all")
    s.add_argument("--shots", type=int, default=1024)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--c-tel", type=int, default=mapper.C_TEL)
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--workers", type=int, default=None, help="grid points run in parallel")
    s.add_argument("--memory-dir", default=None, help="persist every random memory here")
    fmt(s)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (SchemaError, IOFailure) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
