"""Walk through one virtual QRAM query: synthesize, verify, cost, map, and add noise.

Run with ``python3 demos/query_walkthrough.py``.
"""
from vqram import analysis, mapper, pathsim
from vqram.synth import AddressState, MemoryData, QramConfig, synth_virtual

m, k = 3, 1
memory = MemoryData.random(m + k, 42)
print("memory bits:", list(memory.bits))

circuit = synth_virtual(QramConfig.of(m, k, "all"), memory)
print(f"virtual QRAM m={m} k={k}: {circuit.width} qubits, {len(circuit.gates)} gates")

# A noiseless query on a uniform address superposition matches the ideal lookup.
address = AddressState.uniform(m + k)
out = pathsim.apply(circuit, pathsim.PathState.from_address(circuit, address), memory=memory)
print("noiseless fidelity:", round(pathsim.fidelity(out, pathsim.oracle_output(address, memory, circuit)), 12))

report = analysis.resources(circuit)
print("resources:", report.as_row())

embedding = mapper.htree_embed(m)
print(f"H-tree grid {embedding.rows}x{embedding.cols}, census {embedding.census()}")
for strategy in ("swap", "teleport"):
    print(strategy, mapper.route(circuit, embedding, strategy).as_row())

for bias in ("z", "x"):
    est = pathsim.run_shots(circuit, address, memory,
                            pathsim.NoiseModel.parse(f"gate:1e-3:{bias}"), 2048, seed=1)
    bound = analysis.fidelity_bound("VirtualZ" if bias == "z" else "VirtualX", 1e-3, m, k)
    print(f"{bias}-noise fidelity {est.mean:.4f} +- {est.stderr:.4f} (lower bound {bound:.4f})")
