"""How far apart do pure-Z and pure-X noise push query fidelity as m grows?

Run with ``python3 demos/bias_asymmetry.py``.
"""
from vqram import pathsim
from vqram.synth import AddressState, MemoryData, QramConfig, synth_virtual

print(" m   1-F (Z)   1-F (X)   X/Z")
for m in range(2, 7):
    memory = MemoryData.random(m, m)
    circuit = synth_virtual(QramConfig.of(m, 0, "all"), memory)
    address = AddressState.uniform(m)
    inf = {}
    for bias in ("z", "x"):
        est = pathsim.run_shots(circuit, address, memory,
                                pathsim.NoiseModel.parse(f"gate:1e-3:{bias}"), 1024, seed=2)
        inf[bias] = 1 - est.mean
    ratio = inf["x"] / inf["z"] if inf["z"] else float("inf")
    print(f"{m:2d}   {inf['z']:.4f}    {inf['x']:.4f}    {ratio:.2f}")
