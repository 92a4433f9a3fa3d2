import math

import pytest

from vqram import analysis as an
from vqram.circuit import Circuit, CircuitBuilder, Gate, Role, cswap, toffoli
from vqram.synth import MemoryData, QramConfig, synth_virtual, synthesize


def _single(g, width):
    return Circuit(width, (Role.ROUTER,) * width, (g,))


def test_empty_circuit_all_zero():
    r = an.resources(Circuit(0, ()))
    assert (r.qubits, r.depth, r.t_count, r.t_depth, r.clifford_depth, r.cc_worst, r.cc_mean) \
        == (0, 0, 0, 0, 0, 0, 0.0)


def test_single_cswap():
    r = an.resources(_single(cswap(0, 1, 2), 3))
    assert (r.t_count, r.t_depth, r.depth) == (7, 3, 12)


def test_single_toffoli():
    r = an.resources(_single(toffoli(0, 1, 2), 3))
    assert (r.t_count, r.t_depth, r.depth) == (7, 3, 10)


def test_mcx_ladder_cost():
    r = an.resources(_single(Gate("MCX", (0, 1, 2, 3), (4,)), 5))
    assert r.t_count == 2 * 3 * 7
    assert r.t_depth == 2 * 3 * 3


def test_resources_are_structural():
    mem = MemoryData.random(4, 3)
    a = synth_virtual(QramConfig.of(3, 1, "recycle,pipeline"), mem)
    b = synth_virtual(QramConfig.of(3, 1, "recycle,pipeline"), mem)
    assert an.resources(a) == an.resources(b)


def test_t_depth_never_exceeds_depth():
    for m in range(1, 5):
        for k in range(3):
            r = an.resources(synth_virtual(QramConfig.of(m, k, "all"), MemoryData.random(m + k, 0)))
            assert 0 <= r.t_depth <= r.depth
            assert r.clifford_depth <= r.depth


def test_cc_mean_over_samples():
    c = synth_virtual(QramConfig.of(2, 1, ""), MemoryData.zeros(3))
    mems = [MemoryData.of([1] * 8), MemoryData.zeros(3)]
    r = an.resources(c, mems)
    assert r.cc_worst == 16
    assert r.cc_mean == 8.0


def test_t_count_per_leaf_converges():
    for k in range(3):
        per = [an.resources(synthesize("virtual", m, k, MemoryData.random(m + k, 1), "all")).t_count
               / 2 ** m for m in range(2, 9)]
        assert abs(per[-1] - per[-2]) < 0.05 * per[-1]
        assert max(per[3:]) < 30


def test_load_multiple_times_overhead_doubles_with_k():
    extra_depth, extra_count = [], []
    for k in range(1, 5):
        mem = MemoryData.random(3 + k, k)
        a = an.resources(synthesize("sqc+bb", 3, k, mem))
        v = an.resources(synthesize("virtual", 3, k, mem, "all"))
        assert a.t_depth > v.t_depth and a.t_count > v.t_count
        extra_depth.append(a.t_depth - v.t_depth)
        extra_count.append(a.t_count - v.t_count)
    for seq in (extra_depth, extra_count):
        assert all(b / a >= 1.8 for a, b in zip(seq, seq[1:]))


def test_loading_depth_fits():
    ms = list(range(2, 9))
    pipe = [an.loading_depth(m, True) for m in ms]
    raw = [an.loading_depth(m, False) for m in ms]
    assert an.fit_r2(ms, pipe, 1) >= 0.99
    assert an.fit_r2(ms, raw, 2) >= 0.99
    assert an.fit_r2(ms, raw, 1) < an.fit_r2(ms, raw, 2)


# ---------------------------------------------------------------- bounds

@pytest.mark.parametrize("arch", an.BOUND_ARCHS)
def test_zero_epsilon_bound_is_one(arch):
    assert an.fidelity_bound(arch, 0.0, 3, 1) == 1.0


def test_worked_bounds():
    assert abs(an.fidelity_bound("VirtualZ", 1e-3, 2, 1) - 0.856) <= 1e-12
    assert abs(an.fidelity_bound("VirtualX", 1e-3, 2, 1) - 0.76) <= 1e-12
    assert abs(an.fidelity_bound("BB_bit", 1e-3, 2) - 0.968) <= 1e-12
    assert abs(an.fidelity_bound("BB_phase", 1e-3, 2) - 0.984) <= 1e-12
    assert abs(an.fidelity_bound("SQC", 1e-3, 1, 3) - 0.976) <= 1e-12


def test_bounds_clamped_at_zero():
    assert an.fidelity_bound("VirtualX", 1e-2, 8, 2) == 0.0


def test_bound_monotonicity():
    for arch in an.BOUND_ARCHS:
        for m in range(1, 6):
            for k in range(3):
                b = an.fidelity_bound(arch, 1e-3, m, k)
                assert an.fidelity_bound(arch, 2e-3, m, k) <= b
                assert an.fidelity_bound(arch, 1e-3, m + 1, k) <= b
                assert an.fidelity_bound(arch, 1e-3, m, k + 1) <= b


def test_bound_rejects_negative_epsilon():
    with pytest.raises(ValueError):
        an.fidelity_bound("VirtualZ", -1e-3, 2, 1)
    with pytest.raises(ValueError):
        an.fidelity_bound("nope", 1e-3, 2, 1)


def test_code_distance_gap_examples():
    assert abs(an.code_distance_gap(0.1, 1.0, 2, 1) - math.log(3 / 5) / math.log(0.1)) <= 1e-12
    assert abs(an.code_distance_gap(0.1, 1.0, 2, 1) - 0.2218487496163564) <= 1e-12
    assert an.code_distance_gap(1e-3, 1e-2, 1, 0) == math.log(1 / 2) / math.log(0.1)
    assert an.code_distance_gap(0.99e-2, 1e-2, 2, 1) > 20


def test_code_distance_gap_domain():
    for p in (1e-2, 2e-2, 0.0, -1e-3):
        with pytest.raises(ValueError):
            an.code_distance_gap(p, 1e-2, 2, 1)
