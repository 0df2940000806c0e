import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conewalk.decomposition import (DecompositionTrace, decompose_trajectory, residual_law,
                                    residual_moment_report, sample_decomposed_step, skeleton, v_atoms)
from conewalk.errors import InconsistencyError, PreconditionError
from conewalk.kernels import AssumptionParams, AtomTable, KernelSpec, enumerate_onestep, nn_displacements
from conewalk.rng import RandomStream
from conewalk.stats import chi_square_gof

LAZY = KernelSpec.zero_drift(2)


def test_skeleton_base_case():
    assert np.array_equal(skeleton(LAZY, 1, (3, 3)).probs, enumerate_onestep(LAZY, (3, 3)).probs)


def test_residual_law_example():
    law = residual_law(enumerate_onestep(LAZY, (0, 0)), 0.125, 1)
    d = law.displacements.tolist()
    assert law.v_zero_prob == 0.5
    assert law.probs[d.index([0, 0])] == 0
    for y in ([1, 0], [-1, 0], [0, 1], [0, -1]):
        assert law.probs[d.index(y)] == pytest.approx(0.25)


def test_degenerate_residual():
    law = residual_law(enumerate_onestep(LAZY, (0, 0)), 0.25, 1)
    assert law.v_zero_prob == 0.0
    rng = RandomStream.from_seed(1)
    for _ in range(200):
        assert sample_decomposed_step(law, 0.25, 1, rng).zeta == (0, 0)


def test_deficient_atom_named():
    table = AtomTable(nn_displacements(2), np.array([0.3, 0.2, 0.0, 0.4, 0.1]))
    with pytest.raises(PreconditionError, match=r"\(1, 0\)"):
        residual_law(table, 0.2, 1)


def test_inconsistent_full_kappa():
    table = AtomTable(nn_displacements(2), np.array([0.25, 0.25, 0.0, 0.3, 0.2]))
    with pytest.raises((InconsistencyError, PreconditionError)):
        residual_law(table, 0.25, 1)


@given(st.integers(0, 2**63), st.sampled_from([0.05, 0.1, 0.125]))
def test_step_invariants(seed, kappa):
    k = KernelSpec.radial(1.0, 0.5)
    table = enumerate_onestep(k, (40, -7))
    step = sample_decomposed_step(table, kappa, 1, RandomStream(seed))
    assert tuple(a + b for a, b in zip(step.v, step.zeta)) == step.skeleton_increment
    assert step.zeta == (0, 0) or step.v == (0, 0)
    assert sum(abs(c) for c in step.zeta) <= sum(abs(c) for c in step.skeleton_increment)


def test_marginal_law_is_the_table():
    k = KernelSpec.radial(1.0, 0.5)
    table = enumerate_onestep(k, (20, 5))
    law = residual_law(table, 0.1, 1)
    rng = RandomStream.from_seed(2)
    n = 100000
    keys = [tuple(r) for r in table.displacements.tolist()]
    counts = dict.fromkeys(keys, 0)
    for _ in range(n):
        counts[sample_decomposed_step(law, 0.1, 1, rng).skeleton_increment] += 1
    obs = [counts[y] for y, p in zip(keys, table.probs) if p > 0]
    probs = [p for p in table.probs if p > 0]
    assert chi_square_gof(obs, probs).p_value > 1e-3


@pytest.mark.parametrize("kernel", [LAZY, KernelSpec.radial(1, 0.5), KernelSpec.rwre(5),
                                    KernelSpec.half_plane()], ids=lambda k: k.kernel_id)
def test_compiled_and_python_paths_agree(kernel):
    x0 = (30, 3)
    kappa = 0.05
    p = AssumptionParams(kappa)
    if kernel.variant == "half_plane":
        with pytest.raises((PreconditionError, InconsistencyError)):
            decompose_trajectory(kernel, p, (1, 0), 50, RandomStream.from_seed(3))
        return
    fast = decompose_trajectory(kernel, p, x0, 3000, RandomStream.from_seed(3))
    # a wrapper around the same law forces the pure-Python path
    slow_kernel = KernelSpec.custom(lambda x: list(enumerate_onestep(kernel, x)), 2)
    slow = decompose_trajectory(slow_kernel, p, x0, 3000, RandomStream.from_seed(3))
    assert np.array_equal(fast.states, slow.states)
    assert np.array_equal(fast.v, slow.v) and np.array_equal(fast.zeta, slow.zeta)


def test_trace_identity_and_counter():
    rng = RandomStream.from_seed(4)
    tr = decompose_trajectory(LAZY, AssumptionParams(0.125), (0, 0), 5000, rng)
    assert rng.counter == 10000
    assert tr.identity_mismatches() == 0 and tr.exclusivity_violations() == 0
    assert np.array_equal(tr.y[0], (0, 0)) and np.array_equal(tr.z[0], (0, 0))
    assert np.array_equal(tr.states[-1] - tr.states[0], tr.y[-1] + tr.z[-1])
    steps = tr.steps
    assert len(steps) == 5000 and all(s.zeta == (0, 0) or s.v == (0, 0) for s in steps)


def test_v_law_chi_square():
    v = np.concatenate([decompose_trajectory(LAZY, AssumptionParams(0.125), (0, 0), 10**4,
                                             RandomStream.from_seed(5, i)).v for i in range(10)])
    atoms = [(0, 0)] + [tuple(a) for a in v_atoms(2, 1)]
    obs = [int(np.sum(np.all(v == a, axis=1))) for a in atoms]
    assert chi_square_gof(obs, [0.5] + [0.125] * 4).p_value > 0.01


def test_identity_check_detects_tampering():
    tr = decompose_trajectory(LAZY, AssumptionParams(0.125), (0, 0), 100, RandomStream.from_seed(6))
    bad = DecompositionTrace(tr.states.copy(), tr.v.copy(), tr.zeta.copy())
    bad.states[50, 0] += 1
    assert bad.identity_mismatches() == 1


def test_residual_moment_reports():
    tr = decompose_trajectory(LAZY, AssumptionParams(0.125), (0, 0), 20000, RandomStream.from_seed(7))
    rep = residual_moment_report(tr, 1.0, 1)
    assert rep.passed and all(b.mean <= 1 for b in rep.bins)
    deg = decompose_trajectory(LAZY, AssumptionParams(0.25), (0, 0), 2000, RandomStream.from_seed(8))
    assert all(b.mean == 0 for b in residual_moment_report(deg, 1.0, 1).bins)
    tight = residual_moment_report(tr, 0.2, 1)
    assert not tight.passed


def test_lazy_check_along_path():
    # the drift clamp keeps every atom >= 1/8, so kappa = 0.2 fails somewhere on the path
    with pytest.raises(PreconditionError):
        decompose_trajectory(KernelSpec.radial(5, 1), AssumptionParams(0.2), (3, 0), 100,
                             RandomStream.from_seed(9))
