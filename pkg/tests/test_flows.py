import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isostring import (
    BoundaryConditions,
    DiscreteString,
    FlowSpec,
    PeakonString,
    ValidationError,
    hamiltonian,
    invariants,
    matrix_vector_field,
    vector_field,
)
from support import INF, random_string, tuple_sum_field

BCS = [(1.0, 0.0), (INF, INF), (1.0, 1.0), (0.0, 2.0), (INF, 0.0), (2.5, INF)]


def one_mass():
    return DiscreteString([0.5], [1.0], BoundaryConditions(1.0, 0.0))


def test_one_mass_field_and_hamiltonian():
    xd, md = vector_field(one_mass(), FlowSpec(1))
    assert xd[0] == pytest.approx(2.25, rel=1e-15)
    assert md[0] == pytest.approx(-1.5, rel=1e-15)
    assert hamiltonian(one_mass(), 1) == pytest.approx(1.125, rel=1e-15)
    I = invariants(one_mass(), 2)
    assert I[0] == pytest.approx(-1.5) and I[2] == 0.0


@pytest.mark.parametrize("bcs", BCS)
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_product_rule_and_matrix_forms_agree(bcs, k):
    s = random_string(np.random.default_rng(k), 5, *bcs, hi=0.95, mass_scale=1.0)
    a = vector_field(s, FlowSpec(k))
    b = matrix_vector_field(s, k)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-11, atol=1e-14 * np.max(np.abs(b[1])))


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_field_matches_tuple_sums(n, k):
    rng = np.random.default_rng(100 + 10 * n + k)
    for bcs in BCS[:4]:
        s = random_string(rng, n, *bcs, hi=0.95, mass_scale=1.0)
        xd, md = vector_field(s, FlowSpec(k))
        bx, bm = tuple_sum_field(s, k)
        np.testing.assert_allclose(xd, bx, rtol=1e-12)
        np.testing.assert_allclose(md, bm, rtol=1e-7, atol=1e-9 * np.max(np.abs(bm)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 6), k=st.integers(1, 4),
       bcs=st.sampled_from(BCS))
def test_velocities_positive_and_hamiltonian_nonnegative(seed, n, k, bcs):
    s = random_string(np.random.default_rng(seed), n, *bcs, hi=0.95, min_gap=1e-3)
    xd, _ = vector_field(s, FlowSpec(k))
    assert np.all(xd > 0)
    assert hamiltonian(s, k) >= 0


def hamiltonian_gradient(s, k, step=1e-6):
    gx, gm = np.empty(s.n), np.empty(s.n)
    for j in range(s.n):
        for arr, out in ((s.positions, gx), (s.masses, gm)):
            up, dn = arr.copy(), arr.copy()
            up[j] += step
            dn[j] -= step
            if arr is s.positions:
                hp = hamiltonian(s.with_state(up, s.masses), k)
                hm = hamiltonian(s.with_state(dn, s.masses), k)
            else:
                hp = hamiltonian(s.with_state(s.positions, up), k)
                hm = hamiltonian(s.with_state(s.positions, dn), k)
            out[j] = (hp - hm) / (2 * step)
    return gx, gm


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("bcs", BCS)
def test_field_is_hamiltonian(k, bcs):
    s = random_string(np.random.default_rng(7 * k), 4, *bcs, hi=0.95, mass_scale=1.0)
    gx, gm = hamiltonian_gradient(s, k)
    xd, md = vector_field(s, FlowSpec(k))
    np.testing.assert_allclose(gm, xd, rtol=1e-5)
    np.testing.assert_allclose(-gx, md, rtol=1e-5, atol=1e-6 * np.max(np.abs(md)))


@pytest.mark.parametrize("bcs", BCS)
def test_first_hamiltonian_invariant_identity(bcs):
    rng = np.random.default_rng(12)
    for n in range(1, 7):
        s = random_string(rng, n, *bcs, hi=0.95, mass_scale=1.0)
        I = invariants(s, 2)
        assert hamiltonian(s, 1) == pytest.approx(0.5 * I[0] ** 2 + I[2], rel=1e-10)


def test_invariants_brute_force():
    import itertools
    from isostring import g0

    s = random_string(np.random.default_rng(1), 4, 1.0, 1.0, hi=0.95)
    x, m = s.positions, s.masses
    I = invariants(s, 4)
    assert I[1] == I[0]
    for j in (2, 3, 4):
        ref = 0.0
        for chain in itertools.combinations(range(s.n), j):
            term = m[chain[-1]] * m[chain[0]] * g0(s.bc, x[chain[0]], x[chain[-1]])
            for a, b in zip(chain[:-1], chain[1:]):
                term *= x[b] - x[a]
            for a in chain[1:-1]:
                term *= m[a]
            ref += term
        assert I[j] == pytest.approx(ref, rel=1e-13, abs=1e-300)
    with pytest.raises(ValueError):
        invariants(s, -1)


def test_mass_homogeneity_of_first_flow():
    # k = 1: xdot is linear in the masses
    s = random_string(np.random.default_rng(3), 4, 1.0, 0.0)
    scaled = s.with_state(s.positions, 3.0 * s.masses)
    np.testing.assert_allclose(vector_field(scaled, FlowSpec(1))[0],
                               3.0 * vector_field(s, FlowSpec(1))[0], rtol=1e-14)


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("bcs", BCS[:3])
def test_rational_field_tends_to_truncated(k, bcs):
    s = random_string(np.random.default_rng(20 + k), 4, *bcs, hi=0.95)
    ref = np.concatenate(vector_field(s, FlowSpec(k)))
    epss = [1e-2, 1e-3, 1e-4]
    errs = [np.linalg.norm(np.concatenate(vector_field(s, FlowSpec(k, e))) - ref) for e in epss]
    slope = np.polyfit(np.log(epss), np.log(errs), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.05)


def test_rational_one_mass_field():
    # n = 1, k = 1: xdot = -b0 with b0 = [G0 - G_eps] / eps
    s = one_mass()
    xd, md = vector_field(s, FlowSpec(1, 0.1))
    assert xd[0] == pytest.approx(1.95652, abs=1e-5)
    # b0(x) = -m G0(x, x1)^2 / (1 + eps m K): slope -2 * 1.5 / 1.15 on the left, flat on the right
    assert md[0] == pytest.approx(-1.5 / 1.15, rel=1e-12)


def test_kernel_mismatch():
    with pytest.raises(ValidationError):
        vector_field(PeakonString([0.0, 1.0], [1.0, 1.0]), FlowSpec(1))
    with pytest.raises(ValidationError):
        vector_field(one_mass(), FlowSpec(1, 0.0, "ch_peakon"))
    with pytest.raises(ValueError):
        hamiltonian(one_mass(), 0)
