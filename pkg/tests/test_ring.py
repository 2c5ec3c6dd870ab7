import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.stats import unitary_group

from ringgp import ring
from ringgp.errors import ConvergenceFailure, FirstPulseNotOffDiagonal, SingularT
from ringgp.linalg import Status, dagger, is_hermitian, is_unitary, sign_aligned_distance
from ringgp.ring import PulseSpec, RingCouplings

PI = math.pi
EXAMPLE = RingCouplings((1.0, 0.5, 1.0, 0.5), (0.0,) * 4)  # T = [[1, .5], [.5, 1]], s = (1.5, .5)


def rand_couplings(rng):
    return RingCouplings(rng.normal(size=4), rng.normal(size=4))


def expm_op(c, area):
    return expm(-1j * area * ring.effective_hamiltonian(c))


def cos_sin_oracle(c, area):
    # U cos(aS) U^+ etc. from numpy's own SVD
    t = ring.t_matrix(c).matrix
    u, s, vh = np.linalg.svd(t)
    v = dagger(vh)
    return u, s, v


# -- Hamiltonians ---------------------------------------------------------------


def ket(bits: str) -> np.ndarray:
    out = np.zeros(16, dtype=complex)
    out[int(bits, 2)] = 1.0
    return out


def test_full_hamiltonian_zero():
    np.testing.assert_array_equal(ring.full_hamiltonian(RingCouplings()), np.zeros((16, 16)))


def test_full_hamiltonian_single_xy_bond():
    h = ring.full_hamiltonian(RingCouplings((1, 0, 0, 0)))
    out = h @ ket("1000")
    np.testing.assert_allclose(out, ket("0100"), atol=1e-15)
    # XY swap structure on qubits 1, 2 tensored with identity on 3, 4
    swap = np.zeros((4, 4))
    swap[1, 2] = swap[2, 1] = 1.0
    np.testing.assert_allclose(h, np.kron(swap, np.eye(4)), atol=1e-15)


def test_full_hamiltonian_dm_sign():
    # (X Y - Y X)/2 |10> = i |01>
    h = ring.full_hamiltonian(RingCouplings(dz=(1, 0, 0, 0)))
    np.testing.assert_allclose(h @ ket("1000"), 1j * ket("0100"), atol=1e-15)


def test_full_hamiltonian_boundary_bond():
    # bond 41 couples qubit 4 back to qubit 1
    h = ring.full_hamiltonian(RingCouplings((0, 0, 0, 1)))
    np.testing.assert_allclose(h @ ket("0001"), ket("1000"), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_full_hamiltonian_structure(seed):
    c = rand_couplings(np.random.default_rng(seed))
    h = ring.full_hamiltonian(c)
    assert is_hermitian(h, 1e-14)
    number = np.diag([bin(i).count("1") for i in range(16)]).astype(float)
    np.testing.assert_allclose(h @ number, number @ h, atol=1e-13)
    # the single-excitation block is exactly the effective Hamiltonian
    np.testing.assert_allclose(ring.restrict_to_sector(h), ring.effective_hamiltonian(c), atol=1e-14)
    idx = list(ring.SECTOR_INDICES)
    rest = [i for i in range(16) if i not in idx]
    np.testing.assert_allclose(h[np.ix_(rest, idx)], 0, atol=1e-15)


def test_effective_hamiltonian_examples():
    np.testing.assert_array_equal(ring.effective_hamiltonian(RingCouplings()), np.zeros((4, 4)))
    h = ring.effective_hamiltonian(RingCouplings((1, 0, 0, 0)))
    assert np.count_nonzero(h) == 2
    assert h[0, 2] == 1 and h[2, 0] == 1


def test_effective_hamiltonian_block_structure():
    c = rand_couplings(np.random.default_rng(0))
    h = ring.effective_hamiltonian(c)
    t = ring.t_matrix(c).matrix
    np.testing.assert_array_equal(h[:2, :2], 0)
    np.testing.assert_array_equal(h[2:, 2:], 0)
    np.testing.assert_array_equal(h[:2, 2:], t)
    assert is_hermitian(h)


# -- T matrix -------------------------------------------------------------------


def test_t_matrix_entries():
    c = RingCouplings((1, 2, 3, 4), (5, 6, 7, 8))
    t = ring.t_matrix(c).matrix
    np.testing.assert_array_equal(t, [[1 - 5j, 4 + 8j], [2 + 6j, 3 - 7j]])
    assert RingCouplings.from_t(t) == c


def test_t_matrix_example():
    tm = ring.t_matrix(EXAMPLE)
    np.testing.assert_array_equal(tm.matrix, [[1, 0.5], [0.5, 1]])
    np.testing.assert_allclose(tm.singular_values, [1.5, 0.5], atol=1e-15)


def test_t_matrix_dm_only_is_singular():
    c = RingCouplings(dz=(1, 1, 1, 1))
    tm = ring.t_matrix(c)
    np.testing.assert_array_equal(tm.matrix, [[-1j, 1j], [1j, -1j]])
    np.testing.assert_allclose(tm.singular_values, [2, 0], atol=1e-15)
    with pytest.raises(SingularT):
        ring.t_matrix(c, strict=True)
    with pytest.raises(SingularT):
        ring.t_matrix(RingCouplings(), strict=True)


def test_t_matrix_uniform():
    tm = ring.t_matrix(RingCouplings.uniform(0.7))
    np.testing.assert_allclose(tm.svd.u, np.eye(2))
    np.testing.assert_allclose(tm.svd.v, np.eye(2))
    np.testing.assert_allclose(tm.singular_values, [0.7, 0.7])


# -- evolution ----------------------------------------------------------------


def test_evolve_area_zero_is_identity():
    np.testing.assert_allclose(ring.evolve(PulseSpec(EXAMPLE, 0.0)).matrix, np.eye(4), atol=1e-15)


def test_evolve_uniform_quarter_period():
    op = ring.evolve(PulseSpec(RingCouplings.uniform(1.0), PI / 2))
    np.testing.assert_allclose(op.sigma11, 0, atol=1e-15)
    np.testing.assert_allclose(op.sigma22, 0, atol=1e-15)
    np.testing.assert_allclose(op.sigma12, -1j * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(op.sigma21, -1j * np.eye(2), atol=1e-15)


def test_evolve_example_at_pi():
    op = ring.evolve(PulseSpec(EXAMPLE, PI))
    np.testing.assert_allclose(op.sigma11, 0, atol=1e-15)
    np.testing.assert_allclose(op.matrix, expm_op(EXAMPLE, PI), atol=1e-13)


def test_evolve_matches_exponential():
    rng = np.random.default_rng(1)
    for _ in range(50):
        c, a = rand_couplings(rng), rng.uniform(0, 4 * PI)
        op = ring.evolve(PulseSpec(c, a))
        assert is_unitary(op.matrix, 1e-10)
        assert np.linalg.norm(op.matrix - expm_op(c, a)) <= 1e-10


def test_evolve_singular_t_non_strict():
    c = RingCouplings(dz=(1, 1, 1, 1))
    np.testing.assert_allclose(ring.evolve(PulseSpec(c, 0.8)).matrix, expm_op(c, 0.8), atol=1e-13)
    with pytest.raises(SingularT):
        ring.evolve(PulseSpec(c, 0.8), strict=True)


def test_evolve_batch_matches_single():
    c = rand_couplings(np.random.default_rng(2))
    areas = np.linspace(0, 3, 7)
    batch = ring.evolve_batch(c, areas)
    for a, m in zip(areas, batch):
        np.testing.assert_allclose(m, ring.evolve(PulseSpec(c, a)).matrix, atol=1e-15)


def test_evolution_operator_composition():
    rng = np.random.default_rng(3)
    c = rand_couplings(rng)
    a, b = ring.evolve(PulseSpec(c, 0.4)), ring.evolve(PulseSpec(c, 0.9))
    np.testing.assert_allclose((a @ b).matrix, ring.evolve(PulseSpec(c, 1.3)).matrix, atol=1e-13)


def test_gamma_identities():
    rng = np.random.default_rng(4)
    for _ in range(20):
        c, a = rand_couplings(rng), rng.uniform(0, 4 * PI)
        op = ring.evolve(PulseSpec(c, a))
        u, s, v = cos_sin_oracle(c, a)
        sn2 = np.sin(a * s) ** 2
        np.testing.assert_allclose(op.sigma12 @ op.sigma21, -(u * sn2) @ dagger(u), atol=1e-10)
        np.testing.assert_allclose(op.sigma21 @ op.sigma12, -(v * sn2) @ dagger(v), atol=1e-10)


# -- order-1 phases -------------------------------------------------------------


def test_kappa1_area_zero():
    g1, g2, lab1, lab2 = ring.gp_kappa1(PulseSpec(EXAMPLE, 0.0))
    np.testing.assert_allclose(g1.isometry, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(g2.isometry, np.eye(2), atol=1e-14)
    assert (lab1.c, lab1.d) == (0, 0) and (lab2.c, lab2.d) == (0, 0)


def test_kappa1_d_flips_at_first_zero():
    below = ring.gp_kappa1(PulseSpec(EXAMPLE, PI / 3 - 1e-3))
    above = ring.gp_kappa1(PulseSpec(EXAMPLE, PI / 3 + 1e-3))
    assert (below[2].c, below[2].d) == (0, 0)
    assert (above[2].c, above[2].d) == (1, 1)
    np.testing.assert_allclose(below[0].isometry, np.eye(2), atol=1e-12)
    # above the zero the phase is a reflection (-1)^c U Z U^+
    u = ring.t_matrix(EXAMPLE).svd.u
    np.testing.assert_allclose(above[0].isometry, -u @ ring.Z @ dagger(u), atol=1e-12)


def test_kappa1_partial_at_boundary():
    g1, g2, lab1, lab2 = ring.gp_kappa1(PulseSpec(EXAMPLE, PI / 3))
    assert g1.status.status is Status.PARTIAL and g1.status.rank == 1
    assert lab1 is None and lab2 is None


def test_kappa1_uniform_sign_change():
    lam = 0.8
    g1, g2, lab1, _ = ring.gp_kappa1(PulseSpec(RingCouplings.uniform(lam), PI / lam))
    np.testing.assert_allclose(g1.isometry, -np.eye(2), atol=1e-12)
    np.testing.assert_allclose(g2.isometry, -np.eye(2), atol=1e-12)
    assert (lab1.c, lab1.d) == (1, 0)


def test_kappa1_d_unchanged_across_double_zero():
    lo = ring.gp_kappa1(PulseSpec(EXAMPLE, PI - 1e-4))[2]
    hi = ring.gp_kappa1(PulseSpec(EXAMPLE, PI + 1e-4))[2]
    assert lo.d == hi.d == 1
    assert lo.c != hi.c


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 4 * PI))
def test_sector_label_reproduces_phase(seed, area):
    c = rand_couplings(np.random.default_rng(seed))
    g1, g2, lab1, lab2 = ring.gp_kappa1(PulseSpec(c, area))
    if lab1 is not None:
        np.testing.assert_allclose(lab1.matrix(), g1.isometry, atol=1e-9)
    if lab2 is not None:
        np.testing.assert_allclose(lab2.matrix(), g2.isometry, atol=1e-9)


def test_sector_switch_is_discontinuous_while_sigma_is_continuous():
    eps = 1e-7
    lo = ring.evolve(PulseSpec(EXAMPLE, PI / 3 - eps))
    hi = ring.evolve(PulseSpec(EXAMPLE, PI / 3 + eps))
    assert np.linalg.norm(lo.sigma11 - hi.sigma11) < 1e-6
    g_lo = ring.gp_kappa1(PulseSpec(EXAMPLE, PI / 3 - eps))[0].isometry
    g_hi = ring.gp_kappa1(PulseSpec(EXAMPLE, PI / 3 + eps))[0].isometry
    assert np.linalg.norm(g_lo - g_hi) > 1.9


# -- order-2 phases, single pulse ---------------------------------------------


def test_kappa2_single_full_is_minus_identity():
    rng = np.random.default_rng(5)
    for _ in range(30):
        c, a = rand_couplings(rng), rng.uniform(0.1, 3.0)
        for g in ring.gp_kappa2_single(PulseSpec(c, a)):
            np.testing.assert_allclose(g.isometry, -np.eye(2), atol=1e-10)
            assert g.status.status is Status.FULL


def test_kappa2_single_area_zero_undefined():
    for g in ring.gp_kappa2_single(PulseSpec(EXAMPLE, 0.0)):
        assert g.status.status is Status.UNDEFINED
        np.testing.assert_array_equal(g.isometry, 0)


def test_kappa2_single_partial():
    g12, g21 = ring.gp_kappa2_single(PulseSpec(EXAMPLE, 2 * PI / 1.5))
    assert g12.status.status is Status.PARTIAL and g12.status.rank == 1
    assert g21.status.status is Status.PARTIAL


# -- two pulses -----------------------------------------------------------------


def test_compose_trivial_second_pulse():
    first = PulseSpec(RingCouplings.uniform(1.0), PI / 2)
    op = ring.compose_pulses(first, PulseSpec(EXAMPLE, 0.0))
    np.testing.assert_allclose(op.matrix, ring.evolve(first).matrix, atol=1e-15)


def test_compose_matches_exponentials():
    first = ring.swap_pulse(1.0, 1)
    second = PulseSpec(EXAMPLE, 0.3)
    op = ring.compose_pulses(first, second)
    ref = expm_op(EXAMPLE, 0.3) @ expm_op(RingCouplings.uniform(1.0), PI / 2)
    np.testing.assert_allclose(op.matrix, ref, atol=1e-13)


def test_compose_two_quarter_periods():
    q = PulseSpec(RingCouplings.uniform(1.0), PI / 2)
    np.testing.assert_allclose(ring.compose_pulses(q, q).matrix, -np.eye(4), atol=1e-15)


def test_compose_block_layout():
    rng = np.random.default_rng(6)
    first = ring.swap_pulse(0.6, 2)
    second = PulseSpec(rand_couplings(rng), 0.7)
    op = ring.compose_pulses(first, second)
    s, t = ring.evolve(second), ring.evolve(first)
    np.testing.assert_allclose(op.sigma11, s.sigma12 @ t.sigma21, atol=1e-13)
    np.testing.assert_allclose(op.sigma12, s.sigma11 @ t.sigma12, atol=1e-13)
    np.testing.assert_allclose(op.sigma21, s.sigma22 @ t.sigma21, atol=1e-13)
    np.testing.assert_allclose(op.sigma22, s.sigma21 @ t.sigma12, atol=1e-13)


def test_compose_rejects_diagonal_first_pulse():
    with pytest.raises(FirstPulseNotOffDiagonal):
        ring.compose_pulses(PulseSpec(EXAMPLE, 0.5), PulseSpec(EXAMPLE, 0.3))


def test_kappa2_composed_trivial():
    first = PulseSpec(RingCouplings.uniform(1.0), PI / 2)
    for g in ring.gp_kappa2_composed(first, PulseSpec(EXAMPLE, 0.0)):
        np.testing.assert_allclose(g.isometry, -np.eye(2), atol=1e-14)


def test_kappa2_composed_closed_form():
    rng = np.random.default_rng(7)
    for lam, m in ((1.0, 1), (0.5, 2), (2.0, 3)):
        first = ring.swap_pulse(lam, m)
        second = PulseSpec(rand_couplings(rng), rng.uniform(0.1, 1.0))
        g12, g21 = ring.gp_kappa2_composed(first, second)
        a, b = ring.two_pulse_closed_form(second)
        np.testing.assert_allclose(g12.isometry, a, atol=1e-10)
        np.testing.assert_allclose(g21.isometry, b, atol=1e-10)


def test_kappa2_composed_against_block_products():
    # direct oracle: phi(s12 s21) of the product of exponentials
    from scipy.linalg import sqrtm
    rng = np.random.default_rng(8)
    for _ in range(10):
        first = ring.swap_pulse(1.0, 1)
        c2 = rand_couplings(rng)
        second = PulseSpec(c2, rng.uniform(0.1, 1.0))
        total = expm_op(c2, second.area) @ expm_op(first.couplings, first.area)
        g = total[:2, 2:] @ total[2:, :2]
        ref = np.linalg.inv(sqrtm(g @ dagger(g))) @ g
        g12, _ = ring.gp_kappa2_composed(first, second)
        np.testing.assert_allclose(g12.isometry, ref, atol=1e-9)
        assert abs(np.linalg.det(g12.isometry) - 1) < 1e-9


# -- SU(2) construction -------------------------------------------------------


def haar_su2(rng):
    u = unitary_group.rvs(2, random_state=rng)
    return u / np.sqrt(np.linalg.det(u))


def test_su2_minus_identity():
    first, second = ring.su2_target(-np.eye(2))
    assert second.area == 0.0
    np.testing.assert_allclose(ring.gp_kappa2_composed(first, second)[0].isometry, -np.eye(2), atol=1e-14)


def test_su2_diagonal_target():
    phi = 0.7
    target = np.diag([np.exp(1j * phi), np.exp(-1j * phi)])
    first, second = ring.su2_target(target)
    g12, _ = ring.gp_kappa2_composed(first, second)
    assert sign_aligned_distance(g12.isometry, target) <= 1e-6


def test_diagonal_second_pulse_only_reaches_plus_minus_identity():
    # with T diagonal, s11 s22 is a real diagonal matrix, so -phi of it is diag(+-1, +-1)
    rng = np.random.default_rng(9)
    first = ring.swap_pulse()
    for _ in range(50):
        j = (rng.normal(), 0.0, rng.normal(), 0.0)
        d = (rng.normal(), 0.0, rng.normal(), 0.0)
        g12, _ = ring.gp_kappa2_composed(first, PulseSpec(RingCouplings(j, d), rng.uniform(0.1, 3)))
        if g12.status.status is Status.FULL:
            assert min(np.linalg.norm(g12.isometry - np.eye(2)), np.linalg.norm(g12.isometry + np.eye(2))) < 1e-12


def test_su2_random_targets():
    rng = np.random.default_rng(10)
    for _ in range(5):
        target = haar_su2(rng)
        first, second = ring.su2_target(target)
        g12, _ = ring.gp_kappa2_composed(first, second)
        assert sign_aligned_distance(g12.isometry, target) <= 1e-6


@settings(max_examples=40, deadline=None)
@given(st.floats(0, PI), st.floats(0, PI), st.floats(0, 2 * PI))
def test_su2_analytic_covers_rotation_angles(beta, theta, azim):
    # targets near +I and near rotations about the Cartesian axes
    axis = np.array([math.sin(theta) * math.cos(azim), math.sin(theta) * math.sin(azim), math.cos(theta)])
    gen = axis[0] * ring.PAULI_X + axis[1] * ring.PAULI_Y + axis[2] * ring.PAULI_Z
    target = math.cos(beta) * np.eye(2) + 1j * math.sin(beta) * gen
    first, second = ring.su2_target(target)
    g12, _ = ring.gp_kappa2_composed(first, second)
    assert sign_aligned_distance(g12.isometry, target) <= 1e-6


def test_su2_rejects_non_special():
    with pytest.raises(ValueError):
        ring.su2_target(np.diag([1, 1j]))
    with pytest.raises(ValueError):
        ring.su2_target(2 * np.eye(2))


def test_su2_refinement_fallback_reports_failure(monkeypatch):
    # break the analytic seed and give the simplex no room to recover
    monkeypatch.setattr(ring, "analytic_second_pulse", lambda target: PulseSpec(EXAMPLE, 0.2))
    monkeypatch.setattr(ring, "refine_second_pulse",
                        lambda target, seed, first, tol: (seed, 1.0))
    with pytest.raises(ConvergenceFailure) as info:
        ring.su2_target(np.diag([1j, -1j]))
    assert info.value.best is not None


def test_su2_refinement_recovers_from_bad_seed(monkeypatch):
    target = haar_su2(np.random.default_rng(11))
    seed = ring.analytic_second_pulse(target)
    nudged = PulseSpec(RingCouplings(np.array(seed.couplings.j) + 1e-3, seed.couplings.dz), seed.area)
    monkeypatch.setattr(ring, "analytic_second_pulse", lambda _: nudged)
    first, second = ring.su2_target(target)
    g12, _ = ring.gp_kappa2_composed(first, second)
    assert sign_aligned_distance(g12.isometry, target) <= 1e-6


# -- sweeps ---------------------------------------------------------------------


def test_sweep_example_boundaries():
    rows = ring.sweep_area(EXAMPLE, np.linspace(0, 2 * PI, 2001))
    b = ring.boundaries(rows)
    np.testing.assert_allclose(b["kappa1"], [PI / 3, PI, 5 * PI / 3], atol=1e-9)
    np.testing.assert_allclose(b["kappa2"], [0, 2 * PI / 3, 4 * PI / 3, 2 * PI], atol=1e-9)
    refined = {round(r.area / PI * 3): r for r in rows if r.refined and (r.c_flip or r.d_flip)}
    assert refined[1].d_flip and not refined[1].c_flip
    assert refined[3].c_flip and not refined[3].d_flip
    assert refined[5].d_flip


def test_sweep_labels_on_each_side_of_pi():
    rows = [r for r in ring.sweep_area(EXAMPLE, np.linspace(0, 2 * PI, 2001)) if not r.refined]
    lo = max((r for r in rows if r.area < PI - 1e-3), key=lambda r: r.area)
    hi = min((r for r in rows if r.area > PI + 1e-3), key=lambda r: r.area)
    assert lo.d == hi.d and lo.c != hi.c


def test_sweep_uniform_boundaries_equally_spaced():
    lam = 1.3
    rows = ring.sweep_area(RingCouplings.uniform(lam), np.linspace(0, 8 / lam * PI / 2 + 0.1, 3001))
    k1 = ring.boundaries(rows)["kappa1"]
    np.testing.assert_allclose(k1, [(2 * m - 1) * PI / (2 * lam) for m in range(1, 5)], atol=1e-9)
    assert all(r.c_flip for r in rows if r.refined and r.area in k1)


def test_sweep_identity_single_boundary():
    rows = ring.sweep_area(RingCouplings.uniform(1.0), np.arange(0, PI + 1e-12, 1e-3))
    assert ring.boundaries(rows)["kappa1"] == pytest.approx([PI / 2], abs=1e-9)


def test_sweep_mutual_exclusivity():
    rng = np.random.default_rng(12)
    grid = np.linspace(0, 4 * PI, 2001)
    for _ in range(3):
        for r in ring.sweep_area(rand_couplings(rng), grid):
            both_k1 = all(s is Status.UNDEFINED for s in r.k1_status)
            both_k2 = all(s is Status.UNDEFINED for s in r.k2_status)
            assert not (both_k1 and both_k2)


def test_sweep_rejects_bad_grids():
    for grid in ([], [0.0, 0.0], [[0.0, 1.0]]):
        with pytest.raises(ValueError):
            ring.sweep_area(EXAMPLE, grid)


def test_classify_areas_shapes_and_values():
    areas = np.array([0.0, PI / 3, 2 * PI / 3, 1.0])
    info = ring.classify_areas(EXAMPLE, areas)
    np.testing.assert_allclose(info["cos"], np.cos(np.multiply.outer(areas, [1.5, 0.5])), atol=1e-14)
    np.testing.assert_allclose(info["sin"], np.sin(np.multiply.outer(areas, [1.5, 0.5])), atol=1e-14)
    np.testing.assert_array_equal(info["k1_rank"], [[2, 2], [1, 1], [2, 2], [2, 2]])
    np.testing.assert_array_equal(info["k2_rank"], [[0, 0], [2, 2], [1, 1], [2, 2]])


def test_sweep_row_flags():
    row = ring.SweepRow(1.0, (1, 1), 0, 0, (Status.FULL,) * 2, (Status.FULL,) * 2, refined=True, d_flip=True)
    assert row.flags == "refined;d_flip"


def test_couplings_validation_and_mappings():
    with pytest.raises(ValueError):
        RingCouplings((1, 2, 3))
    with pytest.raises(ValueError):
        RingCouplings((1, 2, 3, math.inf))
    p = PulseSpec.from_mapping({"j12": 1, "d41": -0.5, "area": 2})
    assert p.couplings.j == (1.0, 0.0, 0.0, 0.0) and p.couplings.dz == (0.0, 0.0, 0.0, -0.5)
    assert PulseSpec.from_mapping(p.to_mapping()) == p
