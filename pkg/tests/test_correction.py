import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccmn import correction as C
from ccmn.core import InvalidNoiseSpec, NoiseSpec, ShapeError
from ccmn.noise import enumerate_flip_distribution
from ccmn.surrogate import KINDS, SurrogateLoss

SQUARE = SurrogateLoss("square")
LOSSES = [SurrogateLoss(k) for k in KINDS]

# frozen from a 2x2 numpy solve of the single-label flip system (see test_oracle_single_label)
M8_7 = -8 / 7
P32_7 = 32 / 7
# frozen from a 4x4 numpy solve for spec_ab at f_jk = 0.5
PAIR_PM = 0.1825 / 0.49
PAIR_PP = -0.2425 / 0.49


def test_oracle_single_label():
    M = np.array([[0.8, 0.2], [0.1, 0.9]])  # rows: clean +1/-1, cols: noisy +1/-1
    assert np.allclose(np.linalg.solve(M, [SQUARE.value(1.0), SQUARE.value(-1.0)]), [M8_7, P32_7])


def test_independent_examples():
    assert C.corrected_phi_independent(SQUARE, 1.0, 1, 0.2, 0.1) == pytest.approx(M8_7, abs=1e-12)
    assert C.corrected_phi_independent(SQUARE, 1.0, -1, 0.2, 0.1) == pytest.approx(P32_7, abs=1e-12)
    for f in (-2.0, 0.3, 4.0):
        for y in (1, -1):
            assert C.corrected_phi_independent(SQUARE, f, y, 0.0, 0.0) == SQUARE.value(y * f)


def test_independent_rejects_invalid_rates():
    with pytest.raises(InvalidNoiseSpec):
        C.corrected_phi_independent(SQUARE, 0.0, 1, 0.6, 0.4)


def test_hamming_examples():
    spec = NoiseSpec([0.2, 0.0], [0.1, 0.0])
    f = np.array([1.0, 1.0])
    assert C.corrected_loss_hamming(SQUARE, f, [1, -1], spec) == pytest.approx(M8_7 + 4.0, abs=1e-12)
    zero = NoiseSpec.zeros(2)
    assert C.corrected_loss_hamming(SQUARE, [0.3, -0.7], [1, -1], zero) == C.plain_loss_hamming(SQUARE, [0.3, -0.7], [1, -1])
    one = NoiseSpec([0.2], [0.1])
    assert C.corrected_loss_hamming(SQUARE, [1.0], [1], one) == C.corrected_phi_independent(SQUARE, 1.0, 1, 0.2, 0.1)
    with pytest.raises(ShapeError):
        C.corrected_loss_hamming(SQUARE, [1.0, 2.0, 3.0], [1, 1, 1], spec)


def test_pairwise_table_identity_at_zero_noise():
    t = C.pairwise_correction_table(NoiseSpec.zeros(2), 0, 1)
    assert t.kappa == 1.0
    assert [t.coefficients(*r) for r in C.ROWS] == [(1, 0), (0, 1), (0, 0), (0, 0)]


def test_pairwise_table_example(spec_ab):
    t = C.pairwise_correction_table(spec_ab, 0, 1)
    assert t.kappa == pytest.approx(1 / 0.49)
    assert t.unscaled(1, -1) == pytest.approx((0.64, 0.01))
    assert t.unscaled(1, 1) == pytest.approx((-0.16, -0.09))
    with pytest.raises(C.InvalidPair):
        C.pairwise_correction_table(spec_ab, 1, 1)


def test_linsolve_examples(spec_ab):
    solved = C.derive_pairwise_by_linsolve(spec_ab, 0, 1, 0.5, SQUARE)
    assert solved[0] == pytest.approx(PAIR_PM, abs=1e-12)
    assert solved[2] == pytest.approx(PAIR_PP, abs=1e-12)
    assert np.allclose(solved, np.linalg.solve(C.joint_flip_matrix(spec_ab, 0, 1), [0.25, 2.25, 0, 0]))


def test_linsolve_identity_at_zero_noise():
    zero = NoiseSpec.zeros(2)
    f = 0.7
    got = C.derive_pairwise_by_linsolve(zero, 0, 1, f, SQUARE)
    assert got == (SQUARE.value(f), SQUARE.value(-f), 0.0, 0.0)
    # with the non-indicator target the identity system just echoes it back
    got = C.derive_pairwise_by_linsolve(zero, 0, 1, f, SQUARE, equal_target=SQUARE.value(0.0))
    assert got == (SQUARE.value(f), SQUARE.value(-f), SQUARE.value(0.0), SQUARE.value(0.0))


def test_joint_flip_matrix_is_stochastic(spec_ab):
    M = C.joint_flip_matrix(spec_ab, 0, 1)
    assert np.allclose(M.sum(axis=1), 1.0)


def test_gaussian_elimination_against_numpy(rng):
    for _ in range(50):
        A = rng.normal(size=(5, 5))
        b = rng.normal(size=5)
        assert np.allclose(C.solve_partial_pivot(A, b), np.linalg.solve(A, b))
    # needs a row swap: zero leading pivot
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(C.solve_partial_pivot(A, [2.0, 3.0]), [3.0, 2.0])
    with pytest.raises(C.SingularSystem):
        C.solve_partial_pivot(np.ones((3, 3)), np.ones(3))


def test_ranking_examples(spec_ab):
    zero = NoiseSpec.zeros(2)
    assert C.corrected_loss_ranking(SQUARE, [0.4, 0.1], [1, -1], zero) == SQUARE.value(0.3)
    assert C.corrected_loss_ranking(SQUARE, [0.4, 0.1], [1, 1], zero) == 0.0
    assert C.corrected_loss_ranking(SQUARE, [0.5, 0.0], [1, -1], spec_ab) == pytest.approx(PAIR_PM, abs=1e-12)
    with pytest.raises(ShapeError):
        C.corrected_loss_ranking(SQUARE, [0.5], [1], NoiseSpec.zeros(1))


def test_dummy_examples():
    y = np.array([1, -1, 1])
    f = np.array([0.2, -1.0, 2.0])
    zero = NoiseSpec.zeros(3)
    assert C.dummy_label_loss(SQUARE, f, 0.0, y, zero) == C.plain_loss_hamming(SQUARE, f, y)
    one = NoiseSpec([0.2], [0.1])
    assert C.dummy_label_loss(SQUARE, [1.5], 0.5, [1], one) == pytest.approx(M8_7, abs=1e-12)
    spec = NoiseSpec([0.1, 0.3, 0.2], [0.2, 0.1, 0.4])
    assert C.dummy_label_loss(SQUARE, f + 3.0, 3.0, y, spec) == pytest.approx(C.dummy_label_loss(SQUARE, f, 0.0, y, spec), abs=1e-12)


def test_upml_examples():
    assert C.upml_loss_hamming(SQUARE, [0.0], [-1], [0.5]) == pytest.approx(1.0)
    assert C.upml_loss_ranking(SQUARE, [1.0, 0.0], [-1, -1], [0.5, 0.5]) == pytest.approx(-8.0)
    f = np.array([0.4, -0.2, 1.1])
    y = np.array([1, -1, -1])
    assert C.upml_loss_hamming(SQUARE, f, y, np.zeros(3)) == C.plain_loss_hamming(SQUARE, f, y)
    with pytest.raises(InvalidNoiseSpec):
        C.upml_loss_hamming(SQUARE, f, y, [0.1, 1.0, 0.2])


def test_bound_constants():
    assert tuple(C.compute_bound_constants(NoiseSpec.zeros(4))) == (1.0, 1.0, 1.0)
    b = C.compute_bound_constants(NoiseSpec.uniform(3, 0.2, 0.1))
    assert b.mu_independent == pytest.approx(1 / 0.7)
    assert b.mu_dependent == pytest.approx(1.1 / 0.49)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 0.49), st.floats(0, 0.49)), min_size=1, max_size=8))
def test_mu_dependent_dominates(rates):
    spec = NoiseSpec([r[0] for r in rates], [r[1] for r in rates])
    b = C.compute_bound_constants(spec)
    assert b.mu_dependent >= b.mu_independent


rates = st.floats(0, 0.45)


@settings(max_examples=60, deadline=None)
@given(
    kind=st.sampled_from(KINDS),
    q=st.integers(2, 4),
    seed=st.integers(0, 10**6),
)
def test_unbiasedness_property(kind, q, seed):
    loss = SurrogateLoss(kind)
    r = np.random.default_rng(seed)
    spec = NoiseSpec(r.uniform(0, 0.45, q), r.uniform(0, 0.45, q))
    f = r.uniform(-3, 3, q)
    y = np.where(r.random(q) < 0.5, 1, -1)
    dist = enumerate_flip_distribution(y, spec)
    h = sum(p * C.corrected_loss_hamming(loss, f, yt, spec) for yt, p in dist)
    rk = sum(p * C.corrected_loss_ranking(loss, f, yt, spec) for yt, p in dist)
    assert abs(h - C.plain_loss_hamming(loss, f, y)) <= 1e-9
    assert abs(rk - C.plain_loss_ranking(loss, f, y)) <= 1e-9


def test_corrected_losses_can_be_negative():
    assert C.corrected_phi_independent(SQUARE, 1.0, 1, 0.2, 0.1) < 0


# batched kernels agree with the scalar definitions ---------------------------


def _random_case(rng, q, n=6):
    spec = NoiseSpec(rng.uniform(0, 0.45, q), rng.uniform(0, 0.45, q))
    F = rng.uniform(-3, 3, (n, q))
    Y = np.where(rng.random((n, q)) < 0.5, 1, -1).astype(np.int8)
    return spec, F, Y


@pytest.mark.parametrize("loss", LOSSES, ids=KINDS)
def test_batch_kernels_match_scalar(loss, rng):
    q = 4
    spec, F, Y = _random_case(rng, q)
    pairs = C.PairIndex(q)
    rho = spec.rho_neg
    pml = NoiseSpec.pml(rho)
    cases = [
        (C.hamming_plain_batch(loss, F, Y)[0], lambda f, y: C.plain_loss_hamming(loss, f, y)),
        (C.hamming_corrected_batch(loss, F, Y, spec)[0], lambda f, y: C.corrected_loss_hamming(loss, f, y, spec)),
        (C.upml_hamming_batch(loss, F, Y, rho)[0], lambda f, y: C.upml_loss_hamming(loss, f, y, rho)),
        (C.ranking_plain_batch(loss, F, Y, pairs)[0], lambda f, y: C.plain_loss_ranking(loss, f, y)),
        (
            C.ranking_corrected_batch(loss, F, Y, pairs, C.pairwise_coefficient_arrays(spec, pairs))[0],
            lambda f, y: C.corrected_loss_ranking(loss, f, y, spec),
        ),
        (C.upml_ranking_batch(loss, F, Y, pairs, rho)[0], lambda f, y: C.upml_loss_ranking(loss, f, y, rho)),
        (
            C.ranking_corrected_batch(loss, F, Y, pairs, C.pairwise_coefficient_arrays(pml, pairs))[0],
            lambda f, y: C.upml_loss_ranking(loss, f, y, rho),
        ),
    ]
    for batch, scalar in cases:
        expected = [scalar(f, y) for f, y in zip(F, Y)]
        assert np.allclose(batch, expected, atol=1e-12, rtol=0)
