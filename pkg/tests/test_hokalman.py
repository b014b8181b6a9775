import numpy as np
import pytest

from unbounded_toeplitz import (CoeffWindow, InsufficientWindow, RankUndetermined, Realization,
                                apply_symbol_to_monomial, coeff_window, growth_bound_check,
                                hankel_pair, hankel_ranks, markov_minus, markov_plus,
                                minimal_from_coeffs, split_and_realize, toeplitz_truncation)
from unbounded_toeplitz.hokalman import jordan_block_sizes

from conftest import constant_real, random_symbol


def _scal(seq):
    return [complex(a[0, 0]) for a in seq]


# -- Markov parameters --------------------------------------------------------

def test_markov_plus_example2(examples):
    assert _scal(markov_plus(examples[2].realization, 3)) == [1, 0, 0]


def test_markov_plus_empty():
    out = markov_plus(constant_real([[1.0]]), 2)
    assert out.shape == (2, 1, 1) and not np.any(out)


def test_markov_plus_geometric():
    real = Realization(R0=[[0.0]], A=[[0.5]], B=[[1.0]], C=[[1.0]])
    assert _scal(markov_plus(real, 3)) == [1, 0.5, 0.25]


def test_markov_minus_example3(examples):
    assert _scal(markov_minus(examples[3].realization, 4)) == [4, 1, 4, 1]


def test_markov_minus_example2(examples):
    assert _scal(markov_minus(examples[2].realization, 3)) == [2, 2, 2]


def test_markov_minus_empty():
    assert not np.any(markov_minus(constant_real([[2.0]]), 3))


def test_markov_rejects_nonpositive_J(examples):
    with pytest.raises(ValueError):
        markov_plus(examples[2].realization, 0)


# -- Hankel ranks ----------------------------------------------------------------

def test_hankel_pair_layout(examples):
    cw = coeff_window(examples[3].realization, 5)
    hp = hankel_pair(cw, 3)
    for i in range(3):
        for j in range(3):
            assert hp.Hplus[i, j] == cw.a(i + j + 1)[0, 0]
            assert hp.Hminus[i, j] == cw.a(-(i + j + 1))[0, 0]


def test_hankel_ranks_example2(examples):
    hr = hankel_ranks(coeff_window(examples[2].realization, 5), 3)
    assert hr.plus == (1, 1, 1) and hr.minus == (1, 1, 1)
    assert (hr.n_plus, hr.n_minus) == (1, 1) and not hr.not_stabilized


def test_hankel_ranks_zero():
    z = np.zeros((1, 1))
    cw = CoeffWindow(1, 5, z, [z] * 5, [z] * 5)
    hr = hankel_ranks(cw, 3)
    assert (hr.n_plus, hr.n_minus) == (0, 0)


def test_hankel_ranks_example3_minus(examples):
    hr = hankel_ranks(coeff_window(examples[3].realization, 7), 4)
    assert hr.n_minus == 2 and hr.n_plus == 1


def test_hankel_ranks_window_too_small(examples):
    with pytest.raises(InsufficientWindow):
        hankel_ranks(coeff_window(examples[2].realization, 4), 3)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_rank_stabilization(examples, k):
    """rank H_k is non-decreasing and constant from k = n on, up to 2n + 2."""
    real = split_and_realize(examples[k].symbol)
    kmax = 2 * max(real.n_plus, real.n_minus) + 2
    hr = hankel_ranks(coeff_window(real, 2 * kmax - 1), kmax)
    for seq, n in ((hr.plus, real.n_plus), (hr.minus, real.n_minus)):
        assert all(a <= b for a, b in zip(seq, seq[1:]))
        assert all(r == n for r in seq[max(n, 1) - 1:])


def test_rank_stabilization_random():
    rng = np.random.default_rng(5)
    for _ in range(20):
        sym, _, _ = random_symbol(rng)
        real = split_and_realize(sym)
        kmax = 2 * max(real.n_plus, real.n_minus) + 2
        hr = hankel_ranks(coeff_window(real, 2 * kmax - 1), kmax, rank_tol=1e-9)
        assert (hr.n_plus, hr.n_minus) == (real.n_plus, real.n_minus)
        assert all(a <= b for a, b in zip(hr.plus, hr.plus[1:]))
        assert all(a <= b for a, b in zip(hr.minus, hr.minus[1:]))


# -- Ho-Kalman ------------------------------------------------------------------------

def _markov_err(F, G, H, coeffs):
    X = G
    err = 0.0
    for c in coeffs:
        err = max(err, np.max(np.abs(H @ X - c)))
        X = F @ X
    return err


def test_minimal_from_constant_sequence():
    coeffs = [np.array([[2.0]])] * 5
    F, G, H = minimal_from_coeffs(coeffs, 1)
    assert F.shape == (1, 1)
    assert abs(F[0, 0] - 1) < 1e-12 and abs((H @ G)[0, 0] - 2) < 1e-12


def test_minimal_from_alternating_sequence():
    coeffs = [np.array([[v]]) for v in (4.0, 1.0, 4.0, 1.0, 4.0)]
    F, G, H = minimal_from_coeffs(coeffs, 1)
    assert F.shape == (2, 2)
    assert _markov_err(F, G, H, coeffs) < 1e-12
    np.testing.assert_allclose(sorted(np.linalg.eigvals(F).real), [-1, 1], atol=1e-12)


def test_minimal_from_zero_sequence():
    F, G, H = minimal_from_coeffs([np.zeros((2, 2))] * 4, 2)
    assert F.shape == (0, 0) and G.shape == (0, 2) and H.shape == (2, 0)


def test_minimal_rank_not_stabilized():
    # a 3-state sequence needs 7 coefficients
    F = np.diag([0.9, -0.5, 0.3])
    G = np.ones((3, 1))
    H = np.ones((1, 3))
    coeffs = [H @ np.linalg.matrix_power(F, j) @ G for j in range(4)]
    with pytest.raises(RankUndetermined):
        minimal_from_coeffs(coeffs, 1)


def test_minimal_straddle():
    # a second mode with weight 1e-9 puts a Hankel singular value right at rank_tol
    coeffs = [np.array([[0.5 ** j + 1e-9 * (-0.5) ** j]]) for j in range(8)]
    s = np.linalg.svd(np.array([[coeffs[i + j][0, 0] for j in range(4)] for i in range(4)]),
                      compute_uv=False)
    assert 1e-10 < s[1] / s[0] < 1e-8
    with pytest.raises(RankUndetermined):
        minimal_from_coeffs(coeffs, 1, rank_tol=1e-9)


def test_round_trip_random_minimal_systems():
    """100 random minimal triples with rho(F) <= 1: Markov data and state
    dimension are recovered."""
    rng = np.random.default_rng(99)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 3))
        angles = 2 * np.pi * (np.arange(n) + rng.uniform(0.2, 0.8, n)) / n
        radii = rng.uniform(0.4, 1.0, n)
        radii[rng.uniform(size=n) < 0.3] = 1.0
        T = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        T /= np.linalg.norm(T, 2)
        T += np.eye(n)
        F = T @ np.diag(radii * np.exp(1j * angles)) @ np.linalg.inv(T)
        G = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        H = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        coeffs = [H @ np.linalg.matrix_power(F, j) @ G for j in range(2 * n + 4)]
        F2, G2, H2 = minimal_from_coeffs(coeffs, m)
        assert F2.shape == (n, n)
        scale = max(np.max(np.abs(c)) for c in coeffs)
        assert _markov_err(F2, G2, H2, coeffs) < 1e-8 * (1 + scale)


# -- growth -------------------------------------------------------------------------

def test_growth_example2(examples):
    gr = growth_bound_check(examples[2].realization, 20)
    assert gr.M == 1 and abs(gr.K - 2) < 1e-12 and gr.ok and gr.bounded


def test_growth_jordan_block():
    real = Realization(R0=[[0.0]], alpha=[[1.0, 1.0], [0.0, 1.0]], beta=[[0.0], [1.0]],
                       gamma=[[1.0, 0.0]])
    assert [complex(a[0, 0]) for a in markov_minus(real, 4)] == [0, 1, 2, 3]
    gr = growth_bound_check(real, 30)
    assert gr.M == 2 and gr.ok and gr.bounded


def test_growth_no_minus_part():
    gr = growth_bound_check(constant_real([[1.0]]), 10)
    assert gr.M == 1 and gr.K == 0 and gr.ok


def test_growth_double_pole_symbol_detected():
    from unbounded_toeplitz import RationalMatrix, RationalScalar
    s = RationalMatrix(((RationalScalar([1.0], [1.0, -2.0, 1.0]),),))   # 1 / (z - 1)^2
    real = split_and_realize(s)
    # alpha is an exact 2x2 Jordan block: triangular with a repeated diagonal
    assert real.alpha.shape == (2, 2) and real.alpha[1, 0] == 0
    assert real.alpha[0, 0] == real.alpha[1, 1] and abs(real.alpha[0, 0] - 1) < 1e-12
    gr = growth_bound_check(real, 30)
    assert gr.M == 2 and gr.bounded


def test_jordan_block_sizes():
    M = np.diag([1.0, 1.0, 1.0, 0.5]) + np.diag([1.0, 0.0, 0.0], k=1)
    assert jordan_block_sizes(M, 1.0) == [2, 1]
    assert jordan_block_sizes(M, 0.5) == [1]


# -- Toeplitz bridge -----------------------------------------------------------------

def test_toeplitz_truncation_example2(examples):
    T = toeplitz_truncation(coeff_window(examples[2].realization, 4), 3)
    np.testing.assert_array_equal(T, [[1, 2, 2], [1, 1, 2], [0, 1, 1]])


def test_toeplitz_truncation_single_block(examples):
    cw = coeff_window(examples[4].realization, 2)
    np.testing.assert_array_equal(toeplitz_truncation(cw, 1), cw.a0)


def test_toeplitz_truncation_zero():
    z = np.zeros((2, 2))
    cw = CoeffWindow(2, 3, z, [z] * 3, [z] * 3)
    assert not np.any(toeplitz_truncation(cw, 3))


def test_toeplitz_truncation_window(examples):
    with pytest.raises(InsufficientWindow):
        toeplitz_truncation(coeff_window(examples[2].realization, 2), 4)


def test_monomial_example2(examples):
    c, (g, a, b) = apply_symbol_to_monomial(examples[2].realization, 0, [1.0], 3)
    np.testing.assert_array_equal(c.ravel(), [1, 1, 0, 0])
    assert (g[0, 0], a[0, 0], b[0]) == (1, 1, 2)
    c, _ = apply_symbol_to_monomial(examples[2].realization, 1, [1.0], 3)
    np.testing.assert_array_equal(c.ravel(), [2, 1, 1, 0])


def test_monomial_no_minus_part():
    real = Realization(R0=[[1.0]], A=[[0.5]], B=[[1.0]], C=[[1.0]])
    _, (g, a, b) = apply_symbol_to_monomial(real, 2, [1.0], 4)
    assert g.shape == (1, 0) and a.shape == (0, 0) and b.shape == (0,)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_toeplitz_consistency(examples, k):
    """Column n of the truncation is T_Omega applied to z^n e_j."""
    real = split_and_realize(examples[k].symbol)
    N, m = 6, real.m
    T = toeplitz_truncation(coeff_window(real, N), N)
    for n in range(N):
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            c, _ = apply_symbol_to_monomial(real, n, e, N)
            col = T[:, n * m + j]
            assert np.max(np.abs(col - c[:N].ravel())) <= 1e-12
