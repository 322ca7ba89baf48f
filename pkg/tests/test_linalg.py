import numpy as np
import pytest

from dsagg.gf import FieldMismatchError, PrimeField
from dsagg.linalg import (
    DimensionMismatchError,
    Matrix,
    block,
    hstack,
    random_matrix,
    vstack,
)
from dsagg.scheme import fixture_example2

F5 = PrimeField(5)
F2 = PrimeField(2)


# ---------------------------------------------------------------------------
# rank
# ---------------------------------------------------------------------------

def test_rank_identity_and_zero():
    assert Matrix.identity(F5, 4).rank() == 4
    assert Matrix.zeros(F5, 3, 2).rank() == 0


def test_rank_of_surviving_key_stack_is_six():
    # Stack the signed blocks of users 3, 4, 5 over their three shared keys;
    # privacy of the bundled 5-user scheme hinges on this stack being
    # full-rank.
    pre = fixture_example2()
    survivors = [3, 4, 5]
    pairs = [(3, 4), (3, 5), (4, 5)]
    rows = [hstack([pre.block(u, g) for g in pairs]) for u in survivors]
    stacked = vstack(rows)
    assert stacked.shape == (9, 6)
    assert stacked.rank() == 6


def test_rank_transpose_invariant():
    rng = np.random.Generator(np.random.PCG64(7))
    for _ in range(20):
        r, c = (int(v) for v in rng.integers(1, 8, size=2))
        m = random_matrix(r, c, F5, rng=rng)
        assert m.rank() == m.transpose().rank()


def test_rank_block_diagonal_adds():
    rng = np.random.Generator(np.random.PCG64(3))
    a = random_matrix(3, 4, F5, rng=rng)
    b = random_matrix(2, 2, F5, rng=rng)
    grid = block([[a, Matrix.zeros(F5, 3, 2)], [Matrix.zeros(F5, 2, 4), b]])
    assert grid.rank() == a.rank() + b.rank()


def test_rank_at_most_min_dimension():
    rng = np.random.Generator(np.random.PCG64(11))
    for _ in range(10):
        m = random_matrix(4, 6, F5, rng=rng)
        assert m.rank() <= 4


# ---------------------------------------------------------------------------
# block assembly
# ---------------------------------------------------------------------------

def test_block_of_scalars():
    a, b, c, d = (Matrix(F5, [[v]]) for v in (1, 2, 3, 4))
    m = block([[a, b], [c, d]])
    assert m.shape == (2, 2)
    assert m.data.tolist() == [[1, 2], [3, 4]]


def test_hstack_with_empty_block():
    a = Matrix.zeros(F5, 3, 2)
    empty = Matrix.zeros(F5, 3, 0)
    assert hstack([a, empty]).shape == (3, 2)


def test_vstack():
    a = random_matrix(3, 2, F5, seed=0)
    assert vstack([a, a]).shape == (6, 2)


def test_stack_dimension_errors():
    with pytest.raises(DimensionMismatchError):
        vstack([Matrix.zeros(F5, 2, 2), Matrix.zeros(F5, 2, 3)])
    with pytest.raises(DimensionMismatchError):
        hstack([Matrix.zeros(F5, 2, 2), Matrix.zeros(F5, 3, 2)])
    with pytest.raises(FieldMismatchError):
        vstack([Matrix.zeros(F5, 2, 2), Matrix.zeros(F2, 2, 2)])


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------

def test_matvec_identity_and_zero():
    v = np.array([1, 2, 3])
    assert Matrix.identity(F5, 3).matvec(v).tolist() == [1, 2, 3]
    assert Matrix.zeros(F5, 2, 3).matvec(v).tolist() == [0, 0]


def test_matvec_fixture_first_column():
    pre = fixture_example2()
    h12 = pre.block(1, (1, 2))
    assert h12.matvec([1, 0]).tolist() == [2, 4, 2]


def test_matvec_dimension_error():
    with pytest.raises(DimensionMismatchError):
        Matrix.identity(F5, 3).matvec([1, 2])


def test_matmul_against_numpy():
    rng = np.random.Generator(np.random.PCG64(5))
    a = random_matrix(3, 4, F5, rng=rng)
    b = random_matrix(4, 2, F5, rng=rng)
    expected = (a.data @ b.data) % 5
    assert np.array_equal((a @ b).data, expected)


def test_large_modulus_products_do_not_overflow():
    q = 2**31 - 1
    f = PrimeField(q)
    a = Matrix(f, np.full((2, 400), q - 1, dtype=np.int64))
    b = Matrix(f, np.full((400, 2), q - 1, dtype=np.int64))
    got = (a @ b).data
    expected = (400 * pow(q - 1, 2, q)) % q
    assert np.all(got == expected)


# ---------------------------------------------------------------------------
# kernel and rref
# ---------------------------------------------------------------------------

def test_kernel_annihilates():
    rng = np.random.Generator(np.random.PCG64(9))
    for _ in range(20):
        m = random_matrix(3, 5, F5, rng=rng)
        ker = m.kernel()
        assert ker.cols == m.cols - m.rank()
        assert not (m @ ker).data.any()


def test_rref_is_idempotent_and_rank_revealing():
    rng = np.random.Generator(np.random.PCG64(13))
    m = random_matrix(4, 6, F5, rng=rng)
    r = m.rref()
    assert r.rref() == r
    nonzero_rows = sum(1 for row in r.data if row.any())
    assert nonzero_rows == m.rank()


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------

def test_random_matrix_deterministic_in_seed():
    a = random_matrix(2, 2, F5, seed=42)
    b = random_matrix(2, 2, F5, seed=42)
    assert a == b
    assert a != random_matrix(2, 2, F5, seed=43)


def test_empty_random_matrix():
    m = random_matrix(0, 3, F5, seed=1)
    assert m.shape == (0, 3)
    assert m.rank() == 0


def test_random_symbols_uniform_within_5_sigma():
    # 10^4 draws at q=5: each symbol count should sit within 5 sigma of the
    # binomial mean n*p.
    n = 10_000
    m = random_matrix(100, 100, F5, seed=2024)
    counts = np.bincount(m.data.ravel(), minlength=5)
    mean = n / 5
    sigma = np.sqrt(n * 0.2 * 0.8)
    assert counts.sum() == n
    for c in counts:
        assert abs(c - mean) <= 5 * sigma


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_text_round_trip():
    m = random_matrix(3, 2, F5, seed=8)
    again = Matrix.from_text(F5, m.to_text())
    assert again == m
    assert again.to_text() == m.to_text()


def test_text_format_canonical():
    m = Matrix(F5, [[1, 2], [3, 4]])
    assert m.to_text() == "2 2\n1 2\n3 4\n"


def test_text_rejects_bad_input():
    with pytest.raises(ValueError):
        Matrix.from_text(F5, "2 2\n1 2 3 4 5")
    with pytest.raises(ValueError):
        Matrix.from_text(F5, "2 2\n1 2\n3 9")  # 9 outside [0, 5)
    with pytest.raises(ValueError):
        Matrix.from_text(F5, "")


# ---------------------------------------------------------------------------
# immutability
# ---------------------------------------------------------------------------

def test_matrix_data_is_read_only():
    m = Matrix.identity(F5, 2)
    with pytest.raises(ValueError):
        m.data[0, 0] = 3
    with pytest.raises(AttributeError):
        m.field = F2
