from fractions import Fraction

import numpy as np
import pytest

from dsagg.infocalc import (
    BudgetExceededError,
    LayoutMismatchError,
    LinearObservable,
    brute_force_entropy,
    brute_force_mi,
    conditional_entropy,
    entropy,
    layout_for,
    mutual_information,
    observable_from_matrix,
    observe_group_key,
    observe_input,
    observe_key_bundle,
    observe_message,
    observe_total,
    source_vector,
)
from dsagg.linalg import Matrix, random_matrix
from dsagg.scheme import (
    Precoder,
    SchemeParams,
    fixture_example1,
    fixture_example2,
    sample_keys,
)


def zero_precoder(params):
    blocks = {(k, g): Matrix.zeros(params.field, params.L, params.L_S)
              for g in params.groups for k in g}
    return Precoder(params, blocks)


# ---------------------------------------------------------------------------
# layout
# ---------------------------------------------------------------------------

def test_layout_segments_cover_source():
    lay = layout_for(SchemeParams(K=5, T=1, G=2, q=5))
    assert lay.N == 5 * 3 + 10 * 2
    assert len(lay.segments) == 15
    assert sum(length for _, length in lay.segments) == lay.N
    assert lay.input_slice(1) == slice(0, 3)
    assert lay.key_slice((1, 2)) == slice(15, 17)
    assert lay.segments[0] == ("W1", 3)
    assert lay.segments[5] == ("S{1,2}", 2)


def test_observable_validation():
    lay = layout_for(SchemeParams(K=3, T=0, G=2, q=5))
    with pytest.raises(LayoutMismatchError):
        LinearObservable("bad", Matrix.zeros(lay.field, 1, lay.N + 1), lay)


# ---------------------------------------------------------------------------
# entropy by rank
# ---------------------------------------------------------------------------

def test_entropy_of_one_input_is_its_length():
    lay = layout_for(fixture_example2())
    assert entropy([observe_input(lay, 1)]) == 3


def test_entropy_drops_dependent_rows():
    lay = layout_for(fixture_example1())  # L = 1
    w1 = observe_input(lay, 1)
    w2 = observe_input(lay, 2)
    w1_plus_w2 = observable_from_matrix(lay, w1.matrix + w2.matrix, "W1+W2")
    assert entropy([w1_plus_w2, w1, w2]) == 2


def test_entropy_of_surviving_key_mixes_is_six():
    # Users 3..5's key masks restricted to the keys colluders {1, 2} never
    # see: three vectors, jointly as random as the three keys themselves.
    pre = fixture_example2()
    lay = layout_for(pre)
    surviving = [(3, 4), (3, 5), (4, 5)]
    mixes = []
    for u in (3, 4, 5):
        data = np.zeros((3, lay.N), dtype=np.int64)
        for g in surviving:
            if u in g:
                data[:, lay.key_slice(g)] = pre.block(u, g).data
        mixes.append(observable_from_matrix(lay, Matrix(lay.field, data), f"mix{u}"))
    assert entropy(mixes) == 6


def test_conditional_entropy_examples():
    pre = fixture_example2()
    lay = layout_for(pre)
    x1 = observe_message(lay, pre, 1)
    w1 = observe_input(lay, 1)
    z1 = observe_key_bundle(lay, 1)
    # a message is a deterministic function of its sender's input and keys
    assert conditional_entropy([x1], [w1, z1]) == 0
    assert conditional_entropy([w1], [w1]) == 0

    received = [observe_message(lay, pre, k) for k in (2, 3, 4, 5)]
    cond = [observe_total(lay), w1, z1,
            observe_input(lay, 2), observe_key_bundle(lay, 2)]
    assert conditional_entropy(received, cond) == 6


def test_mutual_information_examples():
    pre1 = fixture_example1()
    lay = layout_for(pre1)
    msgs = {k: observe_message(lay, pre1, k) for k in (1, 2, 3)}
    ins = {k: observe_input(lay, k) for k in (1, 2, 3)}
    view = [observe_total(lay), ins[1], observe_key_bundle(lay, 1)]
    assert mutual_information([msgs[2], msgs[3]], [ins[2], ins[3]], view) == 0
    assert mutual_information([ins[1]], [ins[2]]) == 0

    pre2 = fixture_example2()
    lay2 = layout_for(pre2)
    msgs2 = [observe_message(lay2, pre2, k) for k in (2, 3, 4, 5)]
    ins2 = [observe_input(lay2, k) for k in (2, 3, 4, 5)]
    view2 = [observe_total(lay2), observe_input(lay2, 1), observe_key_bundle(lay2, 1),
             observe_input(lay2, 2), observe_key_bundle(lay2, 2)]
    assert mutual_information(msgs2, ins2, view2) == 0


def test_group_key_observable():
    lay = layout_for(fixture_example2())
    assert entropy([observe_group_key(lay, (1, 2))]) == 2
    assert entropy([observe_key_bundle(lay, 1)]) == 4 * 2


def test_layout_mismatch_rejected():
    lay1 = layout_for(fixture_example1())
    lay2 = layout_for(fixture_example2())
    with pytest.raises(LayoutMismatchError):
        entropy([observe_input(lay1, 1), observe_input(lay2, 1)])
    with pytest.raises(LayoutMismatchError):
        entropy([])


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

def random_observables(lay, rng, count):
    out = []
    for i in range(count):
        rows = int(rng.integers(1, 4))
        mat = random_matrix(rows, lay.N, lay.field, rng=rng)
        out.append(observable_from_matrix(lay, mat, f"r{i}-{rng.integers(1 << 30)}"))
    return out


def test_entropy_monotone_and_subadditive():
    lay = layout_for(SchemeParams(K=3, T=0, G=2, q=3))
    rng = np.random.Generator(np.random.PCG64(21))
    for _ in range(30):
        a = random_observables(lay, rng, 2)
        b = random_observables(lay, rng, 2)
        h_a, h_b = entropy(a), entropy(b)
        h_ab = entropy(a + b)
        assert h_a <= h_ab <= h_a + h_b


def test_mi_nonnegative_and_rank_identity():
    lay = layout_for(SchemeParams(K=3, T=0, G=2, q=5))
    rng = np.random.Generator(np.random.PCG64(22))
    for _ in range(30):
        a = random_observables(lay, rng, 1)
        b = random_observables(lay, rng, 1)
        c = random_observables(lay, rng, 1)
        mi = mutual_information(a, b, c)
        assert mi >= 0
        lhs = entropy(a + c) + entropy(b + c)
        rhs = entropy(a + b + c) + entropy(c)
        assert (mi == 0) == (lhs == rhs)


# ---------------------------------------------------------------------------
# enumeration oracle
# ---------------------------------------------------------------------------

def three_user_instance(q):
    params = SchemeParams(K=3, T=0, G=2, q=q)
    if q == 2:
        pre = fixture_example1()
    else:
        from dsagg.scheme import reference_precoder

        pre = reference_precoder(params)
    lay = layout_for(pre)
    return params, pre, lay


@pytest.mark.parametrize("q", [2, 3])
def test_oracle_agrees_on_security_and_recovery_queries(q):
    params, pre, lay = three_user_instance(q)
    msgs = {k: observe_message(lay, pre, k) for k in params.users}
    ins = {k: observe_input(lay, k) for k in params.users}
    total = observe_total(lay)
    for k in params.users:
        others = [u for u in params.users if u != k]
        view = [total, ins[k], observe_key_bundle(lay, k)]
        a = [msgs[u] for u in others]
        b = [ins[u] for u in others]
        ranked = mutual_information(a, b, view)
        assert brute_force_mi(a, b, view) == Fraction(ranked)

        cond = a + [ins[k], observe_key_bundle(lay, k)]
        residual = conditional_entropy([total], cond)
        brute = brute_force_entropy([total] + cond) - brute_force_entropy(cond)
        assert brute == Fraction(residual)


@pytest.mark.parametrize("q", [2, 3])
def test_oracle_agrees_on_random_queries(q):
    _, pre, lay = three_user_instance(q)
    rng = np.random.Generator(np.random.PCG64(77))
    for _ in range(5):
        a = random_observables(lay, rng, 1)
        b = random_observables(lay, rng, 1)
        c = random_observables(lay, rng, 1)
        assert brute_force_mi(a, b, c) == Fraction(mutual_information(a, b, c))
        assert brute_force_entropy(a) == Fraction(entropy(a))


def test_oracle_on_unmasked_scheme_sees_full_leak():
    # With all-zero coefficient blocks messages go out unmasked, so a
    # received message reveals its input completely.
    params = SchemeParams(K=3, T=0, G=2, q=2)
    pre = zero_precoder(params)
    lay = layout_for(pre)
    x2 = [observe_message(lay, pre, 2)]
    w2 = [observe_input(lay, 2)]
    assert mutual_information(x2, w2) == 1
    assert brute_force_mi(x2, w2) == 1


def test_oracle_entropy_of_message():
    _, pre, lay = three_user_instance(2)
    x1 = [observe_message(lay, pre, 1)]
    assert entropy(x1) == 1
    assert brute_force_entropy(x1) == 1


def test_budget_enforced():
    pre = fixture_example2()  # q**N = 5**35, far over any budget
    lay = layout_for(pre)
    with pytest.raises(BudgetExceededError):
        brute_force_entropy([observe_input(lay, 1)], budget=2**20)


# ---------------------------------------------------------------------------
# realization packing
# ---------------------------------------------------------------------------

def test_source_vector_evaluates_observables():
    pre = fixture_example2()
    params = pre.params
    lay = layout_for(pre)
    keys = sample_keys(params, 4)
    rng = np.random.default_rng(8)
    w = rng.integers(0, 5, size=(5, 3))
    u = source_vector(lay, w, keys)

    from dsagg.scheme import encode

    for k in params.users:
        obs = observe_message(lay, pre, k)
        assert np.array_equal(obs.evaluate(u), encode(params, pre, keys, w[k - 1], k).payload)
    assert np.array_equal(observe_total(lay).evaluate(u), w.sum(axis=0) % 5)
