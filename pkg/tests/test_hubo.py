import itertools
import random

import pytest

from hubo_dnr.hubo import (BinaryPolynomial, RegistryMismatch, Variables, add_all, implies_penalty,
                           interaction_penalty, linear_sum_penalty, mask_of)


@pytest.fixture
def v3():
    return Variables(["x1", "x2", "x3"])


def X(v, i):
    return BinaryPolynomial.var(v, i)


def test_idempotent_product(v3):
    assert X(v3, 0) * X(v3, 0) == X(v3, 0)


def test_square_of_one_hot(v3):
    p = (X(v3, 0) + X(v3, 1) - 1).square()
    expected = BinaryPolynomial(v3, {0: 1.0, 1: -1.0, 2: -1.0, 3: 2.0})
    assert p == expected
    assert p == (X(v3, 0) + X(v3, 1) - 1) * (X(v3, 0) + X(v3, 1) - 1)
    assert p.evaluate({0: 1, 1: 0}) == 0


def test_zero_coefficients_dropped(v3):
    p = X(v3, 0) - X(v3, 0)
    assert p.terms == {} and p.term_count() == 0


def test_registry_mismatch(v3):
    with pytest.raises(RegistryMismatch):
        X(v3, 0) + X(Variables(["x1"]), 0)


def test_duplicate_variable_name():
    with pytest.raises(ValueError):
        Variables(["x", "x"])


def test_evaluate_forms_agree(v3):
    p = BinaryPolynomial(v3, {0: 0.5, 1: 2.0, 6: -3.0, 7: 1.5})
    for bits in itertools.product((0, 1), repeat=3):
        m = mask_of(i for i, b in enumerate(bits) if b)
        d = {i: b for i, b in enumerate(bits)}
        assert p.evaluate(bits) == p.evaluate(m) == p.evaluate(d)


def test_queries(v3):
    p = BinaryPolynomial(v3, {0: 1.0, 1: 2.0, 6: -3.0, 7: 1.5})
    assert p.degree() == 3
    assert p.term_count() == 3
    assert p.constant_term == 1.0
    assert p.support() == {0, 1, 2}
    assert p.degree_histogram() == {1: 1, 2: 1, 3: 1}
    assert [idx for idx, _ in p] == [(), (0,), (1, 2), (0, 1, 2)]


def test_serialize_round_trip_and_canonical(v3):
    rng = random.Random(0)
    for _ in range(50):
        terms = {rng.randrange(8): rng.uniform(-5, 5) for _ in range(5)}
        p = BinaryPolynomial(v3, terms)
        text = p.serialize()
        assert BinaryPolynomial.parse(v3, text) == p
        # insertion order does not matter
        q = BinaryPolynomial(v3, dict(reversed(list(terms.items()))))
        assert q.serialize() == text


def test_multiplication_matches_pointwise():
    rng = random.Random(1)
    v = Variables([f"x{i}" for i in range(5)])
    for _ in range(30):
        a = BinaryPolynomial(v, {rng.randrange(32): rng.uniform(-1, 1) for _ in range(4)})
        b = BinaryPolynomial(v, {rng.randrange(32): rng.uniform(-1, 1) for _ in range(4)})
        prod, s = a * b, a.square()
        for m in range(32):
            assert prod.evaluate(m) == pytest.approx(a.evaluate(m) * b.evaluate(m), abs=1e-12)
            assert s.evaluate(m) == pytest.approx(a.evaluate(m) ** 2, abs=1e-12)
            assert (a - b).evaluate(m) == pytest.approx(a.evaluate(m) - b.evaluate(m), abs=1e-12)


def test_add_all_and_iadd(v3):
    parts = [X(v3, 0), X(v3, 1) * 2, X(v3, 0) * -1]
    assert add_all(v3, parts) == X(v3, 1) * 2
    acc = BinaryPolynomial(v3)
    acc.iadd_scaled(X(v3, 2), 3.0)
    assert acc == X(v3, 2) * 3.0


# -- penalty constructors --------------------------------------------------------

def test_linear_sum_examples(v3):
    assert linear_sum_penalty(v3, [0]).evaluate({0: 1}) == 0
    assert linear_sum_penalty(v3, [0, 1, 2]).evaluate(0) == 1
    assert linear_sum_penalty(v3, [0, 1]).evaluate({0: 1, 1: 1}) == 1


def test_interaction_examples(v3):
    p = interaction_penalty(v3, [0, 1])
    assert p.evaluate({0: 1, 1: 1}) == 1 and p.evaluate({0: 1, 1: 0}) == 0
    q = interaction_penalty(v3, [0, 1, 2])
    assert q.term_count() == 1 and q.degree() == 3


def test_implies_examples(v3):
    p = implies_penalty(v3, [0], 1)
    assert p.evaluate((1, 0, 0)) == 1 and p.evaluate((1, 1, 0)) == 0
    assert p.evaluate((0, 0, 0)) == 0 and p.evaluate((0, 1, 0)) == 0
    assert implies_penalty(v3, [0], 1, negated=True).evaluate((1, 1, 0)) == 1
    g = implies_penalty(v3, [0, 1], 2)
    assert g.evaluate((1, 1, 0)) == 1 and g.evaluate((1, 0, 0)) == 0


@pytest.mark.parametrize("ctor,args", [
    (linear_sum_penalty, ([],)),
    (linear_sum_penalty, ([0, 0],)),
    (interaction_penalty, ([],)),
    (implies_penalty, ([0], 0)),
    (implies_penalty, ([], 1)),
])
def test_constructor_preconditions(v3, ctor, args):
    with pytest.raises(ValueError):
        ctor(v3, *args)
