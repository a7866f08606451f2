from fractions import Fraction

from hypothesis import given, settings, strategies as st

from laxforge.exactnum import HALF, I, ONE, ZERO, Scalar, format_scalar

rats = st.fractions(min_value=-20, max_value=20, max_denominator=12)
scalars = st.builds(Scalar, rats, rats, rats, rats)
nonzero = scalars.filter(lambda s: not s.is_zero())

S7 = Scalar(0, 0, 1)


def test_generators():
    assert I * I == -ONE
    assert S7 * S7 == Scalar(7)
    assert (I * S7) * (I * S7) == Scalar(-7)
    assert HALF + HALF == ONE


def test_kidempotent_entry_is_cube_root_of_unity():
    w = Scalar(Fraction(-1, 2), 0, 0, Fraction(1, 2))   # -1/2 + i sqrt7/2
    assert w * w.conjugate() == Scalar(2)
    assert w + w.conjugate() == -ONE


@settings(max_examples=200, deadline=None)
@given(scalars, scalars, scalars)
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a - a == ZERO


@settings(max_examples=200, deadline=None)
@given(nonzero)
def test_inverse(a):
    assert a * a.inverse() == ONE
    assert (ONE / a) * a == ONE


@settings(max_examples=100, deadline=None)
@given(scalars)
def test_json_round_trip(a):
    assert Scalar.from_json(a.to_json()) == a


@settings(max_examples=100, deadline=None)
@given(scalars, scalars)
def test_complex_embedding_is_multiplicative(a, b):
    assert abs(complex(a * b) - complex(a) * complex(b)) < 1e-9 * (1 + abs(complex(a)) * abs(complex(b)))


def test_format():
    assert format_scalar(Scalar(Fraction(1, 2))) == "1/2"
    assert format_scalar(-I) in ("-i", "-1*i")
