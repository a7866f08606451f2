from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from laxforge.exactnum import I, ONE, Scalar
from laxforge.matkit import (
    ExactMatrix,
    MatrixError,
    build_family,
    closure_table,
    format_closure_table,
    inverse,
    kron,
    nilpotent_matrix,
    verify_family_axioms,
)

small = st.integers(-3, 3)


def mats(n):
    return st.lists(small, min_size=n * n, max_size=n * n).map(lambda e: ExactMatrix(n, n, e))


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_nilpotency_index(p):
    N = nilpotent_matrix(p)
    assert (N ** (p + 1)).is_zero()
    assert not (N ** p).is_zero()


def test_nilpotent_p2_matrix():
    assert nilpotent_matrix(2) == ExactMatrix.from_rows([[0, 1, 1], [0, 0, 1], [0, 0, 0]])


def test_hadamard_gamma():
    fam = build_family("hadamard")
    g1 = fam.basis[1]
    assert g1.T @ g1 == ExactMatrix.identity(2).scale(2)
    assert fam.basis[2] == g1.T
    assert fam.basis[3] == (g1 - g1.T).scale(Fraction(1, 2))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_idempotents(n):
    fam = build_family("idempotent", n=n)
    for P in fam.basis:
        assert P @ P == P


def test_kidempotent_relations():
    fam = build_family("kidempotent")
    P, K = fam.basis[0], fam.extras["K"]
    assert K @ P @ P @ K == P
    assert K @ P @ K == P @ P
    assert P ** 3 == (K @ P) ** 2 == (P @ K) ** 2
    assert P.trace() == (P @ P).trace() == -ONE
    assert (P ** 3).trace() == Scalar(2)


@pytest.mark.parametrize("kind,kw", [("nilpotent", {"p": 1}), ("nilpotent", {"p": 3}), ("hadamard", {}),
                                     ("idempotent", {"n": 4}), ("kidempotent", {})])
def test_axiom_report(kind, kw):
    rep = verify_family_axioms(build_family(kind, **kw))
    assert rep.passed, rep.checks


def test_kidempotent_table_layout():
    # line 461
    expected = [["P^2", "P^3", "P"], ["P^3", "P", "P^2"], ["P", "P^2", "P^3"]]
    t = closure_table(build_family("kidempotent"))
    labels = t.family.labels
    for i in range(3):
        for j in range(3):
            assert t.coeff[i][j] == ((labels.index(expected[i][j]), ONE),)
    assert "P^2 | P^3 | P" in format_closure_table(t)


@pytest.mark.parametrize("kind,kw", [("nilpotent", {"p": 2}), ("hadamard", {}), ("idempotent", {"n": 3}),
                                     ("kidempotent", {})])
def test_closure_reconstructs_products(kind, kw):
    fam = build_family(kind, **kw)
    t = closure_table(fam)
    for i, a in enumerate(fam.basis):
        for j, b in enumerate(fam.basis):
            assert t.reconstruct(i, j) == a @ b


def test_independence():
    assert build_family("nilpotent", p=3).independent()
    assert build_family("idempotent", n=3).independent()


def test_kidempotent_basis_is_dependent():
    P, P2, P3 = build_family("kidempotent").basis
    assert (P + P2 + P3).is_zero()


def test_hadamard_basis_is_dependent():
    one, g1, g2, g3 = build_family("hadamard").basis
    assert g1 == one + g3 and g2 == one - g3
    assert not build_family("hadamard").independent()


@settings(max_examples=60, deadline=None)
@given(mats(2), mats(2), mats(2), mats(2))
def test_kron_mixed_product(a, b, c, d):
    assert kron(a, b) @ kron(c, d) == kron(a @ c, b @ d)


@settings(max_examples=60, deadline=None)
@given(mats(3))
def test_inverse_property(a):
    try:
        ai = inverse(a)
    except MatrixError:
        return
    assert a @ ai == ExactMatrix.identity(3)


def test_complex_inverse():
    m = ExactMatrix.from_rows([[I, 1], [0, 2]])
    assert m @ inverse(m) == ExactMatrix.identity(2)


def test_unknown_family():
    with pytest.raises(MatrixError):
        build_family("triangular")
