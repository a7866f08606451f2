import pytest
from hypothesis import given, settings, strategies as st

from laxforge.diffring import (
    DiffPoly,
    FieldVar,
    Operator,
    ParseError,
    ddx,
    dinv,
    euler_derivative,
    is_total_derivative,
    operator_text,
    parse_diffpoly,
    substitute,
    theta,
    to_latex,
    to_text,
    variational_gradient,
    zero_components,
)
from laxforge.exactnum import I, Scalar

fieldvars = st.builds(FieldVar, st.sampled_from("qr"), st.integers(1, 2), st.integers(0, 2))
coefs = st.sampled_from([Scalar(1), Scalar(-2), Scalar(3, 1), Scalar(1) / 2, I])


@st.composite
def monomials(draw):
    out = DiffPoly.const(draw(coefs))
    for v in draw(st.lists(fieldvars, min_size=1, max_size=3)):
        out = out * DiffPoly.from_fieldvar(v)
    return out


polys = st.lists(monomials(), min_size=1, max_size=4).map(lambda ms: sum(ms, DiffPoly()))


def test_parse_canonical():
    p = parse_diffpoly("i/2*r1x2 + 1/4*Dx(q1*(r1^2+q1^2))")
    q1, r1 = DiffPoly.var("q", 1), DiffPoly.var("r", 1)
    want = DiffPoly.var("r", 1, 2).scale(I / 2) + ddx(q1 * (r1 * r1 + q1 * q1)).scale(Scalar(1) / 4)
    assert p == want


def test_parse_errors():
    for bad in ("q1 +", "Dinv(q1", "x1", "q1 ** 2"):
        with pytest.raises(ParseError):
            parse_diffpoly(bad)


@settings(max_examples=200, deadline=None)
@given(polys)
def test_text_round_trip(p):
    assert parse_diffpoly(to_text(p)) == p


@settings(max_examples=100, deadline=None)
@given(polys)
def test_nonlocal_round_trip(p):
    f = DiffPoly.var("q", 1) * dinv(p * DiffPoly.var("r", 1))
    assert parse_diffpoly(to_text(f)) == f


@settings(max_examples=200, deadline=None)
@given(polys, polys)
def test_leibniz(a, b):
    assert ddx(a * b) == ddx(a) * b + a * ddx(b)


@settings(max_examples=200, deadline=None)
@given(polys)
def test_dinv_inverts_ddx(p):
    assert ddx(dinv(p)) == p
    assert dinv(ddx(p)) == p - DiffPoly.const(p.terms.get((0, (), ()), Scalar(0)))


@settings(max_examples=200, deadline=None)
@given(polys)
def test_euler_annihilates_total_derivatives(p):
    assert is_total_derivative(ddx(p))
    for v in (FieldVar("q", 1), FieldVar("r", 2)):
        assert euler_derivative(ddx(p), v).is_zero()


def test_euler_known_values():
    q1, r1 = DiffPoly.var("q", 1), DiffPoly.var("r", 1)
    h = q1 * r1 * r1 + DiffPoly.var("q", 1, 1) * DiffPoly.var("q", 1, 1)
    assert euler_derivative(h, ("q", 1)) == r1 * r1 - DiffPoly.var("q", 1, 2).scale(2)
    assert euler_derivative(h, ("r", 1)) == (q1 * r1).scale(2)


def test_euler_nonlocal():
    # int q1*Dinv(r1) = -int Dinv(q1)*r1
    q1, r1 = DiffPoly.var("q", 1), DiffPoly.var("r", 1)
    h = q1 * dinv(r1)
    assert euler_derivative(h, ("q", 1)) == dinv(r1)
    assert euler_derivative(h, ("r", 1)) == -dinv(q1)


def test_gradient_order():
    h = DiffPoly.var("q", 2) * DiffPoly.var("r", 1)
    g = variational_gradient(h, 2)
    assert g == [DiffPoly(), DiffPoly.var("q", 2), DiffPoly.var("r", 1), DiffPoly()]


def test_theta_and_zero_components():
    t = theta("q", "r", 1, 2, DiffPoly.var("q", 1, 1))
    assert to_text(t) == "-q1*Dinv(q1*r2x) + q1^2*r2"
    assert zero_components(t, [2]).is_zero()
    with pytest.raises(IndexError):
        theta("q", "r", 3, 1, DiffPoly.const(1), size=2)


def test_substitute():
    p = DiffPoly.var("q", 1, 1) * DiffPoly.var("r", 1)
    got = substitute(p, {("q", 1): DiffPoly.var("r", 2) * DiffPoly.var("r", 2)})
    assert got == (DiffPoly.var("r", 2) * DiffPoly.var("r", 2, 1)).scale(2) * DiffPoly.var("r", 1)


def test_latex():
    assert to_latex(parse_diffpoly("i/2*r1x2")) == "\\frac{1}{2}i r_{1,xx}"


def test_operator_apply():
    q1, r1 = DiffPoly.var("q", 1), DiffPoly.var("r", 1)
    op = Operator.d().scale(Scalar(-1) / 2) + Operator.f_dinv_g(q1, r1)
    u = DiffPoly.var("q", 2)
    assert op.apply(u) == DiffPoly.var("q", 2, 1).scale(Scalar(-1) / 2) + q1 * dinv(r1 * u)
    assert "D" in operator_text(op)


@settings(max_examples=60, deadline=None)
@given(polys, polys)
def test_operator_linearity(a, b):
    op = Operator.f_dinv_g(DiffPoly.var("q", 1), DiffPoly.var("r", 2)) + Operator.d(2)
    assert op.apply(a + b) == op.apply(a) + op.apply(b)
