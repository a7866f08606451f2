import pytest

from laxforge.diffring import DiffPoly
from laxforge.exactnum import I, Scalar
from laxforge.laxzcc import (
    assemble,
    check_against_brute_force,
    differentiate_u,
    relations,
    spectral_part,
    template_for,
)
from laxforge.loopalg import Generator
from laxforge.matkit import build_family

CASES = [
    ("nilpotent", {"p": 1}), ("nilpotent", {"p": 2}),
    ("nilpotent", {"p": 1, "sign_variant": "alternating"}), ("nilpotent", {"p": 2, "sign_variant": "alternating"}),
    ("hadamard", {}), ("idempotent", {"n": 2}), ("idempotent", {"n": 3}), ("kidempotent", {}),
]


@pytest.mark.parametrize("kind,kw", CASES)
def test_projection_equals_kronecker_expansion(kind, kw):
    lp = assemble(build_family(kind, **kw), 2)
    assert check_against_brute_force(lp) == []


def test_templates():
    assert template_for(build_family("nilpotent", p=1)).name == "kaup-newell"
    for kind, kw in (("hadamard", {}), ("idempotent", {"n": 2}), ("kidempotent", {})):
        assert template_for(build_family(kind, **kw)).name == "akns"


def test_kaup_newell_u():
    lp = assemble(build_family("nilpotent", p=1), 1)
    u1 = lp.U[0]
    assert u1.coefficient(Generator("alpha", 2)) == DiffPoly.const(Scalar(0, -2))
    assert u1.coefficient(Generator("beta1", 1)) == DiffPoly.var("q", 1)
    assert lp.U[1].coefficient(Generator("alpha", 2)) is None


def test_spectral_part_sits_on_identity_slot():
    fam = build_family("idempotent", n=3)
    u0 = spectral_part(template_for(fam), fam)
    assert [el.is_zero() for el in u0] == [True, True, False]
    assert u0[2].coefficient(Generator("alpha", 1)) == Scalar(-2)


def test_lambda_derivative_keeps_field_terms():
    lp = assemble(build_family("nilpotent", p=2), 1)
    d = differentiate_u(lp, "lambda")
    assert d[0].coefficient(Generator("alpha", 1)) == DiffPoly.const(-4 * I)
    assert d[1].coefficient(Generator("beta1", 0)) == DiffPoly.var("q", 2)


@pytest.mark.parametrize("m", [0, 1, 2])
def test_field_derivative_selects_slot(m):
    lp = assemble(build_family("nilpotent", p=2), 1)
    d = differentiate_u(lp, ("q", m + 1))
    assert [el.is_zero() for el in d] == [k != m for k in range(3)]
    assert d[m].coefficient(Generator("beta1", 1)) == DiffPoly.const(1)


def test_relations_are_keyed_by_slot_and_generator():
    rels = relations(assemble(build_family("hadamard"), 1))
    assert all(1 <= slot <= 4 for slot, _ in rels)
    assert all(isinstance(g, Generator) for _, g in rels)
