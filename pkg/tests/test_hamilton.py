from fractions import Fraction

import pytest

from laxforge import hamilton as h
from laxforge.diffring import DiffPoly
from laxforge.exactnum import Scalar
from laxforge.hierarchy import flow_for_hamiltonian
from laxforge.loopalg import AlgebraElement, Generator
from laxforge.matkit import ExactMatrix, build_family

from conftest import flow, table

AKNS = [("hadamard", {}), ("kidempotent", {}), ("idempotent", {"n": 2}), ("idempotent", {"n": 3})]
ALL = AKNS + [("nilpotent", {"p": 1}), ("nilpotent", {"p": 2})]


def _el(**terms):
    out = AlgebraElement()
    for key, c in terms.items():
        name, deg = key.rsplit("_", 1)
        out = out + AlgebraElement.single(DiffPoly.const(c), Generator(name, int(deg.replace("m", "-"))))
    return out


def test_pairing_example():
    fam = build_family("nilpotent", p=2)               # 3x3 identity in slot 1
    P = [_el(alpha_1=1), AlgebraElement(), AlgebraElement()]
    Q = [_el(alpha_m1=1), AlgebraElement(), AlgebraElement()]
    for transpose in (False, True):
        res = h.inner_product(P, Q, fam, transpose)
        assert res.terms == {0: DiffPoly.const(Scalar(Fraction(3, 2)))}


@pytest.mark.parametrize("kind,kw", ALL)
@pytest.mark.parametrize("transpose", [False, True])
def test_pairing_matches_kronecker_trace(kind, kw, transpose):
    from laxforge.laxzcc import assemble, differentiate_u
    fam = build_family(kind, **kw)
    lp = assemble(fam, 1)
    P = list(lp.U)
    Q = differentiate_u(lp, "lambda")
    fast = h.inner_product(P, Q, fam, transpose)
    slow = h.brute_force_pairing(P, Q, fam, transpose)
    assert fast.folded() == slow


def test_default_transpose():
    assert h.default_transpose(build_family("nilpotent", p=2))
    assert not h.default_transpose(build_family("hadamard"))


@pytest.mark.parametrize("p", [1, 2])
def test_omega_formula_small_p(p):
    assert h.omega_weights(p) == h.omega_brute_force(p)


def test_omega_formula_fails_from_p3():
    assert h.omega_weights(3) == ExactMatrix.from_rows([[6, 3, 1], [3, 3, 1], [1, 1, 1]])
    assert h.omega_brute_force(3) == ExactMatrix.from_rows([[6, 4, 1], [4, 6, 2], [1, 2, 1]])
    assert h.omega_weights(4) != h.omega_brute_force(4)


@pytest.mark.parametrize("kind,kw", AKNS)
def test_gamma_akns(kind, kw):
    g = h.solve_gamma(table(kind, 3, **kw), transpose=False)
    assert g.consistent and g.gamma == Scalar(-1)


def test_gamma_transpose_variants():
    assert not h.solve_gamma(table("hadamard", 3), transpose=True).consistent
    assert h.solve_gamma(table("idempotent", 3, n=3), transpose=True).gamma == Scalar(-1)


@pytest.mark.parametrize("p", [1, 2])
def test_gamma_kaup_newell_inconsistent(p):
    g = h.solve_gamma(table("nilpotent", 3, p=p))
    assert not g.consistent and "not proportional" in g.detail


def test_gamma_needs_two_orders():
    with pytest.raises(h.GammaError):
        h.gamma_from_terms([])


@pytest.mark.parametrize("kind,kw", AKNS)
@pytest.mark.parametrize("m", [1, 2])
def test_hamiltonian_gradient_and_printed_ratio(kind, kw, m):
    ht = table(kind, 3, **kw)
    rec = h.hamiltonian(ht, -1, m, False)
    assert rec.gradient_ok
    cmp = h.compare_forms(rec.form, h.displayed_hamiltonian(ht.family, m))
    assert cmp.ratio == Scalar(Fraction(2 * (m + 1), m + 2))


def test_hamiltonian_forms_frozen():
    rec = h.hamiltonian(table("idempotent", 3, n=3), -1, 1, False)
    assert rec.text() == "(1/2)*A1^(2) + A2^(2) + (3/2)*A3^(2)"
    rec = h.hamiltonian(table("kidempotent", 3), -1, 2, False)
    assert rec.text() == "(2/3)*A1^(3) + (-1/3)*A2^(3) + (-1/3)*A3^(3)"


def _fit(kind, kw, m):
    ht = table(kind, 3, **kw)
    g = h.solve_gamma(ht)
    H = h.hamiltonian(ht, g.gamma, m, g.transpose) if g.consistent else \
        h.displayed_hamiltonian(ht.family, m).evaluate(ht.entries)
    return h.fit_both(flow(kind, flow_for_hamiltonian(ht.lax.template, m), 3, **kw), H)


@pytest.mark.parametrize("n", [2, 3])
def test_idempotent_symplectic(n):
    fits = _fit("idempotent", {"n": n}, 1)
    assert h.resolve_convention(fits) == "W^-1"
    f = fits["W^-1"]
    assert f.status == "verified" and f.skew
    md = h.diff_displayed(f, h.displayed_w(build_family("idempotent", n=n)))
    assert len(md.mismatches) == (0 if n == 2 else 1)


@pytest.mark.parametrize("kind", ["hadamard", "kidempotent"])
def test_singular_w(kind):
    fits = _fit(kind, {}, 1)
    assert fits["W^-1"].status == "verified-singular"
    assert fits["W^-1 D"].status == "no-solution"


def test_kidempotent_w_matches_display():
    f = _fit("kidempotent", {}, 1)["W^-1"]
    assert h.diff_displayed(f, h.displayed_w(build_family("kidempotent"))).exact


def test_nilpotent_has_no_constant_w():
    fits = _fit("nilpotent", {"p": 2}, 1)
    assert {f.status for f in fits.values()} == {"no-solution"}


def test_fit_rejects_unknown_convention():
    with pytest.raises(ValueError):
        h.fit_symplectic(flow("hadamard", 1), DiffPoly(), "W D")
