import math

import numpy as np
import pytest
import sympy as sp

from laxforge import numlab as nl
from laxforge.diffring import DiffPoly, nonlocal_raw
from laxforge.hierarchy.flows import PDESystem

from conftest import flow

Z = sp.Symbol("z")


def _laurent_terms(expr):
    """{k: c} for expr = sum c z^k."""
    expr = sp.expand(expr)
    out = {}
    for term in sp.Add.make_args(expr):
        c, k = term.as_coeff_exponent(Z)
        out[int(k)] = out.get(int(k), 0) + c
    return out


def _ddx(expr):
    return sp.expand(sp.I * Z * sp.diff(expr, Z))


def _dinv(expr):
    return sum((c / (sp.I * k)) * Z ** k for k, c in _laurent_terms(expr).items() if k != 0)


def _symbolic(p: DiffPoly, fields: dict):
    total = 0
    for (lam, loc, nls), c in p.terms.items():
        term = sp.nsimplify(complex(c).real) + sp.I * sp.nsimplify(complex(c).imag)
        for v, e in loc:
            f = fields[v.base]
            for _ in range(v.xorder):
                f = _ddx(f)
            term = term * f ** e
        for fac, e in nls:
            term = term * _dinv(_symbolic(fac.integrand, fields)) ** e
        total += term
    return sp.expand(total)


def _trig_data(pde, seed=3, modes=2):
    rng = np.random.default_rng(seed)
    fields = {}
    for lhs, _ in pde.equations:
        key = (lhs[0], int(lhs[1]))
        expr = 0
        for k in range(-modes, modes + 1):
            a, b = (int(x) for x in rng.integers(-3, 4, size=2))
            expr += sp.Rational(a, 20) * Z ** k + sp.I * sp.Rational(b, 20) * Z ** k
        fields[key] = expr
    return fields


def _grid(fields, nx):
    x = np.arange(nx) * (2 * math.pi / nx)
    return {k: np.array(sp.lambdify(Z, v, "numpy")(np.exp(1j * x)), dtype=complex) * np.ones(nx)
            for k, v in fields.items()}


@pytest.mark.parametrize("system", ["p2", "hadamard"])
def test_evaluator_matches_symbolic_substitution(system):
    pde = flow("nilpotent", 2, p=2) if system == "p2" else flow("hadamard", 1)
    fields = _trig_data(pde)
    nx = 64
    state = nl.GridState(nx, 2 * math.pi, _grid(fields, nx))
    got = nl.compile_rhs(pde)(state)
    x = np.arange(nx) * (2 * math.pi / nx)
    for lhs, rhs in pde.equations:
        key = (lhs[0], int(lhs[1]))
        want = np.array(sp.lambdify(Z, _symbolic(rhs, fields), "numpy")(np.exp(1j * x)), dtype=complex) * np.ones(nx)
        scale = max(np.max(np.abs(want)), 1e-300)
        assert np.max(np.abs(got[key] - want)) / scale < 1e-8, lhs


def test_component_counts():
    assert len(nl.compile_rhs(flow("nilpotent", 2, p=2)).keys) == 6
    assert len(nl.compile_rhs(flow("hadamard", 1)).keys) == 8


def test_zero_system_and_zero_data(p2_system):
    zero = PDESystem("nilpotent", {"p": 1}, 0, [("q1_t", DiffPoly()), ("r1_t", DiffPoly())])
    st = nl.GridState.zeros(zero, 16)
    assert all(np.all(v == 0) for v in nl.compile_rhs(zero)(st).values())
    ev = nl.compile_rhs(p2_system, kmax=16)
    final, log = nl.integrate(ev, nl.GridState.zeros(p2_system, 64), 1e-3, 20)
    assert all(np.all(v == 0) for v in final.fields.values())


def test_reduction_invariance(p2_system):
    ev = nl.compile_rhs(p2_system, kmax=16)
    s0 = nl.reduced(nl.smooth_initial(p2_system, 128, 5e-2, seed=1))
    final, _ = nl.integrate(ev, s0, 1e-3, 50)
    for (s, k), v in final.fields.items():
        if k >= 2:
            assert np.max(np.abs(v)) < 1e-12
    assert np.max(np.abs(final.fields[("q", 1)])) > 1e-3


def test_fourth_order_convergence(p2_system):
    ev = nl.compile_rhs(p2_system, kmax=16)
    s0 = nl.smooth_initial(p2_system, 64, 0.3)
    finals = {}
    for dt in (5e-3, 2.5e-3, 1.25e-3, 3.125e-4):
        finals[dt], _ = nl.integrate(ev, s0, dt, int(round(0.1 / dt)), stride=10 ** 6)
    ref = finals[3.125e-4]
    err = [max(np.max(np.abs(finals[dt].fields[k] - ref.fields[k])) for k in ref.fields)
           for dt in (5e-3, 2.5e-3, 1.25e-3)]
    assert err[0] / err[1] > 12 and err[1] / err[2] > 12


def test_quadratic_invariant_drift_order(p2_system):
    ev = nl.compile_rhs(p2_system, kmax=16)
    q1, r1 = DiffPoly.var("q", 1), DiffPoly.var("r", 1)
    mon = nl.Monitor(ev, q1 * q1 + r1 * r1, name="Q")
    s0 = nl.smooth_initial(p2_system, 64, 0.3)
    drift = []
    for dt in (1e-2, 5e-3):
        _, log = nl.integrate(ev, s0, dt, int(round(0.1 / dt)), stride=1, monitor=mon)
        drift.append(log.drift("Q"))
    assert drift[0] / drift[1] > 16


def test_blow_up_without_cutoff(p2_system):
    ev = nl.compile_rhs(p2_system)
    s0 = nl.smooth_initial(p2_system, 256, 1e-2)
    with pytest.raises(nl.BlowUpError) as exc:
        nl.integrate(ev, s0, 1e-4, 1000)
    assert exc.value.state.finite()
    assert exc.value.log.rows


def test_log_columns_and_csv(tmp_path, p2_system):
    ev = nl.compile_rhs(p2_system, kmax=8)
    mon = nl.Monitor(ev, DiffPoly.var("q", 1), name="H1")
    _, log = nl.integrate(ev, nl.smooth_initial(p2_system, 32), 1e-3, 20, stride=5, monitor=mon)
    assert log.columns == ["time", "H1", "int_q1r1", "int_q2r2", "int_q3r3", "max_abs_q", "max_abs_r"]
    t = log.series("time")
    assert len(t) == 5 and np.all(np.diff(t) > 0)
    path = tmp_path / "c.csv"
    log.write_csv(path)
    assert path.read_text().splitlines()[0] == ",".join(log.columns)


def test_linear_integrals(p2_system):
    ev = nl.compile_rhs(p2_system, kmax=16)
    mon = nl.Monitor(ev, DiffPoly.var("q", 2), name="Iq2", extra={"Iq1": DiffPoly.var("q", 1)})
    s0 = nl.smooth_initial(p2_system, 64, 0.1)
    _, log = nl.integrate(ev, s0, 1e-3, 100, monitor=mon)
    assert log.drift("Iq1") < 1e-12
    # zero-mean Dinv of a non-zero-mean integrand leaves a defect proportional to int q1, int r1
    assert log.drift("Iq2") > 1e-6
    for key in (("q", 1), ("r", 1)):
        s0.fields[key] = s0.fields[key] - s0.fields[key].mean()
    _, log = nl.integrate(ev, s0, 1e-3, 100, monitor=mon)
    assert log.drift("Iq2") < 1e-12


def test_nesting_rejected():
    inner = nonlocal_raw(DiffPoly.var("r", 1))
    bad = nonlocal_raw(DiffPoly.var("q", 1) * inner)
    pde = PDESystem("nilpotent", {"p": 1}, 0, [("q1_t", bad), ("r1_t", DiffPoly())])
    with pytest.raises(nl.CompileError):
        nl.compile_rhs(pde)


def test_grid_validation():
    with pytest.raises(ValueError):
        nl.GridState(48, 1.0, {})
    with pytest.raises(ValueError):
        nl.GridState(16, 1.0, {("q", 1): np.zeros(8)})


def test_spectral_dinv():
    sp_ = nl.Spectral(32, 2 * math.pi)
    x = np.arange(32) * (2 * math.pi / 32)
    assert np.allclose(sp_.dinv(np.cos(3 * x)), np.sin(3 * x) / 3)
    assert np.allclose(sp_.ddx(np.sin(2 * x), 2), -4 * np.sin(2 * x))
