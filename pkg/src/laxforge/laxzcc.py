"""Enlarged Lax pairs and their zero-curvature components.

U and V are stored per slot: ``U = sum_k U_k (x) M_k`` with U_k in the loop
algebra.  U_k has DiffPoly coefficients; V_k has LinearForm coefficients in
the unknown table entries A_k^(m), B_k^(m), C_k^(m).  When the coupling
family is commutative,

    [U, V] = sum_{a,b} [U_a, V_b] (x) M_a M_b,

and the closure table turns this into one loop-algebra identity per slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .diffring import DiffPoly
from .exactnum import I, Scalar
from .loopalg import AlgebraElement, Generator, bracket, represent
from .matkit import ClosureTable, CouplingFamily, closure_table


class CurvatureError(ValueError):
    pass


class Symbol(NamedTuple):
    letter: str   # "A", "B", "C", or "qt" / "rt" for time derivatives of the fields
    slot: int     # 1-based component index
    order: int = 0

    def __str__(self) -> str:
        if self.letter in ("qt", "rt"):
            return f"{self.letter[0]}{self.slot}_t"
        return f"{self.letter}{self.slot}^({self.order})"


def _vd(value, j: int):
    """j-th x-derivative of a value (DiffPoly or an operator row)."""
    return value.ddx_n(j) if j else value


def _vmul(c: DiffPoly, value):
    if hasattr(value, "left_mul"):
        return value.left_mul(c)
    return c * value


class LinearForm:
    """const + sum coef * D^j(symbol), coefficients DiffPoly."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: dict | None = None, const: DiffPoly | None = None):
        self.terms = {k: v for k, v in (terms or {}).items() if not v.is_zero()}
        self.const = const if const is not None else DiffPoly()

    @classmethod
    def symbol(cls, s: Symbol, coef: DiffPoly | None = None) -> "LinearForm":
        return cls({(s, 0): coef if coef is not None else DiffPoly.const(1)})

    @classmethod
    def constant(cls, c: DiffPoly) -> "LinearForm":
        return cls({}, c)

    def is_zero(self) -> bool:
        return not self.terms and self.const.is_zero()

    def __add__(self, other):
        if isinstance(other, DiffPoly):
            return LinearForm(dict(self.terms), self.const + other)
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t[k] + v if k in t else v
        return LinearForm(t, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> "LinearForm":
        return LinearForm({k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LinearForm":
        if isinstance(c, DiffPoly):
            return LinearForm({k: c * v for k, v in self.terms.items()}, c * self.const)
        c = Scalar.coerce(c)
        return LinearForm({k: v.scale(c) for k, v in self.terms.items()}, self.const.scale(c))

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def ddx(self) -> "LinearForm":
        t: dict = {}

        def add(k, v):
            t[k] = t[k] + v if k in t else v

        for (s, j), c in self.terms.items():
            add((s, j + 1), c)
            cx = c.ddx()
            if not cx.is_zero():
                add((s, j), cx)
        return LinearForm(t, self.const.ddx())

    def ddx_n(self, n: int) -> "LinearForm":
        out = self
        for _ in range(n):
            out = out.ddx()
        return out

    def symbols(self) -> set:
        return {s for s, _ in self.terms}

    def max_order(self) -> int:
        return max((s.order for s in self.symbols() if s.letter in "ABC"), default=-1)

    def lambda_coeff(self, power: int) -> "LinearForm":
        return LinearForm({k: v.lambda_coeff(power) for k, v in self.terms.items()},
                          self.const.lambda_coeff(power))

    def lambda_powers(self) -> set:
        out = set(self.const.lambda_powers())
        for v in self.terms.values():
            out |= v.lambda_powers()
        return out

    def evaluate(self, env: dict, zero=None):
        """Substitute values for every symbol; unknown symbols raise KeyError."""
        out = zero if zero is not None else DiffPoly()
        if not self.const.is_zero():
            out = out + self.const
        for (s, j), c in self.terms.items():
            out = out + _vmul(c, _vd(env[s], j))
        return out

    def partial_eval(self, env: dict, zero=None):
        """(value of known part, {(symbol, j): coef} for unknown symbols)."""
        out = zero if zero is not None else DiffPoly()
        if not self.const.is_zero():
            out = out + self.const
        rest = {}
        for (s, j), c in self.terms.items():
            if s in env:
                out = out + _vmul(c, _vd(env[s], j))
            else:
                rest[(s, j)] = c
        return out, rest

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinearForm):
            return NotImplemented
        return (self - other).is_zero()

    def __repr__(self) -> str:
        return f"LinearForm({format_linear_form(self)})"


def format_linear_form(f: LinearForm) -> str:
    from .diffring import to_text
    parts = []
    for (s, j), c in sorted(f.terms.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        sym = str(s) + ("_" + "x" * j if j else "")
        ct = to_text(c)
        parts.append(sym if ct == "1" else f"({ct})*{sym}")
    if not f.const.is_zero():
        parts.append(to_text(f.const))
    return " + ".join(parts) or "0"


# -- templates ------------------------------------------------------------------------

@dataclass(frozen=True)
class Template:
    """Generator layout of U and V for a hierarchy type."""

    name: str
    spectral_coeff: Scalar          # U_id contains spectral_coeff * alpha(spectral_degree)
    spectral_degree: int
    field_degree: int               # q_k beta1(d), r_k beta2(d)
    v_degrees: Callable             # order m -> (deg alpha, deg beta1, deg beta2)
    grade_step: int                 # degree drop per hierarchy order

    def v_generators(self, m: int) -> dict:
        da, db, dc = self.v_degrees(m)
        return {"A": Generator("alpha", da), "B": Generator("beta1", db), "C": Generator("beta2", dc)}


AKNS = Template("akns", Scalar(-2), 1, 0, lambda m: (-m, -m, -m), 1)
KN = Template("kaup-newell", Scalar(-2) * I, 2, 1, lambda m: (-2 * m, -2 * m - 1, -2 * m - 1), 2)


def template_for(family: CouplingFamily) -> Template:
    return KN if family.kind == "nilpotent" else AKNS


@dataclass
class LaxPair:
    family: CouplingFamily
    template: Template
    max_order: int
    U: list                              # per slot AlgebraElement[DiffPoly]
    V: list                              # per slot AlgebraElement[LinearForm]
    table: ClosureTable = field(repr=False, default=None)
    spectral_slot: int = 0

    @property
    def size(self) -> int:
        return self.family.size


def spectral_part(template: Template, family: CouplingFamily) -> list:
    """Per slot, the field-free part of U."""
    ident = family.identity_slot()
    out = []
    for k in range(family.size):
        if k == ident:
            out.append(AlgebraElement.single(DiffPoly.const(template.spectral_coeff),
                                             Generator("alpha", template.spectral_degree)))
        else:
            out.append(AlgebraElement())
    return out


def assemble(family: CouplingFamily, max_order: int, template: Template | None = None) -> LaxPair:
    """Build U and the symbolic V (orders 0..max_order) from the template."""
    template = template or template_for(family)
    table = closure_table(family)
    if not table.is_commutative():
        raise CurvatureError(f"{family.kind} family is not commutative; the slot decomposition needs commuting couplings")
    U = spectral_part(template, family)
    d = template.field_degree
    for k in range(family.size):
        U[k] = U[k] + AlgebraElement({
            Generator("beta1", d): DiffPoly.var("q", k + 1),
            Generator("beta2", d): DiffPoly.var("r", k + 1),
        })
    V = []
    for k in range(family.size):
        el = AlgebraElement()
        for m in range(max_order + 1):
            for letter, gen in template.v_generators(m).items():
                el = el + AlgebraElement.single(LinearForm.symbol(Symbol(letter, k + 1, m)), gen)
        V.append(el)
    return LaxPair(family, template, max_order, U, V, table, family.identity_slot())


def _poly_times_form(c: DiffPoly, f: LinearForm) -> LinearForm:
    return f.scale(c)


def u_time_derivative(lp: LaxPair) -> list:
    d = lp.template.field_degree
    out = []
    for k in range(lp.size):
        out.append(AlgebraElement({
            Generator("beta1", d): LinearForm.symbol(Symbol("qt", k + 1)),
            Generator("beta2", d): LinearForm.symbol(Symbol("rt", k + 1)),
        }))
    return out


def zero_curvature_components(lp: LaxPair, V: list | None = None, with_time: bool = True) -> list:
    """Per slot c: U_c,t - V_c,x + sum_{a,b} s_ab^c [U_a, V_b]."""
    V = V if V is not None else lp.V
    n = lp.size
    comps = [AlgebraElement() for _ in range(n)]
    brackets = {}
    for a in range(n):
        for b in range(n):
            coeffs = lp.table.slot_coeff(a, b)
            if not coeffs:
                continue
            if (a, b) not in brackets:
                brackets[(a, b)] = bracket(lp.U[a], V[b], _poly_times_form)
            br = brackets[(a, b)]
            for c, s in coeffs.items():
                comps[c] = comps[c] + br.map(lambda f, s=s: f.scale(s))
    ut = u_time_derivative(lp) if with_time else [AlgebraElement() for _ in range(n)]
    for c in range(n):
        comps[c] = comps[c] + ut[c] - V[c].map(lambda f: f.ddx())
    return comps


def project_generators(components: list) -> dict:
    """{(slot, generator): LinearForm} for every nonzero projected relation."""
    out = {}
    for k, el in enumerate(components):
        for g in el.generators():
            f = el.terms[g]
            if not f.is_zero():
                out[(k + 1, g)] = f
    return out


def relations(lp: LaxPair, with_time: bool = False) -> dict:
    return project_generators(zero_curvature_components(lp, with_time=with_time))


def differentiate_u(lp: LaxPair, wrt) -> list:
    """Per-slot derivative of U in lambda ("lambda") or a field ("q", k) / ("r", k)."""
    out = []
    for k in range(lp.size):
        el = AlgebraElement()
        for g, c in lp.U[k].terms.items():
            if wrt == "lambda":
                if g.degree:
                    el = el + AlgebraElement.single(c.scale(g.degree), Generator(g.name, g.degree - 1))
            else:
                sym, comp = wrt
                d = c.partial(_fv(sym, comp))
                if not d.is_zero():
                    el = el + AlgebraElement.single(d, g)
        out.append(el)
    return out


def _fv(sym, comp):
    from .diffring import FieldVar
    return FieldVar(sym, comp, 0)


# -- brute-force oracle ---------------------------------------------------------------------

def _lam(power: int) -> DiffPoly:
    return DiffPoly.lam(power)


def slot_matrix_2x2(el: AlgebraElement, kind: str = "poly") -> list:
    """2x2 matrix (list of lists) with lambda folded into the coefficients."""
    zero = DiffPoly() if kind == "poly" else LinearForm()
    m = [[zero, zero], [zero, zero]]
    for g, c in el.terms.items():
        rep, lp_ = represent(g)
        lamc = _lam(lp_)
        for i in range(2):
            for j in range(2):
                s = rep[i, j]
                if s:
                    m[i][j] = m[i][j] + (c * lamc).scale(s)
    return m


def full_matrix(per_slot: list, family: CouplingFamily, kind: str) -> list:
    """Assemble sum_k X_k (x) M_k as a dense 2n x 2n list of entries."""
    n = family.dim
    N = 2 * n
    zero = DiffPoly() if kind == "poly" else LinearForm()
    out = [[zero for _ in range(N)] for _ in range(N)]
    for k, el in enumerate(per_slot):
        x = slot_matrix_2x2(el, kind)
        M = family.slot_matrix(k)
        for i in range(2):
            for j in range(2):
                if x[i][j].is_zero():
                    continue
                for a in range(n):
                    for b in range(n):
                        s = M[a, b]
                        if s:
                            out[i * n + a][j * n + b] = out[i * n + a][j * n + b] + x[i][j].scale(s)
    return out


def brute_force_curvature(lp: LaxPair, with_time: bool = True) -> list:
    """U_t - V_x + [U, V] computed directly on the Kronecker matrices."""
    Uf = full_matrix(lp.U, lp.family, "poly")
    Vf = full_matrix(lp.V, lp.family, "form")
    N = len(Uf)
    out = [[LinearForm() for _ in range(N)] for _ in range(N)]
    for i in range(N):
        for j in range(N):
            acc = LinearForm()
            for k in range(N):
                if not Uf[i][k].is_zero() and not Vf[k][j].is_zero():
                    acc = acc + Vf[k][j].scale(Uf[i][k])
                if not Vf[i][k].is_zero() and not Uf[k][j].is_zero():
                    acc = acc - Vf[i][k].scale(Uf[k][j])
            out[i][j] = acc - Vf[i][j].ddx()
    if with_time:
        Ut = full_matrix(u_time_derivative(lp), lp.family, "form")
        for i in range(N):
            for j in range(N):
                out[i][j] = out[i][j] + Ut[i][j]
    return out


def components_to_matrix(lp: LaxPair, comps: list) -> list:
    return full_matrix(comps, lp.family, "form")


def check_against_brute_force(lp: LaxPair) -> list:
    """Entries where the slot decomposition and the direct matrix computation differ."""
    direct = brute_force_curvature(lp)
    via = components_to_matrix(lp, zero_curvature_components(lp))
    bad = []
    for i in range(len(direct)):
        for j in range(len(direct)):
            if not (direct[i][j] - via[i][j]).is_zero():
                bad.append((i, j))
    return bad

