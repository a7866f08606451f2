"""Order-by-order solution of the stationary zero-curvature relations.

Each step takes the relations whose unknowns are all known or new, reads
the new B and C entries off the beta relations (they appear undifferentiated
with a constant coefficient), substitutes them into the alpha relations,
and integrates for the new A entries.  The same code runs on DiffPoly values
(tables) and on operator rows (recursion operators).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diffring import DiffPoly, dinv
from ..exactnum import I, Scalar
from ..laxzcc import LaxPair, LinearForm, Symbol, assemble, relations, spectral_part
from ..loopalg import bracket
from ..matkit import CouplingFamily


class SolveError(RuntimeError):
    pass


def _delta(v) -> bool:
    return v.is_zero()


def _integrate(value):
    if isinstance(value, DiffPoly):
        return dinv(value)
    return value.dinv()


def _ddx_n(value, j):
    return value.ddx_n(j) if j else value


def _mul(c: DiffPoly, value):
    if hasattr(value, "left_mul"):
        return value.left_mul(c)
    return c * value


class _Partial:
    """value + linear form (no constant) in not-yet-known symbols."""

    __slots__ = ("value", "form")

    def __init__(self, value, form: LinearForm):
        self.value = value
        self.form = form

    def ddx_n(self, j: int) -> "_Partial":
        return _Partial(_ddx_n(self.value, j), self.form.ddx_n(j))

    def left_mul(self, c: DiffPoly) -> "_Partial":
        return _Partial(_mul(c, self.value), self.form.scale(c))

    def __add__(self, other: "_Partial") -> "_Partial":
        return _Partial(self.value + other.value, self.form + other.form)


def usable_relations(rels: dict, known: set, new: set) -> dict:
    out = {}
    for key, f in rels.items():
        syms = f.symbols()
        if any(s.letter not in "ABC" for s in syms):
            continue
        if syms <= known | new and syms & new:
            out[key] = f
    return out


def solve_block(rels: dict, env: dict, new: set, zero) -> tuple[dict, dict]:
    """Solve the relations for the symbols in `new`.

    Returns (values of the new symbols, residuals of the used relations).
    Raises SolveError when the relations cannot be put in triangular form.
    """
    use = usable_relations(rels, set(env), new)
    const_coef = {}
    solved: dict = {}
    alpha_rel = []
    for key, f in sorted(use.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        slot, gen = key
        if gen.name == "alpha":
            alpha_rel.append((key, f))
            continue
        letter = "B" if gen.name == "beta1" else "C"
        known, rest = f.partial_eval(env, zero)
        targets = [s for (s, j), c in rest.items()
                   if j == 0 and s.letter == letter and c.is_constant() and s not in solved]
        if not targets:
            alpha_rel.append((key, f))
            continue
        target = next((s for s in targets if s.slot == slot), targets[0])
        c = rest[(target, 0)].constant_value()
        del rest[(target, 0)]
        for (s, j) in rest:
            if s.letter != "A":
                raise SolveError(f"relation {key} couples {target} to {s} beyond the triangular scheme")
        inv = -c.inverse()
        solved[target] = _Partial(_mul(DiffPoly.const(inv), known), LinearForm(rest).scale(inv))
        const_coef[target] = c
    values: dict = {}
    deferred = []
    for key, f in alpha_rel:
        known, rest = f.partial_eval(env, zero)
        acc = _Partial(known, LinearForm())
        tail = {}
        for (s, j), c in rest.items():
            if s in solved:
                acc = acc + solved[s].ddx_n(j).left_mul(c)
            else:
                tail[(s, j)] = c
        form = acc.form + LinearForm(tail)
        dsyms = [(s, j, c) for (s, j), c in form.terms.items()]
        if not dsyms:
            deferred.append((key, f))
            continue
        if len(dsyms) != 1 or dsyms[0][1] != 1 or not dsyms[0][2].is_constant() or dsyms[0][0].letter != "A":
            raise SolveError(f"alpha relation {key} is not of the form c*A_x = known: {form}")
        s, _, c = dsyms[0]
        inv = -c.constant_value().inverse()
        values[s] = _integrate(_mul(DiffPoly.const(inv), acc.value))
    for s, part in solved.items():
        v = part.value
        for (a, j), c in part.form.terms.items():
            if a not in values:
                raise SolveError(f"{s} depends on {a}, which no alpha relation determines")
            v = v + _mul(c, _ddx_n(values[a], j))
        values[s] = v
    missing = new - set(values)
    full = dict(env)
    full.update(values)
    residuals = {}
    for key, f in use.items():
        if f.symbols() <= set(full):
            res = f.evaluate(full, zero)
            if not _delta(res):
                residuals[key] = res
    return {s: values[s] for s in new if s in values}, residuals if not missing else {**residuals, "missing": missing}


# -- seeds -------------------------------------------------------------------------------------

def default_seeds(lp: LaxPair) -> dict:
    n = lp.size
    seeds = {}
    for k in range(1, n + 1):
        if lp.template.name == "kaup-newell":
            sgn = 1 if k == 1 else -1
            seeds[Symbol("B", k, 0)] = DiffPoly.var("r", k).scale(sgn)
            seeds[Symbol("C", k, 0)] = DiffPoly.var("q", k).scale(sgn)
        else:
            seeds[Symbol("B", k, 0)] = DiffPoly.var("q", k)
            seeds[Symbol("C", k, 0)] = DiffPoly.var("r", k)
        seeds[Symbol("A", k, 0)] = DiffPoly()
    return seeds


@dataclass
class SeedReport:
    residuals: dict                 # relation key -> DiffPoly, before any correction
    spectral_constant: Scalar | None  # a with V -> V + a*U_spectral fixing the residuals
    status: str                       # "consistent", "consistent-with-constant", "provisional"

    def describe(self) -> str:
        if self.status == "consistent":
            return "seed relations hold exactly"
        if self.status == "consistent-with-constant":
            return f"seed relations hold after adding {self.spectral_constant} times the spectral part of U to V"
        from ..diffring import to_text
        first = ", ".join(f"{k[0]}:{k[1]} -> {to_text(v)}" for k, v in list(self.residuals.items())[:3])
        return f"seeds are provisional; order-0 relations leave residuals ({first})"


def check_seeds(lp: LaxPair, rels: dict, seeds: dict) -> SeedReport:
    seed_rels = {k: f for k, f in rels.items()
                 if f.symbols() and all(s.letter in "ABC" and s.order == 0 for s in f.symbols())}
    res = {}
    for key, f in seed_rels.items():
        v = f.evaluate(seeds)
        if not v.is_zero():
            res[key] = v
    if not res:
        return SeedReport({}, None, "consistent")
    # try V -> V + a*U0 : adds a*[U_fields, U0] to the relations
    u0 = spectral_part(lp.template, lp.family)
    fields = [lp.U[k] - u0[k] for k in range(lp.size)]
    extra = {}
    for a in range(lp.size):
        for b in range(lp.size):
            for c, s in lp.table.slot_coeff(a, b).items():
                br = bracket(fields[a], u0[b], lambda x, y: x * y)
                for g, v in br.terms.items():
                    key = (c + 1, g)
                    extra[key] = extra.get(key, DiffPoly()) + v.scale(s)
    key0, v0 = next(iter(res.items()))
    e0 = extra.get(key0, DiffPoly())
    if e0.is_zero():
        return SeedReport(res, None, "provisional")
    mono = next(iter(e0.terms))
    a_val = -v0.terms.get(mono, Scalar(0)) / e0.terms[mono]
    ok = all((res.get(k, DiffPoly()) + extra.get(k, DiffPoly()).scale(a_val)).is_zero()
             for k in set(res) | set(extra))
    if ok:
        return SeedReport(res, a_val, "consistent-with-constant")
    return SeedReport(res, None, "provisional")


# -- tables -------------------------------------------------------------------------------------

@dataclass
class HierarchyTable:
    family: CouplingFamily
    lax: LaxPair
    max_order: int
    entries: dict                       # Symbol -> DiffPoly
    seed_report: SeedReport
    residuals: dict = field(default_factory=dict)   # order -> residual dict

    def get(self, letter: str, slot: int, order: int) -> DiffPoly:
        return self.entries[Symbol(letter, slot, order)]

    @property
    def size(self) -> int:
        return self.family.size

    def consistent(self) -> bool:
        return not any(self.residuals.values())


def relation_set(family: CouplingFamily, max_order: int, lp: LaxPair | None = None):
    """Assemble with two spare orders so that every relation used is complete."""
    big = assemble(family, max_order + 2, lp.template if lp else None)
    rels = relations(big)
    keep = {k: f for k, f in rels.items() if f.max_order() <= max_order}
    return big, keep


def solve_hierarchy(family: CouplingFamily, max_order: int, seeds: dict | None = None,
                    template=None) -> HierarchyTable:
    lp = assemble(family, max_order, template)
    _, rels = relation_set(family, max_order, lp)
    seeds = dict(seeds) if seeds is not None else default_seeds(lp)
    report = check_seeds(lp, rels, seeds)
    env = dict(seeds)
    residuals = {}
    for m in range(1, max_order + 1):
        new = {Symbol(L, k, m) for L in "ABC" for k in range(1, family.size + 1)}
        vals, res = solve_block(rels, env, new, DiffPoly())
        if "missing" in res:
            raise SolveError(f"order {m}: could not determine {sorted(map(str, res['missing']))}")
        env.update(vals)
        residuals[m] = res
    return HierarchyTable(family, lp, max_order, env, report, residuals)


__all__ = ["SolveError", "solve_block", "solve_hierarchy", "HierarchyTable", "SeedReport",
           "check_seeds", "default_seeds", "relation_set", "usable_relations", "I"]
