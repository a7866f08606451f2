"""Evolution equations from the truncated time part V^(n) = (lambda^n V)_+ + Delta_n.

The flow is read off the zero-curvature relation at the grades of the
potentials in U; every other grade must vanish identically, which is
reported as a truncation residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diffring import DiffPoly, to_text
from ..laxzcc import LinearForm, Symbol, project_generators, spectral_part, zero_curvature_components
from ..loopalg import AlgebraElement, Generator
from .solver import HierarchyTable, SolveError


ASSUMPTIONS = ("Dinv-zero-constant", "alpha-abelian")


@dataclass
class PDESystem:
    family: str
    params: dict
    order: int
    equations: list                     # [(lhs, DiffPoly)]
    assumptions: list = field(default_factory=lambda: list(ASSUMPTIONS))
    notes: list = field(default_factory=list)

    def rhs(self, lhs: str) -> DiffPoly:
        for name, r in self.equations:
            if name == lhs:
                return r
        raise KeyError(lhs)

    @property
    def size(self) -> int:
        return len(self.equations) // 2

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "params": dict(self.params),
            "order": self.order,
            "equations": [{"lhs": lhs, "rhs": to_text(r)} for lhs, r in self.equations],
            "assumptions": list(self.assumptions),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PDESystem":
        from ..diffring import parse_diffpoly
        eqs = [(e["lhs"], parse_diffpoly(e["rhs"])) for e in obj["equations"]]
        return cls(obj["family"], dict(obj.get("params", {})), int(obj["order"]), eqs,
                   list(obj.get("assumptions", ASSUMPTIONS)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PDESystem):
            return NotImplemented
        return (self.family, self.params, self.order, self.equations, self.assumptions) == \
            (other.family, other.params, other.order, other.equations, other.assumptions)


def drop_alpha_zero(template) -> bool:
    """Diagonal modification: the KN grading leaves an alpha(0) term that must be removed."""
    return template.name == "kaup-newell"


def truncated_v(ht: HierarchyTable, n: int, spectral_constant=None) -> list:
    """Symbolic V^(n) per slot, as linear forms in the table symbols."""
    lp = ht.lax
    t = lp.template
    shift = t.grade_step * n
    out = []
    for k in range(lp.size):
        el = AlgebraElement()
        for m in range(n + 1):
            for letter, gen in t.v_generators(m).items():
                deg = gen.degree + shift
                if deg < 0:
                    continue
                if deg == 0 and gen.name == "alpha" and drop_alpha_zero(t):
                    continue
                el = el + AlgebraElement.single(LinearForm.symbol(Symbol(letter, k + 1, m)),
                                                Generator(gen.name, deg))
        out.append(el)
    if spectral_constant:
        u0 = spectral_part(t, lp.family)
        for k in range(lp.size):
            for g, c in u0[k].terms.items():
                out[k] = out[k] + AlgebraElement.single(
                    LinearForm.constant(c.scale(spectral_constant)), Generator(g.name, g.degree + shift))
    return out


def emit_pde_system(ht: HierarchyTable, n: int) -> PDESystem:
    """Evolution equations of the n-th flow."""
    if n > ht.max_order or n < 0:
        raise SolveError(f"flow {n} needs table order {n}; table has {ht.max_order}")
    lp = ht.lax
    a = ht.seed_report.spectral_constant
    Vn = truncated_v(ht, n, a)
    rels = project_generators(zero_curvature_components(lp, V=Vn, with_time=True))
    d = lp.template.field_degree
    eqs = []
    notes = []
    for k in range(1, lp.size + 1):
        for sym, gen in (("q", "beta1"), ("r", "beta2")):
            key = (k, Generator(gen, d))
            f = rels.get(key, LinearForm())
            tsym = Symbol(sym + "t", k)
            coef = f.terms.get((tsym, 0))
            if coef is None or coef != DiffPoly.const(1):
                raise SolveError(f"relation {key} does not carry {sym}{k}_t with unit coefficient")
            rest = LinearForm({kk: v for kk, v in f.terms.items() if kk != (tsym, 0)}, f.const)
            eqs.append((f"{sym}{k}_t", -rest.evaluate(ht.entries)))
    for key, f in rels.items():
        if key[1].degree == d and key[1].name != "alpha":
            continue
        val = f.evaluate(ht.entries)
        if not val.is_zero():
            notes.append(f"truncation residual at slot {key[0]}, {key[1]}: {to_text(val)}")
    fam = ht.family
    return PDESystem(fam.kind, dict(fam.params), n, eqs, notes=notes)


@dataclass
class SeedConstantReport:
    """Outcome of fixing a in A_1^(0) = a for the Kaup-Newell seeds."""
    value: object            # Scalar, or None when no value works
    enters_flow: bool
    detail: str

    def describe(self) -> str:
        return self.detail


def fix_seed_constant(family, flow: int, reference: dict | None = None) -> SeedConstantReport:
    """Fix a by matching the emitted flow to reference right-hand sides.

    The flow is affine in a; it is emitted at a = 0 and a = 1 and the
    difference decides.  When a drops out, a = 0 is kept.
    """
    from ..diffring import DiffPoly
    from ..exactnum import Scalar
    from ..laxzcc import assemble
    from .solver import default_seeds, solve_hierarchy
    lp = assemble(family, flow)
    flows = []
    for a in (0, 1):
        seeds = default_seeds(lp)
        seeds[Symbol("A", 1, 0)] = DiffPoly.const(a)
        flows.append(emit_pde_system(solve_hierarchy(family, flow, seeds=seeds), flow))
    f0, f1 = flows
    slope = {lhs: f1.rhs(lhs) - r for lhs, r in f0.equations}
    if all(v.is_zero() for v in slope.values()):
        return SeedConstantReport(Scalar(0), False,
                                  f"A1^(0) does not enter flow {flow}; a = 0 kept")
    if not reference:
        return SeedConstantReport(None, True, f"A1^(0) enters flow {flow}; no reference to fix it")
    value = None
    for lhs, ref in reference.items():
        d = slope.get(lhs)
        if d is None or d.is_zero():
            continue
        gap = ref - f0.rhs(lhs)
        mono = next(iter(d.terms))
        cand = gap.terms.get(mono, Scalar(0)) / d.terms[mono]
        if (gap - d.scale(cand)).is_zero() and (value is None or value == cand):
            value = cand
        else:
            return SeedConstantReport(None, True, f"no single a matches {lhs}")
    return SeedConstantReport(value, True, f"a = {value} fixed by matching flow {flow}")


def flow_for_hamiltonian(template, m: int) -> int:
    """Flow index whose gradient order matches H_m."""
    return m - 1 if template.name == "akns" else m + 1


__all__ = ["PDESystem", "emit_pde_system", "fix_seed_constant", "SeedConstantReport", "truncated_v", "flow_for_hamiltonian", "ASSUMPTIONS"]
