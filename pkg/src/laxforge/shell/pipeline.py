"""assemble -> components -> solve -> extract -> hamiltonian -> fit -> diff."""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import hamilton
from ..diffring import to_text
from ..exactnum import format_scalar
from ..hierarchy import (
    emit_pde_system,
    extract_recursion_operator,
    check_recursion,
    flow_for_hamiltonian,
    solve_hierarchy,
)
from ..hierarchy.flows import ASSUMPTIONS, PDESystem
from ..hierarchy.reference import (
    APPENDIX_FILES,
    appendix_report,
    components_report,
    derived_components,
    family_key,
    flow_report,
)
from ..laxzcc import assemble, check_against_brute_force, format_linear_form
from ..matkit import build_family, closure_table, format_closure_table, verify_family_axioms
from .config import PipelineConfig

EXIT_OK, EXIT_INCONSISTENT, EXIT_USAGE, EXIT_REFERENCE = 0, 1, 2, 3


class PipelineError(RuntimeError):
    def __init__(self, module: str, message: str):
        super().__init__(f"[{module}] {message}")
        self.module = module
        self.message = message


def bracket_text(bs) -> str:
    parts = []
    for (a, b), c in sorted(bs.items()):
        t = format_scalar(c)
        sign = "-" if t.startswith("-") else "+"
        mag = t.lstrip("-")
        parts.append(f"{sign} {'' if mag == '1' else mag + '*'}[U{a},V{b}]")
    if not parts:
        return "0"
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else "-" + s[2:]


@dataclass
class DerivationReport:
    family: str
    params: dict
    order: int
    m: int
    assumptions: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)      # section -> canonical text
    pde: dict | None = None                             # PDESystem JSON
    checks: dict = field(default_factory=dict)         # self-consistency gate -> bool
    diffs: list = field(default_factory=list)          # reference-diff sections
    errors: list = field(default_factory=list)         # [{"module", "message"}]

    def assume(self, text: str):
        if text not in self.assumptions:
            self.assumptions.append(text)

    @property
    def self_consistent(self) -> bool:
        return not self.errors and all(self.checks.values())

    @property
    def reference_mismatches(self) -> int:
        return sum(1 for d in self.diffs if d["verdict"] != "agree")

    @property
    def exit_code(self) -> int:
        if not self.self_consistent:
            return EXIT_INCONSISTENT
        return EXIT_REFERENCE if self.reference_mismatches else EXIT_OK

    def pde_system(self) -> PDESystem | None:
        return None if self.pde is None else PDESystem.from_json(self.pde)

    def to_json(self) -> dict:
        return {
            "family": self.family, "params": dict(self.params), "order": self.order, "m": self.m,
            "assumptions": list(self.assumptions), "artifacts": [[k, v] for k, v in self.artifacts.items()],
            "pde": self.pde, "checks": [[k, v] for k, v in self.checks.items()], "diffs": list(self.diffs), "errors": list(self.errors),
            "exit_code": self.exit_code,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DerivationReport":
        return cls(obj["family"], dict(obj["params"]), obj["order"], obj["m"], list(obj["assumptions"]),
                   {k: v for k, v in obj["artifacts"]}, obj["pde"], {k: v for k, v in obj["checks"]}, list(obj["diffs"]),
                   list(obj["errors"]))


def _diff_section(name: str, report) -> dict:
    """Verdict: agree, documented (listed printing irregularity) or undocumented.

    Sections without a list of known irregularities use agree / differs.
    """
    if report.is_empty():
        verdict = "agree"
    else:
        verdict = "undocumented" if report.undocumented() else "documented"
    return {"name": name, "verdict": verdict, "agreement": round(report.agreement, 6),
            "text": report.to_text(), "report": report.to_json()}


def _plain_diff(name: str, agree: bool, text: str) -> dict:
    return {"name": name, "verdict": "agree" if agree else "differs",
            "agreement": 1.0 if agree else 0.0, "text": text, "report": None}


PRINTED_GAMMA = {"nilpotent": -2, "hadamard": -2}


class _Stage:
    def __init__(self, rep: DerivationReport, module: str):
        self.rep = rep
        self.module = module

    def __enter__(self):
        return self

    def __exit__(self, et, ev, tb):
        if ev is None:
            return False
        if isinstance(ev, (KeyboardInterrupt, SystemExit)):
            return False
        self.rep.errors.append({"module": self.module, "message": f"{type(ev).__name__}: {ev}"})
        return True


def run_pipeline(config: PipelineConfig) -> DerivationReport:
    fam_params = config.family_kwargs
    rep = DerivationReport(config.family, fam_params, config.order, config.m)
    for a in ASSUMPTIONS:
        rep.assume(a)

    with _Stage(rep, "matkit"):
        fam = build_family(config.family, **fam_params)
        ax = verify_family_axioms(fam)
        rep.checks["family axioms"] = ax.passed
        rep.artifacts["closure table"] = format_closure_table(closure_table(fam))
    if rep.errors:
        return rep

    with _Stage(rep, "laxzcc"):
        lp = assemble(fam, 2)
        rep.checks["zero curvature brute force"] = not check_against_brute_force(lp)
        comps = derived_components(fam)
        rep.artifacts["component equations"] = "\n".join(
            f"slot {k.rsplit('slot', 1)[1]}: U_t - V_x + {bracket_text(v)} = 0" for k, v in comps.items())
        rep.diffs.append(_diff_section("component equations", components_report(fam)))

    ht = None
    template = None
    with _Stage(rep, "hierarchy"):
        template = assemble(fam, 0).template
        table_order = max(config.order, config.m + 1, flow_for_hamiltonian(template, config.m), 2)
        seeds = None
        if config.seeds is not None:
            from ..hierarchy import default_seeds
            seeds = default_seeds(assemble(fam, table_order))
            seeds.update(config.seeds)
            rep.assume("seeds overridden from seed file")
        ht = solve_hierarchy(fam, table_order, seeds=seeds)
        rep.checks["hierarchy residuals vanish"] = ht.consistent()
        sr = ht.seed_report
        rep.artifacts["seeds"] = sr.describe()
        if sr.status == "provisional":
            rep.assume("seed normalization provisional (order-0 relations not satisfied exactly)")
        elif sr.status == "consistent-with-constant":
            rep.assume(f"spectral constant a = {format_scalar(sr.spectral_constant)} added to V")
        if template.name == "kaup-newell":
            rep.assume("A1^(0) = 0 (does not enter the flows)")
            rep.assume("alpha(0) term dropped from the truncated time part")
        rep.artifacts["hierarchy table"] = "\n".join(
            f"{s} = {to_text(v)}" for s, v in sorted(ht.entries.items()) if s.letter in "ABC")

    if ht is None:
        return rep

    phi = None
    with _Stage(rep, "recursion"):
        phi = extract_recursion_operator(fam)
        bad = {mm: v for mm, v in check_recursion(phi, ht).items() if v}
        rep.checks["recursion operator maps stacks"] = not bad
        rep.artifacts["recursion operator"] = phi.to_text()

    with _Stage(rep, "flows"):
        pde = emit_pde_system(ht, config.order)
        rep.pde = pde.to_json()
        rep.artifacts["pde system"] = "\n".join(f"{lhs} = {to_text(r)}" for lhs, r in pde.equations)
        if pde.notes:
            rep.artifacts["truncation notes"] = "\n".join(pde.notes)
        fr = flow_report(pde)
        if fr is not None:
            rep.diffs.append(_diff_section(f"flow {config.order}", fr))

    if config.family in APPENDIX_FILES and phi is not None:
        with _Stage(rep, "reference"):
            ar = appendix_report(config.family, phi, ht if ht.max_order >= 3 else None)
            rep.checks["appendix self-consistency"] = ar.self_consistent
            rep.diffs.append(_diff_section("recursion operator appendix", ar))

    with _Stage(rep, "hamilton"):
        _hamiltonian_stage(rep, fam, ht, template, config)
    return rep


def _hamiltonian_stage(rep, fam, ht, template, config):
    m = config.m
    g = hamilton.solve_gamma(ht, config.transpose)
    rep.assume("inner product " + ("tr(M_j^T M_k)" if g.transpose else "tr(M_j M_k)"))
    rep.artifacts["gamma"] = g.describe()
    printed = PRINTED_GAMMA.get(fam.kind)
    if printed is not None:
        ok = g.consistent and g.gamma == printed
        rep.diffs.append(_plain_diff("gamma", ok, f"derived: {g.describe()}; printed gamma = {printed}"))
    shown = hamilton.displayed_hamiltonian(fam, m)
    H = None
    if g.consistent:
        rec = hamilton.hamiltonian(ht, g.gamma, m, g.transpose)
        rep.checks[f"H_{m} gradient matches trace identity"] = rec.gradient_ok
        rep.artifacts[f"H_{m}"] = rec.text()
        rep.artifacts[f"H_{m} density"] = to_text(rec.density)
        cmp = hamilton.compare_forms(rec.form, shown)
        rep.diffs.append(_plain_diff(f"H_{m} closed form", cmp.exact, cmp.detail))
        H = rec.density
    else:
        rep.artifacts[f"H_{m}"] = "not derived (no consistent gamma); printed form used for the fit: " + \
            format_linear_form(shown)
        H = shown.evaluate(ht.entries)
        rep.assume(f"printed H_{m} used for the symplectic fit")
    flow = flow_for_hamiltonian(template, m)
    if flow < 0 or flow > ht.max_order:
        rep.artifacts["symplectic form"] = f"flow {flow} unavailable"
        return
    pde = emit_pde_system(ht, flow)
    fits = hamilton.fit_both(pde, H)
    conv = hamilton.resolve_convention(fits)
    lines = [f"H_{m} against flow {flow}"] + [f.describe() for f in fits.values()]
    lines.append(f"resolved convention: J = {conv}" if conv else "no convention verifies with invertible W")
    best = fits[conv] if conv else next((f for f in fits.values() if f.W is not None), None)
    if best is not None and best.W is not None:
        lines.append("W = " + str(best.W))
        if best.J is not None:
            lines.append("J = " + str(best.J))
    rep.artifacts["symplectic form"] = "\n".join(lines)
    shown_w = hamilton.displayed_w(fam)
    if best is None:
        rep.diffs.append(_plain_diff("symplectic form", False,
                                     f"no constant W reproduces flow {flow} (printed display line {shown_w.line})"))
    else:
        md = hamilton.diff_displayed(best, shown_w)
        rep.diffs.append(_plain_diff("symplectic form", md.exact and best.status == "verified",
                                     f"{best.describe()}; {md.compared} display: {md.detail}"))


__all__ = ["DerivationReport", "run_pipeline", "PipelineError", "bracket_text",
           "EXIT_OK", "EXIT_INCONSISTENT", "EXIT_USAGE", "EXIT_REFERENCE"]
