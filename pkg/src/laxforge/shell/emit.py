"""Text, LaTeX and JSON emission with stable ordering."""

from __future__ import annotations

import json
import re

from ..diffring import to_latex, to_text
from ..hierarchy.flows import PDESystem
from ..hierarchy.recursion import RecursionOperator
from ..hierarchy.reference import DiffReport
from ..matkit import ClosureTable, format_closure_table
from .pipeline import DerivationReport


def _dumps(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode()


def latex_lhs(lhs: str) -> str:
    m = re.fullmatch(r"([qr])(\d+)_t", lhs)
    return f"{m.group(1)}_{{{m.group(2)}t}}" if m else lhs


def _pde_latex(pde: PDESystem) -> str:
    rows = [f"{latex_lhs(lhs)} &= {to_latex(r)}" for lhs, r in pde.equations]
    return "\\begin{align}\n" + " \\\\\n".join(rows) + "\n\\end{align}\n"


def _verbatim(title: str, body: str) -> str:
    return f"\\paragraph{{{title}}}\n\\begin{{verbatim}}\n{body}\n\\end{{verbatim}}\n"


def _report_text(rep: DerivationReport) -> str:
    params = ", ".join(f"{k}={v}" for k, v in sorted(rep.params.items()))
    out = [f"family: {rep.family}" + (f" ({params})" if params else ""),
           f"order: {rep.order}, m: {rep.m}", "", "assumptions:"]
    out += [f"  - {a}" for a in rep.assumptions]
    out += ["", "self-consistency:"]
    out += [f"  [{'ok' if v else 'FAIL'}] {k}" for k, v in rep.checks.items()]
    for e in rep.errors:
        out.append(f"  [ERROR] {e['module']}: {e['message']}")
    for name, body in rep.artifacts.items():
        out += ["", f"== {name}", body]
    out += ["", "== reference comparison"]
    for d in rep.diffs:
        out.append(f"-- {d['name']}: {d['verdict']}")
        out.append(d["text"])
    out += ["", f"exit code: {rep.exit_code}"]
    return "\n".join(out) + "\n"


def _report_latex(rep: DerivationReport) -> str:
    out = [f"\\section*{{Derivation report: {rep.family}}}"]
    out.append("\\begin{itemize}\n" + "\n".join(f"\\item \\verb|{a}|" for a in rep.assumptions) + "\n\\end{itemize}")
    pde = rep.pde_system()
    if pde is not None:
        out.append(_pde_latex(pde))
    for name, body in rep.artifacts.items():
        if name != "pde system":
            out.append(_verbatim(name, body))
    for d in rep.diffs:
        out.append(_verbatim(f"{d['name']} ({d['verdict']})", d["text"]))
    return "\n".join(out)


def emit(artifact, fmt: str = "text") -> bytes:
    if fmt not in ("text", "latex", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(artifact, DerivationReport):
        if fmt == "json":
            return _dumps(artifact.to_json())
        return (_report_text(artifact) if fmt == "text" else _report_latex(artifact)).encode()
    if isinstance(artifact, PDESystem):
        if fmt == "json":
            return _dumps(artifact.to_json())
        if fmt == "latex":
            return _pde_latex(artifact).encode()
        return ("\n".join(f"{lhs} = {to_text(r)}" for lhs, r in artifact.equations) + "\n").encode()
    if isinstance(artifact, ClosureTable):
        if fmt == "json":
            return _dumps(artifact.to_json())
        body = format_closure_table(artifact)
        return (_verbatim("closure table", body) if fmt == "latex" else body + "\n").encode()
    if isinstance(artifact, RecursionOperator):
        if fmt == "json":
            return _dumps({f"Phi{i}{j}": op for i, j, op in _ops(artifact)})
        body = artifact.to_text()
        return (_verbatim("recursion operator", body) if fmt == "latex" else body + "\n").encode()
    if isinstance(artifact, DiffReport):
        if fmt == "json":
            return _dumps(artifact.to_json())
        body = artifact.to_text()
        return (_verbatim(artifact.title, body) if fmt == "latex" else body + "\n").encode()
    raise TypeError(f"cannot emit {type(artifact).__name__}")


def _ops(phi):
    from ..diffring import operator_text
    for i, row in enumerate(phi.entries, 1):
        for j, op in enumerate(row, 1):
            yield i, j, operator_text(op)


def parse(data: bytes, kind: str):
    """Inverse of emit(..., "json") for reports and PDE systems."""
    obj = json.loads(data.decode())
    if kind == "report":
        return DerivationReport.from_json(obj)
    if kind == "pde":
        return PDESystem.from_json(obj)
    raise ValueError(f"unknown artifact kind {kind!r}")


__all__ = ["emit", "parse", "latex_lhs"]
