"""Oracle comparison against shipped reference texts.

Reference files hold one ``name = expression`` entry per line, preceded by a
``# line N`` provenance comment.  Flow entries use the DiffPoly grammar;
operator entries add ``D`` (d/dx) and ``Txyab`` (x_a Dinv o y_b).

The comparison is per term and exact.  Derived results are never modified:
every mismatch is classified and reported, and the engine output stays the
authority.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from ..diffring import DiffPoly, Operator, ParseError, parse_diffpoly, to_text
from ..diffring.poly import _mono
from ..exactnum import Scalar, format_scalar

REFDIR_ENV = "LAXFORGE_REFDIR"


# -- locating and reading reference files ------------------------------------------------------

def reference_path(name: str) -> Path:
    """LAXFORGE_REFDIR wins over the packaged copy."""
    base = os.environ.get(REFDIR_ENV)
    if base:
        p = Path(base) / name
        if p.exists():
            return p
    return Path(str(resources.files("laxforge") / "data" / name))


def read_reference(name: str) -> str:
    return reference_path(name).read_text()


@dataclass
class ReferenceEntry:
    name: str
    text: str
    line: int | None      # provenance line, when given


def parse_reference_lines(text: str) -> list:
    out = []
    line = None
    for raw in text.splitlines():
        s = raw.strip()
        if not s:
            continue
        if s.startswith("#"):
            m = re.match(r"#\s*line\s+(\d+)", s)
            if m:
                line = int(m.group(1))
            continue
        if "=" not in s:
            raise ParseError(f"reference line without '=': {s!r}")
        name, expr = (t.strip() for t in s.split("=", 1))
        out.append(ReferenceEntry(name, expr, line))
        line = None
    return out


def reference_header(text: str, key: str) -> str | None:
    """Value of a ``# key: value`` header comment."""
    for raw in text.splitlines():
        m = re.match(rf"#\s*{key}:\s*(.*)", raw.strip())
        if m:
            return m.group(1).strip()
    return None


def known_diffs() -> dict:
    """{(file, entry): set of categories} of verified reference discrepancies."""
    out = {}
    for raw in read_reference("known_diffs.txt").splitlines():
        if not raw.strip() or raw.startswith("#"):
            continue
        fname, entry, cats = (t.strip() for t in raw.split("|")[:3])
        out[(fname, entry)] = set(cats.split(","))
    return out


# -- operator-entry grammar ---------------------------------------------------------------------

_OP_TOKEN = re.compile(r"\s*(?:T([qr])([qr])(\d)(\d)|(D)|(\d+)|(.))")


def _op_tokens(s: str) -> list:
    toks = []
    pos = 0
    s = s.strip()
    while pos < len(s):
        m = _OP_TOKEN.match(s, pos)
        pos = m.end()
        if m.group(1):
            toks.append(("T", (m.group(1), int(m.group(3)), m.group(2), int(m.group(4)))))
        elif m.group(5):
            toks.append(("D", None))
        elif m.group(6):
            toks.append(("INT", int(m.group(6))))
        else:
            ch = m.group(7)
            if ch.isspace():
                continue
            if ch not in "+-*/()":
                raise ParseError(f"unexpected character {ch!r} in operator entry {s!r}")
            toks.append((ch, None))
    toks.append(("END", None))
    return toks


class _OpParser:
    """Values are Scalars (pure numbers) or Operators."""

    def __init__(self, text: str):
        self.text = text
        self.toks = _op_tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind}, got {tok[0]} in {self.text!r}")
        self.i += 1
        return tok

    def expr(self):
        out = None
        while True:
            sign = 1
            while self.peek() in "+-" and self.peek() != "END":
                if self.take()[0] == "-":
                    sign = -sign
            t = self.term()
            t = t if sign > 0 else _neg(t)
            out = t if out is None else _add(out, t)
            if self.peek() not in ("+", "-"):
                return out

    def term(self):
        out = self.atom()
        while self.peek() in ("*", "/"):
            if self.take()[0] == "*":
                out = _mul(out, self.atom())
            else:
                out = _mul(out, Scalar(Fraction(1, self.take("INT")[1])))
        return out

    def atom(self):
        kind, val = self.take()
        if kind == "INT":
            return Scalar(val)
        if kind == "D":
            return Operator.d()
        if kind == "T":
            x, a, y, b = val
            return Operator.f_dinv_g(DiffPoly.var(x, a), DiffPoly.var(y, b))
        if kind == "(":
            inner = self.expr()
            self.take(")")
            return inner
        raise ParseError(f"unexpected token {kind} in {self.text!r}")


def _as_op(v) -> Operator:
    return v if isinstance(v, Operator) else Operator.mult(DiffPoly.const(v))


def _neg(v):
    return -v


def _add(a, b):
    if isinstance(a, Scalar) and isinstance(b, Scalar):
        return a + b
    return _as_op(a) + _as_op(b)


def _mul(a, b):
    if isinstance(a, Operator) and isinstance(b, Operator):
        raise ParseError("products of operators are outside the entry grammar")
    if isinstance(a, Operator):
        return a.scale(b)
    if isinstance(b, Operator):
        return b.scale(a)
    return a * b


def parse_operator(text: str) -> Operator:
    p = _OpParser(text)
    out = p.expr()
    p.take("END")
    return _as_op(out)


# -- bracket sums of the component equations -----------------------------------------------------

class BracketSum(dict):
    """{(a, b): coefficient} standing for sum c*[U_a, V_b] (1-based slots)."""


_BR_TERM = re.compile(r"\s*([+-]?)\s*(?:(\d+)\s*\*\s*)?\[U(\d+),V(\d+)\]")


def parse_brackets(text: str) -> BracketSum:
    out = BracketSum()
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _BR_TERM.match(text, pos)
        if not m or (pos and not m.group(1)):
            raise ParseError(f"malformed bracket sum {text!r} at {pos}")
        c = Scalar(int(m.group(2) or 1) * (-1 if m.group(1) == "-" else 1))
        key = (int(m.group(3)), int(m.group(4)))
        out[key] = out.get(key, Scalar(0)) + c
        if not out[key]:
            del out[key]
        pos = m.end()
    return out


def family_key(family) -> str:
    kind = family.kind
    if kind == "nilpotent":
        return f"nilpotent-p{family.params['p']}-{family.params.get('sign_variant', 'plain')}"
    if kind == "idempotent":
        return f"idempotent-n{family.params['n']}"
    return kind


def derived_components(family) -> dict:
    """{"<key>/slot<c>": BracketSum} read off the closure table."""
    from ..matkit import closure_table
    t = closure_table(family)
    n = family.size
    out = {f"{family_key(family)}/slot{c + 1}": BracketSum() for c in range(n)}
    for a in range(n):
        for b in range(n):
            for c, v in t.slot_coeff(a, b).items():
                out[f"{family_key(family)}/slot{c + 1}"][(a + 1, b + 1)] = v
    return out


def components_report(family) -> DiffReport:
    key = family_key(family)
    ref = "\n".join(l for l in read_reference("components.txt").splitlines()
                    if l.startswith("#") or l.split("/", 1)[0].strip() == key)
    return diff_against_reference(derived_components(family), ref,
                                  title=f"{key} component equations", kind="brackets",
                                  source="components.txt")


# -- term decomposition -------------------------------------------------------------------------

_COMPONENT = re.compile(r"([qrUV])\d+")


def _skeleton(text: str) -> str:
    """Term text with component labels erased, used to spot relabelings."""
    return _COMPONENT.sub("u", text)


def term_dict(obj) -> dict:
    """{key: (coefficient, monomial text)} for a DiffPoly or Operator."""
    out = {}
    if isinstance(obj, BracketSum):
        for (a, b), c in obj.items():
            out[("B", a, b)] = (c, f"[U{a},V{b}]")
        return out
    if isinstance(obj, DiffPoly):
        for k, c in obj.terms.items():
            out[("P", k)] = (c, to_text(_mono(k)))
        return out
    for a, f in obj.local.items():
        d = "" if a == 0 else ("D" if a == 1 else f"D^{a}")
        for k, c in f.terms.items():
            mono = to_text(_mono(k))
            txt = d if mono == "1" and d else (f"{mono}*{d}" if d else mono)
            out[("L", a, k)] = (c, txt)
    for (kf, kg), c in obj.nonlocal_.items():
        out[("N", kf, kg)] = (c, f"{to_text(_mono(kf))}*Dinv*{to_text(_mono(kg))}")
    return out


def _fmt(c: Scalar) -> str:
    return format_scalar(c)


# -- report -------------------------------------------------------------------------------------

CATEGORIES = ("sign", "index", "index-sign", "coefficient", "missing", "extra")


@dataclass
class TermDiff:
    category: str
    detail: str


@dataclass
class EntryDiff:
    name: str
    line: int | None
    derived: str
    reference: str
    terms: list = field(default_factory=list)   # [TermDiff]

    @property
    def categories(self) -> set:
        return {t.category for t in self.terms}


@dataclass
class DiffReport:
    title: str
    matched: list = field(default_factory=list)         # entry names
    mismatched: list = field(default_factory=list)      # [EntryDiff]
    unmatched_reference: list = field(default_factory=list)  # names with no derived counterpart
    unmatched_derived: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    self_consistent: bool = True
    source: str = ""        # reference file name, used to look up documented diffs

    def undocumented(self) -> list:
        """Mismatches not listed (with the same categories) in known_diffs.txt."""
        known = known_diffs()
        return [e for e in self.mismatched
                if known.get((self.source, e.name)) != e.categories] + \
            [EntryDiff(n, None, "", "") for n in self.unmatched_reference + self.unmatched_derived]

    @property
    def total(self) -> int:
        return len(self.matched) + len(self.mismatched) + len(self.unmatched_reference)

    @property
    def agreement(self) -> float:
        return len(self.matched) / self.total if self.total else 1.0

    def is_empty(self) -> bool:
        return not (self.mismatched or self.unmatched_reference or self.unmatched_derived)

    def category_counts(self) -> dict:
        out = {c: 0 for c in CATEGORIES}
        for e in self.mismatched:
            for t in e.terms:
                out[t.category] += 1
        return out

    def to_text(self) -> str:
        lines = [f"{self.title}: {len(self.matched)}/{self.total} entries agree exactly "
                 f"({100 * self.agreement:.1f}%)"]
        counts = {k: v for k, v in self.category_counts().items() if v}
        if counts:
            lines.append("term differences: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
        for e in self.mismatched:
            where = f" (line {e.line})" if e.line is not None else ""
            lines.append(f"  {e.name}{where}:")
            for t in e.terms:
                lines.append(f"    [{t.category}] {t.detail}")
        for n in self.unmatched_reference:
            lines.append(f"  {n}: no derived counterpart")
        for n in self.unmatched_derived:
            lines.append(f"  {n}: absent from the reference")
        lines += self.notes
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "title": self.title,
            "matched": list(self.matched),
            "agreement": self.agreement,
            "mismatched": [{"name": e.name, "line": e.line, "derived": e.derived, "reference": e.reference,
                            "terms": [{"category": t.category, "detail": t.detail} for t in e.terms]}
                           for e in self.mismatched],
            "unmatched_reference": list(self.unmatched_reference),
            "unmatched_derived": list(self.unmatched_derived),
            "notes": list(self.notes),
        }


def classify(derived, reference) -> list:
    """Per-term classification of reference against derived; [] when equal."""
    dd = term_dict(derived)
    rd = term_dict(reference)
    out = []
    d_only = {}
    r_only = {}
    for k in set(dd) | set(rd):
        if k in dd and k in rd:
            cd, txt = dd[k]
            cr, _ = rd[k]
            if cd == cr:
                continue
            if cd == -cr:
                out.append(TermDiff("sign", f"{txt}: derived {_fmt(cd)}, printed {_fmt(cr)}"))
            else:
                out.append(TermDiff("coefficient", f"{txt}: derived {_fmt(cd)}, printed {_fmt(cr)}"))
        elif k in dd:
            d_only[k] = dd[k]
        else:
            r_only[k] = rd[k]
    # pair leftovers that differ only by component labels
    for kr, (cr, tr) in sorted(r_only.items(), key=lambda kv: kv[1][1]):
        best = None
        for kd, (cd, td) in sorted(d_only.items(), key=lambda kv: kv[1][1]):
            if _skeleton(td) != _skeleton(tr):
                continue
            if cd == cr:
                best = (kd, "index")
                break
            if cd == -cr and best is None:
                best = (kd, "index-sign")
        if best is not None:
            kd, cat = best
            cd, td = d_only.pop(kd)
            out.append(TermDiff(cat, f"printed {_fmt(cr)}*{tr}, derived {_fmt(cd)}*{td}"))
        else:
            out.append(TermDiff("extra", f"printed {_fmt(cr)}*{tr} has no derived counterpart"))
    for kd, (cd, td) in sorted(d_only.items(), key=lambda kv: kv[1][1]):
        out.append(TermDiff("missing", f"derived {_fmt(cd)}*{td} absent from the printed entry"))
    return out


def _render(obj) -> str:
    if isinstance(obj, BracketSum):
        return " + ".join(f"{_fmt(c)}*[U{a},V{b}]" for (a, b), c in sorted(obj.items())) or "0"
    if isinstance(obj, DiffPoly):
        return to_text(obj)
    from ..diffring import operator_text
    return operator_text(obj)


def diff_against_reference(derived: dict, reference_text: str, title: str = "reference",
                           kind: str = "poly", source: str = "") -> DiffReport:
    """Compare {name: DiffPoly | Operator} with a reference text.

    kind selects the entry grammar: "poly" for DiffPoly expressions,
    "operator" for recursion-operator entries, "brackets" for component sums.
    """
    parse = {"poly": parse_diffpoly, "operator": parse_operator, "brackets": parse_brackets}[kind]
    report = DiffReport(title, source=source)
    seen = set()
    for ent in parse_reference_lines(reference_text):
        ref = parse(ent.text)
        seen.add(ent.name)
        if ent.name not in derived:
            report.unmatched_reference.append(ent.name)
            continue
        d = derived[ent.name]
        terms = classify(d, ref)
        if terms:
            report.mismatched.append(EntryDiff(ent.name, ent.line, _render(d), _render(ref), terms))
        else:
            report.matched.append(ent.name)
    report.unmatched_derived = [n for n in derived if n not in seen]
    return report


# -- convenience wrappers -------------------------------------------------------------------------

APPENDIX_FILES = {"hadamard": ("recursion_hadamard.txt", "M"), "kidempotent": ("recursion_kidempotent.txt", "N")}
FLOW_FILES = {("nilpotent", 2): ("flows_nilpotent_p2.txt", 2), ("hadamard", None): ("flows_hadamard.txt", 1)}


def operator_entries(phi, prefix: str) -> dict:
    return {f"{prefix}{i}{j}": phi.entry(i, j)
            for i in range(1, phi.size + 1) for j in range(1, phi.size + 1)}


def printed_operator(kind: str):
    """The shipped operator entries assembled into a RecursionOperator."""
    from ..matkit import build_family
    from .recursion import RecursionOperator
    fname, prefix = APPENDIX_FILES[kind]
    fam = build_family(kind)
    refs = {e.name: parse_operator(e.text) for e in parse_reference_lines(read_reference(fname))}
    w = 2 * fam.size
    return RecursionOperator(fam, [[refs.get(f"{prefix}{i}{j}", Operator()) for j in range(1, w + 1)]
                                   for i in range(1, w + 1)])


def appendix_report(kind: str, phi=None, ht=None) -> DiffReport:
    """Entry diff plus a check of the printed operator against the derived stacks."""
    from ..matkit import build_family
    from .recursion import check_recursion, extract_recursion_operator, omega_labels
    from .solver import solve_hierarchy
    fname, prefix = APPENDIX_FILES[kind]
    fam = build_family(kind)
    if phi is None:
        phi = extract_recursion_operator(fam)
    report = diff_against_reference(operator_entries(phi, prefix), read_reference(fname),
                                    title=f"{kind} recursion operator", kind="operator", source=fname)
    ht = ht or solve_hierarchy(fam, 3)
    labels = omega_labels(fam.size)
    derived_bad = {m: v for m, v in check_recursion(phi, ht).items() if v}
    printed_bad = {m: v for m, v in check_recursion(printed_operator(kind), ht).items() if v}
    report.notes.append("derived operator maps every stored stack to the next one"
                        if not derived_bad else f"derived operator FAILS on orders {sorted(derived_bad)}")
    if printed_bad:
        rows = sorted({labels[i] for v in printed_bad.values() for i in v})
        report.notes.append(f"printed operator fails to reproduce the derived stacks in rows {', '.join(rows)}")
    else:
        report.notes.append("printed operator reproduces the derived stacks")
    report.self_consistent = not derived_bad
    return report


def flow_reference_key(kind: str, params: dict):
    key = (kind, params.get("p"))
    return key if key in FLOW_FILES else None


def flow_report(system) -> DiffReport | None:
    """Diff a PDESystem against the shipped equations for its family, if any."""
    key = flow_reference_key(system.family, system.params)
    if key is None:
        return None
    fname, order = FLOW_FILES[key]
    if system.order != order:
        return None
    derived = dict(system.equations)
    return diff_against_reference(derived, read_reference(fname),
                                  title=f"{system.family} flow {order}", kind="poly", source=fname)


__all__ = ["ReferenceEntry", "parse_reference_lines", "parse_operator", "term_dict", "classify",
           "TermDiff", "EntryDiff", "DiffReport", "diff_against_reference", "reference_path",
           "read_reference", "appendix_report", "printed_operator", "flow_report", "operator_entries", "REFDIR_ENV",
           "APPENDIX_FILES", "FLOW_FILES", "CATEGORIES", "BracketSum", "parse_brackets", "derived_components",
           "components_report", "family_key", "known_diffs"]
