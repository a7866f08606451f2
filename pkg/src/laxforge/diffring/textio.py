"""Canonical text form, parser and LaTeX emitter for DiffPoly.

Text grammar (whitespace ignored)::

    expr   := ['-'] term (('+' | '-') term)*
    term   := factor (('*' factor) | ('/' int))*
    factor := atom ['^' int]
    atom   := int | 'i' | 'sqrt7' | 'L' | field | 'Dinv(' expr ')' | 'Dx(' expr ')' | '(' expr ')'
    field  := ('q' | 'r') int ['x' [int]]

``q1x2`` is the second x-derivative of q_1 and ``L`` is the spectral parameter.
``Dx(e)`` is the x-derivative of e; the emitter never produces it, but
reference data uses it to keep bracketed derivatives as printed.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..exactnum import ONE, Scalar, format_scalar
from .poly import DiffPoly, FieldVar, dinv


class ParseError(ValueError):
    pass


# -- emission ---------------------------------------------------------------

def _field_text(v: FieldVar) -> str:
    if v.xorder == 0:
        return f"{v.symbol}{v.component}"
    if v.xorder == 1:
        return f"{v.symbol}{v.component}x"
    return f"{v.symbol}{v.component}x{v.xorder}"


def _factors_text(key: tuple) -> list:
    lam, loc, nl = key
    out = []
    if lam:
        out.append("L" if lam == 1 else f"L^{lam}" if lam > 0 else f"L^({lam})")
    for v, e in loc:
        out.append(_field_text(v) + (f"^{e}" if e > 1 else ""))
    for f, e in nl:
        out.append(f"Dinv({to_text(f.integrand)})" + (f"^{e}" if e > 1 else ""))
    return out


def _split_sign(c: Scalar) -> tuple:
    """(negative?, magnitude text) with magnitude '' for a unit coefficient."""
    nz = [x for x in c.components if x]
    if len(nz) == 1:
        neg = nz[0] < 0
        mag = -c if neg else c
        s = format_scalar(mag)
        return neg, ("" if s == "1" else s)
    return False, f"({format_scalar(c)})"


def to_text(p: DiffPoly) -> str:
    if p.is_zero():
        return "0"
    pieces = []
    for key, c in p.monomials():
        neg, mag = _split_sign(c)
        facs = _factors_text(key)
        if not facs:
            body = mag or "1"
        elif mag:
            body = "*".join([mag] + facs)
        else:
            body = "*".join(facs)
        pieces.append((neg, body))
    out = ("-" if pieces[0][0] else "") + pieces[0][1]
    for neg, body in pieces[1:]:
        out += (" - " if neg else " + ") + body
    return out


def _field_latex(v: FieldVar) -> str:
    sub = f"{v.component}"
    if v.xorder:
        sub += "," + "x" * v.xorder if v.xorder <= 3 else f",{v.xorder}x"
    return f"{v.symbol}_{{{sub}}}"


def _scalar_latex(c: Scalar) -> str:
    parts = []
    for coef, unit in zip(c.components, ("", "i", "\\sqrt{7}", "i\\sqrt{7}")):
        if not coef:
            continue
        num = abs(coef)
        sign = "-" if coef < 0 else "+"
        if num.denominator != 1:
            mag = f"\\frac{{{num.numerator}}}{{{num.denominator}}}"
        else:
            mag = "" if (num == 1 and unit) else str(num.numerator)
        parts.append((sign, mag + unit))
    if not parts:
        return "0"
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        s += sign + body
    return s


def to_latex(p: DiffPoly) -> str:
    if p.is_zero():
        return "0"
    out = ""
    for idx, (key, c) in enumerate(p.monomials()):
        lam, loc, nl = key
        facs = []
        if lam:
            facs.append("\\lambda" if lam == 1 else f"\\lambda^{{{lam}}}")
        for v, e in loc:
            facs.append(_field_latex(v) + (f"^{{{e}}}" if e > 1 else ""))
        for f, e in nl:
            facs.append(f"\\partial^{{-1}}\\left({to_latex(f.integrand)}\\right)"
                        + (f"^{{{e}}}" if e > 1 else ""))
        nz = [x for x in c.components if x]
        if len(nz) == 1:
            neg = nz[0] < 0
            mag = _scalar_latex(-c if neg else c)
            if mag == "1" and facs:
                mag = ""
        else:
            neg, mag = False, f"\\left({_scalar_latex(c)}\\right)"
        body = mag + " ".join(facs) if not mag or not facs else mag + " " + " ".join(facs)
        if idx == 0:
            out = ("-" if neg else "") + body
        else:
            out += (" - " if neg else " + ") + body
    return out


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(Dinv\(|Dx\()|(sqrt7)|([qr])(\d+)(x(\d*))?|(\d+)|(.))")


def _tokenize(s: str) -> list:
    toks = []
    pos = 0
    s = s.strip()
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m or m.end() == pos:
            break
        pos = m.end()
        if m.group(1):
            toks.append(("DINV" if m.group(1) == "Dinv(" else "DX", None))
        elif m.group(2):
            toks.append(("NUM", Scalar(0, 0, 1)))
        elif m.group(3):
            order = 0
            if m.group(5):
                order = int(m.group(6)) if m.group(6) else 1
            toks.append(("FIELD", FieldVar(m.group(3), int(m.group(4)), order)))
        elif m.group(7):
            toks.append(("INT", int(m.group(7))))
        else:
            ch = m.group(8)
            if ch.isspace():
                continue
            if ch == "i":
                toks.append(("NUM", Scalar(0, 1)))
            elif ch == "L":
                toks.append(("LAM", None))
            elif ch in "+-*/^()":
                toks.append((ch, None))
            else:
                raise ParseError(f"unexpected character {ch!r} at {pos - 1}")
    toks.append(("END", None))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind}, got {tok[0]}")
        self.i += 1
        return tok

    def expr(self) -> DiffPoly:
        neg = False
        if self.peek() == "-":
            self.take()
            neg = True
        elif self.peek() == "+":
            self.take()
        out = self.term()
        if neg:
            out = -out
        while self.peek() in ("+", "-"):
            op = self.take()[0]
            t = self.term()
            out = out + t if op == "+" else out - t
        return out

    def term(self) -> DiffPoly:
        out = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()[0]
            if op == "*":
                out = out * self.factor()
            else:
                den = self.take("INT")[1]
                out = out.scale(Scalar(Fraction(1, den)))
        return out

    def factor(self) -> DiffPoly:
        base = self.atom()
        if self.peek() == "^":
            self.take()
            if self.peek() == "(":
                self.take()
                sign = -1 if self.peek() == "-" else 1
                if self.peek() in "+-":
                    self.take()
                e = sign * self.take("INT")[1]
                self.take(")")
            else:
                e = self.take("INT")[1]
            if e < 0:
                if base != DiffPoly.lam(1):
                    raise ParseError("negative powers are only allowed on L")
                return DiffPoly.lam(e)
            base = base ** e
        return base

    def atom(self) -> DiffPoly:
        kind, val = self.take()
        if kind == "INT":
            return DiffPoly.const(val)
        if kind == "NUM":
            return DiffPoly.const(val)
        if kind == "LAM":
            return DiffPoly.lam(1)
        if kind == "FIELD":
            return DiffPoly.from_fieldvar(val)
        if kind == "DINV":
            inner = self.expr()
            self.take(")")
            return dinv(inner)
        if kind == "DX":
            inner = self.expr()
            self.take(")")
            return inner.ddx()
        if kind == "(":
            inner = self.expr()
            self.take(")")
            return inner
        if kind == "-":
            return -self.factor()
        raise ParseError(f"unexpected token {kind}")


def parse_diffpoly(text: str) -> DiffPoly:
    p = _Parser(text)
    out = p.expr()
    if p.peek() != "END":
        raise ParseError(f"trailing input in {text!r}")
    return out


__all__ = ["to_text", "to_latex", "parse_diffpoly", "ParseError", "ONE"]
