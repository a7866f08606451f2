"""Scalar integro-differential operators of the shape the recursion operators need.

An operator is a finite sum of local terms ``f * D^a`` and nonlocal terms
``f * Dinv o g`` (with f, g monomials).  Nonlocal terms with a derivative
after the antiderivative are integrated by parts on construction, so the
representation is canonical.
"""

from __future__ import annotations

from ..exactnum import Scalar
from .poly import DiffPoly, _mono, dinv


def _add_into(d: dict, k, v: DiffPoly | Scalar):
    cur = d.get(k)
    s = v if cur is None else cur + v
    if (isinstance(s, DiffPoly) and s.is_zero()) or (isinstance(s, Scalar) and not s):
        d.pop(k, None)
    else:
        d[k] = s


class Operator:
    """local: {a: f} meaning sum f*D^a; nonlocal: {(fkey, gkey): c} meaning c*f*Dinv o g."""

    __slots__ = ("local", "nonlocal_")

    def __init__(self, local: dict | None = None, nonlocal_: dict | None = None):
        self.local = {a: f for a, f in (local or {}).items() if not f.is_zero()}
        self.nonlocal_ = {k: c for k, c in (nonlocal_ or {}).items() if c}

    @classmethod
    def identity(cls) -> "Operator":
        return cls({0: DiffPoly.const(1)})

    @classmethod
    def zero(cls) -> "Operator":
        return cls()

    @classmethod
    def mult(cls, f: DiffPoly) -> "Operator":
        return cls({0: f})

    @classmethod
    def d(cls, n: int = 1) -> "Operator":
        return cls({n: DiffPoly.const(1)})

    @classmethod
    def f_dinv_g(cls, f: DiffPoly, g: DiffPoly, a: int = 0) -> "Operator":
        """f * Dinv o g * D^a, integrated by parts down to a = 0."""
        if a == 0:
            nl: dict = {}
            for kf, cf in f.terms.items():
                for kg, cg in g.terms.items():
                    _add_into(nl, (kf, kg), cf * cg)
            return cls({}, nl)
        # Dinv g D = g - Dinv g_x
        head = Operator.mult(f).compose_local(g, a - 1)
        return head - Operator.f_dinv_g(f, g.ddx(), a - 1)

    def compose_local(self, g: DiffPoly, a: int) -> "Operator":
        """self o (g * D^a) when self is a pure multiplication operator."""
        if self.nonlocal_ or set(self.local) - {0}:
            raise ValueError("compose_local needs a multiplication operator")
        f = self.local.get(0, DiffPoly())
        return Operator({a: f * g})

    def is_zero(self) -> bool:
        return not self.local and not self.nonlocal_

    def is_local(self) -> bool:
        return not self.nonlocal_

    def __eq__(self, other) -> bool:
        return isinstance(other, Operator) and self.local == other.local and self.nonlocal_ == other.nonlocal_

    def __hash__(self):
        return hash((tuple(sorted(self.local.items(), key=lambda kv: kv[0])),))

    def __add__(self, other: "Operator") -> "Operator":
        if isinstance(other, DiffPoly) and other.is_zero():
            return self
        loc = dict(self.local)
        for a, f in other.local.items():
            _add_into(loc, a, f)
        nl = dict(self.nonlocal_)
        for k, c in other.nonlocal_.items():
            _add_into(nl, k, c)
        return Operator(loc, nl)

    __radd__ = __add__

    def __neg__(self) -> "Operator":
        return Operator({a: -f for a, f in self.local.items()},
                        {k: -c for k, c in self.nonlocal_.items()})

    def __sub__(self, other: "Operator") -> "Operator":
        return self + (-other)

    def scale(self, c) -> "Operator":
        c = Scalar.coerce(c)
        return Operator({a: f.scale(c) for a, f in self.local.items()},
                        {k: v * c for k, v in self.nonlocal_.items()})

    def left_mul(self, h: DiffPoly) -> "Operator":
        """h o self."""
        if not isinstance(h, DiffPoly):
            return self.scale(h)
        loc = {a: h * f for a, f in self.local.items()}
        nl: dict = {}
        for (kf, kg), c in self.nonlocal_.items():
            for kh, ch in h.terms.items():
                prod = (_mono(kh) * _mono(kf))
                for kp, cp in prod.terms.items():
                    _add_into(nl, (kp, kg), c * ch * cp)
        return Operator(loc, nl)

    def __mul__(self, other):
        if isinstance(other, DiffPoly):
            return self.left_mul(other)
        return self.scale(other)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "Operator":
        return self.scale(Scalar.coerce(c).inverse())

    def ddx(self) -> "Operator":
        """D o self."""
        loc: dict = {}
        for a, f in self.local.items():
            _add_into(loc, a, f.ddx())
            _add_into(loc, a + 1, f)
        nl: dict = {}
        for (kf, kg), c in self.nonlocal_.items():
            fx = _mono(kf).ddx()
            for kp, cp in fx.terms.items():
                _add_into(nl, (kp, kg), c * cp)
            _add_into(loc, 0, (_mono(kf) * _mono(kg)).scale(c))
        return Operator(loc, nl)

    def ddx_n(self, n: int) -> "Operator":
        out = self
        for _ in range(n):
            out = out.ddx()
        return out

    def dinv(self) -> "Operator":
        """Dinv o self; only defined on local operators."""
        if self.nonlocal_:
            raise ValueError("Dinv of a nonlocal operator is outside the supported calculus")
        out = Operator()
        one = DiffPoly.const(1)
        for a, f in self.local.items():
            if a >= 1:
                # Dinv f D^a = f D^(a-1) - Dinv f_x D^(a-1)
                out = out + Operator({a - 1: f}) - Operator({a - 1: f.ddx()}).dinv()
            else:
                out = out + Operator.f_dinv_g(one, f, 0)
        return out

    def apply(self, u: DiffPoly) -> DiffPoly:
        out = DiffPoly()
        for a, f in self.local.items():
            out = out + f * u.ddx_n(a)
        for (kf, kg), c in self.nonlocal_.items():
            out = out + (_mono(kf) * dinv(_mono(kg) * u)).scale(c)
        return out

    def order(self) -> int:
        return max(self.local, default=-1)

    def __repr__(self) -> str:
        return f"Operator({operator_text(self)})"


def operator_text(op: Operator) -> str:
    from .textio import to_text
    if op.is_zero():
        return "0"
    parts = []
    for a in sorted(op.local, reverse=True):
        f = to_text(op.local[a])
        d = "" if a == 0 else ("D" if a == 1 else f"D^{a}")
        if not d:
            parts.append(f)
        elif f == "1":
            parts.append(d)
        else:
            parts.append(f"({f})*{d}")
    for (kf, kg), c in sorted(op.nonlocal_.items(), key=lambda kv: repr(kv[0])):
        fp = _mono(kf, c)
        parts.append(f"({to_text(fp)})*Dinv*({to_text(_mono(kg))})")
    return " + ".join(parts)

