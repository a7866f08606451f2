"""Canonical differential polynomials with spectral powers and nonlocal factors.

A monomial is ``coef * L^k * prod(locals) * prod(Dinv(g))``.  Nonlocal
factors always hold a single monomial integrand with unit coefficient and no
spectral power, so that ``Dinv`` is applied linearly and the representation
stays unique.  ``dinv`` first removes everything that is an exact total
derivative (integration constant zero) and only keeps a canonical remainder
under the antiderivative.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, NamedTuple

from ..exactnum import ONE, ZERO, Scalar


class FieldVar(NamedTuple):
    symbol: str   # "q" or "r"
    component: int
    xorder: int = 0

    def shifted(self, k: int = 1) -> "FieldVar":
        return FieldVar(self.symbol, self.component, self.xorder + k)

    @property
    def base(self) -> tuple:
        return (self.symbol, self.component)


class NonlocalFactor:
    """The antiderivative Dinv(integrand); integrand is a bare monomial."""

    __slots__ = ("integrand", "_key", "_hash")

    def __init__(self, integrand: "DiffPoly"):
        if integrand.is_zero():
            raise ValueError("nonlocal factor of zero integrand")
        self.integrand = integrand
        self._key = integrand.sort_key()
        self._hash = hash(self._key)

    def sort_key(self):
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, NonlocalFactor) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "NonlocalFactor") -> bool:
        return self._key < other._key

    def __repr__(self) -> str:
        return f"Dinv({self.integrand})"


# monomial key: (lambda_power, locals, nonlocals)
#   locals    = tuple of (FieldVar, exponent) sorted
#   nonlocals = tuple of (NonlocalFactor, exponent) sorted
_UNIT_KEY = (0, (), ())


def _merge(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for k, e in b:
        d[k] = d.get(k, 0) + e
    return tuple(sorted(d.items()))


def _key_mul(k1: tuple, k2: tuple) -> tuple:
    return (k1[0] + k2[0], _merge(k1[1], k2[1]), _merge(k1[2], k2[2]))


def _remove_one(items: tuple, idx: int) -> tuple:
    item, e = items[idx]
    if e == 1:
        return items[:idx] + items[idx + 1:]
    return items[:idx] + ((item, e - 1),) + items[idx + 1:]


def _sortable(key: tuple):
    lam, loc, nl = key
    return (lam, loc, tuple((f.sort_key(), e) for f, e in nl))


class DiffPoly:
    """Immutable canonical differential polynomial."""

    __slots__ = ("terms", "_skey", "_hash")

    def __init__(self, terms: dict | None = None):
        self.terms = {k: v for k, v in (terms or {}).items() if v}
        self._skey = None
        self._hash = None

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, c) -> "DiffPoly":
        c = Scalar.coerce(c)
        return cls({_UNIT_KEY: c}) if c else cls()

    @classmethod
    def var(cls, symbol: str, component: int, xorder: int = 0) -> "DiffPoly":
        return cls({(0, ((FieldVar(symbol, component, xorder), 1),), ()): ONE})

    @classmethod
    def lam(cls, power: int = 1) -> "DiffPoly":
        return cls({(power, (), ()): ONE})

    @classmethod
    def from_fieldvar(cls, v: FieldVar) -> "DiffPoly":
        return cls({(0, ((v, 1),), ()): ONE})

    # -- structure ------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def sort_key(self):
        if self._skey is None:
            self._skey = tuple(sorted((_sortable(k), v.components) for k, v in self.terms.items()))
        return self._skey

    def __eq__(self, other) -> bool:
        if isinstance(other, DiffPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction, Scalar)):
            return self.terms == DiffPoly.const(other).terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.sort_key())
        return self._hash

    def monomials(self) -> list:
        """(key, coefficient) pairs in canonical order."""
        return sorted(self.terms.items(), key=lambda kv: _sortable(kv[0]))

    def is_local(self) -> bool:
        return all(not k[2] for k in self.terms)

    def is_constant(self) -> bool:
        return all(not k[1] and not k[2] and k[0] == 0 for k in self.terms)

    def constant_value(self) -> Scalar:
        return self.terms.get(_UNIT_KEY, ZERO)

    def lambda_powers(self) -> set:
        return {k[0] for k in self.terms}

    def lambda_coeff(self, power: int) -> "DiffPoly":
        return DiffPoly({(0, k[1], k[2]): v for k, v in self.terms.items() if k[0] == power})

    def fieldvars(self) -> set:
        out = set()
        for _, loc, nl in self.terms:
            out.update(v for v, _ in loc)
            for f, _ in nl:
                out.update(f.integrand.fieldvars())
        return out

    def max_xorder(self) -> int:
        return max((v.xorder for v in self.fieldvars()), default=-1)

    def nonlocal_depth(self) -> int:
        best = 0
        for _, _, nl in self.terms:
            for f, _ in nl:
                best = max(best, 1 + f.integrand.nonlocal_depth())
        return best

    # -- ring operations ------------------------------------------------
    def __add__(self, other) -> "DiffPoly":
        if not isinstance(other, DiffPoly):
            if isinstance(other, (int, Fraction, Scalar)):
                other = DiffPoly.const(other)
            else:
                return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        t = dict(self.terms)
        for k, v in other.terms.items():
            s = t.get(k)
            if s is None:
                t[k] = v
            else:
                s = s + v
                if s:
                    t[k] = s
                else:
                    del t[k]
        return DiffPoly(t)

    def __radd__(self, other) -> "DiffPoly":
        return self + other

    def __neg__(self) -> "DiffPoly":
        return DiffPoly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other) -> "DiffPoly":
        if isinstance(other, (int, Fraction, Scalar)):
            other = DiffPoly.const(other)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "DiffPoly":
        return DiffPoly.const(other) - self

    def scale(self, c) -> "DiffPoly":
        c = Scalar.coerce(c)
        if not c:
            return DiffPoly()
        if c == 1:
            return self
        return DiffPoly({k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Scalar)):
            return self.scale(other)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        if not self.terms or not other.terms:
            return DiffPoly()
        t: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = _key_mul(k1, k2)
                v = v1 * v2
                s = t.get(k)
                t[k] = v if s is None else s + v
        return DiffPoly(t)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Scalar)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, c) -> "DiffPoly":
        return self.scale(Scalar.coerce(c).inverse())

    def __pow__(self, n: int) -> "DiffPoly":
        out = DiffPoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    # -- calculus -----------------------------------------------------------
    def ddx(self) -> "DiffPoly":
        return _ddx(self)

    def ddx_n(self, n: int) -> "DiffPoly":
        out = self
        for _ in range(n):
            out = out.ddx()
        return out

    def partial(self, v: FieldVar) -> "DiffPoly":
        """Partial derivative in one jet coordinate; nonlocal factors held fixed."""
        t: dict = {}
        for (lam, loc, nl), c in self.terms.items():
            for idx, (u, e) in enumerate(loc):
                if u == v:
                    k = (lam, _remove_one(loc, idx), nl)
                    t[k] = t.get(k, ZERO) + c * e
        return DiffPoly(t)

    def drop_lambda_part(self):
        return self.lambda_coeff(0)

    def __repr__(self) -> str:
        from .textio import to_text
        return f"DiffPoly({to_text(self)})"

    def __str__(self) -> str:
        from .textio import to_text
        return to_text(self)


ZERO_POLY = DiffPoly()
ONE_POLY = DiffPoly.const(1)


def q(k: int, xorder: int = 0) -> DiffPoly:
    return DiffPoly.var("q", k, xorder)


def r(k: int, xorder: int = 0) -> DiffPoly:
    return DiffPoly.var("r", k, xorder)


def const(c) -> DiffPoly:
    return DiffPoly.const(c)


def _mono(key: tuple, c=ONE) -> DiffPoly:
    return DiffPoly({key: Scalar.coerce(c)})


@lru_cache(maxsize=None)
def _ddx_key(key: tuple) -> DiffPoly:
    lam, loc, nl = key
    out: dict = {}

    def add(k, c):
        s = out.get(k)
        out[k] = c if s is None else s + c

    for idx, (v, e) in enumerate(loc):
        rest = _remove_one(loc, idx)
        newloc = _merge(rest, ((v.shifted(), 1),))
        add((lam, newloc, nl), Scalar.coerce(e))
    for idx, (f, e) in enumerate(nl):
        rest_nl = _remove_one(nl, idx)
        base = (lam, loc, rest_nl)
        for k2, c2 in f.integrand.terms.items():
            add(_key_mul(base, k2), c2 * e)
    return DiffPoly(out)


def _ddx(p: DiffPoly) -> DiffPoly:
    acc: dict = {}
    for k, c in p.terms.items():
        for k2, c2 in _ddx_key(k).terms.items():
            s = acc.get(k2)
            v = c * c2
            acc[k2] = v if s is None else s + v
    return DiffPoly(acc)


def ddx(p: DiffPoly) -> DiffPoly:
    return p.ddx()


# -- antiderivative -------------------------------------------------------------

def _letters(loc: tuple) -> tuple:
    out = []
    for v, e in loc:
        out.extend([v.base] * e)
    return tuple(sorted(out))


@lru_cache(maxsize=None)
def _piece_monomials(letters: tuple, weight: int) -> tuple:
    """Every local monomial key with the given letter multiset and total x-order."""
    groups: dict = {}
    for b in letters:
        groups[b] = groups.get(b, 0) + 1
    bases = sorted(groups)

    def parts(count, w):
        # multisets of `count` orders summing to w, as non-decreasing tuples
        if count == 0:
            if w == 0:
                yield ()
            return
        for combo in combinations_with_replacement(range(w + 1), count):
            if sum(combo) == w:
                yield combo

    results = [()]
    for idx, b in enumerate(bases):
        new = []
        for prefix in results:
            used = sum(o for (_, o) in prefix)
            for w_b in range(weight - used + 1):
                rest_needed = idx == len(bases) - 1
                if rest_needed and w_b != weight - used:
                    continue
                for combo in parts(groups[b], w_b):
                    new.append(prefix + tuple((b, o) for o in combo))
        results = new
    keys = []
    for assignment in results:
        d: dict = {}
        for (sym, comp), o in assignment:
            fv = FieldVar(sym, comp, o)
            d[fv] = d.get(fv, 0) + 1
        keys.append((0, tuple(sorted(d.items())), ()))
    return tuple(sorted(set(keys), key=_sortable))


@lru_cache(maxsize=None)
def _piece_reducer(letters: tuple, weight: int):
    """Row-reduced image of d/dx from the weight-1 piece into the weight piece.

    Returns (columns, rows) where rows are (pivot_key, image dict, antiderivative dict).
    Pivots are chosen on the largest monomials, so the remainder is canonical.
    """
    cands = _piece_monomials(letters, weight - 1)
    cols = list(_piece_monomials(letters, weight))
    rows = []
    for cnd in cands:
        img = {k: v for k, v in _ddx_key(cnd).terms.items()}
        rows.append((img, {cnd: ONE}))
    reduced = []
    # pivots on the most differentiated monomials, so remainders keep low orders
    for col in sorted(cols, key=_pivot_priority, reverse=True):
        piv_idx = next((i for i, (img, _) in enumerate(rows) if img.get(col)), None)
        if piv_idx is None:
            continue
        img, anti = rows.pop(piv_idx)
        inv = img[col].inverse()
        img = {k: v * inv for k, v in img.items()}
        anti = {k: v * inv for k, v in anti.items()}
        new_rows = []
        for img2, anti2 in rows:
            f = img2.get(col)
            if f:
                img2 = _axpy(img2, img, -f)
                anti2 = _axpy(anti2, anti, -f)
            if img2:
                new_rows.append((img2, anti2))
        rows = new_rows
        # back-substitute into earlier pivots
        for i, (pk, img0, anti0) in enumerate(reduced):
            f = img0.get(col)
            if f:
                reduced[i] = (pk, _axpy(img0, img, -f), _axpy(anti0, anti, -f))
        reduced.append((col, img, anti))
    return tuple(reduced)


def _pivot_priority(key: tuple):
    return (max((v.xorder for v, _ in key[1]), default=0), _sortable(key))


def _axpy(x: dict, y: dict, a: Scalar) -> dict:
    out = dict(x)
    for k, v in y.items():
        s = out.get(k, ZERO) + a * v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def _reduce_local(f: dict) -> tuple[dict, dict]:
    """Split a homogeneous-letter local piece into (antiderivative, remainder)."""
    anti: dict = {}
    rem = dict(f)
    groups: dict = {}
    for k in f:
        groups.setdefault((_letters(k[1]), sum(v.xorder * e for v, e in k[1])), []).append(k)
    for (letters, weight), _ in groups.items():
        if weight == 0 or not letters:
            continue
        for pk, img, a in _piece_reducer(letters, weight):
            c = rem.get(pk)
            if c:
                rem = _axpy(rem, img, -c)
                anti = _axpy(anti, a, c)
    return anti, rem


def _nl_order(nl: tuple):
    return (sum(e for _, e in nl), tuple((f.sort_key(), e) for f, e in nl))


def _reduce_all(f: dict) -> tuple[dict, dict]:
    """Linear split of f into (antiderivative, remainder).

    Terms are processed by nonlocal signature in descending order.  For
    a signature S the local cofactors are reduced exactly with the nonlocal
    factors held fixed; the full derivative of the recovered antiderivative
    is then subtracted, which only feeds signatures strictly below S.  The
    map is linear in f and inverts d/dx on every exact input.
    """
    rem = dict(f)
    anti: dict = {}
    done: set = set()
    while True:
        pending = {k[2] for k in rem if k[2] not in done}
        if not pending:
            break
        sig = max(pending, key=_nl_order)
        done.add(sig)
        part = {(k[0], k[1], ()): c for k, c in rem.items() if k[2] == sig}
        a_loc, _ = _reduce_local(part)
        if not a_loc:
            continue
        lift = {(k[0], k[1], sig): c for k, c in a_loc.items()}
        anti = _axpy(anti, lift, ONE)
        d = DiffPoly(lift).ddx()
        rem = _axpy(rem, d.terms, -ONE)
    return anti, rem


def dinv(f: DiffPoly) -> DiffPoly:
    """Antiderivative with zero integration constant, in canonical form."""
    if f.is_zero():
        return DiffPoly()
    out = DiffPoly()
    by_lam: dict = {}
    for k, c in f.terms.items():
        by_lam.setdefault(k[0], {})[(0, k[1], k[2])] = c
    for lam, piece in by_lam.items():
        anti, rem = _reduce_all(piece)
        shift = (lam, (), ())
        part = DiffPoly({_key_mul(shift, k): c for k, c in anti.items()})
        for k, c in rem.items():
            fac = NonlocalFactor(_mono(k))
            part = part + DiffPoly({(lam, (), ((fac, 1),)): c})
        out = out + part
    return out


def nonlocal_raw(integrand: DiffPoly) -> DiffPoly:
    """Dinv(integrand) split by linearity only, with no exact integration."""
    out = DiffPoly()
    for (lam, loc, nl), c in integrand.terms.items():
        fac = NonlocalFactor(_mono((0, loc, nl)))
        out = out + DiffPoly({(lam, (), ((fac, 1),)): c})
    return out


def canonicalize(p: DiffPoly) -> DiffPoly:
    """Re-run exact integration inside every nonlocal factor (idempotent)."""
    out = DiffPoly()
    for (lam, loc, nl), c in p.terms.items():
        term = DiffPoly({(lam, loc, ()): c})
        for f, e in nl:
            inner = dinv(canonicalize(f.integrand))
            for _ in range(e):
                term = term * inner
        out = out + term
    return out


# -- substitution -------------------------------------------------------------------

def substitute(p: DiffPoly, values: dict) -> DiffPoly:
    """Replace field components (symbol, component) by polynomials.

    Derivatives of a replaced field become derivatives of its value and
    nonlocal integrands are substituted and re-integrated.
    """
    out = DiffPoly()
    cache: dict = {}

    def value_of(v: FieldVar) -> DiffPoly:
        if v not in cache:
            if v.base in values:
                cache[v] = values[v.base].ddx_n(v.xorder)
            else:
                cache[v] = DiffPoly.from_fieldvar(v)
        return cache[v]

    for (lam, loc, nl), c in p.terms.items():
        term = DiffPoly({(lam, (), ()): c})
        for v, e in loc:
            term = term * value_of(v) ** e
            if term.is_zero():
                break
        if term.is_zero():
            continue
        for f, e in nl:
            inner = dinv(substitute(f.integrand, values))
            term = term * inner ** e
        out = out + term
    return out


def zero_components(p: DiffPoly, components: Iterable[int]) -> DiffPoly:
    comps = set(components)
    vals = {}
    for v in p.fieldvars():
        if v.component in comps:
            vals[v.base] = DiffPoly()
    return substitute(p, vals)


# -- theta ------------------------------------------------------------------------

def theta(xsym: str, ysym: str, mu: int, nu: int, f: DiffPoly, size: int | None = None,
          simplify: bool = True) -> DiffPoly:
    """X_mu * Dinv(Y_nu * f)."""
    for s in (xsym, ysym):
        if s not in ("q", "r"):
            raise ValueError(f"theta symbol must be q or r, got {s!r}")
    if mu < 1 or nu < 1 or (size is not None and (mu > size or nu > size)):
        raise IndexError(f"theta index out of range: ({mu}, {nu})")
    integrand = DiffPoly.var(ysym, nu) * f
    inner = dinv(integrand) if simplify else nonlocal_raw(integrand)
    return DiffPoly.var(xsym, mu) * inner


# -- variational derivative ----------------------------------------------------------

def euler_derivative(h: DiffPoly, v: FieldVar | tuple) -> DiffPoly:
    """Variational derivative of the functional with density h.

    Nonlocal factors are handled by the skewness of Dinv under the zero-mean
    convention: int a*Dinv(b) = -int Dinv(a)*b.
    """
    if not isinstance(v, FieldVar):
        v = FieldVar(*v)
    if v.xorder != 0:
        raise ValueError("variational derivative is taken w.r.t. an undifferentiated field")
    return _adjoint_grad(h, ONE_POLY, v.base)


def _adjoint_grad(h: DiffPoly, weight: DiffPoly, base: tuple) -> DiffPoly:
    """Gradient of int weight*h dx in the field `base`, with weight held fixed."""
    out = DiffPoly()
    maxo = max((u.xorder for u in h.fieldvars() if u.base == base), default=-1)
    for k in range(maxo + 1):
        dk = h.partial(FieldVar(base[0], base[1], k))
        if dk.is_zero():
            continue
        term = weight * dk
        for _ in range(k):
            term = -term.ddx()
        out = out + term
    for (lam, loc, nl), c in h.terms.items():
        for idx, (f, e) in enumerate(nl):
            if not any(u.base == base for u in f.integrand.fieldvars()):
                continue
            cofactor = DiffPoly({(lam, loc, _remove_one(nl, idx)): c * e})
            partner = -dinv(weight * cofactor)
            out = out + _adjoint_grad(f.integrand, partner, base)
    return out


def variational_gradient(h: DiffPoly, size: int) -> list:
    """(dH/dq1, dH/dr1, ..., dH/dq_n, dH/dr_n)."""
    out = []
    for k in range(1, size + 1):
        out.append(euler_derivative(h, FieldVar("q", k)))
        out.append(euler_derivative(h, FieldVar("r", k)))
    return out


def is_total_derivative(f: DiffPoly) -> bool:
    """Local exactness test: every variational derivative vanishes."""
    bases = {v.base for v in f.fieldvars()}
    return all(euler_derivative(f, FieldVar(s, c)).is_zero() for s, c in bases)
