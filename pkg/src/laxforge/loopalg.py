"""Loop algebra of sl(2) with generators alpha(n), beta1(n), beta2(n).

Brackets::

    [alpha(m), beta1(n)] = beta1(m+n)
    [alpha(m), beta2(n)] = -beta2(m+n)
    [beta1(m), beta2(n)] = 2 alpha(m+n)
    [alpha(m), alpha(n)] = 0

Coefficients are generic: anything with +, unary -, and a product supplied
by the caller (DiffPoly, linear forms, scalars).
"""

from __future__ import annotations

from operator import mul
from typing import Callable, NamedTuple

from .exactnum import Scalar
from .matkit import ExactMatrix

NAMES = ("alpha", "beta1", "beta2")


_SHORT = {"alpha": "a", "beta1": "b1", "beta2": "b2"}


class Generator(NamedTuple):
    name: str
    degree: int

    def __str__(self) -> str:
        return f"{_SHORT[self.name]}({self.degree})"


def alpha(n: int) -> Generator:
    return Generator("alpha", n)


def beta1(n: int) -> Generator:
    return Generator("beta1", n)


def beta2(n: int) -> Generator:
    return Generator("beta2", n)


_TABLE = {
    ("alpha", "beta1"): (1, "beta1"),
    ("alpha", "beta2"): (-1, "beta2"),
    ("beta1", "beta2"): (2, "alpha"),
}


def bracket_generators(x: Generator, y: Generator) -> tuple | None:
    """(scalar, generator) with [x, y] = scalar * generator, or None when zero."""
    deg = x.degree + y.degree
    if (x.name, y.name) in _TABLE:
        c, g = _TABLE[(x.name, y.name)]
        return c, Generator(g, deg)
    if (y.name, x.name) in _TABLE:
        c, g = _TABLE[(y.name, x.name)]
        return -c, Generator(g, deg)
    return None


class AlgebraElement:
    """Finite sum of coefficient * generator."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {g: c for g, c in (terms or {}).items() if not _is_zero(c)}

    @classmethod
    def single(cls, coeff, gen: Generator) -> "AlgebraElement":
        return cls({gen: coeff})

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        t = dict(self.terms)
        for g, c in other.terms.items():
            t[g] = t[g] + c if g in t else c
        return AlgebraElement(t)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement({g: -c for g, c in self.terms.items()})

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def map(self, fn: Callable) -> "AlgebraElement":
        return AlgebraElement({g: fn(c) for g, c in self.terms.items()})

    def scale(self, s, product: Callable = mul) -> "AlgebraElement":
        return AlgebraElement({g: product(s, c) for g, c in self.terms.items()})

    def coefficient(self, gen: Generator, default=None):
        return self.terms.get(gen, default)

    def generators(self) -> list:
        return sorted(self.terms, key=lambda g: (NAMES.index(g.name), -g.degree))

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self) -> str:
        return " + ".join(f"({self.terms[g]})*{g}" for g in self.generators()) or "0"


def _is_zero(c) -> bool:
    if hasattr(c, "is_zero"):
        return c.is_zero()
    return c == 0


def bracket(x: AlgebraElement, y: AlgebraElement, product: Callable = mul) -> AlgebraElement:
    """[x, y] with coefficient products product(cx, cy)."""
    out: dict = {}
    for gx, cx in x.terms.items():
        for gy, cy in y.terms.items():
            res = bracket_generators(gx, gy)
            if res is None:
                continue
            s, g = res
            val = product(cx, cy)
            if s != 1:
                val = val * s if not isinstance(val, (int, Scalar)) else val * s
            out[g] = out[g] + val if g in out else val
    return AlgebraElement(out)


def represent(gen: Generator) -> tuple:
    """(2x2 constant matrix, lambda power) of the standard representation."""
    half = Scalar(1) / 2
    if gen.name == "alpha":
        m = ExactMatrix.from_rows([[half, 0], [0, -half]])
    elif gen.name == "beta1":
        m = ExactMatrix.from_rows([[0, 1], [0, 0]])
    elif gen.name == "beta2":
        m = ExactMatrix.from_rows([[0, 0], [1, 0]])
    else:
        raise ValueError(f"unknown generator {gen.name!r}")
    return m, gen.degree


def check_relations(max_degree: int = 2) -> list:
    """Verify the bracket table against the matrix representation.

    Returns the list of failing (x, y) pairs; empty means the table is
    faithful to the representation.
    """
    fails = []
    gens = [Generator(n, d) for n in NAMES for d in range(-max_degree, max_degree + 1)]
    for x in gens:
        for y in gens:
            mx, lx = represent(x)
            my, ly = represent(y)
            comm = mx @ my - my @ mx
            res = bracket_generators(x, y)
            if res is None:
                ok = comm.is_zero()
            else:
                s, g = res
                mg, lg = represent(g)
                ok = lg == lx + ly and comm == mg.scale(s)
            if not ok:
                fails.append((x, y))
    return fails
