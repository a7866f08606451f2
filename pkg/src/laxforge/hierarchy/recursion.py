"""Recursion operators Omega^(m+1) = Phi Omega^(m) with Omega = (B1, C1, B2, C2, ...)."""

from __future__ import annotations

from dataclasses import dataclass

from ..diffring import DiffPoly, Operator, operator_text
from ..laxzcc import Symbol
from ..matkit import CouplingFamily
from .solver import HierarchyTable, SolveError, relation_set, solve_block


class OpRow:
    """A linear map from the stacked vector Omega to scalars: one operator per slot."""

    __slots__ = ("ops",)

    def __init__(self, ops):
        self.ops = tuple(ops)

    @classmethod
    def zero(cls, width: int) -> "OpRow":
        return cls(Operator() for _ in range(width))

    @classmethod
    def unit(cls, width: int, idx: int) -> "OpRow":
        return cls(Operator.identity() if i == idx else Operator() for i in range(width))

    def __add__(self, other: "OpRow") -> "OpRow":
        return OpRow(a + b for a, b in zip(self.ops, other.ops))

    def __neg__(self) -> "OpRow":
        return OpRow(-a for a in self.ops)

    def __sub__(self, other: "OpRow") -> "OpRow":
        return self + (-other)

    def left_mul(self, c: DiffPoly) -> "OpRow":
        return OpRow(a.left_mul(c) for a in self.ops)

    def scale(self, c) -> "OpRow":
        return OpRow(a.scale(c) for a in self.ops)

    def ddx_n(self, n: int) -> "OpRow":
        return OpRow(a.ddx_n(n) for a in self.ops)

    def dinv(self) -> "OpRow":
        return OpRow(a.dinv() for a in self.ops)

    def is_zero(self) -> bool:
        return all(a.is_zero() for a in self.ops)

    def apply(self, vec: list) -> DiffPoly:
        out = DiffPoly()
        for op, u in zip(self.ops, vec):
            if not op.is_zero():
                out = out + op.apply(u)
        return out


def omega_labels(size: int) -> list:
    out = []
    for k in range(1, size + 1):
        out += [f"B{k}", f"C{k}"]
    return out


def omega_symbols(size: int, m: int) -> list:
    out = []
    for k in range(1, size + 1):
        out += [Symbol("B", k, m), Symbol("C", k, m)]
    return out


@dataclass
class RecursionOperator:
    family: CouplingFamily
    entries: list            # entries[i][j]: Operator

    @property
    def size(self) -> int:
        return len(self.entries)

    def apply(self, vec: list) -> list:
        return [OpRow(row).apply(vec) for row in self.entries]

    def entry(self, i: int, j: int) -> Operator:
        """1-based access matching the printed M_ij / N_ij labels."""
        return self.entries[i - 1][j - 1]

    def to_text(self) -> str:
        lines = []
        for i, row in enumerate(self.entries, 1):
            for j, op in enumerate(row, 1):
                lines.append(f"Phi{i}{j} = {operator_text(op)}")
        return "\n".join(lines)


def extract_recursion_operator(family: CouplingFamily, base_order: int = 1, template=None) -> RecursionOperator:
    """Read Phi off the relations linking orders base_order and base_order+1."""
    m = base_order
    _, rels = relation_set(family, m + 1)
    if template is not None:
        from ..laxzcc import assemble
        _, rels = relation_set(family, m + 1, assemble(family, m + 1, template))
    n = family.size
    width = 2 * n
    env = {s: OpRow.unit(width, i) for i, s in enumerate(omega_symbols(n, m))}
    zero = OpRow.zero(width)
    a_new = {Symbol("A", k, m) for k in range(1, n + 1)}
    vals, res = solve_block(rels, env, a_new, zero)
    if "missing" in res:
        raise SolveError(f"cannot express A^({m}) through Omega^({m})")
    env.update(vals)
    new = {Symbol(L, k, m + 1) for L in "ABC" for k in range(1, n + 1)}
    vals, res = solve_block(rels, env, new, zero)
    if "missing" in res:
        raise SolveError(f"cannot express order {m + 1} through Omega^({m})")
    entries = [list(vals[s].ops) for s in omega_symbols(n, m + 1)]
    return RecursionOperator(family, entries)


def check_recursion(phi: RecursionOperator, ht: HierarchyTable) -> dict:
    """{m: [indices of mismatching stack entries]} for m = 1..max_order-1."""
    out = {}
    n = ht.size
    for m in range(1, ht.max_order):
        vec = [ht.entries[s] for s in omega_symbols(n, m)]
        got = phi.apply(vec)
        want = [ht.entries[s] for s in omega_symbols(n, m + 1)]
        out[m] = [i for i, (g, w) in enumerate(zip(got, want)) if not (g - w).is_zero()]
    return out
