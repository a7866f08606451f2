"""Small exact matrices, Kronecker products and the four coupling families."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .exactnum import I, ONE, ZERO, Scalar


class MatrixError(ValueError):
    pass


class ClosureError(MatrixError):
    """Raised when a family's span is not closed under multiplication."""


class ExactMatrix:
    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Iterable):
        ent = tuple(Scalar.coerce(e) for e in entries)
        if rows <= 0 or cols <= 0 or len(ent) != rows * cols:
            raise MatrixError(f"bad shape {rows}x{cols} for {len(ent)} entries")
        self.rows, self.cols, self.entries = rows, cols, ent

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "ExactMatrix":
        return cls(len(rows), len(rows[0]), [x for r in rows for x in r])

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls(n, n, [ONE if i == j else ZERO for i in range(n) for j in range(n)])

    @classmethod
    def zeros(cls, r: int, c: int) -> "ExactMatrix":
        return cls(r, c, [ZERO] * (r * c))

    def __getitem__(self, ij) -> Scalar:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def tolist(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    @property
    def shape(self) -> tuple:
        return (self.rows, self.cols)

    def __eq__(self, other) -> bool:
        return isinstance(other, ExactMatrix) and self.shape == other.shape and self.entries == other.entries

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.entries))

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.shape != other.shape:
            raise MatrixError("shape mismatch in addition")
        return ExactMatrix(self.rows, self.cols, [a + b for a, b in zip(self.entries, other.entries)])

    def __neg__(self) -> "ExactMatrix":
        return ExactMatrix(self.rows, self.cols, [-a for a in self.entries])

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        return self + (-other)

    def scale(self, s) -> "ExactMatrix":
        s = Scalar.coerce(s)
        return ExactMatrix(self.rows, self.cols, [s * a for a in self.entries])

    def __rmul__(self, s) -> "ExactMatrix":
        return self.scale(s)

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.cols != other.rows:
            raise MatrixError(f"cannot multiply {self.shape} by {other.shape}")
        out = []
        for i in range(self.rows):
            ri = self.row(i)
            for j in range(other.cols):
                acc = ZERO
                for k in range(self.cols):
                    a = ri[k]
                    if a:
                        b = other.entries[k * other.cols + j]
                        if b:
                            acc = acc + a * b
                out.append(acc)
        return ExactMatrix(self.rows, other.cols, out)

    def __mul__(self, other):
        if isinstance(other, ExactMatrix):
            return self @ other
        return self.scale(other)

    def __pow__(self, n: int) -> "ExactMatrix":
        if self.rows != self.cols or n < 0:
            raise MatrixError("power needs a square matrix and n >= 0")
        out = ExactMatrix.identity(self.rows)
        for _ in range(n):
            out = out @ self
        return out

    def transpose(self) -> "ExactMatrix":
        return ExactMatrix(self.cols, self.rows, [self[i, j] for j in range(self.cols) for i in range(self.rows)])

    @property
    def T(self) -> "ExactMatrix":
        return self.transpose()

    def trace(self) -> Scalar:
        if self.rows != self.cols:
            raise MatrixError("trace of non-square matrix")
        acc = ZERO
        for i in range(self.rows):
            acc = acc + self[i, i]
        return acc

    def is_zero(self) -> bool:
        return not any(self.entries)

    def to_json(self) -> list:
        return [[e.to_json() for e in self.row(i)] for i in range(self.rows)]

    @classmethod
    def from_json(cls, rows: list) -> "ExactMatrix":
        return cls.from_rows([[Scalar.from_json(e) for e in r] for r in rows])

    def __repr__(self) -> str:
        return "ExactMatrix(" + "; ".join(", ".join(str(e) for e in self.row(i)) for i in range(self.rows)) + ")"


def kron(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    rows, cols = a.rows * b.rows, a.cols * b.cols
    out = []
    for i in range(rows):
        ia, ib = divmod(i, b.rows)
        for j in range(cols):
            ja, jb = divmod(j, b.cols)
            out.append(a[ia, ja] * b[ib, jb])
    return ExactMatrix(rows, cols, out)


# -- exact linear algebra over Scalar -----------------------------------------

def rref(rows: list[list[Scalar]]) -> tuple[list[list[Scalar]], list[int]]:
    """Reduced row echelon form; returns (matrix, pivot columns)."""
    m = [list(map(Scalar.coerce, r)) for r in rows]
    pivots: list[int] = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        piv = next((k for k in range(r, len(m)) if m[k][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = m[r][c].inverse()
        m[r] = [x * inv for x in m[r]]
        for k in range(len(m)):
            if k != r and m[k][c]:
                f = m[k][c]
                m[k] = [x - f * y for x, y in zip(m[k], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def solve_linear(a: list[list[Scalar]], b: list[Scalar]):
    """One exact solution of a x = b (free variables set to zero), or None."""
    if not a:
        return []
    n = len(a[0])
    aug = [list(r) + [Scalar.coerce(bi)] for r, bi in zip(a, b)]
    m, piv = rref(aug)
    if n in piv:
        return None
    x = [ZERO] * n
    for row, c in zip(m, piv):
        x[c] = row[n]
    return x


def nullspace(a: list[list[Scalar]], n: int) -> list[list[Scalar]]:
    m, piv = rref(a) if a else ([], [])
    free = [c for c in range(n) if c not in piv]
    basis = []
    for f in free:
        v = [ZERO] * n
        v[f] = ONE
        for row, c in zip(m, piv):
            v[c] = -row[f]
        basis.append(v)
    return basis


def rank(mats: Sequence[ExactMatrix]) -> int:
    if not mats:
        return 0
    _, piv = rref([list(m.entries) for m in mats])
    return len(piv)


def inverse(m: ExactMatrix) -> ExactMatrix:
    n = m.rows
    if m.cols != n:
        raise MatrixError("inverse of non-square matrix")
    aug = [list(m.row(i)) + [ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    red, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise MatrixError("matrix is singular")
    return ExactMatrix(n, n, [x for r in red for x in r[n:]])


# -- coupling families ----------------------------------------------------------

KINDS = ("nilpotent", "hadamard", "idempotent", "kidempotent")

SIGMA1 = ExactMatrix.from_rows([[0, 1], [1, 0]])
SIGMA2 = ExactMatrix.from_rows([[0, -I], [I, 0]])
SIGMA3 = ExactMatrix.from_rows([[1, 0], [0, -1]])


@dataclass(frozen=True)
class CouplingFamily:
    kind: str
    basis: tuple            # matrices in the printed listing order
    labels: tuple           # display names of the basis matrices
    slots: tuple            # slots[k] = basis index multiplying U_{k+1}
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)   # e.g. the permutation K

    @property
    def size(self) -> int:
        return len(self.slots)

    @property
    def dim(self) -> int:
        return self.basis[0].rows

    def slot_matrix(self, k: int) -> ExactMatrix:
        return self.basis[self.slots[k]]

    def slot_label(self, k: int) -> str:
        return self.labels[self.slots[k]]

    def identity_slot(self) -> int:
        ident = ExactMatrix.identity(self.dim)
        for k in range(self.size):
            if self.slot_matrix(k) == ident:
                return k
        raise MatrixError(f"{self.kind} family has no identity slot")

    def independent(self) -> bool:
        return rank(list(self.basis)) == len(self.basis)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "labels": list(self.labels),
            "slots": list(self.slots),
            "basis": [m.to_json() for m in self.basis],
        }


def nilpotent_matrix(p: int) -> ExactMatrix:
    n = p + 1
    return ExactMatrix(n, n, [ONE if i < j else ZERO for i in range(n) for j in range(n)])


def build_family(kind: str, p: int | None = None, n: int | None = None, sign_variant: str = "plain") -> CouplingFamily:
    kind = normalize_kind(kind)
    if kind == "nilpotent":
        if p is None or p < 1:
            raise MatrixError("nilpotent family needs p >= 1")
        if sign_variant not in ("plain", "alternating"):
            raise MatrixError(f"unknown sign variant {sign_variant!r}")
        nm = nilpotent_matrix(p)
        sign = -1 if sign_variant == "alternating" else 1
        basis = tuple((nm ** j).scale(sign ** j) for j in range(p + 1))
        pre = "-" if sign < 0 else ""
        labels = ("1",) + tuple(
            (pre if j % 2 else "") + ("N" if j == 1 else f"N^{j}") for j in range(1, p + 1)
        )
        return CouplingFamily(kind, basis, labels, tuple(range(p + 1)), {"p": p, "sign_variant": sign_variant})
    if kind == "hadamard":
        g1 = ExactMatrix.from_rows([[1, -1], [1, 1]])
        g2 = g1.T
        g3 = (g1 - g2).scale(Fraction(1, 2))
        basis = (ExactMatrix.identity(2), g1, g2, g3)
        return CouplingFamily(kind, basis, ("1", "G1", "G2", "G3"), (0, 1, 2, 3), {})
    if kind == "idempotent":
        if n is None or n < 2:
            raise MatrixError("idempotent family needs n >= 2")
        basis = tuple(
            ExactMatrix(n, n, [ONE if (a == b and a < j) else ZERO for a in range(n) for b in range(n)])
            for j in range(1, n + 1)
        )
        return CouplingFamily(kind, basis, tuple(f"P{j}" for j in range(1, n + 1)), tuple(range(n)), {"n": n})
    if kind == "kidempotent":
        half = Fraction(1, 2)
        pm = ExactMatrix.identity(2).scale(-half) + SIGMA3.scale(Scalar(0, 0, 0, half)) + SIGMA2
        basis = (pm, pm @ pm, pm @ pm @ pm)
        # U = P (x) U3 + P^2 (x) U2 + P^3 (x) U1
        return CouplingFamily(kind, basis, ("P", "P^2", "P^3"), (2, 1, 0), {}, {"K": SIGMA1})
    raise MatrixError(f"unknown family kind {kind!r}")


def normalize_kind(kind: str) -> str:
    k = kind.lower().replace("-", "").replace("_", "")
    aliases = {"nilpotent": "nilpotent", "nilpotentkn": "nilpotent", "hadamard": "hadamard",
               "idempotent": "idempotent", "kidempotent": "kidempotent"}
    if k not in aliases:
        raise MatrixError(f"unknown family kind {kind!r}")
    return aliases[k]


# -- closure tables ----------------------------------------------------------------

@dataclass(frozen=True)
class ClosureTable:
    """basis[i] @ basis[j] == sum_k coeff[i][j][k] * basis[k]."""
    family: CouplingFamily
    coeff: tuple  # coeff[i][j] is a tuple of (k, Scalar) pairs

    def product(self, i: int, j: int) -> dict:
        return dict(self.coeff[i][j])

    def is_commutative(self) -> bool:
        n = len(self.coeff)
        return all(self.product(i, j) == self.product(j, i) for i in range(n) for j in range(n))

    def reconstruct(self, i: int, j: int) -> ExactMatrix:
        b = self.family.basis
        out = ExactMatrix.zeros(*b[0].shape)
        for k, c in self.coeff[i][j]:
            out = out + b[k].scale(c)
        return out

    def slot_coeff(self, a: int, b: int) -> dict:
        """Structure constants on slots: M_a M_b = sum_c coeff * M_c."""
        fam = self.family
        inv = {bi: k for k, bi in enumerate(fam.slots)}
        out = {}
        for k, c in self.coeff[fam.slots[a]][fam.slots[b]]:
            out[inv[k]] = c
        return out

    def to_json(self) -> dict:
        n = len(self.coeff)
        return {
            "labels": list(self.family.labels),
            "table": [[{self.family.labels[k]: c.to_json() for k, c in self.coeff[i][j]} for j in range(n)] for i in range(n)],
        }


def _as_single(prod: ExactMatrix, basis: Sequence[ExactMatrix]):
    for k, bk in enumerate(basis):
        piv = next((t for t, e in enumerate(bk.entries) if e), None)
        if piv is None:
            continue
        s = prod.entries[piv] / bk.entries[piv]
        if s and bk.scale(s) == prod:
            return ((k, s),)
    return None


def closure_table(fam: CouplingFamily) -> ClosureTable:
    """Structure constants of the family basis.

    Products that equal a scaled single basis element use that element (the
    first one in basis order); otherwise an exact linear solve is used.
    """
    basis = fam.basis
    rows = []
    for i, bi in enumerate(basis):
        row = []
        for j, bj in enumerate(basis):
            prod = bi @ bj
            if prod.is_zero():
                row.append(())
                continue
            single = _as_single(prod, basis)
            if single is not None:
                row.append(single)
                continue
            a = [[basis[k].entries[t] for k in range(len(basis))] for t in range(len(prod.entries))]
            x = solve_linear(a, list(prod.entries))
            if x is None:
                raise ClosureError(f"{fam.labels[i]}*{fam.labels[j]} is outside the span of the {fam.kind} basis")
            row.append(tuple((k, c) for k, c in enumerate(x) if c))
        rows.append(tuple(row))
    table = ClosureTable(fam, tuple(rows))
    for i in range(len(basis)):
        for j in range(len(basis)):
            if table.reconstruct(i, j) != basis[i] @ basis[j]:
                raise ClosureError(f"reconstruction failed for {fam.labels[i]}*{fam.labels[j]}")
    return table


def format_closure_table(table: ClosureTable) -> str:
    """Row/column product layout, rows = left factor."""
    labels = table.family.labels
    n = len(labels)

    def cell(i, j):
        terms = table.coeff[i][j]
        if not terms:
            return "0"
        parts = []
        for k, c in terms:
            if c == 1:
                parts.append(labels[k])
            elif c == -1:
                parts.append("-" + labels[k])
            else:
                cs = str(c)
                if not c.is_rational():
                    cs = f"({cs})"
                parts.append(f"{cs}*{labels[k]}")
        return " + ".join(parts)

    cells = [[cell(i, j) for j in range(n)] for i in range(n)]
    width = max(len(x) for x in list(labels) + [c for r in cells for c in r])
    lines = [" " * width + " | " + " | ".join(l.ljust(width) for l in labels)]
    lines.append("-" * len(lines[0]))
    for i in range(n):
        lines.append(labels[i].ljust(width) + " | " + " | ".join(c.ljust(width) for c in cells[i]))
    return "\n".join(l.rstrip() for l in lines)


# -- axioms --------------------------------------------------------------------

@dataclass
class AxiomReport:
    kind: str
    checks: list = field(default_factory=list)   # (name, passed)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def add(self, name: str, ok: bool) -> None:
        self.checks.append((name, bool(ok)))


def verify_family_axioms(fam: CouplingFamily) -> AxiomReport:
    rep = AxiomReport(fam.kind)
    dim = fam.dim
    ident = ExactMatrix.identity(dim)
    if fam.kind == "nilpotent":
        p = fam.params["p"]
        nm = nilpotent_matrix(p)
        rep.add(f"N^{p + 1} = 0", (nm ** (p + 1)).is_zero())
        rep.add(f"N^{p} != 0", not (nm ** p).is_zero())
        rep.add("basis[0] = 1", fam.basis[0] == ident)
    elif fam.kind == "hadamard":
        g1 = fam.basis[1]
        rep.add("G1^T G1 = 2*1", g1.T @ g1 == ident.scale(2))
        rep.add("G2 = G1^T", fam.basis[2] == g1.T)
        rep.add("G3 = (G1 - G2)/2", fam.basis[3] == (g1 - fam.basis[2]).scale(Fraction(1, 2)))
        rep.add("basis[0] = 1", fam.basis[0] == ident)
        rep.notes.append("Gamma^T Gamma = n read as n times the identity (orthogonal rows and columns)")
    elif fam.kind == "idempotent":
        for j, pj in enumerate(fam.basis, start=1):
            rep.add(f"P{j}^2 = P{j}", pj @ pj == pj)
    elif fam.kind == "kidempotent":
        pm = fam.basis[0]
        k = fam.extras["K"]
        p2, p3 = pm @ pm, pm @ pm @ pm
        rep.add("K P^2 K = P", k @ p2 @ k == pm)
        rep.add("K P K = P^2", k @ pm @ k == p2)
        rep.add("K P = P^2 K", k @ pm == p2 @ k)
        rep.add("K P^2 = P K", k @ p2 == pm @ k)
        rep.add("P^3 K = K P^3", p3 @ k == k @ p3)
        rep.add("K P^3 K = P^3", k @ p3 @ k == p3)
        rep.add("P^3 = (K P)^2", p3 == (k @ pm) @ (k @ pm))
        rep.add("P^3 = (P K)^2", p3 == (pm @ k) @ (pm @ k))
        rep.add("P^3 = 1", p3 == ident)
        rep.add("tr P = -1", pm.trace() == -1)
        rep.add("tr P^2 = -1", p2.trace() == -1)
        rep.add("tr P^3 = 2", p3.trace() == 2)
    return rep
