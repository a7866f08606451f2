"""Trace identity, Hamiltonians and symplectic-form fitting.

Pairings use the trace form <M (x) X, N (x) Y> = t(M, N) * tr(X Y) with the
coupling factor t either tr(M N) or tr(M^T N).  The transposed form is the
only non-degenerate one for the nilpotent family; the other families use the
plain form, which is ad-invariant for commuting couplings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from types import SimpleNamespace

from .diffring import DiffPoly, euler_derivative, to_text, variational_gradient
from .diffring.poly import FieldVar
from .exactnum import Scalar, format_scalar
from .laxzcc import LinearForm, Symbol, assemble, differentiate_u, full_matrix, spectral_part
from .loopalg import AlgebraElement, represent
from .matkit import CouplingFamily, ExactMatrix, MatrixError, inverse, nilpotent_matrix, nullspace, solve_linear


class GammaError(ValueError):
    pass


# -- inner product ----------------------------------------------------------------------------

def default_transpose(family: CouplingFamily) -> bool:
    return family.kind == "nilpotent"


def gram_matrix(family: CouplingFamily, transpose: bool | None = None) -> ExactMatrix:
    """G[j][k] = t(M_j, M_k) over the slot matrices."""
    if transpose is None:
        transpose = default_transpose(family)
    mats = [family.slot_matrix(k) for k in range(family.size)]
    n = len(mats)
    return ExactMatrix(n, n, [((a.transpose() if transpose else a) @ b).trace() for a in mats for b in mats])


def _prod(a, b):
    if isinstance(a, LinearForm):
        if isinstance(b, LinearForm):
            raise TypeError("pairing of two symbolic operands is not linear")
        return a.scale(b)
    if isinstance(b, LinearForm):
        return b.scale(a)
    return a * b


def _zero_like(x):
    return LinearForm() if isinstance(x, LinearForm) else DiffPoly()


@dataclass
class PairingResult:
    kind: str                       # "lambda", "q1", "r2", ...
    terms: dict                     # lambda power -> LinearForm | DiffPoly

    def at(self, power: int):
        return self.terms.get(power, LinearForm())

    def folded(self):
        out = None
        for s, v in self.terms.items():
            t = v.scale(DiffPoly.lam(s)) if isinstance(v, LinearForm) else v * DiffPoly.lam(s)
            out = t if out is None else out + t
        return out if out is not None else DiffPoly()


def inner_product(P: list, Q: list, family: CouplingFamily, transpose: bool | None = None,
                  kind: str = "") -> PairingResult:
    """Per-slot operands P, Q (AlgebraElements); result by power of lambda."""
    if len(P) != family.size or len(Q) != family.size:
        raise ValueError(f"operands need {family.size} slots, got {len(P)} and {len(Q)}")
    G = gram_matrix(family, transpose)
    out: dict = {}
    for j, pj in enumerate(P):
        for k, qk in enumerate(Q):
            g = G[j, k]
            if not g:
                continue
            for a, ca in pj.terms.items():
                ra, pa = represent(a)
                for b, cb in qk.terms.items():
                    rb, pb = represent(b)
                    t = (ra @ rb).trace() * g
                    if not t:
                        continue
                    v = _prod(ca, cb).scale(t)
                    s = pa + pb
                    out[s] = out[s] + v if s in out else v
    return PairingResult(kind, {s: v for s, v in out.items() if not v.is_zero()})


def brute_force_pairing(P: list, Q: list, family: CouplingFamily, transpose: bool | None = None):
    """tr(P' Q) on the full Kronecker matrices, P' with transposed couplings when asked."""
    if transpose is None:
        transpose = default_transpose(family)
    shim_p = SimpleNamespace(dim=family.dim,
                             slot_matrix=lambda k: family.slot_matrix(k).transpose() if transpose
                             else family.slot_matrix(k))

    def kind_of(els):
        for el in els:
            for c in el.terms.values():
                return "form" if isinstance(c, LinearForm) else "poly"
        return "poly"

    Pf = full_matrix(P, shim_p, kind_of(P))
    Qf = full_matrix(Q, family, kind_of(Q))
    N = len(Pf)
    acc = None
    for i in range(N):
        for k in range(N):
            if Pf[i][k].is_zero() or Qf[k][i].is_zero():
                continue
            t = _prod(Pf[i][k], Qf[k][i])
            acc = t if acc is None else acc + t
    return acc if acc is not None else DiffPoly()


# -- omega weights ----------------------------------------------------------------------------

def omega_weights(p: int) -> ExactMatrix:
    """Closed form: w_jk = (p - J + 1)(p - J + 2)/2 with J = max(j, k)."""
    if p < 1:
        raise ValueError("p must be at least 1")
    vals = []
    for j in range(1, p + 1):
        for k in range(1, p + 1):
            J = max(j, k)
            vals.append(Scalar(Fraction((p - J + 1) * (p - J + 2), 2)))
    return ExactMatrix(p, p, vals)


def omega_brute_force(p: int) -> ExactMatrix:
    """tr((N^j)^T N^k) for j, k = 1..p."""
    N = nilpotent_matrix(p)
    pw = [N ** j for j in range(1, p + 1)]
    return ExactMatrix(p, p, [(a.transpose() @ b).trace() for a in pw for b in pw])


# -- trace identity -----------------------------------------------------------------------------

FIELDS = ("q", "r")


def field_list(size: int) -> list:
    return [(s, k) for k in range(1, size + 1) for s in FIELDS]


@dataclass
class TraceTerm:
    """delta/delta u of <V,U_lambda> at lambda^(s-1) against <V,U_u> at lambda^s."""
    power: int
    field: tuple
    lhs: DiffPoly
    rhs: DiffPoly
    ratio: Scalar | None             # lhs = ratio * rhs
    note: str = ""

    @property
    def gamma(self):
        return None if self.ratio is None else self.ratio - Scalar(self.power)


@dataclass
class GammaResult:
    gamma: Scalar | None
    consistent: bool
    terms: list                       # [TraceTerm]
    transpose: bool
    detail: str = ""

    def describe(self) -> str:
        if self.consistent:
            return f"gamma = {format_scalar(self.gamma)} from {len(self.terms)} matched lambda-coefficients"
        return f"no consistent gamma: {self.detail}"


@dataclass
class Pairings:
    family: CouplingFamily
    transpose: bool
    lam: PairingResult
    fields: dict                      # (sym, k) -> PairingResult
    complete_order: int               # symbols above this order are not solved


def stationary_v(ht, lp=None) -> list:
    """Symbolic V of the table, plus the spectral constant found by the seed check."""
    lp = lp or ht.lax
    V = list(lp.V)
    a = ht.seed_report.spectral_constant
    if a:
        u0 = spectral_part(lp.template, lp.family)
        V = [V[k] + u0[k].map(lambda c: LinearForm.constant(c.scale(a))) for k in range(lp.size)]
    return V


def compute_pairings(ht, transpose: bool | None = None) -> Pairings:
    fam = ht.family
    if transpose is None:
        transpose = default_transpose(fam)
    big = assemble(fam, ht.max_order + 1, ht.lax.template)
    V = stationary_v(ht, big)
    lam = inner_product(V, differentiate_u(big, "lambda"), fam, transpose, "lambda")
    flds = {}
    for f in field_list(fam.size):
        flds[f] = inner_product(V, differentiate_u(big, f), fam, transpose, f"{f[0]}{f[1]}")
    return Pairings(fam, transpose, lam, flds, ht.max_order)


def _complete(form, limit: int) -> bool:
    if not isinstance(form, LinearForm):
        return True
    return all(s.order <= limit for s in form.symbols())


def _ratio(lhs: DiffPoly, rhs: DiffPoly):
    if rhs.is_zero():
        return None
    mono = next(iter(rhs.terms))
    c = lhs.terms.get(mono, Scalar(0)) / rhs.terms[mono]
    return c if (lhs - rhs.scale(c)).is_zero() else None


def trace_terms(ht, pairings: Pairings | None = None) -> list:
    """Both sides of the identity at every complete lambda order."""
    pr = pairings or compute_pairings(ht)
    out = []
    for f, res in pr.fields.items():
        for s in sorted(res.terms):
            Y = res.terms[s]
            X = pr.lam.at(s - 1)
            if not (_complete(Y, pr.complete_order) and _complete(X, pr.complete_order)):
                continue
            yv = Y.evaluate(ht.entries) if isinstance(Y, LinearForm) else Y
            xv = X.evaluate(ht.entries) if isinstance(X, LinearForm) else X
            lhs = euler_derivative(xv, FieldVar(f[0], f[1]))
            if yv.is_zero() and lhs.is_zero():
                continue
            r = _ratio(lhs, yv)
            note = "" if r is not None else f"not proportional: lhs {to_text(lhs)}, rhs {to_text(yv)}"
            out.append(TraceTerm(s, f, lhs, yv, r, note))
    return out


def gamma_from_terms(terms: list, transpose: bool = False) -> GammaResult:
    """Solve gamma; needs matched coefficients at two or more lambda orders."""
    orders = {t.power for t in terms}
    if len(orders) < 2:
        raise GammaError(f"gamma needs at least two lambda orders, have {len(orders)}")
    bad = [t for t in terms if t.ratio is None]
    cands = {t.gamma for t in terms if t.ratio is not None}
    if bad:
        t = bad[0]
        return GammaResult(None, False, terms, transpose,
                           f"{len(bad)} coefficient(s) not proportional, first at lambda^{t.power} "
                           f"for {t.field[0]}{t.field[1]}: {t.note}")
    if len(cands) != 1:
        by = {}
        for t in terms:
            by.setdefault(format_scalar(t.gamma), []).append(t.power)
        return GammaResult(None, False, terms, transpose,
                           "orders disagree: " + "; ".join(f"gamma={g} at powers {sorted(set(p))}"
                                                           for g, p in by.items()))
    return GammaResult(cands.pop(), True, terms, transpose)


def solve_gamma(ht, transpose: bool | None = None) -> GammaResult:
    pr = compute_pairings(ht, transpose)
    return gamma_from_terms(trace_terms(ht, pr), pr.transpose)


# -- Hamiltonians ---------------------------------------------------------------------------------

@dataclass
class HamiltonianRecord:
    family: CouplingFamily
    gamma: Scalar
    m: int
    form: LinearForm                 # in table symbols
    density: DiffPoly
    power: int                       # lambda power s of the matching <V,U_u> coefficient
    gradient_ok: bool                # delta H / delta u equals <V,U_u> at lambda^s
    transpose: bool = False

    def text(self) -> str:
        from .laxzcc import format_linear_form
        return format_linear_form(self.form)


def hamiltonian_power(template, m: int) -> int:
    """lambda power s of <V,U_u> whose partner <V,U_lambda> carries A^(m+1)."""
    return template.v_degrees(m + 1)[0] + template.spectral_degree


def hamiltonian(ht, gamma, m: int, transpose: bool | None = None,
                pairings: Pairings | None = None) -> HamiltonianRecord:
    if gamma is None:
        raise GammaError("Hamiltonian needs a solved gamma")
    if m + 1 > ht.max_order:
        raise GammaError(f"H_{m} needs order {m + 1}; table has {ht.max_order}")
    pr = pairings or compute_pairings(ht, transpose)
    gamma = Scalar.coerce(gamma)
    s = hamiltonian_power(ht.lax.template, m)
    denom = gamma + Scalar(s)
    if not denom:
        raise GammaError(f"gamma + s vanishes at s = {s}")
    X = pr.lam.at(s - 1)
    form = X.scale(denom.inverse()) if isinstance(X, LinearForm) else LinearForm.constant(X.scale(denom.inverse()))
    density = form.evaluate(ht.entries)
    ok = True
    for f, res in pr.fields.items():
        Y = res.at(s)
        yv = Y.evaluate(ht.entries) if isinstance(Y, LinearForm) else Y
        if not (euler_derivative(density, FieldVar(f[0], f[1])) - yv).is_zero():
            ok = False
    return HamiltonianRecord(ht.family, gamma, m, form, density, s, ok, pr.transpose)


def _A(k, m):
    return LinearForm.symbol(Symbol("A", k, m))


def displayed_hamiltonian(family: CouplingFamily, m: int) -> LinearForm:
    """The printed closed forms, as linear forms in the table symbols."""
    kind = family.kind
    if kind == "hadamard":
        # line 343
        f = sum((_A(j, m + 1) for j in range(1, 4)), LinearForm())
        return f.scale(Scalar(Fraction(4, m + 2)))
    if kind == "idempotent":
        # line 422
        f = sum((_A(j, m + 1).scale(Scalar(j)) for j in range(1, family.size + 1)), LinearForm())
        return f.scale(Scalar(Fraction(2, m + 2)))
    if kind == "kidempotent":
        # line 543
        f = _A(1, m + 1).scale(Scalar(2)) - _A(2, m + 1) - _A(3, m + 1)
        return f.scale(Scalar(Fraction(2, m + 2)))
    # line 219
    p = family.params["p"]
    w = omega_weights(p)
    q = lambda k: DiffPoly.var("q", k)
    r = lambda k: DiffPoly.var("r", k)
    sym = lambda L, k, o: LinearForm.symbol(Symbol(L, k, o))
    f = (_A(1, m + 1).scale(Scalar(0, 4)) - sym("C", 1, m).scale(q(1)) - sym("B", 1, m).scale(r(1))).scale(Scalar(p + 1))
    for j in range(1, p + 1):
        for k in range(1, p + 1):
            f = f - (sym("C", j + 1, m).scale(q(k + 1)) + sym("B", j + 1, m).scale(r(k + 1))).scale(w[j - 1, k - 1])
    return f.scale(Scalar(Fraction(1, 2 * m + 2)))


@dataclass
class FormComparison:
    exact: bool
    same_support: bool
    ratio: Scalar | None             # displayed = ratio * derived, when proportional
    detail: str


def compare_forms(derived: LinearForm, displayed: LinearForm) -> FormComparison:
    dk = {k for k, v in derived.terms.items() if not v.is_zero()}
    rk = {k for k, v in displayed.terms.items() if not v.is_zero()}
    if (derived - displayed).is_zero():
        return FormComparison(True, True, Scalar(1), "exact match")
    if dk != rk:
        miss = sorted(str(k[0]) for k in dk - rk)
        extra = sorted(str(k[0]) for k in rk - dk)
        return FormComparison(False, False, None, f"support differs: derived only {miss}, printed only {extra}")
    ratio = None
    for k in dk:
        c = _ratio(displayed.terms[k], derived.terms[k])
        if c is None or (ratio is not None and c != ratio):
            return FormComparison(False, True, None, "same symbols, coefficients not proportional")
        ratio = c
    return FormComparison(False, True, ratio, f"printed = {format_scalar(ratio)} * derived")


# -- symplectic form ----------------------------------------------------------------------------

CONVENTIONS = ("W^-1 D", "W^-1")


@dataclass
class SymplecticForm:
    convention: str
    W: ExactMatrix | None
    verified: bool
    status: str                      # "verified", "verified-singular", "no-solution", "degenerate"
    nullity: int = 0
    J: ExactMatrix | None = None     # W^-1 when it exists
    skew: bool | None = None
    residual: str = ""

    def describe(self) -> str:
        base = f"J = {self.convention}: {self.status}"
        if self.nullity:
            base += f" (W not unique, {self.nullity} free directions)"
        if self.skew is not None:
            base += ", J skew-adjoint" if self.skew else ", J NOT skew-adjoint"
        if self.residual:
            base += f"; {self.residual}"
        return base


def _coeff_rows(polys: list, target: DiffPoly):
    keys = set(target.terms)
    for p in polys:
        keys |= set(p.terms)
    keys = sorted(keys, key=lambda k: DiffPoly({k: Scalar(1)}).sort_key())
    zero = Scalar(0)
    A = [[p.terms.get(k, zero) for p in polys] for k in keys]
    b = [target.terms.get(k, zero) for k in keys]
    return A, b


def fit_symplectic(pde, H, convention: str = "W^-1 D") -> SymplecticForm:
    """Constant W with W * flows = D grad H (or grad H), solved row by row."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    density = H.density if isinstance(H, HamiltonianRecord) else H
    F = [rhs for _, rhs in pde.equations]
    size = len(F) // 2
    grad = variational_gradient(density, size)
    targets = [g.ddx() if convention == "W^-1 D" else g for g in grad]
    if all(f.is_zero() for f in F) and all(t.is_zero() for t in targets):
        return SymplecticForm(convention, None, False, "degenerate", residual="zero flow and zero gradient")
    rows = []
    nullity = 0
    for i, t in enumerate(targets):
        A, b = _coeff_rows(F, t)
        x = solve_linear(A, b)
        if x is None:
            return SymplecticForm(convention, None, False, "no-solution",
                                  residual=f"row {i + 1}: {pde.equations[i][0]} has no constant combination")
        nullity = max(nullity, len(nullspace(A, len(F))))
        rows.append(x)
    W = ExactMatrix.from_rows(rows)
    # W F = target holds by construction; re-check symbolically
    for i, t in enumerate(targets):
        acc = DiffPoly()
        for j, f in enumerate(F):
            if W[i, j]:
                acc = acc + f.scale(W[i, j])
        if not (acc - t).is_zero():
            return SymplecticForm(convention, W, False, "no-solution", nullity, residual=f"row {i + 1} fails")
    try:
        J = inverse(W)
    except MatrixError:
        return SymplecticForm(convention, W, True, "verified-singular", nullity,
                              residual="W is singular, so J does not exist")
    # J D is skew iff J symmetric; a constant J is skew iff antisymmetric
    skew = J == J.transpose() if convention == "W^-1 D" else J == -J.transpose()
    return SymplecticForm(convention, W, True, "verified", nullity, J, skew)


def fit_both(pde, H) -> dict:
    return {c: fit_symplectic(pde, H, c) for c in CONVENTIONS}


def resolve_convention(fits: dict) -> str | None:
    ok = [c for c, f in fits.items() if f.status == "verified"]
    return ok[0] if len(ok) == 1 else (ok[0] if ok else None)


# -- printed W displays ---------------------------------------------------------------------------

@dataclass
class DisplayedMatrix:
    label: str                       # "W" or "J": what the display is labeled as
    entries: dict                    # (i, j) -> Scalar for the displayed rows (0-based)
    rows: set                        # rows the display actually shows
    line: int
    size: int


def _from_full(rows: list, label: str, line: int, scale=Fraction(1)) -> DisplayedMatrix:
    n = len(rows)
    ent = {(i, j): Scalar(Fraction(v) * scale) for i, r in enumerate(rows) for j, v in enumerate(r)}
    return DisplayedMatrix(label, ent, set(range(n)), line, n)


def displayed_w(family: CouplingFamily) -> DisplayedMatrix:
    kind = family.kind
    if kind == "kidempotent":
        # line 551
        rows = [[0, 2, 0, -1, 0, -1], [-2, 0, 1, 0, 1, 0], [0, -1, 0, -1, 0, 2],
                [1, 0, 1, 0, -2, 0], [0, -1, 0, 2, 0, -1], [1, 0, -2, 0, 1, 0]]
        return _from_full(rows, "W", 551, Fraction(1, 2))
    if kind == "hadamard":
        # line 351; labeled J although the text says J = W^-1
        rows = [[0, 1, 0, 1, 0, 1, 0, 0], [-1, 0, -1, 0, -1, 0, 0, 0], [0, 1, 0, 0, 0, 2, 0, -1],
                [-1, 0, 0, 0, -2, 0, 1, 0], [0, 1, 0, 2, 0, 0, 0, -1], [-1, 0, -2, 0, 0, 0, 1, 0],
                [0, 0, 0, -1, 0, 1, 0, -1], [0, 0, 1, 0, -1, 0, 1, 0]]
        return _from_full(rows, "J", 351)
    if kind == "idempotent":
        # line 435; general row pattern, with the irregular third row kept as printed
        n = family.size
        ent = {}
        for nu in range(1, n + 1):
            for j in range(1, n + 1):
                vq = vr = min(nu, j)
                if nu == 2 and j in (3, 4):
                    vq = 1
                ent[(2 * nu - 2, 2 * j - 1)] = Scalar(Fraction(vq, 2))
                ent[(2 * nu - 1, 2 * j - 2)] = Scalar(Fraction(-vr, 2))
                ent[(2 * nu - 2, 2 * j - 2)] = Scalar(0)
                ent[(2 * nu - 1, 2 * j - 1)] = Scalar(0)
        return DisplayedMatrix("W", ent, set(range(2 * n)), 435, 2 * n)
    # line 228; nilpotent rows: the slot-1 pair, then one pair per omega column l = 2..p
    p = family.params["p"]
    size = 2 * (p + 1)
    w = omega_weights(p)
    ent = {(0, j): Scalar(0) for j in range(size)}
    ent.update({(1, j): Scalar(0) for j in range(size)})
    ent[(0, 1)] = Scalar(-1)
    ent[(1, 0)] = Scalar(-1)
    rows = {0, 1}
    for l in range(2, p + 1):
        rq, rr = 2 * l, 2 * l + 1
        rows |= {rq, rr}
        for j in range(size):
            ent[(rq, j)] = Scalar(0)
            ent[(rr, j)] = Scalar(0)
        for j in range(1, p + 1):
            ent[(rq, 2 * j + 1)] = -w[j - 1, l - 1]
            ent[(rr, 2 * j)] = -w[j - 1, l - 1]
    return DisplayedMatrix("W", ent, rows, 228, size)


@dataclass
class MatrixDiff:
    compared: str                    # "W" or "J"
    mismatches: list                 # [(i, j, fitted, printed)]
    ratio: Scalar | None             # printed = ratio * fitted on all shown rows
    rows_shown: int
    detail: str

    @property
    def exact(self) -> bool:
        return not self.mismatches


def diff_displayed(fit: SymplecticForm, shown: DisplayedMatrix) -> MatrixDiff:
    M = fit.W if shown.label == "W" else fit.J
    if M is None:
        return MatrixDiff(shown.label, [], None, len(shown.rows),
                          f"fitted {shown.label} unavailable ({fit.status})")
    if M.rows != shown.size:
        return MatrixDiff(shown.label, [], None, len(shown.rows),
                          f"size mismatch: fitted {M.rows}, printed {shown.size}")
    mism = []
    ratio = None
    prop = True
    for (i, j), v in sorted(shown.entries.items()):
        f = M[i, j]
        if f != v:
            mism.append((i + 1, j + 1, f, v))
        if f:
            c = v / f
            if ratio is None:
                ratio = c
            elif c != ratio:
                prop = False
        elif v:
            prop = False
    if not prop:
        ratio = None
    if not mism:
        detail = "exact match on the displayed rows"
    elif ratio is not None:
        detail = f"printed = {format_scalar(ratio)} * fitted on the displayed rows"
    else:
        detail = f"{len(mism)} displayed entries differ"
    return MatrixDiff(shown.label, mism, ratio, len(shown.rows), detail)


__all__ = ["GammaError", "default_transpose", "gram_matrix", "PairingResult", "inner_product",
           "brute_force_pairing", "omega_weights", "omega_brute_force", "TraceTerm", "GammaResult",
           "Pairings", "compute_pairings", "trace_terms", "gamma_from_terms", "solve_gamma",
           "HamiltonianRecord", "hamiltonian", "hamiltonian_power", "displayed_hamiltonian",
           "FormComparison", "compare_forms", "SymplecticForm", "fit_symplectic", "fit_both",
           "resolve_convention", "CONVENTIONS", "DisplayedMatrix", "displayed_w", "MatrixDiff",
           "diff_displayed", "field_list", "stationary_v"]
