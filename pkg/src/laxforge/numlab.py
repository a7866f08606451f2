"""Pseudo-spectral integration of emitted PDE systems on a periodic grid.

Spatial derivatives are Fourier multipliers, Dinv is 1/(ik) with the zero
mode removed, products are pointwise.  Time stepping is classical RK4.

The linear part of the Kaup-Newell flows, q_t = (i/2) r_xx and
r_t = -(i/2) q_xx, has real growth rates +-k^2/2, so round-off in high modes
grows without bound.  ``kmax`` projects the right-hand side onto |k| <= kmax,
which keeps a desk-scale run finite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .diffring import DiffPoly, FieldVar, NonlocalFactor
from .hierarchy.flows import PDESystem


class CompileError(ValueError):
    pass


class BlowUpError(RuntimeError):
    """Raised when a step produces non-finite values; carries the last good state."""

    def __init__(self, message: str, state: "GridState", log: "ConservationLog"):
        super().__init__(message)
        self.state = state
        self.log = log


def _field_key(name: str) -> tuple:
    lhs = name.split("_")[0]
    return (lhs[0], int(lhs[1:]))


@dataclass
class GridState:
    nx: int
    length: float
    fields: dict                 # (symbol, component) -> complex ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.nx < 2 or self.nx & (self.nx - 1):
            raise ValueError(f"grid size must be a power of two, got {self.nx}")
        for k, v in self.fields.items():
            v = np.asarray(v, dtype=complex)
            if v.shape != (self.nx,):
                raise ValueError(f"field {k} has shape {v.shape}, expected ({self.nx},)")
            self.fields[k] = v

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * (self.length / self.nx)

    def finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.fields.values())

    def copy(self) -> "GridState":
        return GridState(self.nx, self.length, {k: v.copy() for k, v in self.fields.items()}, self.time)

    @classmethod
    def zeros(cls, pde: PDESystem, nx: int, length: float = 2 * math.pi) -> "GridState":
        return cls(nx, length, {_field_key(lhs): np.zeros(nx, complex) for lhs, _ in pde.equations})

    @classmethod
    def from_functions(cls, funcs: dict, nx: int, length: float = 2 * math.pi) -> "GridState":
        x = np.arange(nx) * (length / nx)
        return cls(nx, length, {k: np.asarray(f(x), dtype=complex) * np.ones(nx) for k, f in funcs.items()})


class Spectral:
    """Fourier multipliers on a fixed periodic grid."""

    def __init__(self, nx: int, length: float, kmax: int | None = None):
        self.nx = nx
        self.length = length
        self.k = np.fft.fftfreq(nx, d=length / (2 * math.pi * nx))
        self.ik = 1j * self.k
        self.ik[nx // 2] = 0.0            # odd derivatives drop the Nyquist mode
        inv = np.zeros(nx, complex)
        nz = self.ik != 0
        inv[nz] = 1.0 / self.ik[nz]
        self.inv_ik = inv
        self.kmax = kmax
        self.mask = None if kmax is None else (np.abs(self.k) <= kmax).astype(float)

    def ddx(self, u: np.ndarray, n: int) -> np.ndarray:
        if n == 0:
            return u
        if n % 2 == 0:
            mult = (-(self.k ** 2)) ** (n // 2)
        else:
            mult = self.ik ** n
        return np.fft.ifft(mult * np.fft.fft(u))

    def dinv(self, u: np.ndarray) -> np.ndarray:
        return np.fft.ifft(self.inv_ik * np.fft.fft(u))

    def project(self, u: np.ndarray) -> np.ndarray:
        if self.mask is None:
            return u
        return np.fft.ifft(self.mask * np.fft.fft(u))

    def integral(self, u: np.ndarray) -> complex:
        return complex(np.mean(u) * self.length)


def _collect(p: DiffPoly, fieldvars: set, nonlocals: set, depth: int, max_depth: int):
    for (lam, loc, nl), _ in p.terms.items():
        if lam:
            raise CompileError("spectral parameter left in a right-hand side")
        for v, _e in loc:
            fieldvars.add(v)
        for f, _e in nl:
            if depth + 1 > max_depth:
                raise CompileError(f"nonlocal nesting deeper than {max_depth}")
            nonlocals.add(f)
            _collect(f.integrand, fieldvars, nonlocals, depth + 1, max_depth)


class Evaluator:
    """Numerical right-hand side of a PDESystem (or any list of densities)."""

    MAX_DEPTH = 1

    def __init__(self, names: list, polys: list, kmax: int | None = None):
        self.names = list(names)
        self.keys = [_field_key(n) for n in self.names]
        self.polys = list(polys)
        self.kmax = kmax
        fv, nl = set(), set()
        for p in self.polys:
            _collect(p, fv, nl, 0, self.MAX_DEPTH)
        self.fieldvars = sorted(fv)
        self.nonlocals = sorted(nl)
        self._spec = None

    def spectral(self, state: GridState) -> Spectral:
        s = self._spec
        if s is None or s.nx != state.nx or s.length != state.length:
            s = self._spec = Spectral(state.nx, state.length, self.kmax)
        return s

    def _env(self, state: GridState, spec: Spectral) -> dict:
        env = {}
        zero = np.zeros(state.nx, complex)
        for v in self.fieldvars:
            env[v] = spec.ddx(state.fields.get(v.base, zero), v.xorder)
        for f in self.nonlocals:
            env[f] = spec.dinv(_eval_poly(f.integrand, env, state.nx))
        return env

    def evaluate_polys(self, polys: list, state: GridState) -> list:
        """Grid values of arbitrary densities in the fields of `state`."""
        fv, nl = set(), set()
        for p in polys:
            _collect(p, fv, nl, 0, self.MAX_DEPTH)
        spec = self.spectral(state)
        env = {}
        zero = np.zeros(state.nx, complex)
        for v in fv:
            env[v] = spec.ddx(state.fields.get(v.base, zero), v.xorder)
        for f in sorted(nl):
            env[f] = spec.dinv(_eval_poly(f.integrand, env, state.nx))
        return [_eval_poly(p, env, state.nx) for p in polys]

    def __call__(self, state: GridState) -> dict:
        spec = self.spectral(state)
        env = self._env(state, spec)
        return {k: spec.project(_eval_poly(p, env, state.nx)) for k, p in zip(self.keys, self.polys)}


def _eval_poly(p: DiffPoly, env: dict, nx: int) -> np.ndarray:
    out = np.zeros(nx, complex)
    for (lam, loc, nl), c in p.terms.items():
        term = np.full(nx, complex(c), dtype=complex)
        for v, e in loc:
            term = term * env[v] ** e
        for f, e in nl:
            term = term * env[f] ** e
        out += term
    return out


def compile_rhs(pde: PDESystem, kmax: int | None = None) -> Evaluator:
    return Evaluator([lhs for lhs, _ in pde.equations], [r for _, r in pde.equations], kmax)


# -- monitoring ------------------------------------------------------------------------------

@dataclass
class ConservationLog:
    hamiltonian_name: str = "H"
    pairs: list = field(default_factory=list)          # component indices k of the q_k r_k integrals
    extra_names: list = field(default_factory=list)
    rows: list = field(default_factory=list)           # dicts

    def append(self, row: dict):
        if self.rows and row["time"] < self.rows[-1]["time"]:
            raise ValueError("log time stamps must be monotone")
        self.rows.append(row)

    @property
    def columns(self) -> list:
        cols = ["time", self.hamiltonian_name]
        cols += [f"int_q{k}r{k}" for k in self.pairs]
        cols += ["max_abs_q", "max_abs_r"]
        return cols + list(self.extra_names)

    def series(self, column: str) -> np.ndarray:
        return np.array([row[column] for row in self.rows])

    def drift(self, column: str) -> float:
        """max_t |Q(t) - Q(0)| / |Q(0)| (absolute when Q(0) = 0)."""
        s = self.series(column)
        scale = abs(s[0]) or 1.0
        return float(np.max(np.abs(s - s[0])) / scale)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([_fmt(row[c]) for c in self.columns])


def _fmt(v) -> str:
    if isinstance(v, complex):
        if v.imag == 0:
            return repr(v.real)
        return f"{v.real!r}{v.imag:+.17g}j"
    return repr(v)


class Monitor:
    """Evaluates the logged integrals on a state."""

    def __init__(self, evaluator: Evaluator, hamiltonian: DiffPoly | None = None,
                 pairs: list | None = None, extra: dict | None = None, name: str = "H"):
        size = max((k for _, k in evaluator.keys), default=0)
        self.ev = evaluator
        self.pairs = list(range(1, size + 1)) if pairs is None else list(pairs)
        self.hamiltonian = hamiltonian
        self.extra = dict(extra or {})
        self.name = name

    def new_log(self) -> ConservationLog:
        return ConservationLog(self.name, list(self.pairs), list(self.extra))

    def row(self, state: GridState) -> dict:
        spec = self.ev.spectral(state)
        zero = np.zeros(state.nx, complex)
        f = state.fields
        out = {"time": state.time}
        polys = [self.hamiltonian or DiffPoly()] + list(self.extra.values())
        vals = self.ev.evaluate_polys(polys, state)
        out[self.name] = spec.integral(vals[0])
        for k in self.pairs:
            out[f"int_q{k}r{k}"] = spec.integral(f.get(("q", k), zero) * f.get(("r", k), zero))
        qs = [np.max(np.abs(v)) for (s, _), v in f.items() if s == "q"]
        rs = [np.max(np.abs(v)) for (s, _), v in f.items() if s == "r"]
        out["max_abs_q"] = float(max(qs, default=0.0))
        out["max_abs_r"] = float(max(rs, default=0.0))
        for name, v in zip(self.extra, vals[1:]):
            out[name] = spec.integral(v)
        return out


def _axpy(state: GridState, k: dict, h: float) -> GridState:
    return GridState(state.nx, state.length,
                     {key: v + h * k.get(key, 0) for key, v in state.fields.items()}, state.time + h)


def rk4_step(ev: Evaluator, state: GridState, dt: float) -> GridState:
    k1 = ev(state)
    k2 = ev(_axpy(state, k1, dt / 2))
    k3 = ev(_axpy(state, k2, dt / 2))
    k4 = ev(_axpy(state, k3, dt))
    fields = {key: v + (dt / 6) * (k1[key] + 2 * k2[key] + 2 * k3[key] + k4[key]) if key in k1 else v
              for key, v in state.fields.items()}
    return GridState(state.nx, state.length, fields, state.time + dt)


def integrate(ev: Evaluator, initial: GridState, dt: float, steps: int, stride: int = 10,
              monitor: Monitor | None = None, project_initial: bool = True):
    """Classical RK4 for `steps` steps; returns (final state, ConservationLog)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if steps < 0 or stride < 1:
        raise ValueError("steps must be >= 0 and stride >= 1")
    state = initial.copy()
    if project_initial and ev.kmax is not None:
        spec = ev.spectral(state)
        state.fields = {k: spec.project(v) for k, v in state.fields.items()}
    for key in ev.keys:
        state.fields.setdefault(key, np.zeros(state.nx, complex))
    monitor = monitor or Monitor(ev)
    log = monitor.new_log()
    log.append(monitor.row(state))
    t0 = state.time
    for n in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = rk4_step(ev, state, dt)
        nxt.time = t0 + n * dt
        if not nxt.finite():
            raise BlowUpError(f"non-finite values at step {n} (t = {nxt.time:.6g})", state, log)
        state = nxt
        if n % stride == 0 or n == steps:
            log.append(monitor.row(state))
    return state, log


def smooth_initial(pde: PDESystem, nx: int = 256, amplitude: float = 1e-2, length: float = 2 * math.pi,
                   modes: int = 3, seed: int = 0) -> GridState:
    """Random band-limited data with |k| <= modes, scaled to the given amplitude."""
    rng = np.random.default_rng(seed)
    x = np.arange(nx) * (length / nx)
    kk = 2 * math.pi / length
    fields = {}
    for lhs, _ in pde.equations:
        key = _field_key(lhs)
        u = np.zeros(nx, complex)
        for m in range(-modes, modes + 1):
            c = rng.normal() + 1j * rng.normal()
            u += c * np.exp(1j * m * kk * x) / (1 + m * m)
        fields[key] = amplitude * u / np.max(np.abs(u))
    return GridState(nx, length, fields)


def reduced(state: GridState, keep: int = 1) -> GridState:
    """Zero every component with index above `keep`."""
    out = state.copy()
    for (s, k) in out.fields:
        if k > keep:
            out.fields[(s, k)] = np.zeros(state.nx, complex)
    return out


__all__ = ["GridState", "Spectral", "Evaluator", "compile_rhs", "CompileError", "BlowUpError",
           "ConservationLog", "Monitor", "integrate", "rk4_step", "smooth_initial", "reduced"]
