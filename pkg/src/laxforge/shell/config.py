"""Pipeline configuration and seed files."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..diffring import ParseError, parse_diffpoly, to_text
from ..laxzcc import Symbol
from ..matkit import MatrixError, normalize_kind

FORMATS = ("text", "latex", "json")


class UsageError(ValueError):
    pass


@dataclass
class PipelineConfig:
    family: str
    p: int | None = None
    n: int | None = None
    sign_variant: str = "plain"
    order: int = 2
    m: int = 1
    formats: list = field(default_factory=lambda: ["text"])
    seeds: dict | None = None          # Symbol -> DiffPoly, order-0 overrides
    transpose: bool | None = None

    def __post_init__(self):
        try:
            self.family = normalize_kind(self.family)
        except (MatrixError, ValueError, KeyError) as exc:
            raise UsageError(str(exc)) from None
        if self.family == "nilpotent" and not self.p:
            raise UsageError("nilpotent family needs p >= 1")
        if self.family == "idempotent" and not self.n:
            raise UsageError("idempotent family needs n >= 2")
        if self.sign_variant not in ("plain", "alternating"):
            raise UsageError(f"unknown sign variant {self.sign_variant!r}")
        if self.order < 0 or self.m < 1:
            raise UsageError("order must be >= 0 and m >= 1")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise UsageError(f"unknown output format(s) {bad}")

    @property
    def family_kwargs(self) -> dict:
        kw = {}
        if self.p is not None:
            kw["p"] = self.p
        if self.n is not None:
            kw["n"] = self.n
        if self.family == "nilpotent":
            kw["sign_variant"] = self.sign_variant
        return kw

    def to_json(self) -> dict:
        d = asdict(self)
        d["seeds"] = None if self.seeds is None else {f"{s.letter}{s.slot}": to_text(v) for s, v in self.seeds.items()}
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        if not isinstance(obj, dict) or "family" not in obj:
            raise UsageError("config must be a mapping with a 'family' key")
        known = {"family", "p", "n", "sign_variant", "order", "m", "formats", "seeds", "transpose"}
        extra = set(obj) - known
        if extra:
            raise UsageError(f"unknown config keys {sorted(extra)}")
        kw = dict(obj)
        for k in ("p", "n", "order", "m"):
            if kw.get(k) is not None and not isinstance(kw[k], int):
                raise UsageError(f"config key {k!r} must be an integer")
        if isinstance(kw.get("formats"), str):
            kw["formats"] = [kw["formats"]]
        if kw.get("seeds") is not None:
            kw["seeds"] = parse_seeds(kw["seeds"])
        return cls(**kw)


def load_config(path) -> PipelineConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    return PipelineConfig.from_dict(obj)


_SEED_KEY = re.compile(r"^([ABC])(\d+)(?:\^\(0\))?$")


def parse_seeds(obj: dict) -> dict:
    """{"B1": "r1", "C2": "-q2", "A1": "0"} -> {Symbol: DiffPoly} at order 0."""
    out = {}
    for key, text in obj.items():
        m = _SEED_KEY.match(key.strip())
        if not m:
            raise UsageError(f"bad seed key {key!r}; expected e.g. B1 or B1^(0)")
        try:
            out[Symbol(m.group(1), int(m.group(2)), 0)] = parse_diffpoly(str(text))
        except ParseError as exc:
            raise UsageError(f"seed {key}: {exc}") from None
    return out


def load_seed_file(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read seed file {path}: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError("seed file must hold a JSON object")
    return parse_seeds(obj)
