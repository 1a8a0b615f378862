"""JSON experiment configuration.

A config file may contain three optional sections::

    {
      "session": {"n_signals": 100000, "seed": 7, "attack": {"kind": "intercept-resend"}},
      "search":  {"grid_size": 32},
      "curves":  {"names": ["tau1"], "range": "0:0.4:41"}
    }

Unknown keys anywhere are rejected with the dotted path and the line on
which the key appears.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import attacks
from .attacks import AttackStrategy, CanonicalAttackOp, Sign, SymmetricAttackOp
from .optimizer import SearchConfig
from .protocol import ProtocolConfig
from .quantum import KrausSet


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if path:
            where.append(f"key '{path}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


SESSION_DEFAULTS = {
    f.name: f.default for f in dataclasses.fields(ProtocolConfig) if f.name not in ("n_signals", "attack")
}
SEARCH_DEFAULTS = {f.name: f.default for f in dataclasses.fields(SearchConfig)}
CURVE_DEFAULTS = {"names": ["shannon_sharp"], "range": "0:0.3:31"}

_ATTACK_KEYS = {
    "none": set(),
    "intercept-resend": {"basis"},
    "breidbart": set(),
    "shannon-canonical": {"ops"},
    "collision-symmetric": {"ops"},
    "raw-kraus": {"operators", "partition"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    session: ProtocolConfig | None = None
    search: SearchConfig = SearchConfig()
    curve_names: tuple = tuple(CURVE_DEFAULTS["names"])
    curve_range: str = CURVE_DEFAULTS["range"]


class _Parser:
    def __init__(self, text: str):
        self.text = text

    def line_of(self, key: str) -> int | None:
        m = re.search(r'"%s"\s*:' % re.escape(key), self.text)
        return self.text.count("\n", 0, m.start()) + 1 if m else None

    def fail(self, message, path, key=None):
        raise ConfigError(message, path, self.line_of(key or path.rsplit(".", 1)[-1].split("[")[0]))

    def check_keys(self, obj, allowed, path):
        if not isinstance(obj, dict):
            raise ConfigError("expected a JSON object", path)
        for key in obj:
            if key not in allowed:
                full = f"{path}.{key}" if path else key
                self.fail(f"unknown key (allowed: {', '.join(sorted(allowed))})", full, key)

    def number(self, obj, key, path, kind=float, default=None):
        if key not in obj:
            if default is None:
                self.fail("missing required key", f"{path}.{key}", key)
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not float(v).is_integer()):
            self.fail(f"expected {'an integer' if kind is int else 'a number'}, got {v!r}", f"{path}.{key}", key)
        return kind(v)

    def op(self, rec, path, symmetric):
        allowed = {"a", "b", "eta", "theta"} | ({"sign"} if symmetric else {"phi"})
        self.check_keys(rec, allowed, path)
        theta = self.number(rec, "theta", path, default=0.0)
        try:
            if "eta" in rec:
                if "a" in rec or "b" in rec:
                    self.fail("give either eta or a/b, not both", f"{path}.eta", "eta")
                eta = self.number(rec, "eta", path)
                if symmetric:
                    return SymmetricAttackOp.from_eta(eta, theta)
                return CanonicalAttackOp.from_eta(eta, self.number(rec, "phi", path, default=0.0), theta)
            a, b = self.number(rec, "a", path), self.number(rec, "b", path)
            if symmetric:
                return SymmetricAttackOp(a, b, Sign(rec.get("sign", "minus")), theta)
            return CanonicalAttackOp(a, b, self.number(rec, "phi", path, default=0.0), theta)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            self.fail(str(exc), path, "ops")

    def attack(self, obj, path):
        if obj is None:
            return None
        if not isinstance(obj, dict) or "kind" not in obj:
            self.fail("attack must be null or an object with a 'kind'", path, "attack")
        kind = obj["kind"]
        if kind not in _ATTACK_KEYS:
            self.fail(f"unknown attack kind {kind!r} (known: {', '.join(_ATTACK_KEYS)})", f"{path}.kind", "kind")
        self.check_keys(obj, _ATTACK_KEYS[kind] | {"kind"}, path)
        if kind == "none":
            return None
        if kind == "intercept-resend":
            basis = obj.get("basis", "linear")
            if basis not in ("linear", "circular"):
                self.fail(f"basis must be 'linear' or 'circular', got {basis!r}", f"{path}.basis", "basis")
            return attacks.intercept_resend(basis)
        if kind == "breidbart":
            return attacks.breidbart()
        if kind == "raw-kraus":
            try:
                kraus = KrausSet(np.asarray(obj["operators"], dtype=float), obj.get("partition"))
            except (KeyError, ValueError, TypeError) as exc:
                self.fail(f"invalid operators: {exc}", f"{path}.operators", "operators")
            return AttackStrategy.raw(kraus)
        ops = obj.get("ops")
        if not isinstance(ops, list) or not ops:
            self.fail("expected a nonempty list of operator records", f"{path}.ops", "ops")
        symmetric = kind == "collision-symmetric"
        built = [self.op(rec, f"{path}.ops[{i}]", symmetric) for i, rec in enumerate(ops)]
        return AttackStrategy(tuple(built), kind)

    def session(self, obj):
        path = "session"
        allowed = set(SESSION_DEFAULTS) | {"n_signals", "attack"}
        self.check_keys(obj, allowed, path)
        kwargs = {"n_signals": self.number(obj, "n_signals", path, int)}
        for key, default in SESSION_DEFAULTS.items():
            if key not in obj:
                continue
            if isinstance(default, bool):
                if not isinstance(obj[key], bool):
                    self.fail("expected true or false", f"{path}.{key}", key)
                kwargs[key] = obj[key]
            elif key == "ec_mode":
                kwargs[key] = obj[key]
            else:
                kwargs[key] = self.number(obj, key, path, type(default))
        kwargs["attack"] = self.attack(obj.get("attack"), f"{path}.attack")
        try:
            return ProtocolConfig(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc), path, self.line_of(path)) from None

    def search(self, obj):
        self.check_keys(obj, set(SEARCH_DEFAULTS), "search")
        kwargs = {k: self.number(obj, k, "search", type(d)) for k, d in SEARCH_DEFAULTS.items() if k in obj}
        return SearchConfig(**kwargs)

    def curves(self, obj):
        self.check_keys(obj, set(CURVE_DEFAULTS), "curves")
        names = obj.get("names", CURVE_DEFAULTS["names"])
        if isinstance(names, str):
            names = [names]
        rng = obj.get("range", CURVE_DEFAULTS["range"])
        if not isinstance(rng, str):
            self.fail("range must be a string 'a:b:n'", "curves.range", "range")
        return tuple(names), rng


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    p = _Parser(text)
    p.check_keys(raw, {"session", "search", "curves"}, "")
    cfg = {}
    if "session" in raw:
        cfg["session"] = p.session(raw["session"])
    if "search" in raw:
        cfg["search"] = p.search(raw["search"])
    if "curves" in raw:
        cfg["curve_names"], cfg["curve_range"] = p.curves(raw["curves"])
    return ExperimentConfig(**cfg)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text)


def describe_defaults() -> str:
    """Human-readable listing of every config default, for ``--help``."""
    def fmt(d: dict[str, Any]) -> str:
        return ", ".join(f"{k}={getattr(v, 'value', v)!r}" for k, v in d.items())

    return (
        "config sections and defaults:\n"
        f"  session: n_signals (required), attack=null, {fmt(SESSION_DEFAULTS)}\n"
        f"  session.attack.kind: {', '.join(_ATTACK_KEYS)}\n"
        f"  search: {fmt(SEARCH_DEFAULTS)}\n"
        f"  curves: {fmt(CURVE_DEFAULTS)}"
    )
