"""Flat ``key = value`` configuration files.

Example::

    group.A.name = Z2
    group.A.elements = 1 a
    group.A.row.1 = 1 a
    group.A.row.a = a 1
    group.B.name = Z3
    group.B.elements = 1 b B
    group.B.row.1 = 1 b B
    group.B.row.b = b B 1
    group.B.row.B = B 1 b
    word.u1 = a b
    word.u2 = a b a B
    target.u1 = 1
    target.u2 = 2
    param.k_prime = 2

``group.X.row.t`` lists the products ``t * s`` for every element ``s`` in the
order of ``group.X.elements``; the identity comes first.  Words keep the
order in which they appear.  Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .groups import FiniteGroup, validate_group
from .omnipotence import PipelineParams
from .words import FACTORS, FreeProduct, Word


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


# param key -> (PipelineParams field, parser)
def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _ints(text: str) -> tuple[int, ...]:
    return parse_int_list(text)


def _int(text: str) -> int:
    return int(text)


def _opt_int(text: str) -> int | None:
    return None if text.lower() in ("auto", "none") else int(text)


PARAMS = {
    "k_prime": ("k_prime", _opt_int),
    "k_primes": ("k_primes", _ints),
    "girth_target": ("girth_target", _int),
    "near_margin": ("near_margin", _int),
    "max_vertices": ("max_vertices", _int),
    "seed": ("seed", _int),
    "attempt_budget": ("attempt_budget", _int),
    "paper_constants": ("paper_constants", _bool),
    "model": ("model", str),
    "m_range": ("m_range", _ints),
    "family_pool": ("family_pool", _int),
    "base_budget": ("base_budget", _int),
    "family_max_vertices": ("family_max_vertices", _int),
    "proposition_mode": ("proposition", _bool),
}


def parse_int_list(text: str) -> tuple[int, ...]:
    """``"1 2 3"``, ``"1,2,3"`` or ``"1-3"``."""
    text = text.strip()
    if "-" in text and "," not in text and " " not in text:
        lo, hi = (int(x) for x in text.split("-", 1))
        if hi < lo:
            raise ValueError(f"empty range {text!r}")
        return tuple(range(lo, hi + 1))
    parts = text.replace(",", " ").split()
    if not parts:
        raise ValueError("empty list")
    return tuple(int(p) for p in parts)


@dataclass
class GroupBlock:
    name: str = ""
    elements: list[str] = field(default_factory=list)
    rows: dict[str, list[str]] = field(default_factory=dict)
    lines: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "elements": self.elements,
                "rows": {t: self.rows[t] for t in self.elements}}


@dataclass
class ConfigDocument:
    groups: dict[str, GroupBlock]
    words: dict[str, str]
    targets: dict[str, int]
    params: PipelineParams

    def product(self) -> FreeProduct:
        return build_product(self.groups)

    def parsed_words(self) -> dict[str, Word]:
        product = self.product()
        return {name: product.parse(text) for name, text in self.words.items()}

    def to_dict(self) -> dict:
        return {"groups": {tag: self.groups[tag].to_dict() for tag in FACTORS},
                "words": dict(self.words), "targets": dict(self.targets),
                "params": self.params.to_dict()}


def build_group(block: GroupBlock, tag: str) -> FiniteGroup:
    pos = {t: i for i, t in enumerate(block.elements)}
    table = np.array([[pos[t] for t in block.rows[s]] for s in block.elements], dtype=np.int64)
    return FiniteGroup(block.name or tag, table, tuple(block.elements))


def build_product(groups: dict[str, GroupBlock]) -> FreeProduct:
    return FreeProduct(build_group(groups["A"], "A"), build_group(groups["B"], "B"))


def group_from_dict(d: dict) -> GroupBlock:
    return GroupBlock(d["name"], list(d["elements"]), {k: list(v) for k, v in d["rows"].items()})


def parse_config(text: str, overrides: dict | None = None) -> ConfigDocument:
    groups = {tag: GroupBlock() for tag in FACTORS}
    words: dict[str, str] = {}
    word_lines: dict[str, int] = {}
    targets: dict[str, int] = {}
    target_lines: dict[str, int] = {}
    values = {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("missing key", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", lineno, key)
        seen[key] = lineno
        parts = key.split(".")
        if parts[0] == "group":
            if len(parts) < 3 or parts[1] not in FACTORS:
                raise ConfigError("group keys look like group.A.name, group.A.elements, group.A.row.<token>",
                                  lineno, key)
            block = groups[parts[1]]
            if parts[2] == "name" and len(parts) == 3:
                block.name = value
            elif parts[2] == "elements" and len(parts) == 3:
                toks = value.split()
                if not toks:
                    raise ConfigError("no elements listed", lineno, key)
                if len(set(toks)) != len(toks):
                    raise ConfigError("element tokens must be unique", lineno, key)
                block.elements = toks
            elif parts[2] == "row" and len(parts) == 4:
                block.rows[parts[3]] = value.split()
            else:
                raise ConfigError("unknown group field", lineno, key)
            block.lines[key] = lineno
        elif parts[0] == "word" and len(parts) == 2:
            words[parts[1]] = value
            word_lines[parts[1]] = lineno
        elif parts[0] == "target" and len(parts) == 2:
            try:
                targets[parts[1]] = int(value)
            except ValueError:
                raise ConfigError(f"target must be an integer, got {value!r}", lineno, key) from None
            if targets[parts[1]] < 1:
                raise ConfigError("target must be positive", lineno, key)
            target_lines[parts[1]] = lineno
        elif parts[0] == "param" and len(parts) == 2:
            if parts[1] not in PARAMS:
                raise ConfigError(f"unknown parameter; known: {', '.join(sorted(PARAMS))}", lineno, key)
            name, conv = PARAMS[parts[1]]
            try:
                values[name] = conv(value)
            except ValueError as e:
                raise ConfigError(str(e), lineno, key) from None
        else:
            raise ConfigError("unknown key", lineno, key)

    for tag in FACTORS:
        _check_group(groups[tag], tag)
    for name, ln in target_lines.items():
        if name not in words:
            raise ConfigError(f"target for undeclared word {name!r}", ln, f"target.{name}")
    if not words:
        raise ConfigError("no words declared (use word.<name> = tokens)")
    product = build_product(groups)
    for name, text in words.items():
        key = f"word.{name}"
        try:
            product.parse(text)
        except (KeyError, IndexError) as e:
            raise ConfigError(str(e).strip("'\""), word_lines[name], key) from None
    for name in words:
        targets.setdefault(name, 1)
    try:
        params = PipelineParams(**values)
        if overrides:
            params = replace(params, **overrides)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    _check_params(params)
    return ConfigDocument(groups, words, {n: targets[n] for n in words}, params)


def _check_group(block: GroupBlock, tag: str) -> None:
    prefix = f"group.{tag}"
    if not block.elements:
        raise ConfigError("missing element list", key=f"{prefix}.elements")
    ln = block.lines.get(f"{prefix}.elements")
    for t in block.rows:
        if t not in block.elements:
            raise ConfigError(f"row for undeclared token {t!r}", block.lines[f"{prefix}.row.{t}"], f"{prefix}.row.{t}")
    for t in block.elements:
        key = f"{prefix}.row.{t}"
        if t not in block.rows:
            raise ConfigError("missing multiplication row", ln, key)
        row = block.rows[t]
        if len(row) != len(block.elements):
            raise ConfigError(f"row has {len(row)} entries, expected {len(block.elements)}", block.lines[key], key)
        for x in row:
            if x not in block.elements:
                raise ConfigError(f"unknown token {x!r}", block.lines[key], key)
    e = block.elements[0]
    if block.rows[e] != block.elements or any(block.rows[t][0] != t for t in block.elements):
        raise ConfigError("the first listed element must be the identity", ln, f"{prefix}.elements")
    check = validate_group(build_group(block, tag))
    if not check.ok:
        v = check.first()
        raise ConfigError(f"not a group ({v.law}): {v.message}", ln, f"{prefix}.row")


def _check_params(p: PipelineParams) -> None:
    def bad(name, msg):
        raise ConfigError(msg, key=f"param.{name}")
    if p.k_prime is not None and p.k_prime < 1:
        bad("k_prime", "must be positive")
    if any(k < 1 for k in p.k_primes):
        bad("k_primes", "must be positive")
    if p.girth_target < 1:
        bad("girth_target", "must be at least 1")
    if p.near_margin < 0:
        bad("near_margin", "must be nonnegative")
    if p.max_vertices < 1:
        bad("max_vertices", "must be positive")
    if p.attempt_budget < 1:
        bad("attempt_budget", "must be positive")
    if len(p.m_range) < 3 or any(m < 1 for m in p.m_range) or len(set(p.m_range)) != len(p.m_range):
        bad("m_range", "needs at least three distinct positive values")
    if p.model not in ("random", "cover"):
        bad("model", "must be 'random' or 'cover'")


def load_config(path, overrides: dict | None = None) -> ConfigDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def params_from_dict(d: dict) -> PipelineParams:
    known = {f.name for f in fields(PipelineParams)}
    kw = {k: v for k, v in d.items() if k in known}
    for k in ("k_primes", "m_range"):
        if k in kw:
            kw[k] = tuple(kw[k])
    return PipelineParams(**kw)
