"""Finite factor groups given by multiplication tables, and vertex permutations.

Elements of a :class:`FiniteGroup` are the indices ``0 .. order-1`` with 0 the
identity.  Permutations act on the right: ``p * q`` means "apply ``p``, then
``q``", matching the left-to-right action of words on graph vertices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class StructuralError(ValueError):
    """Table or permutation data with the wrong shape (as opposed to a law violation)."""


@dataclass(frozen=True)
class Violation:
    law: str
    witness: dict
    message: str

    def to_dict(self) -> dict:
        return {"law": self.law, "witness": _plain(self.witness), "message": self.message}


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def first(self) -> Violation | None:
        return self.violations[0] if self.violations else None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """A finite group presented by its full multiplication table.

    ``table[g][h]`` is the index of ``g*h``.  Construction only checks the
    shape; use :func:`validate_group` for the group laws.
    """

    name: str
    table: tuple[tuple[int, ...], ...]
    element_names: tuple[str, ...] | None = None

    def __post_init__(self):
        try:
            rows = tuple(tuple(int(x) for x in row) for row in self.table)
        except TypeError as exc:
            raise StructuralError(f"group {self.name!r}: table must be a sequence of rows") from exc
        n = len(rows)
        if n == 0:
            raise StructuralError(f"group {self.name!r}: empty table")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise StructuralError(
                    f"group {self.name!r}: row {i} has {len(row)} entries, expected {n}")
        object.__setattr__(self, "table", rows)
        if self.element_names is not None:
            names = tuple(self.element_names)
            if len(names) != n:
                raise StructuralError(
                    f"group {self.name!r}: {len(names)} element names for order {n}")
            if len(set(names)) != n:
                raise StructuralError(f"group {self.name!r}: element names are not unique")
            object.__setattr__(self, "element_names", names)

    @property
    def order(self) -> int:
        return len(self.table)

    def elements(self) -> range:
        return range(self.order)

    def mul(self, x: int, y: int) -> int:
        return self.table[x][y]

    @cached_property
    def _inverses(self) -> tuple[int, ...]:
        inv = []
        for x in self.elements():
            row = self.table[x]
            try:
                inv.append(row.index(0))
            except ValueError:
                raise StructuralError(f"group {self.name!r}: element {x} has no inverse") from None
        return tuple(inv)

    def inverse(self, x: int) -> int:
        self._check(x)
        return self._inverses[x]

    def power(self, x: int, t: int) -> int:
        if t < 0:
            x, t = self.inverse(x), -t
        result = 0
        for _ in range(t):
            result = self.table[result][x]
        return result

    def element_order(self, x: int) -> int:
        return element_order(self, x)

    def name_of(self, x: int) -> str:
        return self.element_names[x] if self.element_names else str(x)

    def index_of(self, token: str) -> int:
        if self.element_names is None:
            return int(token)
        try:
            return self.element_names.index(token)
        except ValueError:
            raise KeyError(f"unknown element {token!r} in group {self.name!r}") from None

    def _check(self, x: int) -> None:
        if not 0 <= x < self.order:
            raise IndexError(f"element {x} out of range for group {self.name!r} of order {self.order}")

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.table, dtype=np.int64)

    def is_conjugate(self, x: int, y: int) -> bool:
        """Exhaustive search for ``g`` with ``g^-1 x g = y``."""
        self._check(x)
        self._check(y)
        return any(self.mul(self.mul(self.inverse(g), x), g) == y for g in self.elements())

    # -- constructors -------------------------------------------------------

    @classmethod
    def cyclic(cls, n: int, name: str | None = None, names: Sequence[str] | None = None) -> FiniteGroup:
        table = [[(i + j) % n for j in range(n)] for i in range(n)]
        return cls(name or f"Z{n}", table, tuple(names) if names else None)

    @classmethod
    def from_permutations(cls, perms: Sequence[Sequence[int]], name: str = "G") -> FiniteGroup:
        """Table of an explicitly listed group of permutations; the identity must come first."""
        perms = [tuple(p) for p in perms]
        index = {p: i for i, p in enumerate(perms)}
        if len(index) != len(perms):
            raise StructuralError("repeated permutation")
        if perms[0] != tuple(range(len(perms[0]))):
            raise StructuralError("first permutation must be the identity")
        table = []
        for p in perms:
            row = []
            for q in perms:
                pq = tuple(q[p[i]] for i in range(len(p)))
                if pq not in index:
                    raise StructuralError("permutations are not closed under composition")
                row.append(index[pq])
            table.append(row)
        return cls(name, table)

    @classmethod
    def symmetric(cls, n: int, name: str | None = None) -> FiniteGroup:
        perms = list(itertools.permutations(range(n)))
        return cls.from_permutations(perms, name or f"S{n}")

    @classmethod
    def dihedral(cls, n: int, name: str | None = None) -> FiniteGroup:
        """Symmetries of an n-gon (order 2n)."""
        rots = [tuple((i + r) % n for i in range(n)) for r in range(n)]
        refs = [tuple((r - i) % n for i in range(n)) for r in range(n)]
        return cls.from_permutations(rots + refs, name or f"D{n}")

    def direct_product(self, other: FiniteGroup, name: str | None = None) -> FiniteGroup:
        m = other.order
        table = [[self.mul(a1, a2) * m + other.mul(b1, b2)
                  for a2 in self.elements() for b2 in other.elements()]
                 for a1 in self.elements() for b1 in other.elements()]
        return FiniteGroup(name or f"{self.name}x{other.name}", table)


def validate_group(g: FiniteGroup) -> ValidationResult:
    """Check closure, identity, Latin-square (inverses) and associativity laws.

    One violation per broken law, each carrying a witness.  Raises
    :class:`StructuralError` only for a non-square table, which cannot happen
    for a constructed :class:`FiniteGroup` but can for raw data.
    """
    n = g.order
    t = np.asarray(g.table)
    if t.shape != (n, n):
        raise StructuralError(f"table shape {t.shape} does not match order {n}")
    found: list[Violation] = []

    bad = np.argwhere((t < 0) | (t >= n))
    if len(bad):
        i, j = map(int, bad[0])
        found.append(Violation("closure", {"row": i, "column": j, "entry": int(t[i, j])},
                               f"entry ({i},{j}) = {t[i, j]} is not an element index"))
        # remaining laws index through the table
        return ValidationResult(tuple(found))

    ident = np.arange(n)
    for x in range(n):
        if t[0, x] != x or t[x, 0] != x:
            found.append(Violation("identity", {"element": x},
                                   f"0*{x} = {t[0, x]}, {x}*0 = {t[x, 0]}"))
            break

    for axis, label in ((1, "row"), (0, "column")):
        for x in range(n):
            line = t[x] if axis == 1 else t[:, x]
            if not np.array_equal(np.sort(line), ident):
                counts = np.bincount(line, minlength=n)
                dup = int(np.argmax(counts))
                positions = [int(i) for i in np.flatnonzero(line == dup)[:2]]
                found.append(Violation(f"latin-{label}", {label: x, "value": dup, "positions": positions},
                                       f"{label} {x} is not a permutation (value {dup} repeats)"))
                break

    # (g*h)*k versus g*(h*k) over all triples
    left = t[t, :]            # left[g, h, k] = (g*h)*k
    right = t[:, t]           # right[g, h, k] = g*(h*k)
    bad = np.argwhere(left != right)
    if len(bad):
        a, b, c = map(int, bad[0])
        found.append(Violation("associativity", {"triple": [a, b, c]},
                               f"({a}*{b})*{c} = {left[a, b, c]} but {a}*({b}*{c}) = {right[a, b, c]}"))
    return ValidationResult(tuple(found))


def element_order(g: FiniteGroup, x: int) -> int:
    """Least ``t >= 1`` with ``x^t`` the identity."""
    g._check(x)
    y, t = x, 1
    while y != 0:
        y = g.table[y][x]
        t += 1
        if t > g.order:
            raise ValueError(f"element {x} of {g.name!r} has no finite order within the table")
    return t


# -- permutations -------------------------------------------------------------

def orbit_labels(images: np.ndarray) -> np.ndarray:
    """Label every point by the least point of its cycle (pointer doubling)."""
    images = np.asarray(images)
    n = len(images)
    labels = np.arange(n)
    jump = images.copy()
    span = 1
    while span < n:
        labels = np.minimum(labels, labels[jump])
        jump = jump[jump]
        span *= 2
    return labels


def cycle_lengths(images: np.ndarray) -> np.ndarray:
    """Lengths of all cycles, one entry per cycle, ordered by least point."""
    labels = orbit_labels(images)
    counts = np.bincount(labels, minlength=len(labels))
    return counts[counts > 0]


def lcm_of(values: Iterable[int]) -> int:
    return math.lcm(*{int(v) for v in values})


@dataclass(frozen=True, eq=False)
class Permutation:
    """A bijection of ``range(N)``; ``images[v]`` is the image of ``v``."""

    images: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.images, dtype=np.int64)
        if arr.ndim != 1:
            raise StructuralError("permutation images must be one-dimensional")
        n = len(arr)
        if n and (arr.min() < 0 or arr.max() >= n or len(np.unique(arr)) != n):
            raise StructuralError("images do not form a bijection")
        arr.flags.writeable = False
        object.__setattr__(self, "images", arr)

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(np.arange(n))

    @classmethod
    def from_cycles(cls, n: int, *cycles: Sequence[int]) -> Permutation:
        images = list(range(n))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                images[a] = b
        return cls(images)

    def __len__(self) -> int:
        return len(self.images)

    def __call__(self, v: int) -> int:
        return int(self.images[v])

    def __mul__(self, other: Permutation) -> Permutation:
        if len(other) != len(self):
            raise StructuralError("permutations act on different sets")
        return Permutation(other.images[self.images])

    def __pow__(self, t: int) -> Permutation:
        if t < 0:
            return self.inverse() ** (-t)
        result, base = np.arange(len(self)), self.images
        while t:
            if t & 1:
                result = base[result]
            base = base[base]
            t >>= 1
        return Permutation(result)

    def inverse(self) -> Permutation:
        inv = np.empty_like(self.images)
        inv[self.images] = np.arange(len(self))
        return Permutation(inv)

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self.images, other.images)

    def __hash__(self) -> int:
        return hash(self.images.tobytes())

    def __repr__(self) -> str:
        cyc = self.cycles()
        body = "".join("(" + " ".join(map(str, c)) + ")" for c in cyc) or "()"
        return f"Permutation<{len(self)}>{body}"

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.images, np.arange(len(self))))

    def fixed_points(self) -> np.ndarray:
        return np.flatnonzero(self.images == np.arange(len(self)))

    def cycles(self, include_fixed: bool = False) -> list[tuple[int, ...]]:
        seen = np.zeros(len(self), dtype=bool)
        out = []
        for start in range(len(self)):
            if seen[start]:
                continue
            cyc = [start]
            seen[start] = True
            v = int(self.images[start])
            while v != start:
                cyc.append(v)
                seen[v] = True
                v = int(self.images[v])
            if len(cyc) > 1 or include_fixed:
                out.append(tuple(cyc))
        return out

    def cycle_lengths(self) -> np.ndarray:
        return cycle_lengths(self.images)

    def order(self) -> int:
        return perm_order(self)


def perm_order(p: Permutation | np.ndarray) -> int:
    """Order of a permutation: the lcm of its cycle lengths."""
    images = p.images if isinstance(p, Permutation) else np.asarray(p)
    if len(images) == 0:
        return 1
    return math.lcm(*np.unique(cycle_lengths(images)).tolist())


def regular_representation(g: FiniteGroup) -> dict[int, Permutation]:
    """Right-regular action: ``x`` acts by ``v -> v*x``."""
    t = g.array
    return {x: Permutation(t[:, x]) for x in g.elements()}
