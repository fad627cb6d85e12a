"""Splicing ``m`` copies of a base action graph along a u-cycle.

Take a base graph, a cyclically reduced ``u`` starting in A, and a u-cycle
``e_1 ... e_r`` with ``p_i`` the start of ``e_i`` and ``k = k' l(u)``.  In copy
``i`` the A-component of ``p_1`` loses ``p_2``, and ``p_{k+2}`` of copy
``i+1`` takes its place; the A-component of ``p_{k+1}`` in copy ``i`` receives
a new vertex ``n_i`` in place of its own ``p_{k+2}``.  ``p_2`` of every copy
becomes fixed by A, and every ``n_i`` is fixed by B.

The rewiring is expressed as a conjugation of the copy-wise A-action by a
role bijection, so both factors still act by homomorphisms with regular
orbits and the result is an action graph by construction.  The u-cycle
through ``p_1`` of copy 0 then runs through all copies and has length
``(|u| - k') m``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field, replace

import numpy as np

from .action_graph import (ActionGraph, cycle_from, image_order, u_cycle_lengths, validate,
                           word_images)
from .base_quotient import Certificate
from .groups import orbit_labels
from .words import Word


class SurgeryError(ValueError):
    """A surgery precondition failed; escalate the base quotient."""

    def __init__(self, message: str, diagnostic: dict | None = None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


@dataclass(frozen=True)
class CycleSelection:
    u: Word                 # rotated so the first syllable lies in A
    rotation: int           # syllables moved from the front to the back
    conjugator: Word        # rotated u == conjugator^-1 * original u * conjugator
    cycle_start: int
    cycle_vertices: tuple[int, ...] = field(repr=False)
    order: int = 0

    @property
    def r(self) -> int:
        return len(self.cycle_vertices)


def select_u_cycle(base: ActionGraph, u: Word) -> CycleSelection:
    """Rotate ``u`` to start in A and pick the least vertex whose u-cycle realizes the full order."""
    product = base.product
    u = tuple(u)
    if len(u) < 2 or not product.is_cyclically_reduced(u):
        raise ValueError("surgery needs a cyclically reduced u with at least two syllables")
    rotation = 0 if u[0][0] == "A" else 1
    rotated = u[rotation:] + u[:rotation]
    conjugator = u[:rotation]
    order = image_order(base, rotated)
    lengths = u_cycle_lengths(base, rotated)
    full = [s for s, ln in lengths.items() if ln == order]
    if not full:
        raise SurgeryError("no u-cycle realizes the order of u",
                           {"order": order, "cycle_lengths": sorted(set(lengths.values()))})
    cyc = cycle_from(base, rotated, min(full))
    return CycleSelection(rotated, rotation, conjugator, cyc.start, cyc.vertices, order)


@dataclass(frozen=True)
class SurgeryPlan:
    base: ActionGraph
    selection: CycleSelection
    k_prime: int
    m: int
    certificate: Certificate | None = None

    @property
    def u(self) -> Word:
        return self.selection.u

    @property
    def k(self) -> int:
        return self.k_prime * len(self.u)

    @property
    def base_order(self) -> int:
        return self.selection.order

    @property
    def spliced_period(self) -> int:
        """Contribution of each copy to the spliced cycle, in powers of u."""
        return self.base_order - self.k_prime

    def marker(self, i: int) -> int:
        """``p_i`` for 1-based ``i``."""
        verts = self.selection.cycle_vertices
        return verts[(i - 1) % len(verts)]

    @property
    def markers(self) -> dict[str, int]:
        k = self.k
        return {"p1": self.marker(1), "p2": self.marker(2),
                "pk1": self.marker(k + 1), "pk2": self.marker(k + 2)}

    def check(self) -> None:
        """Raise :class:`SurgeryError` unless every plan invariant holds."""
        sel, k = self.selection, self.k
        diag = {"k": k, "r": sel.r, "base_order": sel.order, "k_prime": self.k_prime, "m": self.m}
        if self.m < 3:
            raise SurgeryError("need at least three copies", diag)
        if sel.u[0][0] != "A":
            raise SurgeryError("u must start with an A-syllable", diag)
        if sel.r != len(sel.u) * sel.order:
            raise SurgeryError("chosen cycle does not realize the order of u", diag)
        if sel.order <= self.k_prime:
            raise SurgeryError("order of u must exceed k'", diag)
        if k + 2 > sel.r:
            raise SurgeryError("u-cycle shorter than k+2 edges", diag)
        mk = self.markers
        diag["markers"] = mk
        if len(set(mk.values())) != 4:
            raise SurgeryError("marker vertices p1, p2, p_{k+1}, p_{k+2} collide", diag)
        a_orbit = self.base.factor_orbits("A")
        if a_orbit[mk["p1"]] == a_orbit[mk["pk1"]]:
            raise SurgeryError("p1 and p_{k+1} lie in the same A-component", diag)


def plan_surgery(base: ActionGraph, u: Word, k_prime: int, m: int,
                 certificate: Certificate | None = None) -> SurgeryPlan:
    plan = SurgeryPlan(base, select_u_cycle(base, u), k_prime, m, certificate)
    plan.check()
    return plan


@dataclass(frozen=True, eq=False)
class DeltaGraph:
    graph: ActionGraph
    plan: SurgeryPlan
    region: np.ndarray = field(repr=False)   # copy index 0..m-1 of every vertex
    role: np.ndarray = field(repr=False)     # -1 on the p2 vertices
    markers: dict = field(repr=False)

    @property
    def copies(self) -> int:
        return self.plan.m

    @property
    def spliced_start(self) -> int:
        return int(self.markers["p1"][0])

    def vertex(self, copy: int, v: int) -> int:
        """Global index of base vertex ``v`` in ``copy``; ``v == N`` is the new vertex n_copy."""
        return (copy % self.copies) * (self.plan.base.n_vertices + 1) + v

    def spliced_length(self) -> int:
        return cycle_from(self.graph, self.plan.u, self.spliced_start).length


def build_delta(plan: SurgeryPlan) -> DeltaGraph:
    plan.check()
    base = plan.base
    product = base.product
    m, n = plan.m, base.n_vertices
    size = m * (n + 1)
    idx = np.arange(size)
    copy, local = np.divmod(idx, n + 1)
    is_new = local == n
    old = ~is_new
    mk = plan.markers

    def at(i, v):
        return (i % m) * (n + 1) + v

    def lift(row):
        out = idx.copy()
        out[old] = copy[old] * (n + 1) + row[local[old]]
        return out

    role = idx.copy()
    for i in range(m):
        role[at(i, n)] = at(i, mk["pk2"])
        role[at(i + 1, mk["pk2"])] = at(i, mk["p2"])
    p2s = np.array([at(i, mk["p2"]) for i in range(m)])
    domain = np.ones(size, dtype=bool)
    domain[p2s] = False
    role[p2s] = -1
    role_inv = np.full(size, -1)
    role_inv[role[domain]] = idx[domain]

    a_rows = []
    for x in range(product.A.order):
        lifted = lift(base.a_action[x])
        row = idx.copy()
        row[domain] = role_inv[lifted[role[domain]]]
        a_rows.append(row)
    b_rows = [lift(base.b_action[y]) for y in range(product.B.order)]

    markers = {"p1": [at(i, mk["p1"]) for i in range(m)], "p2": p2s.tolist(),
               "pk1": [at(i, mk["pk1"]) for i in range(m)], "pk2": [at(i, mk["pk2"]) for i in range(m)],
               "n": [at(i, n) for i in range(m)]}
    names = tuple(f"n{i}" if v == n else f"{v}.{i}" for i, v in zip(copy.tolist(), local.tolist()))
    graph = ActionGraph(product, np.array(a_rows), np.array(b_rows), vertex_names=names,
                        regions=copy, markers=markers)
    delta = DeltaGraph(graph, plan, copy, role, markers)

    check = validate(graph)
    if not check.ok:
        raise SurgeryError("spliced graph is not an action graph", check.first().to_dict())
    expected = plan.spliced_period * m
    got = delta.spliced_length()
    if got != expected:
        raise SurgeryError("spliced u-cycle revisits the rewired components",
                           {"expected_length": expected, "length": got})
    return delta


def build_lambda(plan: SurgeryPlan, m: int) -> DeltaGraph:
    """The spliced graph with ``3m`` copies."""
    if m < 1:
        raise ValueError("m must be positive")
    return build_delta(replace(plan, m=3 * m))


@dataclass
class ConfinementReport:
    word: Word
    passed: bool
    cycles_checked: int
    excluded_start: int | None
    failures: list[dict] = field(default_factory=list)

    def to_dict(self, product=None) -> dict:
        return {"word": product.format(self.word) if product else self.word, "passed": self.passed,
                "cycles_checked": self.cycles_checked, "excluded_start": self.excluded_start,
                "failures": self.failures}


def cycle_regions(d: DeltaGraph, w: Word) -> dict[int, list[int]]:
    """Orbit start -> sorted copy indices visited by that w-cycle (all path vertices)."""
    g = d.graph
    labels = orbit_labels(word_images(g, w))
    m = d.copies
    keys = []
    images = np.arange(g.n_vertices)
    for tag, x in w:
        keys.append(labels * m + d.region[images])
        images = g.action(tag)[x][images]
    uniq = np.unique(np.concatenate(keys))
    starts, regs = np.divmod(uniq, m)
    out: dict[int, list[int]] = {}
    for s, r in zip(starts.tolist(), regs.tolist()):
        out.setdefault(s, []).append(r)
    return out


def _consecutive(regions: list[int], m: int) -> bool:
    if len(regions) <= 1:
        return True
    if len(regions) > 2:
        return False
    gap = (regions[1] - regions[0]) % m
    return gap in (1, m - 1)


def verify_confinement(d: DeltaGraph, w: Word, max_failures: int = 5) -> ConfinementReport:
    """Every w-cycle except the spliced one must stay within two neighbouring copies."""
    w = tuple(w)
    if len(w) < 2 or not d.graph.product.is_cyclically_reduced(w):
        raise ValueError("confinement is checked for cyclically reduced words of length >= 2")
    regions = cycle_regions(d, w)
    excluded = None
    if w == d.plan.u:
        labels = orbit_labels(word_images(d.graph, w))
        excluded = int(labels[d.spliced_start])
    failures = []
    for start, regs in regions.items():
        if start == excluded or _consecutive(regs, d.copies):
            continue
        if len(failures) < max_failures:
            failures.append({"start": start, "regions": regs,
                             "length": cycle_from(d.graph, w, start).length})
        else:
            break
    checked = len(regions) - (excluded is not None)
    return ConfinementReport(w, not failures, checked, excluded, failures)


@dataclass
class CycleCensus:
    """The w-cycles of a spliced graph sorted by how they meet the copies.

    ``spanning`` cycles visit every copy; for the focus word these include
    the spliced cycle and, when the first syllable of u has order 2, the
    merged cycle through the ``p_2`` and ``p_{k+2}`` vertices, which runs
    through the copies in the opposite direction.  ``stray`` cycles visit
    more than two copies but not all of them, which no m-independent
    bookkeeping can absorb.
    """

    word: Word
    copies: int
    spliced_start: int | None
    confined: dict[int, int]                    # length -> number of cycles
    spanning: list[tuple[int, int]]             # (start, length), spliced cycle excluded
    stray: list[tuple[int, int]]

    @property
    def spectrum(self) -> dict[int, int]:
        """Confined cycle length -> cycles per copy."""
        out = {}
        for ln, c in sorted(self.confined.items()):
            if c % self.copies:
                raise AssertionError(f"{c} confined cycles of length {ln} not divisible by {self.copies} copies")
            out[ln] = c // self.copies
        return out

    @property
    def confined_lcm(self) -> int:
        return math.lcm(*self.confined) if self.confined else 1

    def spanning_periods(self) -> list[Fraction]:
        """Length of every spanning cycle per copy."""
        return [Fraction(ln, self.copies) for _, ln in self.spanning]

    def to_dict(self) -> dict:
        return {"copies": self.copies, "spliced_start": self.spliced_start,
                "spectrum": {str(k): v for k, v in self.spectrum.items()},
                "spanning": [{"start": s, "length": ln} for s, ln in self.spanning],
                "stray": [{"start": s, "length": ln} for s, ln in self.stray]}


def cycle_census(d: DeltaGraph, w: Word) -> CycleCensus:
    w = tuple(w)
    regions = cycle_regions(d, w)
    lengths = u_cycle_lengths(d.graph, w)
    spliced = None
    if w == d.plan.u:
        labels = orbit_labels(word_images(d.graph, w))
        spliced = int(labels[d.spliced_start])
    confined: dict[int, int] = {}
    spanning, stray = [], []
    for start, regs in sorted(regions.items()):
        ln = lengths[start]
        if start == spliced:
            continue
        if _consecutive(regs, d.copies):
            confined[ln] = confined.get(ln, 0) + 1
        elif len(regs) == d.copies:
            spanning.append((start, ln))
        else:
            stray.append((start, ln))
    return CycleCensus(w, d.copies, spliced, confined, spanning, stray)


def confined_spectrum(d: DeltaGraph, w: Word) -> dict[int, int]:
    """Length -> number per copy of the w-cycles confined to two neighbouring copies."""
    return cycle_census(d, w).spectrum


def confined_lcm(d: DeltaGraph, w: Word) -> int:
    """lcm of the lengths of the confined w-cycles."""
    return cycle_census(d, w).confined_lcm


def region_adjacency_violations(d: DeltaGraph) -> list[dict]:
    """Edges joining copies that are not cyclic neighbours (there should be none)."""
    g, m = d.graph, d.copies
    out = []
    for tag in ("A", "B"):
        act = g.action(tag)
        for x in range(1, act.shape[0]):
            gap = (d.region[act[x]] - d.region) % m
            bad = np.flatnonzero((gap != 0) & (gap != 1) & (gap != m - 1))
            out.extend({"factor": tag, "element": x, "vertex": int(v), "image": int(act[x][v])}
                       for v in bad[:5])
    return out
