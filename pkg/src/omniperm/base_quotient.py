"""Certified finite quotients of A*B found by generate-and-verify.

Two candidate models are available.  ``"random"``: A acts by disjoint copies
of its regular representation on consecutive blocks, B by regular copies on
a randomly shuffled block structure.  ``"cover"``: the same random graph is
used only as a seed, and the candidate is the Cayley graph of the
permutation group it generates (its regular cover).  Covers are vertex
transitive, so every u-cycle realizes the full order of u, and their girth
is much larger than that of a random graph of the same size.

:func:`certify` checks freeness, syllable girth, near-vertex margins and
order bounds explicitly, so a passing certificate does not depend on luck.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .action_graph import (ActionGraph, enumerate_u_cycles, has_l_near_vertices, image_order,
                           syllable_girth, u_cycle_lengths, validate)
from .words import FreeProduct, Word

logger = logging.getLogger(__name__)

MODELS = ("random", "cover")


class BudgetExceeded(RuntimeError):
    """No candidate passed within the vertex/attempt budget."""

    def __init__(self, message: str, best: Certificate | None = None, trace: list | None = None):
        super().__init__(message)
        self.best = best
        self.trace = trace or []


@dataclass(frozen=True)
class QuotientSpec:
    words: tuple[Word, ...]
    girth_target: int = 4
    near_margin: int = 0
    min_orders: dict = field(default_factory=dict)
    max_vertices: int = 768
    min_vertices: int = 0
    seed: int = 0
    attempt_budget: int = 40
    k_prime: int = 1
    paper_constants: bool = False
    require_full_cycle: bool = False
    model: str = "random"

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(tuple(w) for w in self.words))
        if not self.words:
            raise ValueError("QuotientSpec needs at least one word")
        if self.girth_target < 1:
            raise ValueError("girth target must be at least 1")
        if self.near_margin < 0:
            raise ValueError("near margin must be nonnegative")
        if self.model not in MODELS:
            raise ValueError(f"unknown candidate model {self.model!r}; expected one of {MODELS}")
        if self.k_prime < 1:
            raise ValueError("k' must be positive")
        if self.paper_constants and self.k_prime * len(self.focus) < 10 * self.max_length:
            raise ValueError(f"large-constant mode needs k'*l(u) >= 10*s, got {self.k_prime}*{len(self.focus)} "
                             f"< 10*{self.max_length}")

    @property
    def focus(self) -> Word:
        return self.words[0]

    @property
    def k(self) -> int:
        return self.k_prime * len(self.focus)

    @property
    def max_length(self) -> int:
        return max(len(w) for w in self.words)

    @classmethod
    def with_paper_constants(cls, words: Sequence[Word], k_prime: int | None = None, **kwargs) -> QuotientSpec:
        """Girth 10k, margin k+4 and focus order above 10k, with the least admissible k' by default."""
        words = tuple(tuple(w) for w in words)
        s = max(len(w) for w in words)
        lu = len(words[0])
        if k_prime is None:
            k_prime = -(-10 * s // lu)
        k = k_prime * lu
        return cls(words, girth_target=10 * k, near_margin=k + 4, min_orders={words[0]: 10 * k},
                   k_prime=k_prime, paper_constants=True, **kwargs)

    def to_dict(self, product: FreeProduct | None = None) -> dict:
        fmt = product.format if product else str
        return {"words": [fmt(w) for w in self.words], "girth_target": self.girth_target,
                "near_margin": self.near_margin,
                "min_orders": {fmt(w): b for w, b in self.min_orders.items()},
                "max_vertices": self.max_vertices, "min_vertices": self.min_vertices,
                "seed": self.seed, "attempt_budget": self.attempt_budget, "k_prime": self.k_prime,
                "paper_constants": self.paper_constants, "require_full_cycle": self.require_full_cycle,
                "model": self.model}


@dataclass(frozen=True)
class CheckRecord:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    witness: dict | None = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "detail": self.detail}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass(frozen=True)
class Certificate:
    records: tuple[CheckRecord, ...]
    seed: int | None
    n_vertices: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def record(self, name: str) -> CheckRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def score(self) -> tuple:
        girth = next((r.detail.get("girth") for r in self.records if r.name == "girth"), None)
        return (sum(r.passed for r in self.records), girth if girth is not None else math.inf)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "seed": self.seed, "n_vertices": self.n_vertices,
                "records": [r.to_dict() for r in self.records]}


def random_free_action_graph(product: FreeProduct, n: int, seed: int) -> ActionGraph:
    """Block-regular A-action and a randomly relabelled block-regular B-action on ``n`` vertices."""
    A, B = product.A, product.B
    if n <= 0 or n % A.order or n % B.order:
        raise ValueError(f"vertex count {n} must be a positive multiple of |A|={A.order} and |B|={B.order}")
    a_action = _block_regular(A.array, n)
    rho = _block_regular(B.array, n)
    sigma = list(range(n))
    random.Random(seed).shuffle(sigma)
    sigma = np.array(sigma, dtype=np.int64)
    sigma_inv = np.empty_like(sigma)
    sigma_inv[sigma] = np.arange(n)
    b_action = sigma_inv[rho[:, sigma]]
    return ActionGraph(product, a_action, b_action)


def _block_regular(table: np.ndarray, n: int) -> np.ndarray:
    order = table.shape[0]
    v = np.arange(n)
    block, local = divmod(v, order)
    # row x: vertex (block, g) -> (block, g*x)
    return block[None, :] * order + table[local, :].T


def regular_cover(g: ActionGraph, max_vertices: int) -> ActionGraph | None:
    """Cayley graph of the permutation group generated by ``g``, or None if it has more than ``max_vertices`` elements.

    Vertices are group elements in breadth-first order from the identity;
    factor element ``x`` sends ``h`` to ``h x``.
    """
    product = g.product
    gens = [(tag, x) for tag in ("A", "B") for x in range(1, product.factor(tag).order)]
    n = g.n_vertices
    start = np.arange(n)
    index = {start.tobytes(): 0}
    elements = [start]
    rows: dict = {gen: [] for gen in gens}
    i = 0
    while i < len(elements):
        h = elements[i]
        for tag, x in gens:
            hx = g.action(tag)[x][h]
            key = hx.tobytes()
            if key not in index:
                if len(elements) >= max_vertices:
                    return None
                index[key] = len(elements)
                elements.append(hx)
            rows[(tag, x)].append(index[key])
        i += 1
    size = len(elements)
    actions = {}
    for tag in ("A", "B"):
        arr = np.tile(np.arange(size), (product.factor(tag).order, 1))
        for x in range(1, product.factor(tag).order):
            arr[x] = rows[(tag, x)]
        actions[tag] = arr
    return ActionGraph(product, actions["A"], actions["B"])


def certify(g: ActionGraph, spec: QuotientSpec, *, seed: int | None = None,
            exhaustive: bool = True) -> Certificate:
    """Run every check and record the outcome; with ``exhaustive=False`` stop at the first failure."""
    product = g.product
    records: list[CheckRecord] = []

    def add(record: CheckRecord) -> bool:
        records.append(record)
        return record.passed or exhaustive

    free = validate(g, require_free=True)
    if not add(CheckRecord("freeness", free.ok, {},
                           None if free.ok else free.first().to_dict())):
        return Certificate(tuple(records), seed, g.n_vertices)

    orders = {w: image_order(g, w) for w in spec.words}
    for w in spec.words:
        bound = spec.min_orders.get(w, 0)
        ok = orders[w] > bound
        if not add(CheckRecord(f"order:{product.format(w)}", ok, {"order": orders[w], "must_exceed": bound})):
            return Certificate(tuple(records), seed, g.n_vertices)

    if spec.require_full_cycle:
        u = spec.focus
        lengths = u_cycle_lengths(g, u)
        full = [s for s, ln in lengths.items() if ln == orders[u]]
        ok = bool(full)
        detail = {"order": orders[u], "cycle_lengths": sorted(set(lengths.values()))}
        if ok:
            detail["start"] = min(full)
        if not add(CheckRecord(f"full-cycle:{product.format(u)}", ok, detail)):
            return Certificate(tuple(records), seed, g.n_vertices)

    girth = syllable_girth(g, spec.girth_target, semantics="closing")
    ok = girth.girth is None
    witness = None if ok else {"word": product.format(girth.witness), "vertex": girth.vertex}
    if not add(CheckRecord("girth", ok, {"girth": girth.girth, "limit": spec.girth_target}, witness)):
        return Certificate(tuple(records), seed, g.n_vertices)

    for w in spec.words:
        if len(w) < 2:
            continue
        bad = None
        cycles = enumerate_u_cycles(g, w)
        for cyc in cycles:
            res = has_l_near_vertices(g, cyc, spec.near_margin)
            if res.near:
                bad = dict(res.witness, cycle_start=cyc.start, cycle_length=cyc.length)
                break
        if not add(CheckRecord(f"near:{product.format(w)}", bad is None,
                               {"margin": spec.near_margin, "cycles": len(cycles)}, bad)):
            return Certificate(tuple(records), seed, g.n_vertices)

    return Certificate(tuple(records), seed, g.n_vertices)


def vertex_schedule(product: FreeProduct, spec: QuotientSpec) -> list[int]:
    """Doubling vertex counts, each a multiple of lcm(|A|, |B|), up to ``max_vertices``.

    In the cover model these are the sizes of the seed graphs; covers larger
    than ``max_vertices`` are skipped.
    """
    step = math.lcm(product.A.order, product.B.order)
    n = max(step, -(-spec.min_vertices // step) * step)
    out = []
    while n <= spec.max_vertices:
        out.append(n)
        n *= 2
    return out


def candidate_seed(base: int, n: int, attempt: int) -> int:
    return (base * 1_000_003 + n) * 100_003 + attempt


def iter_candidates(product: FreeProduct, spec: QuotientSpec) -> Iterator[tuple[ActionGraph, Certificate]]:
    """Every candidate in the deterministic search order, with its (short-circuited) certificate."""
    for n in vertex_schedule(product, spec):
        for attempt in range(spec.attempt_budget):
            seed = candidate_seed(spec.seed, n, attempt)
            g = random_free_action_graph(product, n, seed)
            if spec.model == "cover":
                g = regular_cover(g, spec.max_vertices)
                if g is None:
                    continue
            yield g, certify(g, spec, seed=seed, exhaustive=False)


def iter_certified(product: FreeProduct, spec: QuotientSpec) -> Iterator[tuple[ActionGraph, Certificate]]:
    """Certified candidates in search order; raises :class:`BudgetExceeded` when none remain."""
    best = None
    tried = 0
    found = 0
    for g, cert in iter_candidates(product, spec):
        tried += 1
        if cert.passed:
            found += 1
            # re-run everything so the stored certificate is complete
            yield g, certify(g, spec, seed=cert.seed)
        elif best is None or cert.score > best.score:
            best = cert
    raise BudgetExceeded(f"{tried} candidates up to {spec.max_vertices} vertices, {found} certified "
                         f"and none accepted", best)


def search_base_quotient(product: FreeProduct, spec: QuotientSpec) -> tuple[ActionGraph, Certificate]:
    for g, cert in iter_certified(product, spec):
        logger.info("certified base on %d vertices (seed %d)", g.n_vertices, cert.seed)
        return g, cert
    raise AssertionError("unreachable")
