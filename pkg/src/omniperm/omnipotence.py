"""Order families, their combination, and the end-to-end pipeline.

For every input element ``g_j`` a certified base graph is spliced along a
``g_j``-cycle.  The resulting family of graphs ``Lambda_m`` multiplies the
order of ``g_j`` linearly in ``m`` while every other input keeps a constant
order.  One member of each family is picked so that the direct product of
all members gives ``g_i`` the order ``K * l_i``; that product is finally
rebuilt as one permutation action and every order is recomputed from it.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .action_graph import ActionGraph, image_order, validate, word_images
from .base_quotient import BudgetExceeded, Certificate, QuotientSpec, iter_certified
from .surgery import CycleCensus, SurgeryError, SurgeryPlan, build_lambda, cycle_census, plan_surgery
from .words import FreeProduct, HypothesisReport, Word

logger = logging.getLogger(__name__)


class StabilizationError(RuntimeError):
    """Measured orders do not follow the linear pattern; carries the measurements."""

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


class HypothesisError(ValueError):
    def __init__(self, report: HypothesisReport):
        super().__init__("inputs violate the independence hypothesis")
        self.report = report


class VerificationError(RuntimeError):
    """An order recomputed from the final permutations differs from the claim."""

    def __init__(self, message: str, mismatches: list[dict]):
        super().__init__(message)
        self.mismatches = mismatches


# -- measuring and stabilizing ------------------------------------------------

@dataclass
class RawOrderTable:
    focus: int
    words: tuple[Word, ...]          # focus word rotated to start in A
    plan: SurgeryPlan
    orders: dict[int, list[int]]     # m -> image order of every word on Lambda_m
    census: dict[int, dict[int, CycleCensus]]   # m -> word index -> census

    @property
    def m_range(self) -> list[int]:
        return sorted(self.orders)

    def to_dict(self, product: FreeProduct | None = None) -> dict:
        return {"focus": self.focus, "orders": {str(m): o for m, o in sorted(self.orders.items())},
                "census": {str(m): {str(i): c.to_dict() for i, c in sorted(cs.items())}
                           for m, cs in sorted(self.census.items())}}


def measure_family(base: ActionGraph, words: Sequence[Word], focus: int, k_prime: int,
                   m_range: Sequence[int] = (1, 2, 3), certificate: Certificate | None = None) -> RawOrderTable:
    """Build ``Lambda_m`` for every ``m`` and record orders and cycle censuses of all words.

    Surgery precondition failures propagate as :class:`SurgeryError`.
    """
    plan = plan_surgery(base, words[focus], k_prime, 3, certificate)
    words = tuple(plan.u if i == focus else tuple(w) for i, w in enumerate(words))
    orders, census = {}, {}
    for m in m_range:
        d = build_lambda(plan, m)
        orders[m] = [image_order(d.graph, w) for w in words]
        census[m] = {i: cycle_census(d, w) for i, w in enumerate(words) if len(w) >= 2}
    return RawOrderTable(focus, words, plan, orders, census)


def predicted_focus_order(period: int, confined: int, m: int) -> int:
    """Order of the focus word on ``Lambda_m``: lcm(3 m period, confined)."""
    return math.lcm(3 * m * period, confined)


@dataclass
class OrderFamily:
    focus: int
    words: tuple[Word, ...]
    plan: SurgeryPlan
    multiplier: int                  # C: member m is Lambda_{C m}
    spliced_period: int              # D = base order - k'
    period: int                      # lcm of D and the per-copy lengths of all spanning cycles
    constants: list[int]             # K_{j,k}; the focus entry is K_{j,j}
    measured: dict[int, list[int]]   # raw orders on Lambda_m
    verified: dict[int, list[int]]   # orders on member m, i.e. Lambda_{C m}
    spectra: dict[int, dict[int, int]] = field(default_factory=dict)

    @property
    def linear_constant(self) -> int:
        return self.constants[self.focus]

    def member(self, m: int):
        """The spliced graph whose focus order is ``m * K_{j,j}``."""
        return build_lambda(self.plan, self.multiplier * m)

    def member_size(self, m: int) -> int:
        return 3 * self.multiplier * m * (self.plan.base.n_vertices + 1)

    def expected_orders(self, m: int) -> list[int]:
        return [m * c if i == self.focus else c for i, c in enumerate(self.constants)]

    def to_dict(self) -> dict:
        return {"focus": self.focus, "k_prime": self.plan.k_prime, "base_vertices": self.plan.base.n_vertices,
                "base_order": self.plan.base_order, "rotation": self.plan.selection.rotation,
                "cycle_start": self.plan.selection.cycle_start, "multiplier": self.multiplier,
                "spliced_period": self.spliced_period, "period": self.period, "constants": self.constants,
                "measured": {str(m): o for m, o in sorted(self.measured.items())},
                "verified": {str(m): o for m, o in sorted(self.verified.items())},
                "spectra": {str(i): {str(k): v for k, v in sp.items()} for i, sp in sorted(self.spectra.items())}}


def stabilize(raw: RawOrderTable, sample: Sequence[int] = (1, 2, 3), max_vertices: int | None = None) -> OrderFamily:
    """Turn a raw table into a family whose focus order is exactly linear in ``m``.

    The focus order on ``Lambda_m`` is lcm(3 m P, C), where P collects the
    per-copy lengths of cycles that run through all copies and C is the lcm
    of the confined focus-cycle lengths.  Reindexing by ``m -> C m`` makes it
    3 C P m.  Everything is checked: census shapes and spectra must agree
    across the measured ``m``, off-focus orders must be constant, and the
    predicted orders are recomputed on freshly built members.
    """
    j, ms = raw.focus, raw.m_range
    detail = {"orders": {str(m): raw.orders[m] for m in ms}}
    if len(ms) < 2:
        raise StabilizationError("need at least two measured m", detail)
    D = raw.plan.spliced_period
    periods = {}
    for m in ms:
        fc = raw.census[m][j]
        if fc.stray:
            raise StabilizationError("focus cycle visits several copies but not all",
                                     dict(detail, m=m, stray=fc.stray[:3]))
        per = sorted(fc.spanning_periods())
        if any(p.denominator != 1 for p in per):
            raise StabilizationError("spanning focus cycle length not a multiple of the copy count",
                                     dict(detail, m=m, spanning=fc.spanning[:3]))
        periods[m] = [int(p) for p in per]
    if len({tuple(p) for p in periods.values()}) != 1:
        raise StabilizationError("spanning focus cycles change with m",
                                 dict(detail, periods={str(m): p for m, p in periods.items()}))
    spectra = {}
    for i in raw.census[ms[0]]:
        first = raw.census[ms[0]][i].spectrum
        for m in ms[1:]:
            if raw.census[m][i].spectrum != first:
                raise StabilizationError(f"confined spectrum of word {i} depends on m",
                                         dict(detail, word=i, m=m))
        spectra[i] = first
        if i != j:
            for m in ms:
                c = raw.census[m][i]
                if c.spanning or c.stray:
                    bad = (c.spanning + c.stray)[0]
                    raise StabilizationError(f"word {i} has a cycle outside two neighbouring copies",
                                             dict(detail, word=i, m=m, start=bad[0], length=bad[1]))
    for i in range(len(raw.words)):
        if i != j and len({raw.orders[m][i] for m in ms}) != 1:
            raise StabilizationError(f"order of word {i} depends on m", detail)
    period = math.lcm(D, *periods[ms[0]])
    C = raw.census[ms[0]][j].confined_lcm
    for m in ms:
        if raw.orders[m][j] != predicted_focus_order(period, C, m):
            raise StabilizationError("focus order differs from lcm(3mP, C)",
                                     dict(detail, m=m, period=period, confined=C))
    constants = list(raw.orders[ms[0]])
    constants[j] = 3 * C * period
    family = OrderFamily(j, raw.words, raw.plan, C, D, period, constants,
                         {m: list(raw.orders[m]) for m in ms}, {}, spectra)
    if len(sample) < 3:
        raise StabilizationError("exactness must be checked on at least three members", detail)
    if max_vertices is not None and family.member_size(max(sample)) > max_vertices:
        raise StabilizationError("stabilized members exceed the vertex budget",
                                 dict(detail, multiplier=C, size=family.member_size(max(sample))))
    for m in sample:
        d = family.member(m)
        got = [image_order(d.graph, w) for w in raw.words]
        family.verified[m] = got
        if got != family.expected_orders(m):
            raise StabilizationError("stabilized member does not have the predicted orders",
                                     dict(detail, m=m, got=got, expected=family.expected_orders(m)))
    return family


# -- combining ----------------------------------------------------------------

@dataclass(frozen=True)
class Combination:
    K: int
    multipliers: tuple[int, ...]
    orders: tuple[int, ...]


def combine_orders(constants: Sequence[Sequence[int]], targets: Sequence[int]) -> Combination:
    """Pure arithmetic: ``constants[j][k]`` is K_{j,k} (linear constant on the diagonal)."""
    n = len(targets)
    if len(constants) != n or any(len(row) != n for row in constants):
        raise ValueError("constants must be an n x n matrix matching the targets")
    if any(c < 1 for row in constants for c in row) or any(t < 1 for t in targets):
        raise ValueError("constants and targets must be positive")
    K = math.lcm(*(c for row in constants for c in row))
    ms = tuple(K // constants[j][j] * targets[j] for j in range(n))
    orders = tuple(math.lcm(ms[i] * constants[i][i], *(constants[j][i] for j in range(n) if j != i))
                   for i in range(n))
    return Combination(K, ms, orders)


@dataclass(eq=False)
class ProductHom:
    """Direct product of finite actions; the image of a word acts on every component."""

    product: FreeProduct
    components: list[tuple[ActionGraph, dict]]

    @property
    def sizes(self) -> list[int]:
        return [g.n_vertices for g, _ in self.components]

    def image_order(self, w: Word) -> int:
        return math.lcm(*(image_order(g, w) for g, _ in self.components))

    def union(self) -> ActionGraph:
        """All components as one action on the disjoint union of their vertex sets."""
        offsets = np.cumsum([0] + self.sizes)
        rows = {}
        for tag in ("A", "B"):
            rows[tag] = np.concatenate([g.action(tag) + off for (g, _), off in zip(self.components, offsets)],
                                       axis=1)
        return ActionGraph(self.product, rows["A"], rows["B"])

    def image_permutations(self, w: Word) -> list[np.ndarray]:
        return [word_images(g, w) for g, _ in self.components]

    def save(self, path, words: dict[str, Word] | None = None) -> None:
        arrays = {}
        for c, (g, _) in enumerate(self.components):
            arrays[f"c{c}_A"] = g.a_action
            arrays[f"c{c}_B"] = g.b_action
            for name, w in (words or {}).items():
                arrays[f"c{c}_img_{name}"] = word_images(g, w)
        np.savez_compressed(path, **arrays)

    @classmethod
    def load(cls, product: FreeProduct, path, provenance: Sequence[dict] | None = None) -> tuple[ProductHom, dict]:
        """Components and the stored images ``{name: [per-component images]}``."""
        with np.load(path) as data:
            n = len({k.split("_")[0] for k in data.files})
            comps, images = [], {}
            for c in range(n):
                g = ActionGraph(product, data[f"c{c}_A"], data[f"c{c}_B"])
                comps.append((g, dict(provenance[c]) if provenance else {}))
                prefix = f"c{c}_img_"
                for key in data.files:
                    if key.startswith(prefix):
                        images.setdefault(key[len(prefix):], []).append(np.array(data[key]))
        return cls(product, comps), images


def _provenance(family: OrderFamily, m: int) -> dict:
    return {"focus": family.focus, "m": m, "copies": 3 * family.multiplier * m,
            "multiplier": family.multiplier, "k_prime": family.plan.k_prime,
            "base_vertices": family.plan.base.n_vertices}


def combine(families: Sequence[OrderFamily], targets: Sequence[int]) -> tuple[Combination, ProductHom]:
    constants = [f.constants for f in families]
    comb = combine_orders(constants, targets)
    product = families[0].plan.base.product
    comps = [(f.member(m).graph, _provenance(f, m)) for f, m in zip(families, comb.multipliers)]
    return comb, ProductHom(product, comps)


# -- the pipeline -------------------------------------------------------------

@dataclass(frozen=True)
class PipelineParams:
    k_prime: int | None = None           # fixed k'; None escalates through k_primes
    k_primes: tuple[int, ...] = (1, 2, 3, 4)
    girth_target: int = 6
    near_margin: int = 0
    max_vertices: int = 768
    seed: int = 0
    attempt_budget: int = 40
    paper_constants: bool = False
    model: str = "cover"
    m_range: tuple[int, ...] = (1, 2, 3)
    family_pool: int = 12                 # stabilized families kept per focus
    base_budget: int = 30                # certified bases tried per focus
    family_max_vertices: int = 200_000
    proposition: bool = False
    parallel: bool = False

    def k_schedule(self) -> tuple[int, ...]:
        return (self.k_prime,) if self.k_prime is not None else self.k_primes

    def quotient_spec(self, words: Sequence[Word], k_prime: int = 1) -> QuotientSpec:
        common = dict(max_vertices=self.max_vertices, seed=self.seed, attempt_budget=self.attempt_budget,
                      model=self.model)
        if self.paper_constants:
            return QuotientSpec.with_paper_constants(words, k_prime=k_prime, **common)
        return QuotientSpec(tuple(words), girth_target=self.girth_target, near_margin=self.near_margin,
                            k_prime=k_prime, **common)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["k_primes"] = list(self.k_primes)
        out["m_range"] = list(self.m_range)
        return out


@dataclass
class FocusSearch:
    focus: int
    families: list[OrderFamily]
    certificates: list[Certificate]
    trace: list[dict]


def _focus_words(words: Sequence[Word], focus: int) -> list[Word]:
    return [words[focus]] + [w for i, w in enumerate(words) if i != focus]


def find_families(product: FreeProduct, words: Sequence[Word], focus: int, params: PipelineParams) -> FocusSearch:
    """Certified bases in search order, spliced with every k' until ``family_pool`` families stabilize."""
    trace: list[dict] = []
    families, certs = [], []
    ks = params.k_schedule()
    if params.paper_constants:
        s = max(len(w) for w in words)
        least = -(-10 * s // len(words[focus]))
        ks = tuple(sorted({max(k, least) for k in ks}))
    q = [w for w in _focus_words(words, focus) if w]
    spec = params.quotient_spec(q, ks[0])
    bases = 0
    seen_bases, seen_constants = set(), set()
    try:
        for base, cert in iter_certified(product, spec):
            # different seeds often generate the same cover; a cheap invariant skips repeats
            key = (base.n_vertices, tuple(image_order(base, w) for w in q))
            if key in seen_bases:
                continue
            seen_bases.add(key)
            bases += 1
            for kp in ks:
                entry = {"focus": focus, "base_seed": cert.seed, "base_vertices": base.n_vertices, "k_prime": kp}
                try:
                    raw = measure_family(base, words, focus, kp, params.m_range, cert)
                    fam = stabilize(raw, params.m_range, params.family_max_vertices)
                except SurgeryError as e:
                    trace.append(dict(entry, outcome="surgery", reason=str(e)))
                    continue
                except StabilizationError as e:
                    trace.append(dict(entry, outcome="stabilization", reason=str(e)))
                    continue
                ckey = (tuple(fam.constants), fam.multiplier)
                if ckey in seen_constants:
                    trace.append(dict(entry, outcome="duplicate", constants=fam.constants))
                    continue
                seen_constants.add(ckey)
                trace.append(dict(entry, outcome="family", constants=fam.constants, multiplier=fam.multiplier))
                families.append(fam)
                certs.append(cert)
                if len(families) >= params.family_pool:
                    return FocusSearch(focus, families, certs, trace)
            if bases >= params.base_budget:
                break
    except BudgetExceeded as e:
        if not families:
            raise BudgetExceeded(f"focus {focus}: {e}", e.best, trace) from None
    if not families:
        raise BudgetExceeded(f"focus {focus}: no stabilized family from {bases} certified bases", None, trace)
    return FocusSearch(focus, families, certs, trace)


def choose_families(pools: Sequence[Sequence[OrderFamily]], targets: Sequence[int]) -> tuple[int, ...]:
    """Indices, one per pool, minimizing K and then the size of the final product."""
    best, best_key = None, None
    for pick in itertools.product(*(range(len(p)) for p in pools)):
        fams = [pools[j][i] for j, i in enumerate(pick)]
        comb = combine_orders([f.constants for f in fams], [1] * len(fams))
        size = sum(f.member_size(comb.multipliers[j]) for j, f in enumerate(fams))
        key = (comb.K, size, pick)
        if best_key is None or key < best_key:
            best, best_key = pick, key
    return best


@dataclass
class PipelineResult:
    K: int
    hom: ProductHom
    orders: list[dict]
    report: dict


def cyclic_forms(product: FreeProduct, words: Sequence[Word]) -> list[Word]:
    return [product.cyclic_reduce(w).representative for w in words]


def check_inputs(product: FreeProduct, words: Sequence[Word], names: Sequence[str],
                 proposition: bool = False) -> HypothesisReport:
    if not proposition:
        return product.check_hypotheses(words, names)
    # only the focus element is restricted: it must have cyclic length >= 2 and share
    # no conjugate cyclic subgroup with the other long elements
    full = product.check_hypotheses(words, names)
    keep = []
    for f in full.failures:
        if f["kind"] == "conjugate-of-factor" and f["index"] == 0:
            keep.append(f)
        elif f["kind"] == "conjugate-cyclic-subgroups" and 0 in f["indices"]:
            keep.append(f)
    return HypothesisReport(not keep, full.cyclic_lengths, keep,
                            "only the first element is restricted; the others keep constant orders")


def _search(args):
    product, words, focus, params = args
    return find_families(product, words, focus, params)


def run_pipeline(product: FreeProduct, words: Sequence[Word], targets: Sequence[int],
                 params: PipelineParams = PipelineParams(), names: Sequence[str] | None = None) -> PipelineResult:
    """Realize orders ``K * l_i`` (or, in proposition mode, ``K * l`` for the first element only)."""
    words = [tuple(w) for w in words]
    names = list(names) if names else [f"u{i + 1}" for i in range(len(words))]
    targets = list(targets)
    if len(targets) != len(words) or any(t < 1 for t in targets):
        raise ValueError("need one positive target per element")
    hyp = check_inputs(product, words, names, params.proposition)
    if not hyp.passed:
        raise HypothesisError(hyp)
    cyc = cyclic_forms(product, words)
    foci = [0] if params.proposition else list(range(len(words)))
    jobs = [(product, cyc, j, params) for j in foci]
    if params.parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            searches = list(pool.map(_search, jobs))
    else:
        searches = [_search(job) for job in jobs]
    pools = [s.families for s in searches]

    if params.proposition:
        l = targets[0]
        # only the focus row matters: smallest linear constant, then the smallest member
        best = min(range(len(pools[0])), key=lambda i: (pools[0][i].linear_constant, pools[0][i].member_size(l), i))
        pick = (best,)
        fam = pools[0][best]
        K = fam.linear_constant
        hom = ProductHom(product, [(fam.member(l).graph, _provenance(fam, l))])
        claims = [K * l] + fam.constants[1:]
        chosen, multipliers = [fam], [l]
    else:
        pick = choose_families(pools, targets)
        chosen = [pools[j][i] for j, i in enumerate(pick)]
        comb, hom = combine(chosen, targets)
        K = comb.K
        multipliers = list(comb.multipliers)
        claims = [K * l for l in targets]
        if list(comb.orders) != claims:
            raise VerificationError("combination arithmetic disagrees with K*l", [])

    orders, mismatches = verify_orders(hom, words, names, claims)
    table = [dict(row, target=t) for row, t in zip(orders, targets)]
    if mismatches:
        raise VerificationError("recomputed orders differ from the claimed orders", mismatches)
    report = {
        "hypothesis": hyp.to_dict(),
        "params": params.to_dict(),
        "searches": [{"focus": s.focus, "trace": s.trace,
                      "families": [f.to_dict() for f in s.families],
                      "certificates": [c.to_dict() for c in s.certificates]} for s in searches],
        "chosen": list(pick),
        "families": [f.to_dict() for f in chosen],
        "K": K,
        "multipliers": multipliers,
        "components": [p for _, p in hom.components],
        "component_sizes": hom.sizes,
        "orders": table,
    }
    return PipelineResult(K, hom, table, report)


def verify_orders(hom: ProductHom, words: Sequence[Word], names: Sequence[str],
                  claims: Sequence[int]) -> tuple[list[dict], list[dict]]:
    """Recompute every order on the disjoint-union action and against the component lcm."""
    union = hom.union()
    check = validate(union)
    mismatches = []
    if not check.ok:
        mismatches.append({"element": None, "reason": "product is not an action", "witness": check.first().to_dict()})
    rows = []
    for name, w, claim in zip(names, words, claims):
        explicit = image_order(union, w)
        by_parts = hom.image_order(w)
        rows.append({"element": name, "claimed": claim, "order": explicit})
        if explicit != claim or by_parts != explicit:
            mismatches.append({"element": name, "claimed": claim, "order": explicit, "component_lcm": by_parts})
    return rows, mismatches
