from __future__ import annotations

import random

import numpy as np
import pytest

from omniperm.action_graph import ActionGraph
from omniperm.base_quotient import random_free_action_graph
from omniperm.groups import FiniteGroup
from omniperm.words import FreeProduct


def z2_z3() -> FreeProduct:
    return FreeProduct(FiniteGroup.cyclic(2, "Z2", ["1", "a"]), FiniteGroup.cyclic(3, "Z3", ["1", "b", "B"]))


def tables_of(product: FreeProduct) -> dict:
    return {"A": [list(r) for r in product.A.table], "B": [list(r) for r in product.B.table]}


def actions_of(g: ActionGraph) -> dict:
    return {"A": g.a_action.tolist(), "B": g.b_action.tolist()}


def s3_graph(product: FreeProduct) -> ActionGraph:
    """S3 acting on itself: a is a transposition, b a 3-cycle (Cayley graph on 6 vertices)."""
    from omniperm.groups import regular_representation
    s3 = FiniteGroup.symmetric(3)
    reg = regular_representation(s3)
    a_el, b_el = transposition_and_three_cycle(s3)
    a = np.array([np.arange(6), reg[a_el].images])
    b = np.array([np.arange(6), reg[b_el].images, (reg[b_el] * reg[b_el]).images])
    return ActionGraph(product, a, b)


def transposition_and_three_cycle(s3: FiniteGroup) -> tuple[int, int]:
    orders = {x: s3.element_order(x) for x in s3.elements()}
    a = min(x for x, o in orders.items() if o == 2)
    b = min(x for x, o in orders.items() if o == 3)
    return a, b


@pytest.fixture
def G() -> FreeProduct:
    return z2_z3()


@pytest.fixture
def S3(G) -> ActionGraph:
    return s3_graph(G)


def witness_is_correct(g: ActionGraph, violation) -> bool:
    """Recheck a reported violation directly on the arrays."""
    w, law = violation.witness, violation.law
    act = g.action(w["factor"]) if "factor" in w else None
    table = g.product.factor(w["factor"]).table if "factor" in w else None
    n = g.n_vertices
    if law == "permutation":
        row = act[w["element"]]
        if "vertices" in w:
            u, v = w["vertices"]
            return u != v and row[u] == row[v] == w["image"]
        return not 0 <= row[w["vertex"]] < n
    if law == "identity":
        return act[0][w["vertex"]] != w["vertex"]
    if law == "homomorphism":
        x, y, v = w["element"], w["other"], w["vertex"]
        return act[y][act[x][v]] != act[table[x][y]][v]
    if law == "free":
        return w["element"] != 0 and act[w["element"]][w["vertex"]] == w["vertex"]
    if law == "regularity":
        x, f, m = w["element"], w["fixed_vertex"], w["moved_vertex"]
        orbit = {int(act[z][f]) for z in range(act.shape[0])}
        return act[x][f] == f and act[x][m] != m and m in orbit
    return False


def mutations(product: FreeProduct, count: int, seed: int):
    """Random free graphs with one permutation entry overwritten."""
    rng = random.Random(seed)
    for i in range(count):
        n = rng.choice([6, 12, 30])
        g = random_free_action_graph(product, n, rng.randrange(10**6))
        tag = rng.choice("AB")
        arr = {"A": g.a_action.copy(), "B": g.b_action.copy()}
        x = rng.randrange(arr[tag].shape[0])
        v = rng.randrange(n)
        arr[tag][x, v] = rng.randrange(n)
        yield ActionGraph(product, arr["A"], arr["B"])
