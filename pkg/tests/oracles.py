"""Slow, independent reference implementations used as test oracles.

Nothing here imports the algorithms under test except plain data types;
words are handled as tuples of ``(tag, element)`` with hand-written
group arithmetic on the multiplication tables.
"""

from __future__ import annotations

import itertools
import math


def mul_table(tables, tag, x, y):
    return tables[tag][x][y]


def naive_reduce(tables, word):
    """Repeatedly merge the first adjacent same-factor pair until none is left."""
    w = [s for s in word if s[1] != 0]
    changed = True
    while changed:
        changed = False
        for i in range(len(w) - 1):
            if w[i][0] == w[i + 1][0]:
                tag = w[i][0]
                z = tables[tag][w[i][1]][w[i + 1][1]]
                w[i:i + 2] = [(tag, z)] if z else []
                changed = True
                break
    return tuple(w)


def naive_inverse(tables, word):
    out = []
    for tag, x in reversed(word):
        row = tables[tag][x]
        out.append((tag, row.index(0)))
    return tuple(out)


def all_reduced(syllables, max_len):
    """Every reduced word with at most ``max_len`` syllables."""
    out = [()]
    frontier = [()]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for s in syllables:
                if not w or w[-1][0] != s[0]:
                    nxt.append(w + (s,))
        out.extend(nxt)
        frontier = nxt
    return out


def conjugacy_class_within(tables, syllables, w, bound):
    """All reduced ``c^-1 w c`` for reduced ``c`` with at most ``bound`` syllables."""
    return {naive_reduce(tables, naive_inverse(tables, c) + w + c) for c in all_reduced(syllables, bound)}


def naive_cyclic_core(tables, word):
    """Strip matching ends by conjugating with the last syllable until cyclically reduced."""
    w = naive_reduce(tables, word)
    while len(w) >= 2 and w[0][0] == w[-1][0]:
        last = w[-1:]
        w = naive_reduce(tables, last + w + naive_inverse(tables, last))
    return w


def rotations(w):
    return {w[i:] + w[:i] for i in range(len(w))} if w else {w}


def rotation_conjugate(tables, w1, w2):
    """Conjugacy for words whose cyclic cores have two or more syllables."""
    c1, c2 = naive_cyclic_core(tables, w1), naive_cyclic_core(tables, w2)
    return len(c1) == len(c2) and c2 in rotations(c1)


def commensurable(tables, w1, w2, max_power=6):
    """Some nonzero powers of w1 and w2 are conjugate (rotation test on cyclic cores)."""
    for p in range(1, max_power + 1):
        a = naive_reduce(tables, w1 * p)
        for q in range(1, max_power + 1):
            for b in (naive_reduce(tables, w2 * q), naive_reduce(tables, naive_inverse(tables, w2) * q)):
                if rotation_conjugate(tables, a, b):
                    return True
    return False


# -- graphs ---------------------------------------------------------------------

def apply_word(actions, v, word):
    for tag, x in word:
        v = actions[tag][x][v]
    return v


def naive_order(actions, n, word, cap=10**6):
    """Smallest t >= 1 with word^t fixing every vertex, by repeated composition."""
    perm = [apply_word(actions, v, word) for v in range(n)]
    cur = list(perm)
    t = 1
    while any(cur[v] != v for v in range(n)):
        cur = [perm[c] for c in cur]
        t += 1
        if t > cap:
            raise RuntimeError("order exceeds cap")
    return t


def orbit_lengths(actions, n, word):
    seen = [False] * n
    out = []
    for s in range(n):
        if seen[s]:
            continue
        ln, v = 0, s
        while not seen[v]:
            seen[v] = True
            v = apply_word(actions, v, word)
            ln += 1
        out.append(ln)
    return out


def closing_girth(actions, n, syllables, limit):
    """Least length of a nonunit reduced word fixing some vertex, by enumeration."""
    for length in range(1, limit + 1):
        for w in all_reduced(syllables, length):
            if len(w) != length:
                continue
            if any(apply_word(actions, v, w) == v for v in range(n)):
                return length
    return None


def dead_girth(actions, n, syllables, limit):
    """Least length of a nonunit reduced word fixing every vertex, by enumeration."""
    for length in range(1, limit + 1):
        for w in all_reduced(syllables, length):
            if len(w) != length:
                continue
            if all(apply_word(actions, v, w) == v for v in range(n)):
                return length
    return None


def is_action(tables, actions, n):
    """Both factors act by homomorphisms and every element is fixed-point-free or trivial on each orbit."""
    for tag, table in tables.items():
        act = actions[tag]
        order = len(table)
        for x in range(order):
            if sorted(act[x]) != list(range(n)):
                return False
        if list(act[0]) != list(range(n)):
            return False
        for x in range(order):
            for y in range(order):
                if any(act[y][act[x][v]] != act[table[x][y]][v] for v in range(n)):
                    return False
        for v in range(n):
            orbit = {act[x][v] for x in range(order)}
            for x in range(1, order):
                fixed = [act[x][w] == w for w in orbit]
                if any(fixed) and not all(fixed):
                    return False
    return True


def spliced_edges(base_a, base_b, n, markers, copies):
    """Labelled edges of the spliced graph from the edge-level description.

    In copy ``i`` the A-edges of the base are copied with ``p_2`` replaced by
    ``p_{k+2}`` of copy ``i+1`` and ``p_{k+2}`` replaced by the new vertex
    ``n_i``; ``p_2`` of copy ``i`` gets A-loops and ``n_i`` gets B-loops.
    Vertex ``v`` of copy ``i`` is ``i*(n+1)+v``; ``n_i`` is ``i*(n+1)+n``.
    """
    p2, pk2 = markers["p2"], markers["pk2"]
    edges = set()
    for i in range(copies):
        def place(v):
            if v == p2:
                return ((i + 1) % copies) * (n + 1) + pk2
            if v == pk2:
                return i * (n + 1) + n
            return i * (n + 1) + v
        for x in range(1, len(base_a)):
            for v in range(n):
                edges.add(("A", x, place(v), place(base_a[x][v])))
            edges.add(("A", x, i * (n + 1) + p2, i * (n + 1) + p2))
        for y in range(1, len(base_b)):
            for v in range(n):
                edges.add(("B", y, i * (n + 1) + v, i * (n + 1) + base_b[y][v]))
            edges.add(("B", y, i * (n + 1) + n, i * (n + 1) + n))
    return edges


def lcm_orders(constants, targets):
    """Orders of the combined homomorphism straight from the definitions."""
    n = len(targets)
    K = 1
    for row in constants:
        for c in row:
            K = K * c // math.gcd(K, c)
    ms = [K // constants[j][j] * targets[j] for j in range(n)]
    out = []
    for i in range(n):
        vals = [ms[i] * constants[i][i]] + [constants[j][i] for j in range(n) if j != i]
        o = 1
        for v in vals:
            o = o * v // math.gcd(o, v)
        out.append(o)
    return K, ms, out


def permutations_of(n):
    return list(itertools.permutations(range(n)))
