"""Normal forms and conjugacy in the free product A*B of two finite groups.

A word is a tuple of syllables ``(factor, element)`` with ``factor`` in
``{"A", "B"}``.  Reduced words alternate factors and contain no identity
syllables; the empty tuple is the identity.  Syllables compare as tuples,
which gives the canonical ordering A < B, then element index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .groups import FiniteGroup

Syllable = tuple[str, int]
Word = tuple[Syllable, ...]

FACTORS = ("A", "B")


@dataclass(frozen=True)
class CyclicWord:
    """Cyclically reduced conjugate of a word.

    ``conjugator^-1 * representative * conjugator`` reduces to the source word.
    """

    representative: Word
    conjugator: Word

    @property
    def length(self) -> int:
        return len(self.representative)


@dataclass
class HypothesisReport:
    passed: bool
    cyclic_lengths: list[int]
    failures: list[dict] = field(default_factory=list)
    interpretation: str = (
        "distinct inputs must not lie in conjugate cyclic subgroups "
        "(the independence condition is read as 'only when i = j')")

    def to_dict(self) -> dict:
        return {"passed": self.passed, "cyclic_lengths": self.cyclic_lengths,
                "failures": self.failures, "interpretation": self.interpretation}


class FreeProduct:
    """The free product of two finite groups, with word arithmetic."""

    def __init__(self, A: FiniteGroup, B: FiniteGroup):
        self.A = A
        self.B = B
        self.factors = {"A": A, "B": B}

    def __repr__(self) -> str:
        return f"FreeProduct({self.A.name} * {self.B.name})"

    def factor(self, tag: str) -> FiniteGroup:
        try:
            return self.factors[tag]
        except KeyError:
            raise ValueError(f"unknown factor tag {tag!r}") from None

    # -- normal forms -------------------------------------------------------

    def reduce(self, raw: Iterable[Syllable]) -> Word:
        """Merge neighbouring same-factor syllables and drop identities."""
        stack: list[Syllable] = []
        for tag, x in raw:
            group = self.factor(tag)
            group._check(x)
            if x == 0:
                continue
            if stack and stack[-1][0] == tag:
                merged = group.mul(stack.pop()[1], x)
                if merged:
                    stack.append((tag, merged))
            else:
                stack.append((tag, x))
        return tuple(stack)

    def is_reduced(self, w: Sequence[Syllable]) -> bool:
        return all(x != 0 for _, x in w) and all(
            w[i][0] != w[i + 1][0] for i in range(len(w) - 1))

    def is_cyclically_reduced(self, w: Sequence[Syllable]) -> bool:
        return self.is_reduced(w) and (len(w) < 2 or w[0][0] != w[-1][0])

    def multiply(self, *words: Sequence[Syllable]) -> Word:
        return self.reduce(s for w in words for s in w)

    def inverse(self, w: Sequence[Syllable]) -> Word:
        return tuple((tag, self.factor(tag).inverse(x)) for tag, x in reversed(w))

    def power(self, w: Sequence[Syllable], t: int) -> Word:
        if t < 0:
            return self.power(self.inverse(w), -t)
        return self.reduce(s for _ in range(t) for s in w)

    def conjugate(self, w: Sequence[Syllable], by: Sequence[Syllable]) -> Word:
        """``by^-1 * w * by``."""
        return self.multiply(self.inverse(by), w, by)

    def cyclic_reduce(self, w: Sequence[Syllable]) -> CyclicWord:
        w = self.reduce(w)
        conj: Word = ()
        while len(w) >= 2 and w[0][0] == w[-1][0]:
            x = (w[-1],)
            w = self.multiply(x, w, self.inverse(x))
            conj = self.multiply(x, conj)
        if len(w) >= 2:
            shift = min(range(len(w)), key=lambda i: w[i:] + w[:i])
            if shift:
                head = w[:shift]
                w = w[shift:] + head
                conj = self.multiply(self.inverse(head), conj)
        return CyclicWord(w, conj)

    def cyclic_length(self, w: Sequence[Syllable]) -> int:
        return self.cyclic_reduce(w).length

    def root(self, w: Sequence[Syllable]) -> tuple[Word, int]:
        """Primitive ``r`` and maximal ``t`` with ``w == r^t`` syllable for syllable."""
        w = tuple(w)
        n = len(w)
        if n < 2 or not self.is_cyclically_reduced(w):
            raise ValueError("root needs a cyclically reduced word of length >= 2")
        for d in range(1, n + 1):
            if n % d == 0 and w == w[:d] * (n // d):
                return w[:d], n // d
        raise AssertionError("unreachable")

    # -- conjugacy ----------------------------------------------------------

    def are_conjugate(self, w1: Sequence[Syllable], w2: Sequence[Syllable]) -> bool:
        r1 = self.cyclic_reduce(w1).representative
        r2 = self.cyclic_reduce(w2).representative
        if len(r1) != len(r2):
            return False
        if len(r1) >= 2:
            # canonical representatives are least rotations
            return r1 == r2
        if not r1:
            return True
        (t1, x1), (t2, x2) = r1[0], r2[0]
        return t1 == t2 and self.factor(t1).is_conjugate(x1, x2)

    def share_conjugate_cyclic_subgroup(self, w1: Sequence[Syllable], w2: Sequence[Syllable]) -> bool:
        c1 = self.cyclic_reduce(w1).representative
        c2 = self.cyclic_reduce(w2).representative
        if len(c1) < 2 or len(c2) < 2:
            raise ValueError("both words need cyclic length >= 2")
        r1, _ = self.root(c1)
        r2, _ = self.root(c2)
        return self.are_conjugate(r1, r2) or self.are_conjugate(r1, self.inverse(r2))

    def check_hypotheses(self, words: Sequence[Sequence[Syllable]],
                         names: Sequence[str] | None = None) -> HypothesisReport:
        names = list(names) if names else [f"u{i + 1}" for i in range(len(words))]
        lengths = [self.cyclic_length(w) for w in words]
        failures = []
        for i, n in enumerate(lengths):
            if n < 2:
                failures.append({"kind": "conjugate-of-factor", "element": names[i], "index": i,
                                 "cyclic_length": n,
                                 "cyclic_form": self.format(self.cyclic_reduce(words[i]).representative)})
        for i in range(len(words)):
            for j in range(i + 1, len(words)):
                if lengths[i] >= 2 and lengths[j] >= 2 and \
                        self.share_conjugate_cyclic_subgroup(words[i], words[j]):
                    ri = self.root(self.cyclic_reduce(words[i]).representative)
                    rj = self.root(self.cyclic_reduce(words[j]).representative)
                    failures.append({"kind": "conjugate-cyclic-subgroups",
                                     "pair": [names[i], names[j]], "indices": [i, j],
                                     "roots": [[self.format(ri[0]), ri[1]], [self.format(rj[0]), rj[1]]]})
        return HypothesisReport(not failures, lengths, failures)

    # -- enumeration and text -----------------------------------------------

    def syllables(self) -> list[Syllable]:
        return [(tag, x) for tag in FACTORS for x in range(1, self.factor(tag).order)]

    def reduced_words(self, length: int) -> Iterator[Word]:
        """All reduced words with exactly ``length`` syllables."""
        if length == 0:
            yield ()
            return
        sylls = self.syllables()

        def extend(prefix: Word) -> Iterator[Word]:
            if len(prefix) == length:
                yield prefix
                return
            for s in sylls:
                if not prefix or s[0] != prefix[-1][0]:
                    yield from extend(prefix + (s,))

        yield from extend(())

    def format(self, w: Sequence[Syllable]) -> str:
        return " ".join(self.factor(tag).name_of(x) for tag, x in w) or "1"

    def parse(self, text: str) -> Word:
        """Whitespace-separated element tokens; the token of A or B decides the factor."""
        raw = []
        for tok in text.split():
            hits = [(tag, self.factor(tag).index_of(tok)) for tag in FACTORS
                    if self.factor(tag).element_names and tok in self.factor(tag).element_names]
            if not hits:
                raise KeyError(f"unknown syllable token {tok!r}")
            nonid = [h for h in hits if h[1] != 0]
            if len(nonid) > 1:
                raise KeyError(f"syllable token {tok!r} names an element of both factors")
            raw.append(nonid[0] if nonid else hits[0])
        return self.reduce(raw)
