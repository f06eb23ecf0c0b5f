"""Energy-preserving linear combinations of trees.

A combination is built from a stem of ``n + 1`` black nodes.  Stem node ``k``
(``k = 1..n``) carries a forest ``mu_k`` of black-rooted side trees, a forest
``eta_k`` of white-rooted side trees and, for shaped trees, a shape ``s_k``.
The top node is a circle with white children ``eta_{n+1}`` only.  Its
elementary differential is ``W_1 B_1 W_2 ... B_n W_{n+1} grad H`` with skew
``W`` and ``B`` symmetric (circle) or skew (triangle), so adding the reversed
stem with the right sign yields a skew matrix times ``grad H``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from ..errors import InputError
from .tree import BLACK, CIRCLE, TRIANGLE, WHITE, Tree, TreeKind, forests_of_size, tree_kind

MAX_EP_ORDER = {TreeKind.MONO: 6, TreeKind.BICOLORED: 4, TreeKind.SHAPED: 4}

Forest = tuple[Tree, ...]


@dataclass(frozen=True)
class StemNode:
    shape: str
    mu: Forest
    eta: Forest = ()


@dataclass(frozen=True)
class EPCombination:
    """``sum coefficient * tree`` together with one stem description producing it.

    Attributes:
        members: ``(coefficient, tree)`` pairs, trees in canonical order.
        stem: stem nodes ``1..n``.
        top: white forest on the top node.
        sign: sign of the reversed stem.
    """

    members: tuple[tuple[int, Tree], ...]
    stem: tuple[StemNode, ...]
    top: Forest = ()
    sign: int = 1

    @property
    def order(self) -> int:
        return self.members[0][1].order

    def encode(self) -> str:
        parts = []
        for c, t in self.members:
            sgn = "-" if c < 0 else "+"
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            parts.append(f"{sgn} {mag}{t.encode()}")
        return " ".join(parts).lstrip("+ ")

    def reversed_stem(self) -> tuple[tuple[StemNode, ...], Forest]:
        """Stem and top forest of the second member."""
        n = len(self.stem)
        etas = [s.eta for s in self.stem] + [self.top]
        nodes = tuple(StemNode(self.stem[n - 1 - k].shape, self.stem[n - 1 - k].mu, etas[n - k])
                      for k in range(n))
        return nodes, etas[0]

    def weight(self, phi) -> Fraction | float:
        """``sum coefficient * phi(tree)``."""
        return sum(c * phi(t) for c, t in self.members)


def stem_tree(stem: tuple[StemNode, ...], top: Forest = ()) -> Tree:
    """``[mu_1, eta_1]_{s_1} o ... o [mu_n, eta_n]_{s_n} o [top]``."""
    t = Tree(top, BLACK, CIRCLE)
    for node in reversed(stem):
        t = Tree(node.mu + node.eta + (t,), BLACK, node.shape)
    return t


def reversal_sign(stem: tuple[StemNode, ...]) -> int:
    """``(-1)`` to the number of circle nodes on the stem below the top."""
    return -1 if sum(1 for s in stem if s.shape == CIRCLE) % 2 else 1


def ep_combinations(order: int, kind: TreeKind | str = TreeKind.MONO) -> list[EPCombination]:
    """All distinct non-zero energy-preserving combinations with trees of ``order`` nodes.

    Combinations equal up to an overall sign are listed once, normalized so
    the first member has a positive coefficient.

    Raises:
        InputError: order outside ``1..6`` (mono) or ``1..4`` (bicolored, shaped).
    """
    kind = tree_kind(kind)
    limit = MAX_EP_ORDER[kind]
    if int(order) != order or not 1 <= order <= limit:
        raise InputError(f"{kind.value} combinations are available for orders 1..{limit}, got {order!r}")
    return list(_ep_combinations(int(order), kind))


@lru_cache(maxsize=None)
def _ep_combinations(order: int, kind: TreeKind) -> tuple[EPCombination, ...]:
    shapes = (CIRCLE, TRIANGLE) if kind is TreeKind.SHAPED else (CIRCLE,)
    white = kind is TreeKind.BICOLORED
    seen: dict[tuple, EPCombination] = {}
    for n in range(order):
        # (n + 1) stem nodes; the remaining nodes go to side forests.
        free = order - n - 1
        slots = n + (n + 1 if white else 0)
        for sizes in _compositions(free, slots):
            mu_sizes, eta_sizes = sizes[:n], sizes[n:]
            mu_choices = [forests_of_size(s, kind, (BLACK,)) for s in mu_sizes]
            eta_choices = [forests_of_size(s, kind, (WHITE,)) for s in eta_sizes] if white else [[()]] * (n + 1)
            for mus in itertools.product(*mu_choices):
                for etas in itertools.product(*eta_choices):
                    for shp in itertools.product(shapes, repeat=n):
                        stem = tuple(StemNode(shp[k], mus[k], etas[k]) for k in range(n))
                        combo = _combine(stem, etas[n])
                        if combo is not None and combo[0] not in seen:
                            seen[combo[0]] = combo[1]
    return tuple(sorted(seen.values(), key=lambda c: [(t.key(), k) for k, t in c.members]))


def _combine(stem, top):
    sign = reversal_sign(stem)
    probe = EPCombination((), stem, top, sign)
    rstem, rtop = probe.reversed_stem()
    coefs: dict[Tree, int] = {}
    for c, t in ((1, stem_tree(stem, top)), (sign, stem_tree(rstem, rtop))):
        coefs[t] = coefs.get(t, 0) + c
    members = sorted(((c, t) for t, c in coefs.items() if c != 0), key=lambda m: m[1].key())
    if not members:
        return None
    if members[0][0] < 0:
        members = [(-c, t) for c, t in members]
        stem, top, sign = rstem, rtop, sign
    members = tuple(members)
    key = tuple((c, t) for c, t in members)
    return key, EPCombination(members, stem, top, sign)


def _compositions(total: int, parts: int):
    """Ordered tuples of ``parts`` non-negative integers summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
