"""Rooted trees with coloured (black/white) and shaped (circle/triangle) nodes.

Three families are used:

* ``MONO``: every node a black circle (B-series).
* ``BICOLORED``: black or white circles (P-series).  Enumeration lists
  black-rooted trees only; a white-rooted tree carries the same coefficient
  and elementary differential as its black-rooted twin.
* ``SHAPED``: black circles or triangles, every leaf a circle (G-series).

A tree is stored canonically: children sorted by :meth:`Tree.key`, so equal
trees compare and hash equal.  The text encoding uses ``B`` (black circle),
``W`` (white circle) and ``T`` (triangle), e.g. ``B[B,B[W]]``.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from ..errors import InputError

BLACK, WHITE = "b", "w"
CIRCLE, TRIANGLE = "c", "t"

MAX_ENUMERATION_ORDER = 8


class TreeKind(str, enum.Enum):
    MONO = "mono"
    BICOLORED = "bicolored"
    SHAPED = "shaped"


def tree_kind(kind: TreeKind | str) -> TreeKind:
    if isinstance(kind, TreeKind):
        return kind
    try:
        return TreeKind(str(kind).lower())
    except ValueError:
        raise InputError(f"unknown tree kind {kind!r}; choose mono, bicolored or shaped") from None


class Tree:
    """Immutable canonical rooted tree."""

    __slots__ = ("color", "shape", "children", "order", "_key", "_hash")

    def __init__(self, children: Iterable["Tree"] = (), color: str = BLACK, shape: str = CIRCLE):
        if color not in (BLACK, WHITE) or shape not in (CIRCLE, TRIANGLE):
            raise InputError(f"invalid node type ({color!r}, {shape!r})")
        if color == WHITE and shape == TRIANGLE:
            raise InputError("white triangles are not supported")
        kids = tuple(sorted(children, key=Tree.key))
        self.color = color
        self.shape = shape
        self.children = kids
        self.order = 1 + sum(c.order for c in kids)
        self._key = (self.order, color, shape, tuple(c._key for c in kids))
        self._hash = hash(self._key)

    def key(self):
        """Total order: by size, then node type, then children."""
        return self._key

    def __eq__(self, other):
        return isinstance(other, Tree) and self._key == other._key

    def __lt__(self, other):
        return self._key < other._key

    def __hash__(self):
        return self._hash

    def __len__(self):
        return self.order

    def __repr__(self):
        return f"Tree({self.encode()!r})"

    def __str__(self):
        return self.encode()

    @property
    def tag(self) -> str:
        if self.shape == TRIANGLE:
            return "T"
        return "B" if self.color == BLACK else "W"

    def encode(self) -> str:
        if not self.children:
            return self.tag
        return self.tag + "[" + ",".join(c.encode() for c in self.children) + "]"

    @property
    def is_black_circle(self) -> bool:
        return self.color == BLACK and self.shape == CIRCLE

    def black_children(self) -> tuple["Tree", ...]:
        return tuple(c for c in self.children if c.color == BLACK)

    def white_children(self) -> tuple["Tree", ...]:
        return tuple(c for c in self.children if c.color == WHITE)

    def recolored(self, color: str) -> "Tree":
        """Same tree with the root colour replaced."""
        if color == self.color:
            return self
        return Tree(self.children, color, self.shape)

    def graft(self, child: "Tree") -> "Tree":
        """Butcher product: ``child`` becomes a new child of the root."""
        return Tree(self.children + (child,), self.color, self.shape)

    def nodes(self) -> Iterator["Tree"]:
        """All subtrees, root first (with repetition for equal siblings)."""
        yield self
        for c in self.children:
            yield from c.nodes()

    def has_triangle(self) -> bool:
        return any(n.shape == TRIANGLE for n in self.nodes())

    def has_white(self) -> bool:
        return any(n.color == WHITE for n in self.nodes())

    def kind(self) -> TreeKind:
        if self.has_triangle():
            return TreeKind.SHAPED
        if self.has_white():
            return TreeKind.BICOLORED
        return TreeKind.MONO


def leaf(color: str = BLACK) -> Tree:
    return Tree((), color, CIRCLE)


def node(*children: Tree, color: str = BLACK, shape: str = CIRCLE) -> Tree:
    return Tree(children, color, shape)


def tall(n: int, shape: str = CIRCLE) -> Tree:
    """Chain of ``n`` black nodes."""
    t = leaf()
    for _ in range(n - 1):
        t = Tree((t,), BLACK, shape)
    return t


def bushy(n: int) -> Tree:
    """Root with ``n - 1`` leaf children."""
    return Tree([leaf()] * (n - 1))


def parse_tree(text: str) -> Tree:
    """Inverse of :meth:`Tree.encode`; whitespace is ignored."""
    s = "".join(text.split())
    pos = 0

    def parse() -> Tree:
        nonlocal pos
        if pos >= len(s) or s[pos] not in "BWT":
            raise InputError(f"bad tree encoding {text!r} at position {pos}")
        tag = s[pos]
        pos += 1
        kids = []
        if pos < len(s) and s[pos] == "[":
            pos += 1
            kids.append(parse())
            while pos < len(s) and s[pos] == ",":
                pos += 1
                kids.append(parse())
            if pos >= len(s) or s[pos] != "]":
                raise InputError(f"bad tree encoding {text!r}: missing ']'")
            pos += 1
        color = WHITE if tag == "W" else BLACK
        shape = TRIANGLE if tag == "T" else CIRCLE
        return Tree(kids, color, shape)

    t = parse()
    if pos != len(s):
        raise InputError(f"bad tree encoding {text!r}: trailing characters")
    return t


def from_word(word: str) -> Tree:
    """Build a tree from a depth-first open/close word.

    ``a`` opens a black circle, ``A`` a white circle, ``t`` a triangle; ``b``
    or ``B`` closes the current node.  ``aabb`` is the two-node chain.
    """
    stack: list[tuple[str, str, list]] = []
    done: Tree | None = None
    for ch in word:
        if ch in "aAt":
            if done is not None:
                raise InputError(f"word {word!r} has more than one root")
            color = WHITE if ch == "A" else BLACK
            shape = TRIANGLE if ch == "t" else CIRCLE
            stack.append((color, shape, []))
        elif ch in "bB":
            if not stack:
                raise InputError(f"unbalanced word {word!r}")
            color, shape, kids = stack.pop()
            t = Tree(kids, color, shape)
            if stack:
                stack[-1][2].append(t)
            else:
                done = t
        else:
            raise InputError(f"invalid character {ch!r} in word {word!r}")
    if stack or done is None:
        raise InputError(f"unbalanced word {word!r}")
    return done


def as_tree(t: Tree | str) -> Tree:
    return t if isinstance(t, Tree) else parse_tree(t)


def tree_sigma(t: Tree) -> int:
    """Symmetry coefficient: product over nodes of the factorials of equal-sibling counts."""
    return _sigma(t)


@lru_cache(maxsize=None)
def _sigma(t: Tree) -> int:
    s = 1
    for c in t.children:
        s *= _sigma(c)
    for mult in Counter(t.children).values():
        s *= math.factorial(mult)
    return s


def tree_gamma(t: Tree) -> Fraction:
    """Density ``|t| * prod gamma(children)``."""
    return Fraction(_gamma(t))


@lru_cache(maxsize=None)
def _gamma(t: Tree) -> int:
    g = t.order
    for c in t.children:
        g *= _gamma(c)
    return g


def _node_types(kind: TreeKind, root: bool) -> list[tuple[str, str]]:
    if kind is TreeKind.MONO:
        return [(BLACK, CIRCLE)]
    if kind is TreeKind.BICOLORED:
        return [(BLACK, CIRCLE)] if root else [(BLACK, CIRCLE), (WHITE, CIRCLE)]
    return [(BLACK, CIRCLE), (BLACK, TRIANGLE)]


def enumerate_trees(order: int, kind: TreeKind | str = TreeKind.MONO) -> list[Tree]:
    """All canonical trees with exactly ``order`` nodes, in canonical order.

    Bi-coloured trees are listed with a black root only.

    Raises:
        InputError: order outside ``1..8``.
    """
    kind = tree_kind(kind)
    if int(order) != order or not 1 <= order <= MAX_ENUMERATION_ORDER:
        raise InputError(f"tree order must be an integer in 1..{MAX_ENUMERATION_ORDER}, got {order!r}")
    return [t for t in _all_trees(int(order), kind) if t.color == BLACK]


def trees_up_to(order: int, kind: TreeKind | str = TreeKind.MONO) -> list[Tree]:
    kind = tree_kind(kind)
    return [t for n in range(1, order + 1) for t in enumerate_trees(n, kind)]


@lru_cache(maxsize=None)
def _all_trees(order: int, kind: TreeKind) -> tuple[Tree, ...]:
    """Trees of the given order with any allowed root type (white roots included)."""
    out = []
    pool = [t for n in range(1, order) for t in _all_trees(n, kind)]
    forests = list(_forests(pool, order - 1, 0))
    for color, shape in _node_types(kind, root=False):
        for forest in forests:
            if shape == TRIANGLE and not forest:
                continue
            out.append(Tree(forest, color, shape))
    return tuple(sorted(set(out)))


def _forests(pool: Sequence[Tree], size: int, start: int) -> Iterator[tuple[Tree, ...]]:
    """Multisets from ``pool[start:]`` with total order ``size``."""
    if size == 0:
        yield ()
        return
    for i in range(start, len(pool)):
        t = pool[i]
        if t.order <= size:
            for rest in _forests(pool, size - t.order, i):
                yield (t,) + rest


def forests_of_size(size: int, kind: TreeKind | str, colors: Sequence[str] = (BLACK,)) -> list[tuple[Tree, ...]]:
    """All multisets of trees (roots restricted to ``colors``) with ``size`` nodes in total."""
    kind = tree_kind(kind)
    pool = [t for n in range(1, size + 1) for t in _all_trees(n, kind) if t.color in colors]
    return list(_forests(pool, size, 0))


def brute_force_trees(order: int, kind: TreeKind | str = TreeKind.MONO) -> set[Tree]:
    """Independent enumeration: every parent array and node-type labelling,
    canonicalized and deduplicated.  Exponential; for testing small orders."""
    kind = tree_kind(kind)
    types_root = _node_types(kind, root=True)
    types_any = _node_types(kind, root=False)
    found: set[Tree] = set()

    def parents(i, acc):
        if i == order:
            yield tuple(acc)
            return
        for p in range(i):
            yield from parents(i + 1, acc + [p])

    def labellings(i):
        if i == order:
            yield ()
            return
        options = types_root if i == 0 else types_any
        for lab in options:
            for rest in labellings(i + 1):
                yield (lab,) + rest

    for par in parents(1, [None]):
        kids: list[list[int]] = [[] for _ in range(order)]
        for i in range(1, order):
            kids[par[i]].append(i)
        for lab in labellings(0):
            if any(lab[i][1] == TRIANGLE and not kids[i] for i in range(order)):
                continue

            def build(i):
                return Tree([build(j) for j in kids[i]], lab[i][0], lab[i][1])

            found.add(build(0))
    return found
