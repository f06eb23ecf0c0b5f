"""Series coefficients of discrete gradient schemes and order verification.

The solution ``xhat`` of a scheme is expanded in a tree series whose
coefficient on a tree is ``Phi``.  Three series are supported:

* ``B``: constant S, AVF gradient, mono-coloured trees.
* ``P``: state-dependent S, AVF gradient, bi-coloured trees (white children
  record derivatives of S).
* ``G``: constant S, any discrete gradient, trees with circle and triangle
  nodes (triangles record derivatives of Q).

Every stage point is itself a series.  ``x`` has coefficient map ``e`` (one
on the empty tree, zero elsewhere), ``xhat`` has ``Phi``, the midpoint has
``(e + Phi)/2``, and a field evaluation ``h f(w)`` has value
``prod w(children)`` on a black-circle root.

A term ``S(a0) R1(b1) S(a1) ... Rn(bn) S(an)`` of ``Sbar`` feeds ``Phi`` via a
chain of products.  At stem node ``k`` the white children take the map of
``a_{k-1}``, the other black children take the map of ``b_k``; the final node
contributes ``theta``: ``1/(m+1)`` (circle) or ``-2m/(m+1)`` (triangle) times
``Phi`` on its ``m`` black children and the map of ``a_n`` on its white
children.

:func:`scheme_phi` sums these contributions node by node over stems of the
tree; :func:`scheme_phi_composed` evaluates the nested products directly and
serves as an independent check.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Mapping

from ..errors import ConfigurationError, GraphError, InputError
from ..sbar import BASE_POINTS, SbarScheme, StageGraph
from .tree import BLACK, CIRCLE, TRIANGLE, WHITE, Tree, TreeKind, as_tree, tree_gamma, trees_up_to

ORDER_TOLERANCE = 1e-12
MAX_SERIES_ORDER = {"B": 6, "P": 4, "G": 4}

Value = Fraction | float


class Series(str, enum.Enum):
    B = "B"
    P = "P"
    G = "G"


_SERIES_KIND = {Series.B: TreeKind.MONO, Series.P: TreeKind.BICOLORED, Series.G: TreeKind.SHAPED}


def series_kind(series: Series | str) -> Series:
    if isinstance(series, Series):
        return series
    try:
        return Series(str(series).upper())
    except ValueError:
        raise InputError(f"unknown series {series!r}; choose b, p or g") from None


class CoefficientMap(Mapping):
    """Tree -> coefficient, defined on every tree of one kind up to ``max_order``.

    Lookups accept a :class:`Tree` or its text encoding; ``None`` is the empty
    tree.  White-rooted trees read the value of their black-rooted twin.
    """

    def __init__(self, values: Mapping[Tree, Value], kind: TreeKind, max_order: int, empty: Value = 1):
        self._values = dict(values)
        self.kind = kind
        self.max_order = max_order
        self.empty = empty

    def __getitem__(self, t):
        if t is None:
            return self.empty
        t = as_tree(t).recolored(BLACK)
        return self._values[t]

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        return f"CoefficientMap({self.kind.value}, order<={self.max_order}, {len(self)} trees)"


@dataclass(frozen=True)
class _Chain:
    """One orientation of one term, as maps along the stem."""

    weight: Value                       # b (or b*c for the reversed product)
    s_points: tuple[str, ...]           # a_0 .. a_n
    r_points: tuple[str, ...]           # b_1 .. b_n
    r_shapes: tuple[str, ...]           # circle for Hessian, triangle for Q


def _chains(scheme: SbarScheme, series: Series) -> list[_Chain]:
    out = []
    for term in scheme.terms:
        if term.q_count and series is not Series.G:
            continue    # Q vanishes for the AVF gradient
        f = term.factors
        orientations = [(term.coefficient, f)]
        if term.symmetrize:
            orientations.append((term.coefficient * term.twin_sign, f[::-1]))
        for w, fac in orientations:
            out.append(_Chain(
                w,
                tuple(a.at for a in fac[0::2]),
                tuple(a.at for a in fac[1::2]),
                tuple(TRIANGLE if a.kind == "Q" else CIRCLE for a in fac[1::2]),
            ))
    return out


def _check_pairing(scheme: SbarScheme, series: Series) -> None:
    if series is Series.P and scheme.requires_constant_S:
        raise ConfigurationError(
            f"scheme {scheme.name!r} assumes constant S; the P-series describes state-dependent S")


def _check_order_arg(series: Series, max_order: int) -> int:
    limit = MAX_SERIES_ORDER[series.value]
    if int(max_order) != max_order or not 1 <= max_order <= limit:
        raise InputError(f"{series.value}-series order must be in 1..{limit}, got {max_order!r}")
    return int(max_order)


class _Engine:
    """Memoized evaluation of stage maps and ``Phi``."""

    def __init__(self, graph: StageGraph, chains: list[_Chain], phi: Callable[[Tree], Value] | None):
        self.graph = graph
        self.stages = {st.name: st for st in graph.stages}
        self.chains = chains
        self._phi_override = phi
        self._point_cache: dict[tuple[str, Tree], Value] = {}
        self._phi_cache: dict[Tree, Value] = {}
        self.stem_mode = True

    # Stage maps ---------------------------------------------------------

    def point(self, name: str, t: Tree | None) -> Value:
        if t is None:
            return 1
        t = t.recolored(BLACK)
        key = (name, t)
        v = self._point_cache.get(key)
        if v is None:
            v = self._point(name, t)
            self._point_cache[key] = v
        return v

    def _point(self, name: str, t: Tree) -> Value:
        if name == "x":
            return 0
        if name == "xhat":
            return self.phi(t)
        if name == "xbar":
            return Fraction(1, 2) * self.phi(t)
        st = self.stages.get(name)
        if st is None:
            raise GraphError(f"unknown point {name!r}")
        v: Value = 0
        for w, a in st.combination:
            v += a * self.point(w, t)
        if st.evaluations and t.is_black_circle:
            for w, c in st.evaluations:
                v += c * self._field(w, t)
        return v

    def _field(self, name: str, t: Tree) -> Value:
        v: Value = 1
        for child in t.children:
            v *= self.point(name, child)
        return v

    # Phi ----------------------------------------------------------------

    def phi(self, t: Tree | None) -> Value:
        if t is None:
            return 1
        t = t.recolored(BLACK)
        if self._phi_override is not None:
            return self._phi_override(t)
        v = self._phi_cache.get(t)
        if v is None:
            v = self._phi_stems(t) if self.stem_mode else self._phi_composed(t)
            self._phi_cache[t] = v
        return v

    def theta(self, t: Tree, s_point: str) -> Value:
        """Final-node factor: shape weight, Phi on black children, S-map on white children."""
        black = t.black_children()
        m = len(black)
        v: Value = Fraction(1, m + 1) if t.shape == CIRCLE else Fraction(-2 * m, m + 1)
        for c in black:
            v *= self.phi(c)
        for c in t.white_children():
            v *= self.point(s_point, c)
        return v

    def _phi_stems(self, t: Tree) -> Value:
        total: Value = 0
        for shapes, forests, top in _stems(t):
            n = len(shapes)
            for ch in self.chains:
                if len(ch.r_points) != n or ch.r_shapes != shapes:
                    continue
                v: Value = ch.weight
                for k, (blacks, whites) in enumerate(forests):
                    for c in whites:
                        v *= self.point(ch.s_points[k], c)
                    for c in blacks:
                        v *= self.point(ch.r_points[k], c)
                    if v == 0:
                        break
                if v != 0:
                    total += v * self.theta(top, ch.s_points[n])
        return total

    def _phi_composed(self, t: Tree) -> Value:
        total: Value = 0
        for ch in self.chains:
            total += ch.weight * self._compose(ch, 0, t)
        return total

    def _compose(self, ch: _Chain, k: int, t: Tree) -> Value:
        if k == len(ch.r_points):
            if t.color != BLACK:
                return 0
            return self.theta(t, ch.s_points[k])
        if t.color != BLACK or t.shape != ch.r_shapes[k]:
            return 0
        kids = t.children
        total: Value = 0
        for i, ci in enumerate(kids):
            if ci.color != BLACK:
                continue
            v = self._compose(ch, k + 1, ci)
            if v == 0:
                continue
            for j, cj in enumerate(kids):
                if j == i:
                    continue
                v *= self.point(ch.s_points[k], cj) if cj.color == WHITE else self.point(ch.r_points[k], cj)
            total += v
        return total



def _stems(t: Tree) -> Iterator[tuple[tuple[str, ...], list[tuple[tuple[Tree, ...], tuple[Tree, ...]]], Tree]]:
    """Every node reachable from the root through black children.

    Yields ``(shapes, forests, node)``: the shapes of the stem nodes strictly
    below the node, and for each of them the (other black children, white
    children) forests.
    """
    def walk(cur: Tree, shapes, forests):
        yield shapes, forests, cur
        kids = cur.children
        whites = tuple(c for c in kids if c.color != BLACK)
        for i, c in enumerate(kids):
            if c.color != BLACK:
                continue
            others = tuple(x for j, x in enumerate(kids) if j != i and x.color == BLACK)
            yield from walk(c, shapes + (cur.shape,), forests + [(others, whites)])

    yield from walk(t, (), [])


def _engine(scheme: SbarScheme, series: Series, phi=None) -> _Engine:
    return _Engine(scheme.stages, _chains(scheme, series), phi)


def _target_trees(series: Series, max_order: int, scheme: SbarScheme | None = None) -> list[Tree]:
    trees = trees_up_to(max_order, _SERIES_KIND[series])
    if series is Series.G and scheme is not None and scheme.requires_symmetric_dg:
        # Q(x, x) = 0 for a symmetric gradient, so a triangle with one child
        # has a vanishing elementary differential.
        trees = [t for t in trees if not _has_unary_triangle(t)]
    return trees


def _has_unary_triangle(t: Tree) -> bool:
    return any(n.shape == TRIANGLE and len(n.children) == 1 for n in t.nodes())


def scheme_phi(scheme: SbarScheme, max_order: int, series: Series | str = Series.B) -> CoefficientMap:
    """``Phi`` on every tree of the series' kind up to ``max_order`` (stem sums).

    Raises:
        ConfigurationError: the P-series was requested for a constant-S scheme.
        InputError: order out of range.
    """
    series = series_kind(series)
    max_order = _check_order_arg(series, max_order)
    _check_pairing(scheme, series)
    eng = _engine(scheme, series)
    kind = _SERIES_KIND[series]
    return CoefficientMap({t: eng.phi(t) for t in trees_up_to(max_order, kind)}, kind, max_order)


def scheme_phi_composed(scheme: SbarScheme, max_order: int, series: Series | str = Series.B) -> CoefficientMap:
    """``Phi`` by direct nested composition of the chain products."""
    series = series_kind(series)
    max_order = _check_order_arg(series, max_order)
    _check_pairing(scheme, series)
    eng = _engine(scheme, series)
    eng.stem_mode = False
    kind = _SERIES_KIND[series]
    return CoefficientMap({t: eng.phi(t) for t in trees_up_to(max_order, kind)}, kind, max_order)


def stage_weights(graph: StageGraph, max_order: int, kind: TreeKind | str = TreeKind.MONO,
                  phi: Mapping[Tree, Value] | Callable[[Tree], Value] | None = None) -> dict[str, CoefficientMap]:
    """Series coefficients of every point of a stage graph.

    Args:
        graph: the stages.
        max_order: largest tree order.
        kind: tree family.
        phi: coefficients of ``xhat``; required when a stage depends on it.

    Raises:
        GraphError: a stage depends on ``xhat`` and ``phi`` was not given.
    """
    from .tree import tree_kind

    kind = tree_kind(kind)
    if graph.implicit and phi is None:
        raise GraphError("stages depend on xhat; pass its coefficients via phi")
    if isinstance(phi, Mapping):
        table = phi
        phi_fn = lambda t: table[t]  # noqa: E731
    else:
        phi_fn = phi if phi is not None else (lambda t: 0)
    eng = _Engine(graph, [], phi_fn)
    trees = trees_up_to(max_order, kind)
    names = list(BASE_POINTS) + [st.name for st in graph.stages]
    if phi is None:
        names = [n for n in names if n not in ("xhat", "xbar")]
    return {n: CoefficientMap({t: eng.point(n, t) for t in trees}, kind, max_order) for n in names}


def exact_coefficient(t: Tree, series: Series | str = Series.B) -> Fraction:
    """Coefficient of the exact flow: ``1/gamma``, or zero on triangle-bearing trees."""
    series = series_kind(series)
    if series is Series.G and t.has_triangle():
        return Fraction(0)
    return 1 / tree_gamma(t)


@dataclass(frozen=True)
class OrderRow:
    tree: Tree
    phi: Value
    target: Fraction
    residual: float


@dataclass(frozen=True)
class OrderReport:
    """Tree-by-tree comparison of ``Phi`` with the exact coefficients."""

    scheme: str
    series: Series
    order: int
    rows: tuple[OrderRow, ...]
    tolerance: float = ORDER_TOLERANCE

    @property
    def max_residual(self) -> float:
        return max((r.residual for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def failures(self) -> list[OrderRow]:
        return [r for r in self.rows if r.residual > self.tolerance]

    def achieved_order(self) -> int:
        """Largest ``q <= order`` such that every tree up to ``q`` passes."""
        q = 0
        for n in range(1, self.order + 1):
            if any(r.residual > self.tolerance for r in self.rows if r.tree.order == n):
                break
            q = n
        return q

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tree", "order", "phi", "target", "residual"])
        for r in self.rows:
            w.writerow([r.tree.encode(), r.tree.order, _fmt(r.phi), _fmt(r.target), f"{r.residual:.3e}"])
        return buf.getvalue()


def _fmt(v: Value) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return repr(float(v))


def check_order(scheme: SbarScheme, p: int, series: Series | str = Series.B) -> OrderReport:
    """Compare ``Phi`` with the exact flow on every tree up to order ``p``.

    Passing means the maximum residual is at most 1e-12.  Tree-wise
    comparison contains no free parameters, so families of conditions with
    arbitrary parameters in a combination table reduce to these checks.
    """
    series = series_kind(series)
    phi = scheme_phi(scheme, p, series)
    rows = []
    for t in _target_trees(series, p, scheme):
        value = phi[t]
        target = exact_coefficient(t, series)
        rows.append(OrderRow(t, value, target, abs(float(value - target))))
    return OrderReport(scheme.name, series, p, tuple(rows))
