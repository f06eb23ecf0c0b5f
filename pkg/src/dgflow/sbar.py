"""Recipes for the skew matrix ``Sbar(x, xhat, h)`` of a discrete gradient method.

A scheme is a stage graph (points ``z`` built from ``x``, ``xhat``, their
midpoint ``xbar`` and field evaluations) plus a list of terms.  Each term is an
alternating product ``S(.) R(.) S(.) ... R(.) S(.)`` where every ``R`` is a
Hessian or a ``Q(x, .)`` matrix; a term with ``n`` R-factors carries ``h**n``.

A symmetrized term contributes ``b h^n (P + c P~)`` where ``P~`` is the
product in reverse order and ``c = (-1)**(n + q)`` with ``q`` the number of Q
factors.  This is the unique sign that makes the sum antisymmetric, because
``P^T = (-1)**(n + 1 + q) P~``.  An unsymmetrized term contributes ``b h^n P``
and must be its own reverse.
"""

from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .core import SkewGradientSystem, eval_field
from .dg import DiscreteGradient, dg_q
from .errors import ConfigurationError, GraphError, InputError

Coef = Fraction | float

BASE_POINTS = ("x", "xhat", "xbar")


def as_coef(value: Any) -> Coef:
    """Parse a coefficient: int, Fraction, float, or a string such as ``"-5/136"``
    or ``"(17+sqrt(17))/30"``.  Rational inputs stay exact."""
    if isinstance(value, bool):
        raise InputError(f"invalid coefficient {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            tree = ast.parse(value.strip(), mode="eval")
            return _eval_coef(tree.body)
        except (SyntaxError, ValueError, ZeroDivisionError, TypeError) as exc:
            raise InputError(f"invalid coefficient {value!r}") from exc
    raise InputError(f"invalid coefficient {value!r}")


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval_coef(node) -> Coef:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return Fraction(node.value) if isinstance(node.value, int) else float(node.value)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        left, right = _eval_coef(node.left), _eval_coef(node.right)
        if isinstance(node.op, ast.Div) and isinstance(left, Fraction) and isinstance(right, Fraction):
            return left / right
        return _BINOPS[type(node.op)](left, right)
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow):
        left, right = _eval_coef(node.left), _eval_coef(node.right)
        result = left**right
        return result if isinstance(result, Fraction) else float(result)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_coef(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id == "sqrt"
        and len(node.args) == 1
    ):
        v = _eval_coef(node.args[0])
        root = math.isqrt(v.numerator) if isinstance(v, Fraction) and v.denominator == 1 and v >= 0 else None
        if root is not None and root * root == v:
            return Fraction(root)
        return math.sqrt(float(v))
    raise ValueError("unsupported expression")


@dataclass(frozen=True)
class Stage:
    """``z = sum_i a_i w_i + h sum_j c_j f(w_j)``."""

    name: str
    combination: tuple[tuple[str, Coef], ...]
    evaluations: tuple[tuple[str, Coef], ...] = ()

    def references(self) -> set[str]:
        return {w for w, _ in self.combination} | {w for w, _ in self.evaluations}


def stage(name: str, combination: Mapping[str, Any] | str, evaluations: Mapping[str, Any] | None = None) -> Stage:
    """Convenience constructor; ``combination`` may be a single point name."""
    if isinstance(combination, str):
        combination = {combination: 1}
    return Stage(
        name,
        tuple((w, as_coef(a)) for w, a in combination.items()),
        tuple((w, as_coef(c)) for w, c in (evaluations or {}).items()),
    )


class StageGraph:
    """Ordered, acyclic list of stages.

    Raises:
        GraphError: duplicate names, forward references, or a stage whose
            affine coefficients do not sum to one.
    """

    def __init__(self, stages: Iterable[Stage] = ()):
        self.stages: tuple[Stage, ...] = tuple(stages)
        known = set(BASE_POINTS)
        for st in self.stages:
            if st.name in known:
                raise GraphError(f"stage name {st.name!r} is already defined")
            missing = st.references() - known
            if missing:
                raise GraphError(f"stage {st.name!r} references undefined points {sorted(missing)}")
            total = sum(a for _, a in st.combination)
            if abs(float(total) - 1.0) > 1e-13:
                raise GraphError(f"stage {st.name!r}: affine coefficients sum to {total}, not 1")
            known.add(st.name)
        self.names = tuple(known)
        self.uses_xhat = any("xhat" in st.references() for st in self.stages)
        self.uses_xbar = any("xbar" in st.references() for st in self.stages)
        # Points whose value depends on xhat, directly or through earlier stages.
        dependent = {"xhat", "xbar"}
        for st in self.stages:
            if st.references() & dependent:
                dependent.add(st.name)
        self.implicit_points = frozenset(dependent)

    @property
    def implicit(self) -> bool:
        return self.uses_xhat or self.uses_xbar

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def evaluate(self, system: SkewGradientSystem, x, xhat, h: float) -> dict[str, np.ndarray]:
        """Numerical values of every point."""
        values = {"x": x, "xhat": xhat, "xbar": 0.5 * (x + xhat)}
        fields: dict[str, np.ndarray] = {}

        def f(name):
            if name not in fields:
                fields[name] = eval_field(system, values[name])
            return fields[name]

        for st in self.stages:
            z = sum(float(a) * values[w] for w, a in st.combination)
            for w, c in st.evaluations:
                z = z + (h * float(c)) * f(w)
            values[st.name] = z
        return values


@dataclass(frozen=True)
class Atom:
    """Matrix factor: ``S`` at a point, Hessian ``H`` at a point, or ``Q(x, point)``."""

    kind: str
    at: str = "x"

    def __post_init__(self):
        if self.kind not in ("S", "H", "Q"):
            raise InputError(f"atom kind must be S, H or Q, got {self.kind!r}")

    def __str__(self):
        return f"{self.kind}@{self.at}"


def S_at(point: str = "x") -> Atom:
    return Atom("S", point)


def Hess_at(point: str = "x") -> Atom:
    return Atom("H", point)


def Q_at(point: str = "x") -> Atom:
    return Atom("Q", point)


def parse_atom(text: str) -> Atom:
    kind, _, at = text.partition("@")
    return Atom(kind.strip(), at.strip() or "x")


@dataclass(frozen=True)
class SbarTerm:
    """``b h^n`` times an alternating product of atoms, optionally symmetrized."""

    coefficient: Coef
    factors: tuple[Atom, ...]
    symmetrize: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coefficient", as_coef(self.coefficient))
        factors = tuple(parse_atom(a) if isinstance(a, str) else a for a in self.factors)
        object.__setattr__(self, "factors", factors)
        if len(factors) % 2 == 0:
            raise InputError("a term must alternate S, R, S, ..., S (odd length)")
        for i, a in enumerate(factors):
            if (a.kind == "S") != (i % 2 == 0):
                raise InputError(f"term {self.describe()} does not alternate S and Hessian/Q factors")
        if not self.symmetrize and factors != factors[::-1]:
            raise InputError(f"unsymmetrized term {self.describe()} must read the same reversed")
        if not self.symmetrize and self.twin_sign < 0:
            raise InputError(f"term {self.describe()} equals minus its own transpose only after symmetrization")

    @property
    def h_power(self) -> int:
        return len(self.factors) // 2

    @property
    def q_count(self) -> int:
        return sum(a.kind == "Q" for a in self.factors)

    @property
    def twin_sign(self) -> int:
        """Sign c pairing P with its reversal."""
        return -1 if (self.h_power + self.q_count) % 2 else 1

    @property
    def normal_coefficient(self) -> Coef:
        """Coefficient in the form ``b (P + c P~)`` (half of b when unsymmetrized)."""
        return self.coefficient if self.symmetrize else self.coefficient / 2

    def describe(self) -> str:
        return f"{self.coefficient}*" + "".join(str(a) + " " for a in self.factors).strip()

    def points(self) -> set[str]:
        return {a.at for a in self.factors}


@dataclass(frozen=True)
class SbarScheme:
    """A complete ``Sbar`` recipe."""

    name: str
    nominal_order: int
    stages: StageGraph
    terms: tuple[SbarTerm, ...]
    requires_constant_S: bool = False
    requires_symmetric_dg: bool = False
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            unknown = t.points() - set(self.stages.names)
            if unknown:
                raise GraphError(f"scheme {self.name!r}: term {t.describe()} uses unknown points {sorted(unknown)}")
        zeroth = sum(t.normal_coefficient for t in self.terms if t.h_power == 0)
        if abs(float(zeroth) - 0.5) > 1e-13:
            raise ConfigurationError(
                f"scheme {self.name!r} is inconsistent: order-zero coefficients sum to {zeroth}, need 1/2 in normal form"
            )

    @property
    def implicit(self) -> bool:
        """Sbar depends on xhat."""
        return any(t.points() & self.stages.implicit_points for t in self.terms)

    @property
    def uses_q(self) -> bool:
        return any(t.q_count for t in self.terms)


def check_compatibility(scheme: SbarScheme, system: SkewGradientSystem, dg: DiscreteGradient) -> None:
    """Raise ``ConfigurationError`` if the scheme's preconditions fail."""
    if scheme.requires_constant_S and not system.is_constant_S:
        raise ConfigurationError(f"scheme {scheme.name!r} requires a constant S; {system.name!r} has state-dependent S")
    if scheme.requires_symmetric_dg and not dg.symmetric:
        raise ConfigurationError(f"scheme {scheme.name!r} requires a symmetric discrete gradient; {dg.kind.value} is not")
    if scheme.uses_q and not dg.differentiable and not dg.q_vanishes:
        raise ConfigurationError(f"scheme {scheme.name!r} needs Q, which {dg.kind.value} does not provide")


def eval_sbar(scheme: SbarScheme, system: SkewGradientSystem, dg: DiscreteGradient, x, xhat, h: float) -> np.ndarray:
    """Evaluate ``Sbar(x, xhat, h)``.

    Negative ``h`` is accepted so that backward steps can be composed with
    forward ones.
    """
    check_compatibility(scheme, system, dg)
    x = system.check_state(x)
    xhat = system.check_state(xhat)
    if not math.isfinite(h):
        raise InputError(f"step size must be finite, got {h}")
    points = scheme.stages.evaluate(system, x, xhat, h)
    cache: dict[Atom, np.ndarray] = {}
    const_S = system.skew(x) if system.is_constant_S else None

    def matrix(a: Atom) -> np.ndarray:
        m = cache.get(a)
        if m is None:
            if a.kind == "S":
                m = const_S if const_S is not None else system.skew(points[a.at])
            elif a.kind == "H":
                m = system.hessian(points[a.at])
            else:
                m = dg_q(dg, system, x, points[a.at])
            cache[a] = m
        return m

    d = system.dim
    total = np.zeros((d, d))
    for t in scheme.terms:
        if t.q_count and dg.q_vanishes:
            continue
        scale = float(t.coefficient) * h**t.h_power
        P = _product(matrix(a) for a in t.factors)
        if t.symmetrize:
            Pr = _product(matrix(a) for a in reversed(t.factors))
            P = P + t.twin_sign * Pr
        total += scale * P
    return total


def _product(mats: Iterable[np.ndarray]) -> np.ndarray:
    it = iter(mats)
    out = next(it)
    for m in it:
        out = out @ m
    return out


class SchemeBuilder:
    """Incremental construction of a custom scheme.

    Example::

        b = SchemeBuilder("my-avf4", order=4)
        b.stage("z1", "x", {"x": "1/2"})
        b.term(1, ["S@x"])
        b.term("-1/12", ["S@x", "H@z1", "S@x", "H@z1", "S@x"])
        scheme = b.build(requires_constant_S=True)
    """

    def __init__(self, name: str, order: int):
        self.name = name
        self.order = order
        self._stages: list[Stage] = []
        self._terms: list[SbarTerm] = []

    def stage(self, name: str, combination, evaluations=None) -> "SchemeBuilder":
        self._stages.append(stage(name, combination, evaluations))
        return self

    def term(self, coefficient, factors: Sequence[Atom | str], symmetrize: bool = False) -> "SchemeBuilder":
        self._terms.append(SbarTerm(coefficient, tuple(factors), symmetrize))
        return self

    def build(self, requires_constant_S: bool = False, requires_symmetric_dg: bool = False, description: str = "") -> SbarScheme:
        return SbarScheme(
            self.name,
            self.order,
            StageGraph(self._stages),
            tuple(self._terms),
            requires_constant_S=requires_constant_S,
            requires_symmetric_dg=requires_symmetric_dg,
            description=description,
        )


def scheme_from_dict(spec: Mapping[str, Any]) -> SbarScheme:
    """Build a scheme from its JSON description.

    Keys: ``name``, ``nominal_order``, ``stages`` (list of ``{"name",
    "combination": {point: coef}, "evaluations": {point: coef}}``), ``terms``
    (list of ``{"coefficient", "factors": ["S@x", "H@z1", ...], "symmetrize"}``),
    and optional ``requires_constant_S`` / ``requires_symmetric_dg``.
    """
    try:
        b = SchemeBuilder(str(spec["name"]), int(spec["nominal_order"]))
        for st in spec.get("stages", []):
            b.stage(st["name"], st["combination"], st.get("evaluations"))
        for t in spec["terms"]:
            b.term(t["coefficient"], t["factors"], bool(t.get("symmetrize", False)))
    except (KeyError, TypeError) as exc:
        raise InputError(f"scheme description is missing a field: {exc}") from exc
    return b.build(
        bool(spec.get("requires_constant_S", False)),
        bool(spec.get("requires_symmetric_dg", False)),
        str(spec.get("description", "")),
    )


def load_scheme(path: str) -> SbarScheme:
    try:
        with open(path) as fh:
            return scheme_from_dict(json.load(fh))
    except OSError as exc:
        raise InputError(f"cannot read scheme file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"scheme file {path!r} is not valid JSON: {exc}") from exc


def scheme_to_dict(scheme: SbarScheme) -> dict[str, Any]:
    """Inverse of :func:`scheme_from_dict` (surds are written as floats)."""

    def enc(c):
        return str(c) if isinstance(c, Fraction) else float(c)

    return {
        "name": scheme.name,
        "nominal_order": scheme.nominal_order,
        "requires_constant_S": scheme.requires_constant_S,
        "requires_symmetric_dg": scheme.requires_symmetric_dg,
        "stages": [
            {
                "name": st.name,
                "combination": {w: enc(a) for w, a in st.combination},
                "evaluations": {w: enc(c) for w, c in st.evaluations},
            }
            for st in scheme.stages.stages
        ],
        "terms": [
            {"coefficient": enc(t.coefficient), "factors": [str(a) for a in t.factors], "symmetrize": t.symmetrize}
            for t in scheme.terms
        ],
    }
