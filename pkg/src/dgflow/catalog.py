"""Built-in ``Sbar`` recipes.

Names ending in ``-const`` (and the ``avf*`` schemes without ``-S``) assume a
constant skew matrix; ``sym*`` schemes assume a symmetric discrete gradient.
Irrational stage coefficients are stored as doubles.
"""

from __future__ import annotations

import math
from fractions import Fraction as F
from typing import Callable

from .errors import CatalogError
from .sbar import SbarScheme, SchemeBuilder

SQ13 = math.sqrt(13.0)
SQ7 = math.sqrt(7.0)
SQ3 = math.sqrt(3.0)
R12 = 1.0 / math.sqrt(12.0)

_SHSHS = ("S@{0}", "H@{0}", "S@{0}", "H@{0}", "S@{0}")


def _at(pattern, point):
    return [p.format(point) for p in pattern]


def _richardson_pair(b: SchemeBuilder, x: str, a: str, b2: str, c: str, d: str, plus: str, minus: str):
    """Stages ``plus/minus = z5 +- z6`` with
    ``z5 = (x + a + b2)/3 + (d - c)/12`` and ``z6 = sqrt(3)/36 (7x - 2a - 4b2 + c - 2d)``."""
    z5 = {x: F(1, 3), a: F(1, 3), b2: F(1, 3), c: F(-1, 12), d: F(1, 12)}
    z6 = {x: 7.0, a: -2.0, b2: -4.0, c: 1.0, d: -2.0}
    for name, sign in ((plus, 1.0), (minus, -1.0)):
        combo = {w: float(z5[w]) + sign * SQ3 / 36.0 * z6[w] for w in z5}
        b.stage(name, combo)


def _dgm2() -> SbarScheme:
    b = SchemeBuilder("dgm2", 2)
    b.term(1, ["S@xbar"])
    return b.build(description="S evaluated at the midpoint (x + xhat)/2")


def _dgm3_const() -> SbarScheme:
    b = SchemeBuilder("dgm3-const", 3)
    b.stage("z", "x", {"x": F(2, 3)})
    b.term(1, ["S@x"])
    b.term(1, ["S@x", "Q@z", "S@x"])
    b.term(1, ["S@x", "Q@x", "S@x", "Q@x", "S@x"])
    b.term(F(-1, 12), _at(_SHSHS, "x"))
    return b.build(requires_constant_S=True, description="third order, any discrete gradient, constant S")


def _dgm4_const() -> SbarScheme:
    b = SchemeBuilder("dgm4-const", 4)
    b.stage("z1", "x", {"x": F(1, 2)})
    b.stage("z2", "x", {"x": F(2, 3)})
    b.stage("z3", "x", {"z1": F(3, 4)})
    b.term(1, ["S@x"])
    b.term(F(8, 9), ["S@x", "Q@z3", "S@x"])
    b.term(F(1, 9), ["S@x", "Q@x", "S@x"])
    b.term(1, ["S@x", "Q@z2", "S@x", "Q@z2", "S@x"])
    b.term(F(-1, 12), _at(_SHSHS, "z1"))
    b.term(1, ["S@x", "Q@x", "S@x", "Q@x", "S@x", "Q@x", "S@x"])
    b.term(F(-1, 12), ["S@x", "H@x", "S@x", "H@x", "S@x", "Q@x", "S@x"], symmetrize=True)
    return b.build(requires_constant_S=True, description="fourth order, any discrete gradient, constant S")


def _avf4() -> SbarScheme:
    b = SchemeBuilder("avf4", 4)
    b.stage("z1", "x", {"x": F(1, 2)})
    b.term(1, ["S@x"])
    b.term(F(-1, 12), _at(_SHSHS, "z1"))
    return b.build(requires_constant_S=True, description="fourth order AVF method, constant S")


def _avf5() -> SbarScheme:
    b = SchemeBuilder("avf5", 5)
    b.stage("z1", "x", {"x": F(2, 5)})
    b.stage("z2", "x", {"z1": (17.0 + math.sqrt(17.0)) / 30.0})
    b.stage("z3", "x", {"z1": (17.0 - math.sqrt(17.0)) / 30.0})
    b.term(1, ["S@x"])
    b.term(F(-5, 136), ["S@x", "H@z2", "S@x", "H@z3", "S@x"], symmetrize=True)
    b.term(F(-1, 102), _at(_SHSHS, "x"))
    # Reversed partner enters with a minus sign; that is what keeps Sbar skew.
    b.term(F(1, 288), ["S@x", "H@x", "S@x", "H@x", "S@x", "H@z1", "S@x"], symmetrize=True)
    b.term(F(1, 120), ["S@x", "H@x"] * 4 + ["S@x"])
    return b.build(requires_constant_S=True, description="fifth order AVF method, constant S")


def _avf6_sym() -> SbarScheme:
    b = SchemeBuilder("avf6-sym", 6)
    b.stage("a1", "xbar", {"xbar": -3.0 * SQ13 / 26.0})
    b.stage("b1", "xbar", {"a1": SQ13 / 26.0})
    b.stage("c1", "xbar", {"xbar": 3.0 * SQ13 / 26.0})
    b.stage("d1", "xbar", {"c1": -SQ13 / 26.0})
    b.stage("m_minus", "xbar", {"xbar": F(-1, 2)})
    b.stage("m_plus", "xbar", {"xbar": F(1, 2)})
    b.term(1, ["S@x"])
    b.term(F(-13, 360), ["S@x", "H@b1", "S@x", "H@d1", "S@x"], symmetrize=True)
    b.term(F(-1, 180), _at(_SHSHS, "x"))
    b.term(F(-1, 180), _at(_SHSHS, "xhat"))
    b.term(F(1, 720), ["S@x", "H@m_minus", "S@x", "H@xbar", "S@x", "H@m_plus", "S@x"], symmetrize=True)
    b.term(F(1, 120), ["S@x", "H@xbar"] * 4 + ["S@x"])
    return b.build(requires_constant_S=True, description="symmetric implicit sixth order AVF method, constant S")


def _avf6_exp() -> SbarScheme:
    b = SchemeBuilder("avf6-exp", 6)
    b.stage("u1", "x", {"x": F(1, 3)})
    b.stage("u2", "x", {"u1": F(2, 3)})
    b.stage("z1", "x", {"x": F(1, 4), "u2": F(3, 4)})
    b.stage("z2", "x", {"x": F(1, 2)})
    b.stage("z3", "x", {"z2": 1})
    b.stage("z4", {"x": F(1, 2), "z3": F(1, 2)}, {"z2": -3.0 * SQ13 / 26.0})
    b.stage("z5", {"x": F(1, 2), "z3": F(1, 2)}, {"z2": 3.0 * SQ13 / 26.0})
    b.stage("z6", {"x": F(1, 2), "z1": F(1, 2)}, {"z4": SQ13 / 26.0})
    b.stage("z7", {"x": F(1, 2), "z1": F(1, 2)}, {"z5": -SQ13 / 26.0})
    b.term(1, ["S@x"])
    b.term(F(-13, 360), ["S@x", "H@z6", "S@x", "H@z7", "S@x"], symmetrize=True)
    b.term(F(-1, 180), _at(_SHSHS, "x"))
    b.term(F(-1, 180), _at(_SHSHS, "z1"))
    b.term(F(1, 720), ["S@x", "H@x", "S@x", "H@z2", "S@x", "H@z3", "S@x"], symmetrize=True)
    b.term(F(1, 120), ["S@x", "H@z2"] * 4 + ["S@x"])
    return b.build(requires_constant_S=True, description="explicit sixth order AVF method, constant S")


def _avf3_S() -> SbarScheme:
    b = SchemeBuilder("avf3-S", 3)
    b.stage("z1", "x", {"x": F(1, 3)})
    b.stage("z2", "x", {"z1": F(2, 3)})
    b.term(F(1, 4), ["S@x"])
    b.term(F(3, 4), ["S@z2"])
    b.term(F(1, 4), ["S@z1", "H@x", "S@x"], symmetrize=True)
    b.term(F(-1, 12), _at(_SHSHS, "x"))
    return b.build(description="third order AVF method, state-dependent S")


def _avf4_S_imp() -> SbarScheme:
    b = SchemeBuilder("avf4-S-imp", 4)
    b.stage("r1", "xbar", {"xbar": R12})
    b.stage("p", "xbar", {"r1": -R12})
    b.stage("r2", "xbar", {"xbar": -R12})
    b.stage("q", "xbar", {"r2": R12})
    b.stage("u", "xbar", {"xbar": F(1, 12)})
    b.stage("v", "xbar", {"xbar": F(-1, 12)})
    b.term(F(1, 2), ["S@p"])
    b.term(F(1, 2), ["S@q"])
    b.term(F(1, 2), ["S@u", "H@xbar", "S@v"], symmetrize=True)
    b.term(F(-1, 12), _at(_SHSHS, "xbar"))
    return b.build(description="symmetric implicit fourth order AVF method, state-dependent S")


def _avf4_S_exp() -> SbarScheme:
    b = SchemeBuilder("avf4-S-exp", 4)
    b.stage("z1", "x", {"x": F(1, 2)})
    b.stage("z2", "x", {"z1": 1})
    b.stage("z3", "x", {"z2": 1})
    b.stage("z4", "x", {"z3": 1})
    _richardson_pair(b, "x", "z1", "z2", "z3", "z4", "zp", "zm")
    b.term(F(1, 2), ["S@zp"])
    b.term(F(1, 2), ["S@zm"])
    b.term(F(1, 12), ["S@z2", "H@z1", "S@x"], symmetrize=True)
    b.term(F(-1, 12), _at(_SHSHS, "z1"))
    return b.build(description="explicit fourth order AVF method, state-dependent S")


def _gen3_S() -> SbarScheme:
    b = SchemeBuilder("gen3-S", 3)
    b.stage("z1", "x", {"x": F(1, 3)})
    b.stage("z2", "x", {"x": F(1, 2)})
    b.stage("z3", "x", {"z1": F(2, 3)})
    b.term(F(1, 4), ["S@x"])
    b.term(F(3, 4), ["S@z3"])
    b.term(1, ["S@z2", "Q@z3", "S@z2"])
    b.term(F(1, 4), ["S@z1", "H@x", "S@x"], symmetrize=True)
    b.term(1, ["S@x", "Q@x", "S@x", "Q@x", "S@x"])
    b.term(F(-1, 12), _at(_SHSHS, "x"))
    return b.build(description="third order, any discrete gradient, state-dependent S")


def _gen4_S() -> SbarScheme:
    b = SchemeBuilder("gen4-S", 4)
    b.stage("z1", "x", {"x": F(1, 3)})
    b.stage("z2", "x", {"x": F(1, 2)})
    b.stage("z3", "x", {"z1": (7.0 - SQ7) / 12.0})
    b.stage("z4", "x", {"z1": (7.0 + SQ7) / 12.0})
    b.stage("z5", "x", {"z2": F(2, 3)})
    b.stage("z6", "x", {"z2": 1})
    b.stage("z7", "x", {"z2": F(5, 4)})
    b.stage("z8", "x", {"z2": F(4, 3)})
    b.stage("z9", "x", {"z6": 1})
    b.stage("z10", "x", {"z9": 1})
    _richardson_pair(b, "x", "z2", "z6", "z9", "z10", "zp", "zm")
    b.term(F(1, 2), ["S@zp"])
    b.term(F(1, 2), ["S@zm"])
    b.term(F(1, 12), ["S@z6", "H@z2", "S@x"], symmetrize=True)
    b.term(F(3, 7), ["S@z3", "Q@z5", "S@z4"], symmetrize=True)
    b.term(F(8, 105), ["S@x", "Q@z7", "S@x"])
    b.term(F(1, 15), ["S@x", "Q@x", "S@x"])
    b.term(1, ["S@z2", "Q@z5", "S@z8", "Q@z5", "S@z2"])
    b.term(F(-1, 12), _at(_SHSHS, "z2"))
    b.term(F(1, 6), ["S@z2", "H@x", "S@x", "Q@x", "S@x"], symmetrize=True)
    b.term(F(-1, 6), ["S@x", "H@x", "S@x", "Q@x", "S@x"], symmetrize=True)
    b.term(1, ["S@x", "Q@x", "S@x", "Q@x", "S@x", "Q@x", "S@x"])
    b.term(F(-1, 12), ["S@x", "H@x", "S@x", "H@x", "S@x", "Q@x", "S@x"], symmetrize=True)
    return b.build(description="fourth order, any discrete gradient, state-dependent S")


def _sym4_S() -> SbarScheme:
    b = SchemeBuilder("sym4-S", 4)
    b.stage("z1", "x", {"x": F(1, 2)})
    b.stage("z2", "x", {"z1": 1})
    b.stage("z3", "x", {"z2": 1})
    b.stage("z4", "x", {"z3": 1})
    _richardson_pair(b, "x", "z1", "z2", "z3", "z4", "zp", "zm")
    b.stage("z7", "x", {"z1": F(3, 4)})
    b.term(F(1, 2), ["S@zp"])
    b.term(F(1, 2), ["S@zm"])
    b.term(F(1, 12), ["S@z2", "H@z1", "S@x"], symmetrize=True)
    b.term(F(8, 9), ["S@z1", "Q@z7", "S@z1"])
    b.term(F(-1, 12), _at(_SHSHS, "z1"))
    return b.build(requires_symmetric_dg=True, description="fourth order, symmetric discrete gradient, state-dependent S")


def _sym4_const() -> SbarScheme:
    b = SchemeBuilder("sym4-const", 4)
    b.stage("z1", "x", {"x": F(1, 2)})
    b.stage("z7", "x", {"z1": F(3, 4)})
    b.term(1, ["S@x"])
    b.term(F(8, 9), ["S@x", "Q@z7", "S@x"])
    b.term(F(-1, 12), _at(_SHSHS, "z1"))
    return b.build(requires_constant_S=True, requires_symmetric_dg=True, description="fourth order, symmetric discrete gradient, constant S")


def _sym3_const() -> SbarScheme:
    b = SchemeBuilder("sym3-const", 3)
    b.stage("z", "x", {"x": F(2, 3)})
    b.term(1, ["S@x"])
    b.term(1, ["S@x", "Q@z", "S@x"])
    b.term(F(-1, 12), _at(_SHSHS, "x"))
    return b.build(requires_constant_S=True, requires_symmetric_dg=True, description="third order, symmetric discrete gradient, constant S")


_FACTORIES: dict[str, Callable[[], SbarScheme]] = {
    "dgm2": _dgm2,
    "dgm3-const": _dgm3_const,
    "dgm4-const": _dgm4_const,
    "avf4": _avf4,
    "avf5": _avf5,
    "avf6-sym": _avf6_sym,
    "avf6-exp": _avf6_exp,
    "avf3-S": _avf3_S,
    "avf4-S-imp": _avf4_S_imp,
    "avf4-S-exp": _avf4_S_exp,
    "gen3-S": _gen3_S,
    "gen4-S": _gen4_S,
    "sym4-S": _sym4_S,
    "sym4-const": _sym4_const,
    "sym3-const": _sym3_const,
}

SCHEME_NAMES = tuple(_FACTORIES)

_CACHE: dict[str, SbarScheme] = {}


def builtin_scheme(name: str) -> SbarScheme:
    """Return a catalog scheme by name.

    Raises:
        CatalogError: unknown name.
    """
    if name not in _FACTORIES:
        lowered = {k.lower(): k for k in _FACTORIES}
        if name.lower() not in lowered:
            raise CatalogError(f"unknown scheme {name!r}; choose from {', '.join(SCHEME_NAMES)}")
        name = lowered[name.lower()]
    if name not in _CACHE:
        _CACHE[name] = _FACTORIES[name]()
    return _CACHE[name]


def get_scheme(name_or_path: str) -> SbarScheme:
    """Catalog name, or a path to a JSON scheme description."""
    if name_or_path.endswith(".json"):
        from .sbar import load_scheme

        return load_scheme(name_or_path)
    return builtin_scheme(name_or_path)


def compatible(scheme: SbarScheme, system, dg) -> bool:
    """Whether ``eval_sbar`` accepts this combination."""
    if scheme.requires_constant_S and not system.is_constant_S:
        return False
    if scheme.requires_symmetric_dg and not dg.symmetric:
        return False
    if scheme.uses_q and not dg.differentiable and not dg.q_vanishes:
        return False
    return True
