"""Skew-gradient systems ``x' = S(x) grad H(x)`` and the built-in problems."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .energy import Energy, Polynomial, cos_function, log_function
from .errors import DomainError, EvaluationError, InputError, SingularPointError

Matrix = np.ndarray
Vector = np.ndarray

_FD_STEP = math.sqrt(np.finfo(float).eps)


class PolynomialMatrix:
    """Antisymmetric matrix whose entries are polynomials in ``x``.

    Only the strict upper triangle is stored; the lower triangle is its exact
    negative, so ``S(x) + S(x).T`` vanishes bit for bit.
    """

    def __init__(self, dim: int, upper: Mapping[tuple[int, int], Sequence[tuple[float, Sequence[int]]]]):
        self.dim = dim
        coefs, powers, slots = [], [], []
        for (i, j), terms in upper.items():
            if not 0 <= i < j < dim:
                raise InputError(f"entry ({i}, {j}) is not in the strict upper triangle")
            for c, p in terms:
                if len(p) != dim:
                    raise InputError(f"monomial in entry ({i}, {j}) needs {dim} powers")
                coefs.append(float(c))
                powers.append(list(p))
                slots.append(i * dim + j)
        self._poly = _SlotPolynomial(dim, coefs, powers, slots, dim * dim)
        self.degree = self._poly.degree

    def __call__(self, x: Vector) -> Matrix:
        M = self._poly(x).reshape(self.dim, self.dim)
        return M - M.T

    def derivative(self, x: Vector) -> np.ndarray:
        """Array ``D[i, j, k] = dS_ij/dx_k``."""
        D = self._poly.derivative(x).reshape(self.dim, self.dim, self.dim)
        return D - D.transpose(1, 0, 2)


class _SlotPolynomial:
    """Vector of polynomials sharing one monomial table."""

    def __init__(self, dim, coefs, powers, slots, n_out):
        from .energy import MonomialTable, _derivative_table

        powers = np.array(powers, dtype=np.int64).reshape(-1, dim)
        coefs = np.array(coefs, dtype=np.float64)
        slots = np.array(slots, dtype=np.int64)
        self.degree = int(powers.sum(axis=1).max()) if len(coefs) else 0
        self._table = MonomialTable(coefs, powers, slots, n_out)
        dc, dp, ds = _derivative_table(coefs, powers, slots, dim)
        self._dtable = MonomialTable(dc, dp, ds, n_out * dim)

    def __call__(self, x):
        return self._table(x)

    def derivative(self, x):
        return self._dtable(x)


@dataclass(frozen=True)
class SkewGradientSystem:
    """A d-dimensional system ``x' = S(x) grad H(x)``.

    Args:
        dim: state dimension.
        energy: H.
        grad: gradient of H.
        skew: S(x), antisymmetric.
        hess: Hessian of H; central finite differences of ``grad`` are used
            when omitted.
        is_constant_S: S does not depend on x.
        closed_form_avf: exact average-vector-field gradient ``(x, y) -> g``.
        closed_form_avf_jacobian: its derivative in the second argument.
        product_form: energy in product form, enables the Furihata gradient.
        polynomial_degree: total degree when H is a polynomial.
        skew_derivative: ``x -> D`` with ``D[i, j, k] = dS_ij/dx_k``.
        name: label.
    """

    dim: int
    energy: Callable[[Vector], float]
    grad: Callable[[Vector], Vector]
    skew: Callable[[Vector], Matrix]
    hess: Callable[[Vector], Matrix] | None = None
    is_constant_S: bool = False
    closed_form_avf: Callable[[Vector, Vector], Vector] | None = None
    closed_form_avf_jacobian: Callable[[Vector, Vector], Matrix] | None = None
    product_form: Energy | None = None
    polynomial_degree: int | None = None
    skew_derivative: Callable[[Vector], np.ndarray] | None = None
    name: str = "system"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"dimension must be a positive integer, got {self.dim!r}")

    @classmethod
    def from_energy(cls, energy: Energy, skew, *, is_constant_S: bool = False,
                    skew_derivative=None, name: str = "system") -> "SkewGradientSystem":
        """Build a system whose H carries exploitable structure."""
        return cls(
            dim=energy.dim,
            energy=energy.value,
            grad=energy.grad,
            hess=energy.hess,
            skew=skew,
            is_constant_S=is_constant_S,
            closed_form_avf=energy.avf,
            closed_form_avf_jacobian=energy.avf_jacobian,
            product_form=energy,
            polynomial_degree=energy.degree,
            skew_derivative=skew_derivative,
            name=name,
        )

    def check_state(self, x) -> Vector:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise InputError(f"state must have shape ({self.dim},), got {x.shape}")
        return x

    def hessian(self, x: Vector) -> Matrix:
        """Analytic Hessian, or the finite-difference fallback."""
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=np.float64)
        return fd_hessian(self.grad, x)

    def field_jacobian(self, x: Vector) -> Matrix:
        """Jacobian of ``f = S grad H``."""
        J = self.skew(x) @ self.hessian(x)
        if not self.is_constant_S:
            g = self.grad(x)
            if self.skew_derivative is not None:
                dS = self.skew_derivative(x)
            else:
                dS = _fd_skew_derivative(self.skew, x)
            J = J + np.einsum("ijk,j->ik", dS, g)
        return J


def fd_hessian(grad, x: Vector) -> Matrix:
    """Central differences of ``grad`` with step sqrt(eps)*(1+|x_i|), symmetrized."""
    x = np.asarray(x, dtype=np.float64)
    d = len(x)
    H = np.empty((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = _FD_STEP * (1.0 + abs(x[i]))
        H[:, i] = (grad(x + e) - grad(x - e)) / (2.0 * e[i])
    return 0.5 * (H + H.T)


def _fd_skew_derivative(skew, x: Vector) -> np.ndarray:
    d = len(x)
    D = np.empty((d, d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1e-6 * (1.0 + abs(x[k]))
        D[:, :, k] = (skew(x + e) - skew(x - e)) / (2.0 * e[k])
    return D


def eval_field(system: SkewGradientSystem, x) -> Vector:
    """``f(x) = S(x) grad H(x)``."""
    x = system.check_state(x)
    f = system.skew(x) @ system.grad(x)
    if not np.all(np.isfinite(f)):
        raise EvaluationError(f"non-finite field value at {x}")
    return f


def eval_energy(system: SkewGradientSystem, x) -> float:
    """``H(x)``; raises ``DomainError`` outside the domain of H."""
    x = system.check_state(x)
    with np.errstate(all="raise"):
        try:
            value = float(system.energy(x))
        except FloatingPointError as exc:
            raise DomainError(f"energy undefined at {x}") from exc
    if not math.isfinite(value):
        raise DomainError(f"energy undefined at {x}")
    return value


def default_skew(f: Callable[[Vector], Vector], grad: Callable[[Vector], Vector], x) -> Matrix:
    """The default skew field ``(f g^T - g f^T) / (g^T g)`` with ``g = grad H(x)``.

    It reproduces ``f`` whenever ``f`` is orthogonal to ``g``.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(grad(x), dtype=np.float64)
    fx = np.asarray(f(x), dtype=np.float64)
    gg = float(g @ g)
    if gg == 0.0:
        raise SingularPointError(f"gradient vanishes at {x}")
    M = np.outer(fx, g)
    return (M - M.T) / gg


def canonical_skew(dim: int) -> Matrix:
    """``[[0, I], [-I, 0]]``."""
    if dim % 2:
        raise InputError("canonical structure needs an even dimension")
    n = dim // 2
    S = np.zeros((dim, dim))
    S[:n, n:] = np.eye(n)
    S[n:, :n] = -np.eye(n)
    return S


def constant_skew(S) -> Callable[[Vector], Matrix]:
    S = np.array(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InputError("skew matrix must be square")
    if np.any(S + S.T != 0.0):
        raise InputError("constant skew matrix is not antisymmetric")
    S.setflags(write=False)
    return lambda x: S.copy()


@dataclass(frozen=True)
class Problem:
    """A system together with an initial state."""

    system: SkewGradientSystem
    initial_state: Vector
    name: str
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        x0 = self.system.check_state(self.initial_state).copy()
        x0.setflags(write=False)
        object.__setattr__(self, "initial_state", x0)

    @cached_property
    def exact_energy_at_start(self) -> float:
        return eval_energy(self.system, self.initial_state)


def _constant_system(energy: Energy, S: Matrix, name: str) -> SkewGradientSystem:
    return SkewGradientSystem.from_energy(energy, constant_skew(S), is_constant_S=True, name=name)


def harmonic_oscillator() -> Problem:
    """``H = (q^2 + p^2)/2`` with canonical S."""
    energy = Energy(2, Polynomial([0.5, 0.5], [[2, 0], [0, 2]]))
    system = _constant_system(energy, canonical_skew(2), "harmonic")
    return Problem(system, np.array([1.0, 0.0]), "harmonic")


def henon_heiles() -> Problem:
    """Henon-Heiles in canonical coordinates (q1, q2, p1, p2)."""
    poly = Polynomial.from_terms(
        [
            (0.5, (2, 0, 0, 0)),
            (0.5, (0, 2, 0, 0)),
            (0.5, (0, 0, 2, 0)),
            (0.5, (0, 0, 0, 2)),
            (1.0, (2, 1, 0, 0)),
            (-1.0 / 3.0, (0, 3, 0, 0)),
        ],
        4,
    )
    system = _constant_system(Energy(4, poly), canonical_skew(4), "henon-heiles")
    return Problem(system, np.array([0.1, -0.5, 0.0, 0.0]), "henon-heiles")


def lotka_volterra() -> Problem:
    """Three-species Lotka-Volterra system with quadratic S and logarithmic H."""
    poly = Polynomial.from_terms([(2.0, (1, 0, 0)), (1.0, (0, 1, 0)), (2.0, (0, 0, 1))], 3)
    log = log_function()
    energy = Energy(3, poly, ((1, 1.0, log), (2, -2.0, log)))
    S = PolynomialMatrix(3, {(0, 1): [(-0.5, (1, 1, 0))], (0, 2): [(0.5, (1, 0, 1))], (1, 2): [(-1.0, (0, 1, 1))]})
    system = SkewGradientSystem.from_energy(energy, S, skew_derivative=S.derivative, name="lotka-volterra")
    return Problem(system, np.array([1.0, 1.9, 0.5]), "lotka-volterra")


def pendulum() -> Problem:
    """``H = 2 m g l (1 - cos q) + l^2 p^2 / (2 m)`` with l = m = 1, g = 3."""
    m, g, l = 1.0, 3.0, 1.0
    poly = Polynomial.from_terms([(2 * m * g * l, (0, 0)), (l * l / (2 * m), (0, 2))], 2)
    energy = Energy(2, poly, ((0, -2 * m * g * l, cos_function()),))
    system = _constant_system(energy, canonical_skew(2), "pendulum")
    return Problem(system, np.array([2.0, 0.0]), "pendulum")


PROBLEMS: dict[str, Callable[[], Problem]] = {
    "henon-heiles": henon_heiles,
    "lotka-volterra": lotka_volterra,
    "pendulum": pendulum,
    "harmonic": harmonic_oscillator,
}


def get_problem(name_or_path: str) -> Problem:
    """A built-in problem by name, or a problem loaded from a JSON file."""
    from .errors import CatalogError

    if name_or_path in PROBLEMS:
        return PROBLEMS[name_or_path]()
    if name_or_path.endswith(".json") or os.path.exists(name_or_path):
        return load_problem(name_or_path)
    raise CatalogError(f"unknown problem {name_or_path!r}; built-in problems: {', '.join(PROBLEMS)}")


def _monomials(items, dim: int, where: str) -> list[tuple[float, list[int]]]:
    out = []
    for item in items:
        try:
            coef = float(item["coef"])
            powers = [int(p) for p in item["powers"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{where}: monomials need 'coef' and 'powers'") from exc
        if len(powers) != dim:
            raise InputError(f"{where}: expected {dim} powers, got {len(powers)}")
        out.append((coef, powers))
    return out


def problem_from_dict(spec: Mapping[str, Any], name: str = "custom") -> Problem:
    """Build a problem from the JSON description.

    Keys: ``dim``, ``H`` (list of ``{"coef", "powers"}``), ``S`` (``"canonical"``,
    ``{"constant": [[...]]}`` or ``{"polynomial": [[[monomials]]]}``), ``x0`` and
    optionally ``log_terms`` (list of ``{"coef", "index"}``) and ``name``.
    """
    try:
        dim = int(spec["dim"])
        x0 = np.array(spec["x0"], dtype=np.float64)
        h_items = spec["H"]
        s_spec = spec["S"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"problem description is missing a field: {exc}") from exc
    name = str(spec.get("name", name))
    poly = Polynomial.from_terms(_monomials(h_items, dim, "H"), dim)
    terms = []
    for item in spec.get("log_terms", []):
        idx = int(item["index"])
        if not 0 <= idx < dim:
            raise InputError(f"log term index {idx} out of range")
        terms.append((idx, float(item["coef"]), log_function()))
    energy = Energy(dim, poly, tuple(terms))
    if s_spec == "canonical":
        system = _constant_system(energy, canonical_skew(dim), name)
    elif isinstance(s_spec, Mapping) and "constant" in s_spec:
        S = np.array(s_spec["constant"], dtype=np.float64)
        if S.shape != (dim, dim):
            raise InputError(f"constant S must be {dim}x{dim}")
        system = _constant_system(energy, S, name)
    elif isinstance(s_spec, Mapping) and "polynomial" in s_spec:
        entries = s_spec["polynomial"]
        if len(entries) != dim or any(len(row) != dim for row in entries):
            raise InputError(f"polynomial S must be {dim}x{dim}")
        upper = {}
        for i in range(dim):
            for j in range(dim):
                mono = _monomials(entries[i][j], dim, f"S[{i}][{j}]")
                if i == j:
                    if Polynomial.from_terms(mono, dim).coefs.size:
                        raise InputError("polynomial S must have a zero diagonal")
                    continue
                if i < j:
                    upper[(i, j)] = mono
                    mirror = Polynomial.from_terms(
                        [(-c, p) for c, p in _monomials(entries[j][i], dim, f"S[{j}][{i}]")], dim
                    )
                    here = Polynomial.from_terms(mono, dim)
                    if not (np.array_equal(mirror.powers, here.powers) and np.allclose(mirror.coefs, here.coefs, rtol=0, atol=0)):
                        raise InputError(f"polynomial S is not antisymmetric at ({i}, {j})")
        S = PolynomialMatrix(dim, upper)
        system = SkewGradientSystem.from_energy(energy, S, skew_derivative=S.derivative, name=name)
    else:
        raise InputError("S must be 'canonical', {'constant': ...} or {'polynomial': ...}")
    return Problem(system, x0, name)


def load_problem(path: str) -> Problem:
    """Load a problem from a JSON file."""
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read problem file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"problem file {path!r} is not valid JSON: {exc}") from exc
    return problem_from_dict(spec, name=os.path.splitext(os.path.basename(path))[0])
