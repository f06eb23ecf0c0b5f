"""One-step solves of ``xhat = x + h Sbar(x, xhat, h) g(x, xhat)``, trajectories,
and reference Runge-Kutta integrators."""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from .core import Problem, SkewGradientSystem, eval_energy, eval_field
from .dg import DiscreteGradient, dg_eval, dg_jacobian2
from .errors import ConfigurationError, InputError, SolverError
from .sbar import SbarScheme, check_compatibility, eval_sbar

_EPS = np.finfo(float).eps
STALL_FACTOR = 1e3


class Strategy(str, enum.Enum):
    NEWTON = "newton"
    QUASI_NEWTON = "quasi-newton"
    FIXED_POINT = "fixed-point"


class Predictor(str, enum.Enum):
    EXPLICIT_EULER = "euler"
    PREVIOUS_STEP = "previous"


@dataclass(frozen=True)
class SolverConfig:
    """Nonlinear solver settings.

    Args:
        tol: infinity-norm bound on the residual.
        max_iter: iteration cap per step.
        strategy: ``NEWTON`` rebuilds the Jacobian every iteration,
            ``QUASI_NEWTON`` keeps the one from the predictor,
            ``FIXED_POINT`` iterates the map directly.
        predictor: starting guess, explicit Euler or linear extrapolation
            from the previous step.
    """

    tol: float = 1e-12
    max_iter: int = 50
    strategy: Strategy = Strategy.NEWTON
    predictor: Predictor = Predictor.EXPLICIT_EULER

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "predictor", Predictor(self.predictor))
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be a positive integer, got {self.max_iter}")


@dataclass
class StepResult:
    x: np.ndarray
    iterations: int
    residual: float
    history: list[float] = field(default_factory=list)


def _check_h(h: float) -> float:
    h = float(h)
    if not math.isfinite(h) or h == 0.0:
        raise InputError(f"step size must be finite and non-zero, got {h}")
    return h


def solve_step(
    system: SkewGradientSystem,
    dg: DiscreteGradient,
    scheme: SbarScheme,
    x,
    h: float,
    cfg: SolverConfig = SolverConfig(),
    x_prev=None,
) -> StepResult:
    """Advance one step and report solver statistics.

    Negative ``h`` steps backwards in time.

    Raises:
        ConfigurationError: incompatible scheme, system and discrete gradient.
        SolverError: no convergence within the budget, or divergence.
    """
    check_compatibility(scheme, system, dg)
    x = system.check_state(x).copy()
    h = _check_h(h)

    fx = eval_field(system, x)
    if cfg.predictor is Predictor.PREVIOUS_STEP and x_prev is not None:
        pred = 2.0 * x - system.check_state(x_prev)
    else:
        pred = x + h * fx
    strategy = cfg.strategy
    budget = cfg.max_iter
    if not dg.differentiable and strategy is not Strategy.FIXED_POINT:
        strategy = Strategy.FIXED_POINT
        budget = 4 * cfg.max_iter

    implicit = scheme.implicit
    sbar_fixed = None if implicit else eval_sbar(scheme, system, dg, x, x, h)
    eye = np.eye(system.dim)

    def residual(xh):
        sb = sbar_fixed if sbar_fixed is not None else eval_sbar(scheme, system, dg, x, xh, h)
        g = dg_eval(dg, system, x, xh)
        return xh - x - h * (sb @ g), sb

    def jacobian(xh, sb):
        return eye - h * (sb @ dg_jacobian2(dg, system, x, xh))

    xh = pred.copy()
    F, sb = residual(xh)
    r = _norm(F)
    history = [r]
    J = None
    if strategy is Strategy.QUASI_NEWTON:
        J = jacobian(xh, sb)
    growth = 0
    stall = 0
    guarded = False
    for it in range(1, budget + 1):
        if _converged(r, cfg.tol, x, xh):
            return StepResult(xh, it - 1, r, history)
        if strategy is Strategy.FIXED_POINT:
            xh = xh - F
        else:
            if strategy is Strategy.NEWTON:
                J = jacobian(xh, sb)
            try:
                xh = xh - np.linalg.solve(J, F)
            except np.linalg.LinAlgError as exc:
                raise SolverError("singular Newton matrix", residual=r, partial=xh) from exc
        F, sb = residual(xh)
        r_new = _norm(F)
        if not math.isfinite(r_new):
            raise SolverError("residual became non-finite", residual=r_new, partial=xh)
        growth = growth + 1 if r_new > r else 0
        stall = stall + 1 if r_new > 0.5 * r else 0
        r = r_new
        history.append(r)
        if stall >= 2 and _stagnated(r, cfg.tol, x, xh):
            return StepResult(xh, it, r, history)
        if growth >= 3:
            if guarded:
                raise SolverError(f"solver diverged after {it} iterations", residual=r, partial=xh)
            guarded = True
            growth = 0
            xh = 0.5 * (xh + pred)
            F, sb = residual(xh)
            r = _norm(F)
            history.append(r)
    if _converged(r, cfg.tol, x, xh):
        return StepResult(xh, budget, r, history)
    raise SolverError(f"no convergence in {budget} iterations (residual {r:.3e})", residual=r, partial=xh)


def _norm(v) -> float:
    return float(np.max(np.abs(v)))


def _converged(r: float, tol: float, x, xh) -> bool:
    # Below tol, or at the round-off floor of the update itself.
    floor = 16.0 * _EPS * (1.0 + max(_norm(x), _norm(xh)))
    return r <= max(tol, floor)


def _stagnated(r: float, tol: float, x, xh) -> bool:
    # No further progress, and close to the floor: the discrete gradient's
    # own evaluation noise (divided differences) bounds the residual.
    floor = 16.0 * _EPS * (1.0 + max(_norm(x), _norm(xh)))
    return r <= STALL_FACTOR * max(tol, floor)


def step(system, dg, scheme, x, h, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """One discrete gradient step; returns ``xhat``."""
    return solve_step(system, dg, scheme, x, h, cfg).x


@dataclass
class Trajectory:
    """Uniformly spaced states with their energies and solver statistics."""

    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray
    iterations: np.ndarray
    residuals: np.ndarray
    h: float
    label: str = ""

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def energy_error(self) -> np.ndarray:
        return self.energies - self.energies[0]

    @property
    def max_energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy_error)))

    def to_csv(self, out: str | TextIO) -> None:
        """Write ``t,x1..xd,H,H_err`` rows with 17 significant digits."""
        d = self.states.shape[1]
        header = ",".join(["t"] + [f"x{i + 1}" for i in range(d)] + ["H", "H_err"])
        data = np.column_stack([self.times, self.states, self.energies, self.energy_error])
        if isinstance(out, str):
            with open(out, "w", newline="") as fh:
                self._write(fh, header, data)
        else:
            self._write(out, header, data)

    @staticmethod
    def _write(fh, header, data):
        fh.write(header + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def step_count(h: float, t_end: float) -> int:
    """Number of whole steps of size ``h`` that fit in ``t_end``.

    A ratio within 1e-9 (relative) of an integer rounds to it, so ``t_end=1,
    h=0.1`` gives 10 steps despite binary round-off.
    """
    ratio = t_end / h
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
        return int(nearest)
    return int(math.floor(ratio))


def _check_horizon(h: float, t_end: float) -> tuple[float, float]:
    h, t_end = float(h), float(t_end)
    if not (math.isfinite(h) and h > 0):
        raise InputError(f"step size must be positive, got {h}")
    if not (math.isfinite(t_end) and t_end > 0):
        raise InputError(f"end time must be positive, got {t_end}")
    return h, t_end


def _run(problem: Problem, h: float, t_end: float, advance: Callable, label: str,
         on_step: Callable[[int, float], None] | None = None) -> Trajectory:
    system = problem.system
    h, t_end = _check_horizon(h, t_end)
    n = step_count(h, t_end)
    d = system.dim
    states = np.empty((n + 1, d))
    energies = np.empty(n + 1)
    iters = np.zeros(n + 1, dtype=np.int64)
    res = np.zeros(n + 1)
    states[0] = problem.initial_state
    energies[0] = eval_energy(system, states[0])
    for k in range(n):
        try:
            result = advance(states[k], states[k - 1] if k else None)
        except SolverError as exc:
            partial = Trajectory(np.arange(k + 1) * h, states[: k + 1].copy(), energies[: k + 1].copy(),
                                 iters[: k + 1].copy(), res[: k + 1].copy(), h, label)
            raise SolverError(f"step {k + 1} at t={k * h:.6g} failed: {exc}", residual=exc.residual,
                              partial=partial) from exc
        states[k + 1] = result.x
        iters[k + 1] = result.iterations
        res[k + 1] = result.residual
        energies[k + 1] = eval_energy(system, result.x)
        if on_step is not None:
            on_step(k + 1, (k + 1) * h)
    return Trajectory(np.arange(n + 1) * h, states, energies, iters, res, h, label)


def integrate(problem: Problem, dg: DiscreteGradient, scheme: SbarScheme, h: float, t_end: float,
              cfg: SolverConfig = SolverConfig(), on_step=None) -> Trajectory:
    """Repeated discrete gradient steps from the problem's initial state.

    Raises:
        SolverError: a step failed; ``partial`` holds the trajectory so far.
    """
    check_compatibility(scheme, problem.system, dg)

    def advance(x, x_prev):
        return solve_step(problem.system, dg, scheme, x, h, cfg, x_prev)

    return _run(problem, h, t_end, advance, f"{scheme.name}/{dg.kind.value}", on_step)


class ReferenceMethod(str, enum.Enum):
    RK4 = "rk4"
    GL4 = "gl4"


_GL_C = np.array([0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6])
_GL_A = np.array([[0.25, 0.25 - math.sqrt(3) / 6], [0.25 + math.sqrt(3) / 6, 0.25]])
_GL_B = np.array([0.5, 0.5])


def reference_step(method: ReferenceMethod | str, system: SkewGradientSystem, x, h: float,
                   cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Classic RK4, or the 2-stage Gauss-Legendre method solved by Newton."""
    return _reference(ReferenceMethod(method), system, system.check_state(x), _check_h(h), cfg).x


def _reference(method, system, x, h, cfg) -> StepResult:
    f = lambda y: eval_field(system, y)  # noqa: E731
    if method is ReferenceMethod.RK4:
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        return StepResult(x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0, 0.0)
    d = system.dim
    K = np.tile(f(x), (2, 1))
    eye = np.eye(2 * d)
    r = math.inf
    history = []
    for it in range(cfg.max_iter + 1):
        Y = x + h * (_GL_A @ K)
        R = K - np.array([f(Y[0]), f(Y[1])])
        r = abs(h) * _norm(R)
        history.append(r)
        if _converged(r, cfg.tol, x, Y[0]):
            return StepResult(x + h * (_GL_B @ K), it, r, history)
        if it == cfg.max_iter:
            break
        Js = [system.field_jacobian(Y[i]) for i in range(2)]
        M = eye.copy()
        for i in range(2):
            for j in range(2):
                M[i * d:(i + 1) * d, j * d:(j + 1) * d] -= h * _GL_A[i, j] * Js[i]
        K = K - np.linalg.solve(M, R.reshape(-1)).reshape(2, d)
    raise SolverError(f"Gauss-Legendre stages did not converge (residual {r:.3e})", residual=r, partial=x)


def integrate_reference(method: ReferenceMethod | str, problem: Problem, h: float, t_end: float,
                        cfg: SolverConfig = SolverConfig(), on_step=None) -> Trajectory:
    method = ReferenceMethod(method)

    def advance(x, x_prev):
        return _reference(method, problem.system, x, h, cfg)

    return _run(problem, h, t_end, advance, method.value, on_step)
