"""Convergence studies and energy-drift measurements.

Global errors at ``t_end`` are measured against a fine reference solution,
either fourth-order Gauss-Legendre collocation or the scheme itself, and the
observed order is the least-squares slope of ``log(error)`` against
``log(h)``.  Results export to CSV and to gnuplot scripts that plot them.
"""

from __future__ import annotations

import enum
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .core import Problem
from .dg import DiscreteGradient
from .errors import InputError, NumericalError
from .integrator import ReferenceMethod, SolverConfig, Trajectory, integrate, integrate_reference
from .sbar import SbarScheme, check_compatibility

DEFAULT_H = (0.2, 0.1, 0.05, 0.025)
HIGH_ORDER_H = (0.4, 0.2, 0.1, 0.05)
STIFF_H = (0.05, 0.025, 0.0125, 0.00625)
DEFAULT_T_END = 1.0
REFERENCE_DIVISOR = 100
MAX_REFERENCE_RATIO = 1 / 50
REFERENCE_TOL = 1e-14
ACCURACY_MARGIN = 100.0
CONVERGENCE_SOLVER = SolverConfig(tol=1e-14, max_iter=60)


class ReferenceKind(str, enum.Enum):
    GL4_FINE = "gl4-fine"
    SCHEME_FINE = "scheme-fine"


def reference_kind(kind: ReferenceKind | str) -> ReferenceKind:
    if isinstance(kind, ReferenceKind):
        return kind
    try:
        return ReferenceKind(str(kind).lower())
    except ValueError:
        raise InputError(f"unknown reference {kind!r}; choose gl4-fine or scheme-fine") from None


def default_h_list(scheme: SbarScheme | str, problem: Problem | str | None = None) -> tuple[float, ...]:
    """Step sizes for order fits.

    Fifth and sixth order schemes use larger steps so errors stay above
    round-off; Lotka-Volterra uses smaller ones, since its errors at
    ``h >= 0.1`` are still far from the asymptotic regime.
    """
    order = scheme.nominal_order if isinstance(scheme, SbarScheme) else 0
    name = scheme.name if isinstance(scheme, SbarScheme) else str(scheme)
    pname = problem.name if isinstance(problem, Problem) else (problem or "")
    if pname == "lotka-volterra":
        return STIFF_H
    if order >= 5 or name.startswith(("avf5", "avf6")):
        return HIGH_ORDER_H
    return DEFAULT_H


def aligned_t_end(h_list: Sequence[float], t_end: float | None = None) -> float:
    """Final time reached exactly by every step size.

    Without ``t_end``, the smallest multiple of ``max(h)`` that is at least
    1 (1.2 for the list starting at 0.4).

    Raises:
        InputError: ``t_end`` is not an integer multiple of every step size.
    """
    hs = [float(h) for h in h_list]
    if t_end is None:
        hmax = max(hs)
        t_end = hmax * math.ceil(DEFAULT_T_END / hmax - 1e-9)
    t_end = float(t_end)
    for h in hs:
        ratio = t_end / h
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise InputError(f"t_end={t_end:g} is not a multiple of h={h:g}; errors would be measured at different times")
    return t_end


def thread_count() -> int:
    """Worker threads from ``DGFLOW_THREADS`` (default 1)."""
    raw = os.environ.get("DGFLOW_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"DGFLOW_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"DGFLOW_THREADS must be a positive integer, got {raw!r}")
    return n


def fit_slope(h: Sequence[float], errors: Sequence[float]) -> float | None:
    """Least-squares slope of ``log(error)`` against ``log(h)``; needs three points."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if len(h) < 3:
        return None
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


@dataclass(frozen=True)
class ConvergenceReport:
    """Errors of one scheme over a decreasing list of step sizes.

    ``errors`` holds NaN where the run failed.  ``used`` marks the points in
    the slope fit: finite errors above ``ACCURACY_MARGIN`` times the
    reference accuracy estimate.
    """

    problem: str
    scheme: str
    dg: str
    h: tuple[float, ...]
    errors: tuple[float, ...]
    t_end: float
    reference: str
    reference_accuracy: float
    failures: tuple[str, ...] = field(default=())

    @property
    def failed(self) -> tuple[bool, ...]:
        return tuple(not math.isfinite(e) for e in self.errors)

    @property
    def used(self) -> tuple[bool, ...]:
        floor = ACCURACY_MARGIN * self.reference_accuracy
        return tuple(math.isfinite(e) and e > floor for e in self.errors)

    @property
    def fitted_slope(self) -> float | None:
        pts = [(h, e) for h, e, u in zip(self.h, self.errors, self.used) if u]
        if len(pts) < 3:
            return None
        return fit_slope(*zip(*pts))

    def running_slopes(self) -> tuple[float, ...]:
        """Slope between each point and its predecessor (NaN for the first)."""
        out = [math.nan]
        for k in range(1, len(self.h)):
            e0, e1 = self.errors[k - 1], self.errors[k]
            if math.isfinite(e0) and math.isfinite(e1) and e0 > 0 and e1 > 0:
                out.append(math.log(e0 / e1) / math.log(self.h[k - 1] / self.h[k]))
            else:
                out.append(math.nan)
        return tuple(out)

    def to_csv(self, out: str | TextIO | None = None) -> str:
        """``h,error,slope_running`` rows; returns the text and writes it when ``out`` is given."""
        buf = io.StringIO()
        buf.write("h,error,slope_running\n")
        for h, e, s in zip(self.h, self.errors, self.running_slopes()):
            buf.write(f"{h:.17g},{e:.17g},{s:.17g}\n")
        text = buf.getvalue()
        _emit(text, out)
        return text

    def summary(self) -> str:
        slope = self.fitted_slope
        s = "n/a" if slope is None else f"{slope:.3f}"
        return f"{self.problem} {self.scheme}/{self.dg}: slope {s} over {sum(self.used)} of {len(self.h)} points"


def _emit(text: str, out) -> None:
    if out is None:
        return
    if isinstance(out, str):
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


def _check_h_list(h_list: Sequence[float]) -> tuple[float, ...]:
    hs = tuple(float(h) for h in h_list)
    if not hs:
        raise InputError("at least one step size is required")
    if any(not (math.isfinite(h) and h > 0) for h in hs):
        raise InputError(f"step sizes must be positive, got {list(hs)}")
    if any(a <= b for a, b in zip(hs, hs[1:])):
        raise InputError(f"step sizes must be strictly decreasing, got {list(hs)}")
    return hs


def reference_solution(problem: Problem, t_end: float, h_ref: float,
                       reference: ReferenceKind | str = ReferenceKind.GL4_FINE,
                       scheme: SbarScheme | None = None, dg: DiscreteGradient | None = None,
                       order: int | None = None) -> tuple[np.ndarray, float]:
    """Fine solution at ``t_end`` and an accuracy estimate.

    The estimate is the Richardson difference between step ``h_ref`` and
    ``2 h_ref`` divided by ``2**p - 1``, floored at round-off level.
    """
    reference = reference_kind(reference)
    cfg = SolverConfig(tol=REFERENCE_TOL, max_iter=60)

    def run(h):
        if reference is ReferenceKind.GL4_FINE:
            return integrate_reference(ReferenceMethod.GL4, problem, h, t_end, cfg).final_state
        if scheme is None or dg is None:
            raise InputError("a scheme-fine reference needs the scheme and discrete gradient")
        return integrate(problem, dg, scheme, h, t_end, cfg).final_state

    p = 4 if reference is ReferenceKind.GL4_FINE else (order or scheme.nominal_order)
    fine = run(h_ref)
    coarse = run(2 * h_ref)
    scale = 1.0 + float(np.max(np.abs(fine)))
    estimate = float(np.max(np.abs(fine - coarse))) / (2 ** p - 1)
    return fine, max(estimate, 16 * np.finfo(float).eps * scale)


def run_convergence(problem: Problem, scheme: SbarScheme, dg: DiscreteGradient,
                    h_list: Sequence[float] | None = None, t_end: float | None = None,
                    reference: ReferenceKind | str = ReferenceKind.GL4_FINE,
                    h_ref: float | None = None, cfg: SolverConfig = CONVERGENCE_SOLVER,
                    threads: int | None = None) -> ConvergenceReport:
    """Global error ``||x_N(h) - x_ref(t_end)||_inf`` for each ``h``.

    Args:
        problem: initial value problem.
        scheme: the S-bar scheme.
        dg: discrete gradient.
        h_list: strictly decreasing step sizes; defaults per scheme order.
        t_end: final time, a multiple of every ``h``; see :func:`aligned_t_end`.
        reference: ``gl4-fine`` or ``scheme-fine``.
        h_ref: reference step; defaults to ``min(h_list) / 100``.
        cfg: solver settings for the scheme runs.
        threads: worker threads; defaults to ``DGFLOW_THREADS``.

    Raises:
        InputError: bad step list, ``t_end`` not a multiple of the steps, or
            a reference step above ``min(h_list) / 50``.
        ConfigurationError: incompatible scheme, gradient and system.
    """
    hs = _check_h_list(h_list if h_list is not None else default_h_list(scheme, problem))
    t_end = aligned_t_end(hs, t_end)
    check_compatibility(scheme, problem.system, dg)
    h_ref = float(h_ref) if h_ref is not None else min(hs) / REFERENCE_DIVISOR
    if not 0 < h_ref <= min(hs) * MAX_REFERENCE_RATIO * (1 + 1e-12):
        raise InputError(f"reference step {h_ref} must be at most min(h)/50 = {min(hs) / 50}")
    reference = reference_kind(reference)
    x_ref, accuracy = reference_solution(problem, t_end, h_ref, reference, scheme, dg)

    def one(h):
        try:
            x = integrate(problem, dg, scheme, h, t_end, cfg).final_state
        except NumericalError as exc:
            return math.nan, f"h={h:g}: {exc}"
        return float(np.max(np.abs(x - x_ref))), ""

    workers = threads if threads is not None else thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, hs))
    else:
        results = [one(h) for h in hs]
    return ConvergenceReport(
        problem=problem.name,
        scheme=scheme.name,
        dg=dg.kind.value,
        h=hs,
        errors=tuple(e for e, _ in results),
        t_end=float(t_end),
        reference=f"{reference.value} h_ref={h_ref:g}",
        reference_accuracy=accuracy,
        failures=tuple(m for _, m in results if m),
    )


@dataclass(frozen=True)
class DriftSeries:
    """``H(t) - H(0)`` along a trajectory."""

    times: np.ndarray
    drift: np.ndarray
    label: str = ""

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.drift)))

    def to_csv(self, out: str | TextIO | None = None) -> str:
        buf = io.StringIO()
        buf.write("t,H_err\n")
        np.savetxt(buf, np.column_stack([self.times, self.drift]), fmt="%.17g", delimiter=",")
        text = buf.getvalue()
        _emit(text, out)
        return text


def energy_drift(trajectory: Trajectory) -> DriftSeries:
    """Energy error series of a trajectory.

    Raises:
        InputError: empty trajectory.
    """
    if len(trajectory) == 0:
        raise InputError("trajectory is empty")
    return DriftSeries(np.asarray(trajectory.times, dtype=float),
                       np.asarray(trajectory.energy_error, dtype=float), trajectory.label)


def drift_bound(tol: float, h0: float) -> float:
    """Drift a discrete gradient run should stay under: ``100 tol (1 + |H0|)``."""
    return 100.0 * tol * (1.0 + abs(h0))


def convergence_plot_script(csv_files: Sequence[tuple[str, str]], output: str = "convergence.png",
                            reference_orders: Sequence[int] = (2, 4)) -> str:
    """Gnuplot script plotting ``error`` against ``h`` on log axes.

    Args:
        csv_files: ``(path, title)`` pairs of convergence CSVs.
        output: image written when the script runs.
        reference_orders: dashed ``h**p`` guide lines.
    """
    lines = [
        "set terminal pngcairo size 800,600",
        f"set output '{output}'",
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 'h'",
        "set ylabel 'global error'",
        "set key left top",
    ]
    plots = [f"'{path}' using 1:2 with linespoints title '{title}'" for path, title in csv_files]
    plots += [f"x**{p} dashtype 2 lc 'black' title 'order {p}'" for p in reference_orders]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def drift_plot_script(csv_files: Sequence[tuple[str, str]], output: str = "energy.png") -> str:
    """Gnuplot script plotting ``|H_err|`` against ``t``."""
    lines = [
        "set terminal pngcairo size 800,600",
        f"set output '{output}'",
        "set datafile separator ','",
        "set logscale y",
        "set xlabel 't'",
        "set ylabel '|H(t) - H(0)|'",
    ]
    plots = [f"'{path}' using 1:(abs($2)) every ::1 with lines title '{title}'" for path, title in csv_files]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
