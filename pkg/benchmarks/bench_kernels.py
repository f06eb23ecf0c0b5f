"""Compare the compiled and numpy monomial kernels.

Times ``poly_eval`` and ``poly_eval_segment`` on the Henon-Heiles gradient
and Hessian tables, checks both backends agree, then times a full
integration under each backend in a subprocess.

    python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from dgflow._kernels import compiled_backend, python_backend
from dgflow.core import henon_heiles
from dgflow.energy import gauss_legendre01

_RUN = (
    "import time; from dgflow import get_problem, builtin_scheme, discrete_gradient;"
    "from dgflow.integrator import integrate;"
    "p = get_problem('henon-heiles'); t = time.perf_counter();"
    "integrate(p, discrete_gradient('avf'), builtin_scheme('avf4'), 0.1, 100);"
    "print(time.perf_counter() - t)"
)


def _tables():
    poly = henon_heiles().system.product_form.poly
    return {"grad": poly._grad, "hess": poly._hess}


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=200, repeat=repeat)) / 200


def _integration_time(pure: bool) -> float:
    env = dict(os.environ)
    env["DGFLOW_PURE_PYTHON"] = "1" if pure else "0"
    out = subprocess.run([sys.executable, "-c", _RUN], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if compiled_backend is None:
        print("compiled extension not built; only the numpy backend is available")
        return 1
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=4), rng.normal(size=4)
    nodes, weights = gauss_legendre01(3)
    print(f"{'kernel':<24}{'numpy [us]':>12}{'cython [us]':>13}{'speedup':>9}{'max diff':>11}")
    for name, tab in _tables().items():
        cases = {
            f"{name} eval": lambda b, t=tab: b.poly_eval(t.coefs, t.powers, t.slots, t.n_out, x),
            f"{name} segment": lambda b, t=tab: b.poly_eval_segment(t.coefs, t.powers, t.slots, t.n_out,
                                                                  x, y, nodes, weights, 1),
        }
        for label, call in cases.items():
            diff = float(np.max(np.abs(np.asarray(call(python_backend)) - np.asarray(call(compiled_backend)))))
            tp = _time(lambda: call(python_backend), args.repeat) * 1e6
            tc = _time(lambda: call(compiled_backend), args.repeat) * 1e6
            print(f"{label:<24}{tp:12.2f}{tc:13.2f}{tp / tc:9.1f}{diff:11.1e}")
    tp, tc = _integration_time(True), _integration_time(False)
    print(f"{'avf4 1000 steps [s]':<24}{tp:12.3f}{tc:13.3f}{tp / tc:9.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
