import json
import math

import numpy as np
import pytest

from dgflow.core import (
    PROBLEMS,
    canonical_skew,
    constant_skew,
    default_skew,
    eval_energy,
    eval_field,
    fd_hessian,
    get_problem,
    load_problem,
    problem_from_dict,
)
from dgflow.errors import CatalogError, DomainError, InputError, SingularPointError
from helpers import fd_grad, quadratic_system


def _sample(problem, rng):
    x0 = problem.initial_state
    if problem.name == "lotka-volterra":
        return x0 * rng.uniform(0.5, 1.5, size=x0.shape)
    return x0 + rng.uniform(-1, 1, size=x0.shape)


def test_harmonic_field():
    p = get_problem("harmonic")
    np.testing.assert_array_equal(eval_field(p.system, [1.0, 0.0]), [0.0, -1.0])


def test_henon_heiles_field_and_energy():
    p = get_problem("henon-heiles")
    x = np.array([0.1, -0.5, 0.0, 0.0])
    f = eval_field(p.system, x)
    q1, q2 = x[:2]
    expected = [0.0, 0.0, -(q1 + 2 * q1 * q2), -(q2 + q1**2 - q2**2)]
    np.testing.assert_allclose(f, expected, atol=1e-15)
    assert f[3] == pytest.approx(0.74)
    g = fd_grad(lambda y: eval_energy(p.system, y), x, 1e-6)
    np.testing.assert_allclose(p.system.skew(x) @ g, f, atol=1e-9)
    assert eval_energy(p.system, x) == pytest.approx(0.13 - 0.005 + 0.125 / 3, abs=1e-15)
    assert p.exact_energy_at_start == pytest.approx(1 / 6, abs=1e-15)


def test_lotka_volterra_field_and_energy():
    p = get_problem("lotka-volterra")
    x = np.array([1.0, 1.9, 0.5])
    g = np.array([2.0, 1 + 1 / 1.9, 2 - 2 / 0.5])
    S = 0.5 * np.array([[0, -1.9, 0.5], [1.9, 0, -2 * 1.9 * 0.5], [-0.5, 2 * 1.9 * 0.5, 0]])
    np.testing.assert_allclose(eval_field(p.system, x), S @ g, atol=1e-14)
    np.testing.assert_allclose(fd_grad(lambda y: eval_energy(p.system, y), x, 1e-6), g, atol=1e-8)
    assert eval_energy(p.system, x) == pytest.approx(4.9 + math.log(1.9) - 2 * math.log(0.5), abs=1e-12)
    assert eval_energy(p.system, x) == pytest.approx(6.928148, abs=1e-6)


@pytest.mark.parametrize("bad", [[1.0, -1.0, 0.5], [1.0, 1.0, 0.0]])
def test_lotka_volterra_domain(bad):
    with pytest.raises(DomainError):
        eval_energy(get_problem("lotka-volterra").system, bad)


def test_dimension_mismatch():
    with pytest.raises(InputError):
        eval_field(get_problem("harmonic").system, [1.0, 0.0, 0.0])


def test_critical_point_gives_zero_field():
    p = get_problem("henon-heiles")
    np.testing.assert_array_equal(eval_field(p.system, np.zeros(4)), np.zeros(4))


@pytest.mark.parametrize("name", list(PROBLEMS))
def test_problem_invariants(name, rng):
    p = get_problem(name)
    sysm = p.system
    for _ in range(100):
        x = _sample(p, rng)
        S = sysm.skew(x)
        assert np.all(S + S.T == 0.0)
        eps = 1e-6 * (1 + np.max(np.abs(x)))
        g = sysm.grad(x)
        assert np.max(np.abs(fd_grad(sysm.energy, x, eps) - g)) <= 1e-6
        H = sysm.hessian(x)
        np.testing.assert_array_equal(H, H.T)
        np.testing.assert_allclose(H, fd_hessian(sysm.grad, x), atol=1e-6)
        assert abs(g @ eval_field(sysm, x)) <= 1e-12 * (1 + g @ g)


def test_default_skew_examples():
    S = default_skew(lambda x: np.array([0.0, -1.0]), lambda x: np.array([1.0, 0.0]), np.zeros(2))
    np.testing.assert_array_equal(S, [[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_array_equal(S @ [1.0, 0.0], [0.0, -1.0])
    Z = default_skew(lambda x: np.zeros(2), lambda x: np.array([1.0, 2.0]), np.zeros(2))
    np.testing.assert_array_equal(Z, np.zeros((2, 2)))
    with pytest.raises(SingularPointError):
        default_skew(lambda x: x, lambda x: np.zeros(2), np.ones(2))


def test_default_skew_reproduces_orthogonal_fields(rng):
    for _ in range(50):
        d = rng.integers(2, 6)
        g = rng.normal(size=d)
        f = rng.normal(size=d)
        f -= (f @ g) / (g @ g) * g
        S = default_skew(lambda x: f, lambda x: g, np.zeros(d))
        np.testing.assert_array_equal(S, -S.T)
        assert np.max(np.abs(S @ g - f)) <= 1e-12 * (1 + np.max(np.abs(f)))


def test_parallel_field_cannot_be_reproduced():
    g = np.array([1.0, 2.0])
    S = default_skew(lambda x: 3 * g, lambda x: g, np.zeros(2))
    assert abs(g @ S @ g) < 1e-14
    assert np.max(np.abs(S @ g)) < 1e-14


def test_skew_helpers():
    np.testing.assert_array_equal(canonical_skew(2), [[0, 1], [-1, 0]])
    with pytest.raises(InputError):
        canonical_skew(3)
    with pytest.raises(InputError):
        constant_skew([[0, 1], [1, 0]])


def test_quadratic_helper_matches():
    sysm = quadratic_system([[2.0, 1.0], [1.0, 3.0]], canonical_skew(2))
    x = np.array([0.3, -0.7])
    np.testing.assert_allclose(sysm.grad(x), [[2, 1], [1, 3]] @ x)


def test_json_problem_roundtrip(tmp_path):
    spec = {
        "dim": 2,
        "H": [{"coef": 0.5, "powers": [2, 0]}, {"coef": 0.5, "powers": [0, 2]}],
        "S": "canonical",
        "x0": [1.0, 0.0],
        "name": "osc",
    }
    path = tmp_path / "osc.json"
    path.write_text(json.dumps(spec))
    p = load_problem(str(path))
    assert p.name == "osc"
    np.testing.assert_array_equal(eval_field(p.system, [1.0, 0.0]), [0.0, -1.0])
    assert get_problem(str(path)).name == "osc"


def test_packaged_lotka_volterra_file_matches_builtin(rng):
    from importlib import resources

    path = resources.files("dgflow") / "data" / "lotka_volterra.json"
    p = load_problem(str(path))
    q = get_problem("lotka-volterra")
    for _ in range(10):
        x = q.initial_state * rng.uniform(0.5, 1.5, size=3)
        np.testing.assert_array_equal(p.system.skew(x), q.system.skew(x))
        assert p.system.energy(x) == pytest.approx(q.system.energy(x), abs=1e-14)


@pytest.mark.parametrize("spec", [
    {"dim": 2},
    {"dim": 2, "H": [], "S": "weird", "x0": [0, 0]},
    {"dim": 2, "H": [], "S": {"constant": [[0, 1], [-1, 0], [0, 0]]}, "x0": [0, 0]},
    {"dim": 2, "H": [], "S": {"polynomial": [[[], [{"coef": 1, "powers": [0, 0]}]],
                                            [[{"coef": 1, "powers": [0, 0]}], []]]}, "x0": [0, 0]},
])
def test_bad_problem_specs(spec):
    with pytest.raises(InputError):
        problem_from_dict(spec)


def test_unknown_problem():
    with pytest.raises(CatalogError, match="henon-heiles"):
        get_problem("no-such-problem")
