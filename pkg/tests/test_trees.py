import math
from fractions import Fraction

import pytest

from dgflow.catalog import SCHEME_NAMES, builtin_scheme
from dgflow.errors import ConfigurationError, GraphError, InputError
from dgflow.sbar import SchemeBuilder, StageGraph, stage
from dgflow.trees import (
    OrderReport,
    Series,
    Tree,
    brute_force_trees,
    check_order,
    enumerate_trees,
    exact_coefficient,
    from_word,
    parse_tree,
    scheme_phi,
    scheme_phi_composed,
    stage_weights,
    tree_gamma,
    tree_sigma,
    trees_up_to,
)
from dgflow.trees.tree import BLACK, TRIANGLE, WHITE, bushy, leaf, tall

# (word, sigma, gamma) rows of the fourth-order mono table
MONO_TABLE = [
    ("ab", 1, 1), ("aabb", 1, 2), ("aababb", 2, 3), ("aaabbb", 1, 6),
    ("aabababb", 6, 4), ("aabaabbb", 1, 8), ("aaababbb", 2, 12), ("aaaabbbb", 1, 24),
]
# (word, sigma, gamma) rows of the third-order bi-coloured table
BI_TABLE = [
    ("ab", 1, 1), ("aABb", 1, 2), ("aabb", 1, 2),
    ("aABABb", 2, 3), ("aABabb", 1, 3), ("aababb", 2, 3),
    ("aAABBb", 1, 6), ("aaABbb", 1, 6), ("aAabBb", 1, 6), ("aaabbb", 1, 6),
]


def _plain_avf():
    b = SchemeBuilder("plain", 2)
    b.term(1, ["S@x"])
    return b.build(requires_constant_S=True)


@pytest.mark.parametrize("order,count", [(1, 1), (2, 1), (3, 2), (4, 4), (5, 9), (6, 20), (7, 48), (8, 115)])
def test_mono_counts(order, count):
    trees = enumerate_trees(order, "mono")
    assert len(trees) == count
    assert len(set(trees)) == count


@pytest.mark.parametrize("order,count", [(1, 1), (2, 2), (3, 7), (4, 26), (5, 107)])
def test_bicolored_counts(order, count):
    trees = enumerate_trees(order, "bicolored")
    assert len(trees) == count
    assert all(t.color == BLACK for t in trees)


@pytest.mark.parametrize("kind,max_order", [("mono", 6), ("bicolored", 5), ("shaped", 5)])
def test_enumeration_matches_brute_force(kind, max_order):
    for n in range(1, max_order + 1):
        assert set(enumerate_trees(n, kind)) == brute_force_trees(n, kind)


def test_shaped_trees_have_circle_leaves():
    for n in range(1, 6):
        for t in enumerate_trees(n, "shaped"):
            assert all(node.children or node.shape != TRIANGLE for node in t.nodes())
            assert all(node.color == BLACK for node in t.nodes())


def test_enumeration_order_is_stable():
    for kind in ("mono", "bicolored", "shaped"):
        trees = enumerate_trees(5, kind)
        assert trees == sorted(trees)
        assert [t.encode() for t in trees] == [t.encode() for t in enumerate_trees(5, kind)]


@pytest.mark.parametrize("order", [0, 9, -1])
def test_order_out_of_range(order):
    with pytest.raises(InputError):
        enumerate_trees(order, "mono")


@pytest.mark.parametrize("word,sigma,gamma", MONO_TABLE)
def test_mono_table(word, sigma, gamma):
    t = from_word(word)
    assert tree_sigma(t) == sigma
    assert tree_gamma(t) == gamma


@pytest.mark.parametrize("word,sigma,gamma", BI_TABLE)
def test_bicolored_table(word, sigma, gamma):
    t = from_word(word)
    assert tree_sigma(t) == sigma
    assert tree_gamma(t) == gamma


def test_mono_table_covers_all_trees_to_order_four():
    assert {from_word(w) for w, _, _ in MONO_TABLE} == set(trees_up_to(4, "mono"))
    assert {from_word(w) for w, _, _ in BI_TABLE} == set(trees_up_to(3, "bicolored"))


def test_sigma_gamma_examples():
    assert tree_sigma(leaf()) == 1 and tree_gamma(leaf()) == 1
    assert tree_sigma(bushy(3)) == 2 and tree_sigma(bushy(4)) == 6
    assert tree_gamma(tall(3)) == 6 and tree_gamma(tall(4)) == 24


def test_gamma_recursion():
    for kind in ("mono", "bicolored", "shaped"):
        for t in trees_up_to(6 if kind == "mono" else 5, kind):
            prod = Fraction(1)
            for c in t.children:
                prod *= tree_gamma(c)
            assert tree_gamma(t) == len(t) * prod


def test_sigma_counts_labellings():
    # n!/sigma(t) labelled copies per tree; Cayley: n^(n-1) labelled rooted trees
    for n in range(1, 8):
        total = sum(Fraction(math.factorial(n), tree_sigma(t)) for t in enumerate_trees(n, "mono"))
        assert total == n ** (n - 1)


def test_canonical_form_and_parsing():
    a = Tree([tall(2), leaf()])
    b = Tree([leaf(), tall(2)])
    assert a == b and hash(a) == hash(b)
    assert a.encode() == "B[B,B[B]]"
    assert parse_tree("B[B[B],B]") == a
    assert parse_tree(a.encode()) == a
    t = parse_tree("T[B,T[B]]")
    assert t.shape == TRIANGLE and len(t) == 4
    assert parse_tree("B[W[B]]").children[0].color == WHITE
    with pytest.raises(InputError):
        parse_tree("B[X]")
    with pytest.raises(InputError):
        parse_tree("B[B")


def test_plain_avf_table_values():
    phi = scheme_phi(_plain_avf(), 4, "b")
    assert phi[leaf()] == 1 and phi[tall(2)] == Fraction(1, 2)
    assert phi[tall(3)] == Fraction(1, 4)
    assert phi[bushy(3)] == Fraction(1, 3)
    assert phi[bushy(4)] == Fraction(1, 4)
    assert phi[tall(4)] == Fraction(1, 8)
    assert phi["B[B,B[B]]"] == Fraction(1, 6)
    assert phi["B[B[B,B]]"] == Fraction(1, 6)
    assert phi[None] == 1


@pytest.mark.parametrize("name", SCHEME_NAMES)
def test_low_orders_exact(name):
    scheme = builtin_scheme(name)
    for series in ("b", "p", "g"):
        try:
            phi = scheme_phi(scheme, 2, series)
        except ConfigurationError:
            continue
        for t in phi:
            # triangle trees carry the separate Q condition, checked below
            if t is not None and not t.has_triangle:
                assert float(phi[t]) == pytest.approx(float(exact_coefficient(t, series)), abs=1e-14)


def test_avf5_tall_three():
    phi = scheme_phi(builtin_scheme("avf5"), 3, "b")
    assert float(phi[tall(3)]) == pytest.approx(1 / 6, abs=1e-15)


def test_stage_weights_example():
    sw = stage_weights(builtin_scheme("avf5").stages, 3, "mono")
    c = (17 + 17**0.5) / 30
    assert float(sw["z2"]["B"]) == pytest.approx(c, abs=1e-15)
    assert float(sw["z2"]["B[B]"]) == pytest.approx(c * 2 / 5, abs=1e-15)
    assert sw["z1"]["B"] == Fraction(2, 5) and sw["z1"]["B[B]"] == 0
    assert sw["x"][None] == 1 and sw["x"]["B"] == 0


def test_stage_weights_identity_and_euler():
    g = StageGraph([stage("z", "x", {"x": "1/3"})])
    sw = stage_weights(g, 4, "mono")
    assert sw["z"][None] == 1 and sw["z"]["B"] == Fraction(1, 3)
    assert all(sw["z"][t] == 0 for t in trees_up_to(4) if len(t) > 1)


def test_stage_weights_implicit_needs_phi():
    g = StageGraph([stage("z", "xbar")])
    with pytest.raises(GraphError):
        stage_weights(g, 3, "mono")
    phi = scheme_phi(builtin_scheme("avf6-sym"), 3, "b")
    sw = stage_weights(g, 3, "mono", phi=phi)
    assert sw["z"]["B"] == pytest.approx(0.5 * float(phi["B"]))


@pytest.mark.parametrize("name,series,max_order", [
    ("avf4", "b", 5), ("avf5", "b", 5), ("avf6-exp", "b", 6), ("avf6-sym", "b", 6), ("dgm4-const", "b", 5),
    ("avf3-S", "p", 4), ("avf4-S-exp", "p", 4), ("gen4-S", "p", 4), ("sym4-S", "p", 4),
    ("dgm4-const", "g", 4), ("sym3-const", "g", 4), ("sym4-const", "g", 4), ("dgm2", "g", 3),
])
def test_stem_and_composed_phi_agree(name, series, max_order):
    a = scheme_phi(builtin_scheme(name), max_order, series)
    b = scheme_phi_composed(builtin_scheme(name), max_order, series)
    for t in a:
        assert float(a[t]) == pytest.approx(float(b[t]), abs=1e-13)


def test_phi_invariant_under_child_permutation():
    phi = scheme_phi_composed(builtin_scheme("avf5"), 5, "b")
    for t in trees_up_to(5):
        if len(t.children) > 1:
            perm = Tree(list(reversed(t.children)), t.color, t.shape)
            assert phi[perm] == phi[t]


@pytest.mark.parametrize("name,series,p", [
    ("avf4", "b", 4), ("avf5", "b", 5), ("avf6-exp", "b", 6), ("avf6-sym", "b", 6),
    ("avf3-S", "p", 3), ("avf4-S-exp", "p", 4), ("avf4-S-imp", "p", 4), ("gen3-S", "p", 3), ("gen4-S", "p", 4),
    ("sym4-S", "p", 4), ("sym3-const", "g", 3), ("dgm3-const", "g", 3), ("dgm4-const", "g", 4),
    ("sym4-const", "g", 4),
])
def test_nominal_orders(name, series, p):
    report = check_order(builtin_scheme(name), p, series)
    assert report.passed, report.failures()[:3]
    assert report.max_residual <= 1e-12
    assert report.achieved_order() == p


def test_avf4_is_not_fifth_order():
    report = check_order(builtin_scheme("avf4"), 5, "b")
    assert not report.passed
    assert report.max_residual >= 1e-3
    assert report.achieved_order() == 4
    assert all(len(r.tree) == 5 for r in report.failures())


def test_dgm2_is_only_first_order_in_g_series():
    assert check_order(builtin_scheme("dgm2"), 2, "g").achieved_order() == 1


@pytest.mark.parametrize("name", ["dgm3-const", "dgm4-const", "sym3-const", "gen3-S", "gen4-S"])
def test_q_correction_fixes_the_triangle_condition(name):
    assert scheme_phi(builtin_scheme(name), 2, "g")["T[B]"] == pytest.approx(0, abs=1e-15)


def test_triangle_factor_single_q_term():
    for B, c in [(1, Fraction(3, 10)), (Fraction(1, 2), Fraction(7, 10)), (Fraction(3, 4), Fraction(1, 2))]:
        b = SchemeBuilder("q", 2)
        b.stage("z", "x", {"x": c})
        b.term(1, ["S@x"])
        b.term(B, ["S@x", "Q@z", "S@x"])
        phi = scheme_phi(b.build(requires_constant_S=True), 2, "g")
        normal = Fraction(B) / 2
        assert phi["T[B]"] == 2 * normal - 1
    assert exact_coefficient(parse_tree("T[B]"), "g") == 0


def test_series_preconditions():
    with pytest.raises(ConfigurationError):
        scheme_phi(builtin_scheme("avf4"), 3, "p")
    with pytest.raises(InputError):
        scheme_phi(builtin_scheme("avf4"), 7, "b")
    with pytest.raises(InputError):
        scheme_phi(builtin_scheme("avf3-S"), 5, "p")
    with pytest.raises(InputError):
        check_order(builtin_scheme("avf4"), 3, "v")
    # a state-dependent-S scheme is still a valid constant-S scheme
    assert check_order(builtin_scheme("avf3-S"), 3, "b").passed


def test_report_csv():
    report = check_order(builtin_scheme("avf4"), 3, Series.B)
    assert isinstance(report, OrderReport)
    lines = report.to_csv().splitlines()
    assert lines[0] == "tree,order,phi,target,residual"
    assert len(lines) == 1 + len(trees_up_to(3))
    assert report.to_csv() == check_order(builtin_scheme("avf4"), 3, "b").to_csv()


def test_exact_coefficients():
    for t in trees_up_to(5):
        assert exact_coefficient(t, "b") == 1 / tree_gamma(t)
    assert exact_coefficient(parse_tree("B[W]"), "p") == Fraction(1, 2)
    assert exact_coefficient(parse_tree("B[T[B]]"), "g") == 0
    assert exact_coefficient(parse_tree("B[B[B]]"), "g") == Fraction(1, 6)
