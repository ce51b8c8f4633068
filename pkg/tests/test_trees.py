import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_shapes, nested_andor, nested_minimax
from qminmax.errors import ConfigurationError, ContractViolation
from qminmax.oracle import OracleHandle
from qminmax.trees import (
    MAX,
    MIN,
    MinMaxTree,
    TreeShapeSpec,
    attaining_subtree,
    dump_tree,
    eval_andor,
    eval_andor_lazy,
    eval_minmax,
    eval_threshold,
    gen_tree,
    load_tree,
    max_,
    min_,
    parse_shape,
)


def build(nested):
    return MinMaxTree.from_nested(nested)


def test_eval_minmax_two_level(two_level):
    tree, values = two_level
    assert eval_minmax(tree, values) == (3, 1)


def test_eval_minmax_single_leaf():
    assert eval_minmax(build(1), [42]) == (42, 1)


def test_eval_minmax_tie_takes_leftmost_leaf():
    tree = build(min_(max_(1, 2), max_(3, 4), max_(5, 6)))
    values = [1, 4, 6, 2, 3, 3]
    assert nested_minimax(tree.to_nested(), values) == 3
    assert eval_minmax(tree, values) == (3, 5)


def test_eval_minmax_length_mismatch(two_level):
    tree, _ = two_level
    with pytest.raises(ContractViolation):
        eval_minmax(tree, [1, 2, 3])


@pytest.mark.parametrize("v,expected", [(3, True), (5, False), (-100, True), (2, True), (4, False)])
def test_eval_threshold_two_level(two_level, v, expected):
    tree, values = two_level
    assert eval_threshold(tree, values, v) is expected


def test_eval_threshold_length_mismatch(two_level):
    tree, _ = two_level
    with pytest.raises(ContractViolation):
        eval_threshold(tree, [1], 2)


def test_lemma_small_exhaustive():
    for n in range(1, 5):
        for nested in all_shapes(n, MAX) + all_shapes(n, MIN):
            tree = build(nested)
            for values in itertools.product((1, 2, 3), repeat=n):
                value = nested_minimax(nested, values)
                for v in (1, 2, 3, 4):
                    assert eval_threshold(tree, values, v) == (value >= v)


def test_boolean_reduction():
    # over {0,1} with v = 1 the threshold tree is the AND-OR tree of the same structure
    for nested in all_shapes(4, MAX) + all_shapes(4, MIN):
        tree = build(nested)
        for bits in itertools.product((0, 1), repeat=4):
            assert eval_threshold(tree, bits, 1) == nested_andor(nested, bits)
            assert eval_minmax(tree, bits)[0] == int(nested_andor(nested, bits))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_threshold_monotone_and_witness(n, seed, top):
    tree, values = gen_tree(TreeShapeSpec(kind="random", n=n, max_arity=4, value_dist="uniform", value_range=top, seed=seed))
    value, witness = eval_minmax(tree, values)
    assert values[witness - 1] == value
    assert value == nested_minimax(tree.to_nested(), values)
    answers = [eval_threshold(tree, values, v) for v in range(0, top + 2)]
    assert answers == sorted(answers, reverse=True)


def test_lazy_andor_matches_full_and_short_circuits():
    tree = build(max_(min_(1, 2), min_(3, 4)))
    reads = []

    def reader(k):
        reads.append(k)
        return k != 2

    assert eval_andor_lazy(tree, reader) == eval_andor(tree, [k != 2 for k in range(1, 5)])
    # MIN(1,2) is false after reading leaf 2, then MIN(3,4) needs both leaves
    assert reads == [1, 2, 3, 4]

    reads.clear()
    assert eval_andor_lazy(tree, lambda k: reads.append(k) or True) is True
    assert reads == [1, 2]


# -- construction invariants --------------------------------------------------------


def test_alternation_enforced():
    with pytest.raises(ContractViolation):
        build(max_(max_(1, 2), 3))


def test_leaf_bijection_enforced():
    with pytest.raises(ContractViolation):
        build(max_(1, 1))
    with pytest.raises(ContractViolation):
        build(max_(1, 3))


def test_empty_gate_rejected():
    with pytest.raises(ContractViolation):
        build({"gate": "max", "children": []})


def test_arena_cycle_rejected():
    with pytest.raises(ContractViolation):
        MinMaxTree(("max", "min"), ((1,), (0,)), (0, 0))


def test_unreachable_node_rejected():
    with pytest.raises(ContractViolation):
        MinMaxTree(("max", None, None), ((1,), (), ()), (0, 1, 2))


def test_arity_one_allowed():
    tree = build(max_(min_(1), 2))
    assert tree.n == 2
    assert eval_minmax(tree, [5, 4]) == (5, 1)


# -- generation ------------------------------------------------------------------------


def test_gen_balanced_permutation():
    tree, values = gen_tree(TreeShapeSpec(kind="balanced", arity=2, depth=2, seed=9))
    assert tree.n == 4
    assert sorted(values) == [1, 2, 3, 4]


def test_gen_balanced_depth_zero():
    tree, values = gen_tree(TreeShapeSpec(kind="balanced", arity=2, depth=0))
    assert tree.n == 1 and tree.is_leaf(tree.root)
    assert values == [1]


@pytest.mark.parametrize("depth", [1, 3, 5])
def test_gen_balanced_binary_size(depth):
    tree, _ = gen_tree(TreeShapeSpec(kind="balanced", arity=2, depth=depth))
    assert tree.n == 2**depth
    assert tree.depth() == depth


def test_gen_random_deterministic():
    spec = TreeShapeSpec(kind="random", n=7, seed=123)
    t1, v1 = gen_tree(spec)
    t2, v2 = gen_tree(spec)
    assert t1.to_nested() == t2.to_nested()
    assert v1 == v2
    assert t1.n == 7


@pytest.mark.parametrize(
    "spec",
    [
        TreeShapeSpec(kind="balanced", arity=0, depth=2),
        TreeShapeSpec(kind="balanced", arity=2, depth=-1),
        TreeShapeSpec(kind="random", n=0),
        TreeShapeSpec(kind="hexagonal"),
        TreeShapeSpec(value_dist="gaussian"),
    ],
)
def test_gen_rejects_bad_specs(spec):
    with pytest.raises(ConfigurationError):
        gen_tree(spec)


def test_gen_value_distributions():
    _, values = gen_tree(TreeShapeSpec(kind="random", n=50, value_dist="duplicates", value_range=3, seed=1))
    assert set(values) <= {1, 2, 3}
    _, values = gen_tree(TreeShapeSpec(kind="random", n=50, value_dist="uniform", value_range=10, seed=1))
    assert 1 <= min(values) and max(values) <= 10


def test_parse_shape():
    assert parse_shape("balanced:3:2").leaf_count() == 9
    assert parse_shape("random:12").n == 12
    assert parse_shape("random:12:5").max_arity == 5
    with pytest.raises(ConfigurationError):
        parse_shape("balanced:2")
    with pytest.raises(ConfigurationError):
        parse_shape("random:x")


# -- optimal subtree -----------------------------------------------------------------


def test_attaining_subtree_two_level(two_level):
    tree, values = two_level
    assert attaining_subtree(tree, values, 1) == tree.children[tree.root][0]


def test_attaining_subtree_single_child():
    tree = build(max_(min_(1, 2)))
    assert attaining_subtree(tree, [4, 9], 1) == tree.children[tree.root][0]


def test_attaining_subtree_duplicate_value_leftmost():
    tree = build(max_(min_(1, 2), min_(3, 4)))
    values = [3, 9, 8, 3]
    # both children evaluate to 3; the witness leaf sits in the second subtree
    assert attaining_subtree(tree, values, 4) == tree.children[tree.root][0]


def test_attaining_subtree_uses_comparisons_only(two_level):
    tree, values = two_level
    h = OracleHandle(values)
    attaining_subtree(tree, values, 1, oracle=h)
    ledger = h.ledger_report()
    assert ledger.comparison_queries > 0 and ledger.value_queries == 0


def test_attaining_subtree_precondition(two_level):
    tree, values = two_level
    with pytest.raises(ContractViolation):
        attaining_subtree(tree, values, 2)  # x_2 = 7 is not the tree value
    with pytest.raises(ContractViolation):
        attaining_subtree(build(1), [5], 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 15), st.integers(0, 2**32 - 1))
def test_attaining_subtree_matches_brute_force(n, seed):
    tree, values = gen_tree(TreeShapeSpec(kind="random", n=n, value_dist="duplicates", value_range=4, seed=seed))
    value, witness = eval_minmax(tree, values)
    child = attaining_subtree(tree, values, witness)
    expected = next(c for c in tree.children[tree.root] if nested_minimax(_subtree(tree, c), values) == value)
    assert child == expected


def _subtree(tree, node):
    if tree.is_leaf(node):
        return tree.leaf[node]
    return {"gate": tree.gates[node], "children": [_subtree(tree, c) for c in tree.children[node]]}


# -- serialization -------------------------------------------------------------------


def test_json_round_trip():
    tree, values = gen_tree(TreeShapeSpec(kind="random", n=11, seed=4))
    tree2, values2 = load_tree(dump_tree(tree, values))
    assert tree2.to_nested() == tree.to_nested()
    assert values2 == values
    assert eval_minmax(tree2, values2) == eval_minmax(tree, values)


def test_load_tree_malformed():
    with pytest.raises(ContractViolation):
        load_tree('{"values": [1]}')
