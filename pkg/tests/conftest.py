import itertools

import pytest

from qminmax.trees import MAX, MIN, MinMaxTree, TreeShapeSpec, gen_tree

ACCEPTANCE_LINES = []


def record_criterion(name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# -- brute-force oracles over the nested form -------------------------------------
# These walk the nested dict form directly and share no code with the arena
# evaluators in qminmax.trees.


def nested_minimax(node, values):
    if isinstance(node, int):
        return values[node - 1]
    if "leaf" in node:
        return values[node["leaf"] - 1]
    sub = [nested_minimax(c, values) for c in node["children"]]
    return min(sub) if node["gate"] == MIN else max(sub)


def nested_andor(node, bits):
    if isinstance(node, int):
        return bool(bits[node - 1])
    if "leaf" in node:
        return bool(bits[node["leaf"] - 1])
    sub = [nested_andor(c, bits) for c in node["children"]]
    return all(sub) if node["gate"] == MIN else any(sub)


def _compositions(n, parts):
    for cuts in itertools.combinations(range(1, n), parts - 1):
        bounds = (0,) + cuts + (n,)
        yield [bounds[i + 1] - bounds[i] for i in range(parts)]


def _shapes(n):
    """All ordered shapes with ``n`` leaves and no unary nodes, as nested size skeletons."""
    if n == 1:
        yield None
        return
    for parts in range(2, n + 1):
        for comp in _compositions(n, parts):
            for kids in itertools.product(*[list(_shapes(c)) for c in comp]):
                yield list(kids)


def _label(skeleton, gate, counter):
    if skeleton is None:
        counter[0] += 1
        return counter[0]
    other = MAX if gate == MIN else MIN
    return {"gate": gate, "children": [_label(k, other, counter) for k in skeleton]}


def all_shapes(n, root_gate=MAX):
    """Nested trees for every no-unary ordered shape with ``n`` leaves, leaves numbered left to right."""
    return [_label(s, root_gate, [0]) for s in _shapes(n)]


def lemma_family():
    """Fixed family of alternating shapes with <= 8 leaves and both root gates."""
    nested = []
    for gate in (MAX, MIN):
        for n in range(1, 5):
            nested.extend(all_shapes(n, gate))
        for spec in (
            TreeShapeSpec(kind="balanced", arity=2, depth=3, root_gate=gate),
            TreeShapeSpec(kind="random", n=5, seed=1, root_gate=gate),
            TreeShapeSpec(kind="random", n=6, seed=2, root_gate=gate),
            TreeShapeSpec(kind="random", n=7, seed=3, root_gate=gate),
            TreeShapeSpec(kind="random", n=8, max_arity=4, seed=4, root_gate=gate),
        ):
            nested.append(gen_tree(spec)[0].to_nested())
        nested.append(_label([[None] * 4, [None] * 4], gate, [0]))
        nested.append(_label([None, [None, [None, [None, [None, [None, [None, None]]]]]]], gate, [0]))
    return nested


@pytest.fixture
def two_level():
    """MAX(MIN(3,7), MIN(2,5)) with leaves numbered 1..4."""
    tree = MinMaxTree.from_nested({"gate": MAX, "children": [{"gate": MIN, "children": [1, 2]}, {"gate": MIN, "children": [3, 4]}]})
    return tree, [3, 7, 2, 5]
