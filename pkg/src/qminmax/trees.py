"""MIN-MAX trees: representation, classical evaluation and the threshold reduction.

Trees live in a flat arena.  Node ids are assigned in preorder, so the root is
node 0 and every child id is larger than its parent's.  Leaves carry an index
in ``1..N``; internal nodes carry a gate (``"min"`` or ``"max"``) and alternate
along every root-to-leaf path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation

MIN = "min"
MAX = "max"
GATES = (MIN, MAX)


def _flip(gate):
    return MAX if gate == MIN else MIN


@dataclass(frozen=True, eq=False)
class MinMaxTree:
    """Immutable MIN-MAX tree over ``n`` indexed leaves.

    ``gates[i]`` is ``None`` for leaves, ``children[i]`` is empty for leaves and
    ``leaf[i]`` is the leaf index of node ``i`` (0 for internal nodes).
    """

    gates: tuple
    children: tuple
    leaf: tuple
    root: int = 0
    n: int = field(init=False)
    leaf_node: tuple = field(init=False, repr=False)
    preorder: tuple = field(init=False, repr=False)

    def __post_init__(self):
        size = len(self.gates)
        if not (len(self.children) == len(self.leaf) == size) or size == 0:
            raise ContractViolation("node arrays must be non-empty and of equal length")
        if not 0 <= self.root < size:
            raise ContractViolation("root id out of range")

        order = []
        seen = [False] * size
        stack = [self.root]
        while stack:
            node = stack.pop()
            if seen[node]:
                raise ContractViolation(f"node {node} reached twice (not a tree)")
            seen[node] = True
            order.append(node)
            gate = self.gates[node]
            kids = self.children[node]
            if gate is None:
                if kids:
                    raise ContractViolation(f"leaf node {node} has children")
                continue
            if gate not in GATES:
                raise ContractViolation(f"unknown gate {gate!r}")
            if not kids:
                raise ContractViolation(f"internal node {node} has no children")
            for child in kids:
                if not 0 <= child < size:
                    raise ContractViolation(f"child id {child} out of range")
                child_gate = self.gates[child]
                if child_gate is not None and child_gate == gate:
                    raise ContractViolation(
                        f"gates must alternate: {gate} node {node} has {gate} child {child}"
                    )
            stack.extend(reversed(kids))
        if not all(seen):
            raise ContractViolation("arena contains nodes unreachable from the root")

        leaf_ids = [i for i in order if self.gates[i] is None]
        n = len(leaf_ids)
        mapping = [None] * (n + 1)
        for node in leaf_ids:
            k = self.leaf[node]
            if not isinstance(k, (int, np.integer)) or not 1 <= k <= n or mapping[k] is not None:
                raise ContractViolation("leaf indices must form a bijection with 1..N")
            mapping[k] = node
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "leaf_node", tuple(mapping))
        object.__setattr__(self, "preorder", tuple(order))

    def is_leaf(self, node):
        return self.gates[node] is None

    def leaves_under(self, node):
        """Leaf indices of the subtree rooted at ``node``, left to right."""
        out = []
        stack = [node]
        while stack:
            cur = stack.pop()
            if self.gates[cur] is None:
                out.append(self.leaf[cur])
            else:
                stack.extend(reversed(self.children[cur]))
        return out

    def depth(self):
        best = 0
        stack = [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            stack.extend((c, d + 1) for c in self.children[node])
        return best

    # -- construction -------------------------------------------------------

    @classmethod
    def from_nested(cls, spec):
        """Build from the nested JSON form ``{"gate": ..., "children": [...]}`` / ``{"leaf": k}``.

        Bare integers are accepted as shorthand for leaves.
        """
        gates, children, leaf = [], [], []
        # (spec, parent id or -1)
        stack = [(spec, -1)]
        while stack:
            item, parent = stack.pop()
            node = len(gates)
            if parent >= 0:
                children[parent].append(node)
            if isinstance(item, (int, np.integer)) and not isinstance(item, bool):
                gates.append(None)
                children.append([])
                leaf.append(int(item))
            elif isinstance(item, dict) and "leaf" in item:
                gates.append(None)
                children.append([])
                leaf.append(int(item["leaf"]))
            elif isinstance(item, dict) and "gate" in item:
                gate = str(item["gate"]).lower()
                gates.append(gate)
                children.append([])
                leaf.append(0)
                stack.extend((c, node) for c in reversed(list(item.get("children", []))))
            else:
                raise ContractViolation(f"cannot interpret tree node {item!r}")
        return cls(tuple(gates), tuple(tuple(c) for c in children), tuple(leaf))

    def to_nested(self):
        def build(node):
            if self.gates[node] is None:
                return {"leaf": self.leaf[node]}
            return {"gate": self.gates[node], "children": [build(c) for c in self.children[node]]}

        return build(self.root)


def min_(*children):
    """Nested-form MIN gate; integer children are leaf indices."""
    return {"gate": MIN, "children": list(children)}


def max_(*children):
    """Nested-form MAX gate; integer children are leaf indices."""
    return {"gate": MAX, "children": list(children)}


def as_values(tree, values):
    """Check a leaf assignment against ``tree`` and return it as a list of ints."""
    vals = [int(v) for v in values]
    if len(vals) != tree.n:
        raise ContractViolation(f"expected {tree.n} leaf values, got {len(vals)}")
    return vals


# -- evaluation ---------------------------------------------------------------


def subtree_values(tree, values):
    """Value of every node (list indexed by node id)."""
    vals = as_values(tree, values)
    out = [None] * len(tree.gates)
    for node in reversed(tree.preorder):
        gate = tree.gates[node]
        if gate is None:
            out[node] = vals[tree.leaf[node] - 1]
        elif gate == MIN:
            out[node] = min(out[c] for c in tree.children[node])
        else:
            out[node] = max(out[c] for c in tree.children[node])
    return out


def eval_minmax(tree, values):
    """Return ``(value, witness)`` for the tree under ``values``.

    The witness is found by descending from the root through the leftmost
    child attaining each gate's optimum, so ``values[witness - 1] == value``.
    """
    node_vals = subtree_values(tree, values)
    value = node_vals[tree.root]
    node = tree.root
    while tree.gates[node] is not None:
        node = next(c for c in tree.children[node] if node_vals[c] == value)
    return value, tree.leaf[node]


def eval_andor(tree, bits, node=None):
    """Evaluate the AND-OR tree with MIN -> AND, MAX -> OR over leaf ``bits``.

    ``bits[k - 1]`` is the input of leaf ``k``.  Evaluates every leaf.
    """
    out = {}
    start = tree.root if node is None else node
    for cur in reversed(tree.preorder):
        gate = tree.gates[cur]
        if gate is None:
            out[cur] = bool(bits[tree.leaf[cur] - 1])
        elif gate == MIN:
            out[cur] = all([out[c] for c in tree.children[cur]])
        else:
            out[cur] = any([out[c] for c in tree.children[cur]])
    return out[start]


def eval_andor_lazy(tree, read_bit: Callable[[int], bool], node=None):
    """Short-circuit AND-OR evaluation, reading leaf bits on demand.

    Children are visited left to right and an AND (OR) stops at its first
    false (true) child, so ``read_bit`` is called only for leaves that the
    evaluation actually needs.
    """
    gates = tree.gates
    children = tree.children
    leaf = tree.leaf

    def walk(cur):
        gate = gates[cur]
        if gate is None:
            return bool(read_bit(leaf[cur]))
        if gate == MIN:
            for c in children[cur]:
                if not walk(c):
                    return False
            return True
        for c in children[cur]:
            if walk(c):
                return True
        return False

    return walk(tree.root if node is None else node)


def eval_threshold(tree, values, v):
    """Decide ``value(T) >= v`` by evaluating the AND-OR tree with leaves ``[x_k >= v]``."""
    vals = as_values(tree, values)
    return eval_andor(tree, [x >= v for x in vals])


def attaining_subtree(tree, values, value_index, oracle=None):
    """Node id of the leftmost root child whose subtree value equals ``x[value_index]``.

    Subtree values are never read directly: equality is decided with two
    threshold evaluations per child built from comparison queries.  Pass an
    ``oracle`` to have those comparisons charged to its ledger.
    """
    from .oracle import COMPARISON, OracleHandle

    if oracle is None:
        oracle = OracleHandle(values, mode=COMPARISON)
    elif oracle.n != tree.n:
        raise ContractViolation("oracle size does not match tree")
    if not 1 <= value_index <= tree.n:
        raise ContractViolation(f"value index {value_index} out of range")
    if tree.is_leaf(tree.root):
        raise ContractViolation("a single-leaf tree has no subtrees")

    for child in tree.children[tree.root]:
        at_least = eval_andor_lazy(
            tree, lambda k: not oracle.compare(k, value_index), node=child
        )
        if not at_least:
            continue
        above = eval_andor_lazy(tree, lambda k: oracle.compare(value_index, k), node=child)
        if not above:
            return child
    raise ContractViolation(f"no root child attains the value of leaf {value_index}")


# -- generation ---------------------------------------------------------------


@dataclass(frozen=True)
class TreeShapeSpec:
    """Recipe for a generated tree and leaf assignment.

    ``kind`` is ``"balanced"`` (uses ``arity`` and ``depth``) or ``"random"``
    (uses ``n`` and ``max_arity``; internal arities are uniform on
    ``2..max_arity``).  ``value_dist`` is ``"permutation"`` (of 1..N),
    ``"uniform"`` (iid on 1..value_range) or ``"duplicates"`` (iid on a small
    alphabet of ``value_range`` symbols, default 3).
    """

    kind: str = "balanced"
    arity: int = 2
    depth: int = 2
    n: int = 1
    max_arity: int = 3
    value_dist: str = "permutation"
    value_range: int | None = None
    root_gate: str = MAX
    seed: int = 0

    def leaf_count(self):
        return self.arity**self.depth if self.kind == "balanced" else self.n


def _check_spec(spec):
    if spec.kind not in ("balanced", "random"):
        raise ConfigurationError(f"unknown tree kind {spec.kind!r}")
    if spec.root_gate not in GATES:
        raise ConfigurationError(f"unknown root gate {spec.root_gate!r}")
    if spec.kind == "balanced":
        if spec.arity < 1 or spec.depth < 0:
            raise ConfigurationError("balanced trees need arity >= 1 and depth >= 0")
        if spec.arity**spec.depth > 1 << 24:
            raise ConfigurationError("balanced tree too large")
    else:
        if spec.n < 1:
            raise ConfigurationError("random trees need n >= 1")
        if spec.max_arity < 2:
            raise ConfigurationError("random trees need max_arity >= 2")
    if spec.value_dist not in ("permutation", "uniform", "duplicates"):
        raise ConfigurationError(f"unknown value distribution {spec.value_dist!r}")
    if spec.value_range is not None and spec.value_range < 1:
        raise ConfigurationError("value_range must be >= 1")


def _arena_builder():
    gates, children, leaf = [], [], []

    def add(gate, parent, k=0):
        node = len(gates)
        gates.append(gate)
        children.append([])
        leaf.append(k)
        if parent >= 0:
            children[parent].append(node)
        return node

    def finish():
        return MinMaxTree(tuple(gates), tuple(tuple(c) for c in children), tuple(leaf))

    return add, finish


def _balanced(arity, depth, root_gate):
    add, finish = _arena_builder()
    counter = [0]
    stack = [(-1, depth, root_gate)]
    while stack:
        parent, d, gate = stack.pop()
        if d == 0:
            counter[0] += 1
            add(None, parent, counter[0])
            continue
        node = add(gate, parent)
        stack.extend((node, d - 1, _flip(gate)) for _ in range(arity))
    return finish()


def _random_shape(n, max_arity, root_gate, rng):
    add, finish = _arena_builder()
    counter = [0]
    stack = [(-1, n, root_gate)]
    while stack:
        parent, size, gate = stack.pop()
        if size == 1:
            counter[0] += 1
            add(None, parent, counter[0])
            continue
        node = add(gate, parent)
        arity = int(rng.integers(2, min(max_arity, size) + 1))
        cuts = np.sort(rng.choice(np.arange(1, size), size=arity - 1, replace=False))
        parts = np.diff(np.concatenate(([0], cuts, [size])))
        stack.extend((node, int(p), _flip(gate)) for p in reversed(parts))
    return finish()


def _values(spec, n, rng):
    if spec.value_dist == "permutation":
        return [int(v) for v in rng.permutation(n) + 1]
    if spec.value_dist == "uniform":
        top = spec.value_range or n
        return [int(v) for v in rng.integers(1, top + 1, size=n)]
    top = spec.value_range or 3
    return [int(v) for v in rng.integers(1, top + 1, size=n)]


def gen_tree(spec: TreeShapeSpec):
    """Generate ``(tree, values)`` deterministically from ``spec``."""
    _check_spec(spec)
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "balanced":
        tree = _balanced(spec.arity, spec.depth, spec.root_gate)
    else:
        tree = _random_shape(spec.n, spec.max_arity, spec.root_gate, rng)
    return tree, _values(spec, tree.n, rng)


def parse_shape(text, **overrides):
    """Parse the shape mini-language ``balanced:<arity>:<depth>`` or ``random:<N>[:<max_arity>]``."""
    parts = text.strip().split(":")
    try:
        if parts[0] == "balanced" and len(parts) == 3:
            return TreeShapeSpec(kind="balanced", arity=int(parts[1]), depth=int(parts[2]), **overrides)
        if parts[0] == "random" and len(parts) in (2, 3):
            extra = {"max_arity": int(parts[2])} if len(parts) == 3 else {}
            return TreeShapeSpec(kind="random", n=int(parts[1]), **extra, **overrides)
    except ValueError as exc:
        raise ConfigurationError(f"bad shape {text!r}: {exc}") from None
    raise ConfigurationError(f"bad shape {text!r}; expected balanced:<arity>:<depth> or random:<N>")


# -- serialization ------------------------------------------------------------


def dump_tree(tree, values: Sequence[int]):
    """JSON document holding the nested tree and the flat leaf values."""
    return json.dumps({"tree": tree.to_nested(), "values": as_values(tree, values)})


def load_tree(text):
    doc = json.loads(text)
    try:
        tree = MinMaxTree.from_nested(doc["tree"])
        values = as_values(tree, doc["values"])
    except (KeyError, TypeError) as exc:
        raise ContractViolation(f"malformed tree document: {exc}") from None
    return tree, values
