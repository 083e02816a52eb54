"""Expression trees over base functions and the random composition schemes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .base import BaseFunctionSpec, TagFilter, sample_base_function

OPERATORS = ("add", "multiply")
HIGHDIM_THRESHOLD = 50
HIGHDIM_MIN_BASE_MAX = 0.01
NC_RANGE = (2, 7)


@dataclass(frozen=True)
class Leaf:
    spec: BaseFunctionSpec
    axis: int = 0


@dataclass(frozen=True)
class Combine:
    op: str
    left: "Node"
    right: "Node"

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise ValueError(f"unknown operator {self.op!r}")


Node = Union[Leaf, Combine]


def _iter_nodes(node):
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, Combine):
            stack.append(cur.right)
            stack.append(cur.left)


def _eval_node(node, pts):
    if isinstance(node, Leaf):
        return node.spec(pts[:, node.axis])
    a = _eval_node(node.left, pts)
    b = _eval_node(node.right, pts)
    return a + b if node.op == "add" else a * b


def _node_to_dict(node):
    if isinstance(node, Leaf):
        return {"node": "leaf", "axis": node.axis, "base": node.spec.to_dict()}
    return {
        "node": "combine",
        "op": node.op,
        "children": [_node_to_dict(node.left), _node_to_dict(node.right)],
    }


def _node_from_dict(d):
    if d["node"] == "leaf":
        return Leaf(BaseFunctionSpec.from_dict(d["base"]), int(d["axis"]))
    left, right = d["children"]
    return Combine(d["op"], _node_from_dict(left), _node_from_dict(right))


def join(nodes, ops) -> Node:
    """Left-deep join: ``((n0 op0 n1) op1 n2) ...``."""
    if len(ops) != len(nodes) - 1:
        raise ValueError("need exactly one operator per join")
    out = nodes[0]
    for op, nxt in zip(ops, nodes[1:]):
        out = Combine(op, out, nxt)
    return out


@dataclass(frozen=True)
class FunctionExpr:
    """An unnormalised non-negative function on a ``dim``-dimensional box."""

    node: Node
    dim: int = 1

    def __post_init__(self):
        for leaf in self.leaves():
            if not 0 <= leaf.axis < self.dim:
                raise ValueError(f"leaf axis {leaf.axis} out of range for dim {self.dim}")

    def __call__(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None] if self.dim == 1 else pts[None, :]
        return np.asarray(_eval_node(self.node, pts), dtype=float)

    def leaves(self) -> list[Leaf]:
        return [n for n in _iter_nodes(self.node) if isinstance(n, Leaf)]

    def combines(self) -> list[Combine]:
        return [n for n in _iter_nodes(self.node) if isinstance(n, Combine)]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    def operators(self) -> set[str]:
        return {c.op for c in self.combines()}

    def separable_factors(self) -> dict[int, list[Node]] | None:
        """Group the top-level product factors by axis.

        Returns ``None`` unless the function is a product of sub-expressions
        that each depend on a single axis.
        """
        factors, stack = [], [self.node]
        while stack:
            cur = stack.pop()
            if isinstance(cur, Combine) and cur.op == "multiply":
                stack.extend((cur.right, cur.left))
            else:
                factors.append(cur)
        groups: dict[int, list[Node]] = {}
        for f in factors:
            axes = {leaf.axis for leaf in _iter_nodes(f) if isinstance(leaf, Leaf)}
            if len(axes) != 1:
                return None
            groups.setdefault(axes.pop(), []).append(f)
        return groups

    def to_dict(self) -> dict:
        return {"dim": self.dim, "root": _node_to_dict(self.node)}

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionExpr":
        return cls(_node_from_dict(d["root"]), int(d["dim"]))


class _AnyColumn:
    # Every column lookup returns the same coordinate vector.
    def __init__(self, x):
        self.x = x

    def __getitem__(self, key):
        return self.x


def eval_node_1d(node: Node, x) -> np.ndarray:
    """Evaluate a single-axis sub-expression on 1D coordinates."""
    x = np.asarray(x, float)
    return np.broadcast_to(np.asarray(_eval_node(node, _AnyColumn(x)), float), x.shape)


def _ops(rng, count, add_only):
    if add_only:
        return ["add"] * count
    return [OPERATORS[i] for i in rng.integers(len(OPERATORS), size=count)]


def compose_1d(
    rng: np.random.Generator,
    n_c: int,
    s: float,
    filters: TagFilter | None = None,
    *,
    axis: int = 0,
    add_only: bool = False,
    min_base_max: float | None = None,
) -> Node:
    """Left-deep tree of ``n_c`` fresh base functions on one axis."""
    lo, hi = NC_RANGE
    if not lo <= n_c <= hi:
        raise ValueError(f"n_c must lie in [{lo}, {hi}], got {n_c}")
    leaves = [
        Leaf(sample_base_function(rng, s, filters, min_base_max), axis) for _ in range(n_c)
    ]
    return join(leaves, _ops(rng, n_c - 1, add_only))


def compose_highdim(
    rng: np.random.Generator,
    d: int,
    n_c: int,
    extents,
    scheme: str = "A",
    filters: TagFilter | None = None,
) -> FunctionExpr:
    """Combine base functions into a ``d``-dimensional function.

    Scheme ``"A"`` builds one ``n_c``-leaf composition per axis and joins the
    ``d`` axis functions. Scheme ``"B"`` builds ``n_c`` terms, each joining one
    leaf per axis, and joins those terms. Both use ``n_c * d`` leaves. From
    ``d >= 50`` on only addition is used and base functions whose maximum is
    below 0.01 are redrawn.
    """
    extents = np.broadcast_to(np.asarray(extents, float), (d,))
    add_only = d >= HIGHDIM_THRESHOLD
    floor = HIGHDIM_MIN_BASE_MAX if add_only else None
    if d == 1:
        node = compose_1d(rng, n_c, extents[0], filters, add_only=add_only, min_base_max=floor)
        return FunctionExpr(node, 1)
    if scheme == "A":
        per_axis = [
            compose_1d(rng, n_c, extents[i], filters, axis=i, add_only=add_only, min_base_max=floor)
            for i in range(d)
        ]
        return FunctionExpr(join(per_axis, _ops(rng, d - 1, add_only)), d)
    if scheme == "B":
        terms = []
        for _ in range(n_c):
            leaves = [
                Leaf(sample_base_function(rng, extents[i], filters, floor), i) for i in range(d)
            ]
            terms.append(join(leaves, _ops(rng, d - 1, add_only)))
        return FunctionExpr(join(terms, _ops(rng, n_c - 1, add_only)), d)
    raise ValueError(f"unknown composition scheme {scheme!r}")
