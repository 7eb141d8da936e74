"""Incremental decision trees over a set of pairwise-distinguished samples.

Internal nodes query one coordinate; the child for answer 0 is on the left.
Each leaf holds one element of the set, and every element has been queried on
all coordinates along its own root-to-leaf path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .common import Prober


@dataclass
class Leaf:
    element: int


@dataclass
class Node:
    j: int
    left: "Tree"
    right: "Tree"


Tree = Union[Leaf, Node]


class IncrementalDecisionTree:
    def __init__(self, first: int):
        self.root: Tree = Leaf(int(first))

    def elements(self) -> list[int]:
        out, stack = [], [self.root]
        while stack:
            t = stack.pop()
            if isinstance(t, Leaf):
                out.append(t.element)
            else:
                stack += [t.right, t.left]
        return out

    def __len__(self) -> int:
        return len(self.elements())

    def height(self) -> int:
        def h(t: Tree) -> int:
            return 0 if isinstance(t, Leaf) else 1 + max(h(t.left), h(t.right))

        return h(self.root)

    def path(self, element: int) -> list[tuple[int, int]]:
        """``(j, answer)`` pairs leading to the element's leaf."""

        def walk(t: Tree, acc):
            if isinstance(t, Leaf):
                return acc if t.element == element else None
            return walk(t.left, acc + [(t.j, 0)]) or walk(t.right, acc + [(t.j, 1)])

        found = walk(self.root, [])
        if found is None:
            raise KeyError(element)
        return found


def tree_locate(tree: IncrementalDecisionTree, y: int, prober: Prober) -> int:
    """Route sample ``y`` from the root; queries at most the tree height."""
    t = tree.root
    while isinstance(t, Node):
        t = t.right if prober.bit(y, t.j) else t.left
    return t.element


def tree_insert(tree: IncrementalDecisionTree, y: int, x: int, j: int, prober: Prober) -> IncrementalDecisionTree:
    """Split ``x``'s leaf on coordinate ``j``; no oracle queries are made."""
    kx, ky = prober.known.get(x, {}), prober.known.get(y, {})
    if j not in kx or j not in ky or kx[j] == ky[j]:
        raise AssertionError(f"coordinate {j} does not separate samples {x} and {y}")
    parent, t, side = None, tree.root, None
    while isinstance(t, Node):
        parent = t
        side = "right" if ky[t.j] else "left"
        t = getattr(t, side)
    if t.element != x:
        raise AssertionError(f"sample {y} routes to {t.element}, not {x}")
    pair = (Leaf(x), Leaf(y)) if kx[j] == 0 else (Leaf(y), Leaf(x))
    node = Node(j, *pair)
    if parent is None:
        tree.root = node
    else:
        setattr(parent, side, node)
    return tree


def tree_construct(members: Sequence[int], prober: Prober) -> IncrementalDecisionTree:
    """Build a tree for already pairwise-distinguished samples by repeated insertion."""
    tree = IncrementalDecisionTree(members[0])
    for y in members[1:]:
        x = tree_locate(tree, y, prober)
        j = prober.certificate(x, y)
        if j is None:
            raise AssertionError(f"no recorded coordinate separates samples {x} and {y}")
        tree_insert(tree, y, x, j, prober)
    return tree
