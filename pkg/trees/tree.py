"""
Regression Tree
Arena-backed binary tree with missingness-aware routing and the structural
edits used by Metropolis-Hastings proposals.
"""

import json
from typing import Dict, List, Optional

import numpy as np

from .rules import SplitRule

LEAF = -1
FREE = -2


class RoutingError(ValueError):
    """Raised when a row does not match the tree's column layout."""


class InvalidProposal(ValueError):
    """Raised when a structural edit is applied against its precondition."""


class Tree:
    """Binary regression tree stored as contiguous node arrays.

    ``attribute[i]`` is the split column of internal node ``i``, ``LEAF`` for
    leaves and ``FREE`` for unused slots. Node 0 is always the root. Edits
    return a new tree and leave the receiver untouched.
    """

    def __init__(self, n_columns: int, capacity: int = 8):
        if n_columns < 1:
            raise ValueError("a tree needs at least one column")
        self.n_columns = int(n_columns)
        self.attribute = np.full(capacity, FREE, dtype=np.int64)
        self.threshold = np.zeros(capacity)
        self.missing_left = np.zeros(capacity, dtype=bool)
        self.left = np.full(capacity, -1, dtype=np.int64)
        self.right = np.full(capacity, -1, dtype=np.int64)
        self.parent = np.full(capacity, -1, dtype=np.int64)
        self.depth_of = np.zeros(capacity, dtype=np.int64)
        self.value = np.zeros(capacity)

    @classmethod
    def stump(cls, n_columns: int, value: float = 0.0) -> "Tree":
        tree = cls(n_columns)
        root = tree._allocate(parent=-1, depth=0)
        tree.value[root] = value
        return tree

    # --- arena bookkeeping -------------------------------------------------

    @property
    def capacity(self) -> int:
        return self.attribute.shape[0]

    def _grow_capacity(self) -> None:
        extra = self.capacity
        self.attribute = np.concatenate([self.attribute, np.full(extra, FREE, dtype=np.int64)])
        self.threshold = np.concatenate([self.threshold, np.zeros(extra)])
        self.missing_left = np.concatenate([self.missing_left, np.zeros(extra, dtype=bool)])
        self.left = np.concatenate([self.left, np.full(extra, -1, dtype=np.int64)])
        self.right = np.concatenate([self.right, np.full(extra, -1, dtype=np.int64)])
        self.parent = np.concatenate([self.parent, np.full(extra, -1, dtype=np.int64)])
        self.depth_of = np.concatenate([self.depth_of, np.zeros(extra, dtype=np.int64)])
        self.value = np.concatenate([self.value, np.zeros(extra)])

    def _allocate(self, parent: int, depth: int) -> int:
        free = np.flatnonzero(self.attribute == FREE)
        if free.size == 0:
            index = self.capacity
            self._grow_capacity()
        else:
            index = int(free[0])
        self.attribute[index] = LEAF
        self.threshold[index] = 0.0
        self.missing_left[index] = False
        self.left[index] = -1
        self.right[index] = -1
        self.parent[index] = parent
        self.depth_of[index] = depth
        self.value[index] = 0.0
        return index

    def _release(self, index: int) -> None:
        self.attribute[index] = FREE
        self.parent[index] = -1

    def copy(self) -> "Tree":
        tree = Tree.__new__(Tree)
        tree.n_columns = self.n_columns
        tree.attribute = self.attribute.copy()
        tree.threshold = self.threshold.copy()
        tree.missing_left = self.missing_left.copy()
        tree.left = self.left.copy()
        tree.right = self.right.copy()
        tree.parent = self.parent.copy()
        tree.depth_of = self.depth_of.copy()
        tree.value = self.value.copy()
        return tree

    # --- queries -----------------------------------------------------------

    def is_leaf(self, node: int) -> bool:
        return self.attribute[node] == LEAF

    def is_internal(self, node: int) -> bool:
        return self.attribute[node] >= 0

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.attribute == LEAF)

    def internal_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.attribute >= 0)

    def prunable_nodes(self) -> np.ndarray:
        """Internal nodes whose two children are both leaves."""
        internal = self.internal_nodes()
        if internal.size == 0:
            return internal
        both = (self.attribute[self.left[internal]] == LEAF) & (self.attribute[self.right[internal]] == LEAF)
        return internal[both]

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.attribute == LEAF))

    @property
    def is_stump(self) -> bool:
        return self.attribute[0] == LEAF

    def depth(self, node: int) -> int:
        return int(self.depth_of[node])

    def max_depth(self) -> int:
        return int(self.depth_of[self.leaves()].max())

    def rule(self, node: int) -> SplitRule:
        if not self.is_internal(node):
            raise ValueError(f"node {node} is not internal")
        return SplitRule(
            attribute=int(self.attribute[node]),
            threshold=float(self.threshold[node]),
            send_missing_left=bool(self.missing_left[node]),
        )

    def children(self, node: int):
        return int(self.left[node]), int(self.right[node])

    def subtree_nodes(self, node: int) -> List[int]:
        """Nodes of the subtree rooted at ``node`` in preorder."""
        order, stack = [], [node]
        while stack:
            current = stack.pop()
            order.append(current)
            if self.is_internal(current):
                stack.append(int(self.right[current]))
                stack.append(int(self.left[current]))
        return order

    # --- structural edits --------------------------------------------------

    def _check_rule(self, rule: SplitRule) -> None:
        if not 0 <= rule.attribute < self.n_columns:
            raise InvalidProposal(f"rule attribute {rule.attribute} outside 0..{self.n_columns - 1}")

    def grow(self, leaf: int, rule: SplitRule) -> "Tree":
        """Split ``leaf`` with ``rule`` into two new leaves."""
        if not self.is_leaf(leaf):
            raise InvalidProposal(f"grow target {leaf} is not a leaf")
        self._check_rule(rule)
        tree = self.copy()
        depth = tree.depth(leaf) + 1
        left = tree._allocate(parent=leaf, depth=depth)
        right = tree._allocate(parent=leaf, depth=depth)
        tree.attribute[leaf] = rule.attribute
        tree.threshold[leaf] = rule.threshold
        tree.missing_left[leaf] = rule.send_missing_left
        tree.left[leaf] = left
        tree.right[leaf] = right
        tree.value[leaf] = 0.0
        return tree

    def prune(self, node: int, value: float = 0.0) -> "Tree":
        """Collapse an internal node whose children are both leaves."""
        if not self.is_internal(node):
            raise InvalidProposal(f"prune target {node} is not internal")
        left, right = self.children(node)
        if not (self.is_leaf(left) and self.is_leaf(right)):
            raise InvalidProposal(f"prune target {node} has a non-leaf child")
        tree = self.copy()
        tree._release(left)
        tree._release(right)
        tree.attribute[node] = LEAF
        tree.threshold[node] = 0.0
        tree.missing_left[node] = False
        tree.left[node] = -1
        tree.right[node] = -1
        tree.value[node] = value
        return tree

    def change(self, node: int, rule: SplitRule) -> "Tree":
        """Replace the rule of an internal node, keeping the subtree shape."""
        if not self.is_internal(node):
            raise InvalidProposal(f"change target {node} is not internal")
        self._check_rule(rule)
        tree = self.copy()
        tree.attribute[node] = rule.attribute
        tree.threshold[node] = rule.threshold
        tree.missing_left[node] = rule.send_missing_left
        return tree

    # --- routing -----------------------------------------------------------

    def _check_columns(self, n_columns: int) -> None:
        if n_columns != self.n_columns:
            raise RoutingError(f"row has {n_columns} columns, tree expects {self.n_columns}")

    def route_leaf(self, row: np.ndarray, row_mask: np.ndarray) -> int:
        """Leaf index reached by a single row."""
        row = np.asarray(row, dtype=float).reshape(-1)
        row_mask = np.asarray(row_mask, dtype=bool).reshape(-1)
        self._check_columns(row.shape[0])
        if row_mask.shape != row.shape:
            raise RoutingError("row and mask lengths differ")
        node = 0
        while self.attribute[node] >= 0:
            j = self.attribute[node]
            if row_mask[j]:
                go_left = self.missing_left[node]
            else:
                go_left = row[j] <= self.threshold[node]
            node = self.left[node] if go_left else self.right[node]
        return int(node)

    def route(self, row: np.ndarray, row_mask: np.ndarray) -> float:
        """Leaf value reached by a single row."""
        return float(self.value[self.route_leaf(row, row_mask)])

    def route_rows(self, X: np.ndarray, M: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X`` (vectorized descent)."""
        X = np.atleast_2d(X)
        M = np.atleast_2d(M)
        self._check_columns(X.shape[1])
        if M.shape != X.shape:
            raise RoutingError(f"mask shape {M.shape} does not match rows {X.shape}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            active = np.flatnonzero(self.attribute[node] >= 0)
            if active.size == 0:
                return node
            current = node[active]
            columns = self.attribute[current]
            go_left = np.where(
                M[active, columns],
                self.missing_left[current],
                X[active, columns] <= self.threshold[current],
            )
            node[active] = np.where(go_left, self.left[current], self.right[current])

    def predict(self, X: np.ndarray, M: np.ndarray) -> np.ndarray:
        return self.value[self.route_rows(X, M)]

    def node_rows(self, node: int, X: np.ndarray, M: np.ndarray,
                  rows: Optional[np.ndarray] = None) -> np.ndarray:
        """Indices of the rows (optionally restricted to ``rows``) that pass through ``node``."""
        path = [node]
        while self.parent[path[-1]] >= 0:
            path.append(int(self.parent[path[-1]]))
        path.reverse()
        selected = np.arange(X.shape[0]) if rows is None else np.asarray(rows)
        for ancestor, child in zip(path[:-1], path[1:]):
            rule = self.rule(ancestor)
            go_left = rule.goes_left(X[selected, rule.attribute], M[selected, rule.attribute])
            selected = selected[go_left] if child == self.left[ancestor] else selected[~go_left]
        return selected

    # --- serialization -----------------------------------------------------

    def to_dict(self) -> Dict:
        """Preorder node list with renumbered ids; free slots are dropped."""
        order = self.subtree_nodes(0)
        renumber = {old: new for new, old in enumerate(order)}
        nodes = []
        for old in order:
            if self.is_internal(old):
                entry = {"id": renumber[old], **self.rule(old).to_dict(),
                         "left": renumber[int(self.left[old])],
                         "right": renumber[int(self.right[old])]}
            else:
                entry = {"id": renumber[old], "value": float(self.value[old])}
            nodes.append(entry)
        return {"n_columns": self.n_columns, "nodes": nodes}

    @classmethod
    def from_dict(cls, payload: Dict) -> "Tree":
        nodes = payload["nodes"]
        tree = cls(int(payload["n_columns"]), capacity=max(len(nodes), 1))
        for entry in nodes:
            i = int(entry["id"])
            tree.attribute[i] = LEAF
        tree.parent[0] = -1
        for entry in nodes:
            i = int(entry["id"])
            if "attribute" in entry:
                tree.attribute[i] = int(entry["attribute"])
                tree.threshold[i] = float(entry["threshold"])
                tree.missing_left[i] = bool(entry["send_missing_left"])
                tree.left[i] = int(entry["left"])
                tree.right[i] = int(entry["right"])
                tree.parent[tree.left[i]] = i
                tree.parent[tree.right[i]] = i
            else:
                tree.value[i] = float(entry["value"])
        for i in tree.subtree_nodes(0)[1:]:
            tree.depth_of[i] = tree.depth_of[tree.parent[i]] + 1
        return tree

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Tree":
        return cls.from_dict(json.loads(text))

    def _canonical(self, with_values: bool):
        items = []
        for node in self.subtree_nodes(0):
            if self.is_internal(node):
                items.append(("split", int(self.attribute[node]), float(self.threshold[node]),
                              bool(self.missing_left[node])))
            else:
                items.append(("leaf", float(self.value[node]) if with_values else None))
        return (self.n_columns, tuple(items))

    def same_structure(self, other: "Tree") -> bool:
        """Equal shape and rules, ignoring leaf values and slot numbering."""
        return self._canonical(with_values=False) == other._canonical(with_values=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return self._canonical(with_values=True) == other._canonical(with_values=True)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Tree(n_columns={self.n_columns}, leaves={self.n_leaves}, depth={self.max_depth()})"
