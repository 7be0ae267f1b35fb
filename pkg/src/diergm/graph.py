"""Directed-graph data model: O(1) edge toggles, degree caches, node attributes, CSV I/O."""

from __future__ import annotations

import csv
import json


class SelfLoopError(ValueError):
    """An operation or input file named a (v, v) dyad."""


class NodeRangeError(ValueError):
    """A node index fell outside 0..n-1."""


class DuplicateEdgeError(ValueError):
    """An edge-list file repeated a directed edge."""


class MalformedRowError(ValueError):
    """A CSV row could not be parsed against the expected schema."""


class AttributeMismatchError(ValueError):
    """A graph and an attribute table disagree on the node count."""


class DirectedGraph:
    """Binary directed graph on nodes 0..n-1, no self-loops.

    Maintains out- and in-neighbor sets (O(1) membership, O(degree)
    enumeration) plus an indexable edge list with swap-removal, so edge
    toggles, degree lookups, and uniform random edge draws are all O(1).
    """

    __slots__ = ("n", "_out", "_in", "_edges", "_edge_index")

    def __init__(self, n: int):
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValueError(f"node count must be a positive integer, got {n!r}")
        self.n = n
        self._out = [set() for _ in range(n)]
        self._in = [set() for _ in range(n)]
        self._edges: list[tuple[int, int]] = []
        self._edge_index: dict[tuple[int, int], int] = {}

    # ------------------------------------------------------------------
    # queries

    def _check_node(self, v):
        if not 0 <= v < self.n:
            raise NodeRangeError(f"node {v} outside 0..{self.n - 1}")

    def _check_dyad(self, i, j):
        self._check_node(i)
        self._check_node(j)
        if i == j:
            raise SelfLoopError(f"self-loop ({i}, {i}) is not allowed")

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def has_edge(self, i, j) -> bool:
        return j in self._out[i]

    def in_degree(self, v) -> int:
        return len(self._in[v])

    def out_degree(self, v) -> int:
        return len(self._out[v])

    def out_neighbors(self, v) -> set:
        """Live out-neighbor set of v; callers must treat it as read-only."""
        return self._out[v]

    def in_neighbors(self, v) -> set:
        """Live in-neighbor set of v; callers must treat it as read-only."""
        return self._in[v]

    def edges(self) -> list[tuple[int, int]]:
        """Copy of the current edge list, in insertion order."""
        return list(self._edges)

    def edge_at(self, k) -> tuple[int, int]:
        """k-th edge of the internal list; a uniform k gives a uniform edge."""
        return self._edges[k]

    def density(self) -> float:
        possible = self.n * (self.n - 1)
        return len(self._edges) / possible if possible else 0.0

    # ------------------------------------------------------------------
    # mutation

    def add_edge(self, i, j):
        self._check_dyad(i, j)
        if j in self._out[i]:
            raise DuplicateEdgeError(f"edge ({i}, {j}) already present")
        self._insert(i, j)

    def toggle_edge(self, i, j) -> int:
        """Flip the (i, j) edge variable; returns the new state (0 or 1)."""
        self._check_dyad(i, j)
        if j in self._out[i]:
            self._delete(i, j)
            return 0
        self._insert(i, j)
        return 1

    def _insert(self, i, j):
        self._out[i].add(j)
        self._in[j].add(i)
        self._edge_index[(i, j)] = len(self._edges)
        self._edges.append((i, j))

    def _delete(self, i, j):
        self._out[i].discard(j)
        self._in[j].discard(i)
        pos = self._edge_index.pop((i, j))
        last = self._edges.pop()
        if last != (i, j):
            self._edges[pos] = last
            self._edge_index[last] = pos

    def copy(self) -> "DirectedGraph":
        g = DirectedGraph.__new__(DirectedGraph)
        g.n = self.n
        g._out = [s.copy() for s in self._out]
        g._in = [s.copy() for s in self._in]
        g._edges = list(self._edges)
        g._edge_index = dict(self._edge_index)
        return g

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.n == other.n and set(self._edges) == set(other._edges)

    def __repr__(self):
        return f"DirectedGraph(n={self.n}, edges={len(self._edges)})"


def new_graph(n: int) -> DirectedGraph:
    """Empty directed graph on n nodes."""
    return DirectedGraph(n)


class AttributeTable:
    """Per-node categorical group labels stored as dense integer codes.

    The group universe is fixed by `label_names`; when it is omitted the
    codes themselves must be contiguous from 0 and every group must be
    inhabited. Reassigning a node (see `with_group`) may leave a group
    empty without shrinking the universe.
    """

    __slots__ = ("groups", "label_names")

    def __init__(self, groups, label_names=None):
        groups = tuple(int(c) for c in groups)
        if not groups:
            raise ValueError("attribute table needs at least one node")
        used = set(groups)
        if min(used) < 0:
            raise ValueError("group codes must be nonnegative")
        if label_names is None:
            if used != set(range(max(used) + 1)):
                raise ValueError(
                    f"group codes must be contiguous from 0, got {sorted(used)}"
                )
            label_names = tuple(str(c) for c in range(max(used) + 1))
        else:
            label_names = tuple(str(s) for s in label_names)
            if len(set(label_names)) != len(label_names):
                raise ValueError("group label names must be distinct")
            if max(used) >= len(label_names):
                raise ValueError(
                    f"group code {max(used)} has no entry in label_names"
                )
        self.groups = groups
        self.label_names = label_names

    @property
    def n(self) -> int:
        return len(self.groups)

    @property
    def n_groups(self) -> int:
        return len(self.label_names)

    def group(self, v) -> int:
        return self.groups[v]

    def label(self, code) -> str:
        return self.label_names[code]

    def code_of(self, label) -> int:
        try:
            return self.label_names.index(str(label))
        except ValueError:
            raise KeyError(f"unknown group label {label!r}") from None

    def with_group(self, v, code) -> "AttributeTable":
        """Copy of the table with node v reassigned to group `code`."""
        if not 0 <= v < self.n:
            raise NodeRangeError(f"node {v} outside 0..{self.n - 1}")
        if not 0 <= code < self.n_groups:
            raise ValueError(f"group code {code} outside 0..{self.n_groups - 1}")
        new = list(self.groups)
        new[v] = code
        return AttributeTable(new, self.label_names)

    def __eq__(self, other):
        if not isinstance(other, AttributeTable):
            return NotImplemented
        return self.groups == other.groups and self.label_names == other.label_names

    def __repr__(self):
        return f"AttributeTable(n={self.n}, groups={self.n_groups})"


def require_same_n(g: DirectedGraph, attrs: AttributeTable):
    if g.n != attrs.n:
        raise AttributeMismatchError(
            f"graph has {g.n} nodes but attribute table has {attrs.n}"
        )


# ----------------------------------------------------------------------
# file formats: edge lists are CSV with header `from,to`; attributes are
# CSV with header `id,group`. Node ids are 0-based integers; group labels
# are strings mapped to dense codes (sorted label order) on load.


def load_edgelist(path, n: int) -> DirectedGraph:
    g = DirectedGraph(n)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["from", "to"]:
            raise MalformedRowError(f"{path}: expected header 'from,to', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise MalformedRowError(
                    f"{path}:{lineno}: expected 2 fields, got {len(row)}"
                )
            try:
                i, j = int(row[0]), int(row[1])
            except ValueError:
                raise MalformedRowError(
                    f"{path}:{lineno}: non-integer node id in {row!r}"
                ) from None
            try:
                g.add_edge(i, j)
            except (SelfLoopError, NodeRangeError, DuplicateEdgeError) as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from None
    return g


def write_edgelist(g: DirectedGraph, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["from", "to"])
        for i, j in sorted(g.edges()):
            writer.writerow([i, j])


def load_attributes(path) -> AttributeTable:
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "group"]:
            raise MalformedRowError(f"{path}: expected header 'id,group', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise MalformedRowError(
                    f"{path}:{lineno}: expected 2 fields, got {len(row)}"
                )
            try:
                v = int(row[0])
            except ValueError:
                raise MalformedRowError(
                    f"{path}:{lineno}: non-integer node id in {row!r}"
                ) from None
            if v in rows:
                raise MalformedRowError(f"{path}:{lineno}: duplicate node id {v}")
            rows[v] = row[1]
    n = len(rows)
    if n == 0:
        raise MalformedRowError(f"{path}: attribute file has no rows")
    missing = set(range(n)) - set(rows)
    if missing:
        bad = sorted(set(rows) - set(range(n)))
        raise NodeRangeError(
            f"{path}: node ids must be exactly 0..{n - 1}; "
            f"missing {sorted(missing)}, out of range {bad}"
        )
    labels = sorted(set(rows.values()))
    code = {lab: k for k, lab in enumerate(labels)}
    return AttributeTable([code[rows[v]] for v in range(n)], labels)


def write_attributes(attrs: AttributeTable, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "group"])
        for v in range(attrs.n):
            writer.writerow([v, attrs.label(attrs.group(v))])


def write_report(report, path):
    """Serialize a report object (anything with to_json_dict) or dict as JSON."""
    data = report.to_json_dict() if hasattr(report, "to_json_dict") else report
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
