"""Sufficient statistics for directed attributed graphs and their exact changescores.

Each term evaluates a statistic t(y, X) and the exact difference
t(y+_ij) - t(y-_ij) from setting one edge variable to 1 versus 0 with the
rest of the graph held fixed. Counting terms return exact integers;
geometrically weighted terms return floats. Changescores use closed forms
that touch only the affected neighborhoods, never a full re-evaluation.
"""

from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .graph import AttributeTable, DirectedGraph, require_same_n


class UnknownGroupError(ValueError):
    """A term referenced a group code absent from the attribute table."""


class CollinearModelWarning(UserWarning):
    """The dyad-independent part of a model is exactly collinear."""


@functools.lru_cache(maxsize=256)
def _gw_table(decay: float, size: int) -> tuple:
    """Weights e^a * (1 - (1 - e^-a)^k) for k = 0..size-1 (zero at k=0)."""
    base = 1.0 - math.exp(-decay)
    scale = math.exp(decay)
    return tuple(scale * (1.0 - base**k) for k in range(size))


def gw_weight(decay: float, k: int) -> float:
    """Diminishing-returns weight of a count k under decay parameter `decay`."""
    return math.exp(decay) * (1.0 - (1.0 - math.exp(-decay)) ** k)


def shared_partners(g: DirectedGraph, u, v) -> int:
    """Directed shared partners of the ordered pair (u, v): w with u->w and w->v.

    Single point of truth for the outgoing-two-path convention used by
    GwEsp and GwDsp; swap the body to change the variant.
    """
    return len(g._out[u] & g._in[v])


@dataclass(frozen=True)
class Term:
    """Base class for statistic terms; subclasses implement stat and change."""

    kind: ClassVar[str] = ""

    def stat(self, g: DirectedGraph, X: AttributeTable):
        raise NotImplementedError

    def change(self, g: DirectedGraph, X: AttributeTable, i: int, j: int):
        """t(y+_ij) - t(y-_ij), independent of the current state of (i, j)."""
        raise NotImplementedError

    def referenced_groups(self) -> tuple:
        return ()

    def params(self, attrs: AttributeTable | None = None) -> dict:
        return {}

    def label(self, attrs: AttributeTable | None = None) -> str:
        return self.kind

    def to_json_dict(self, attrs: AttributeTable | None = None) -> dict:
        d = {"kind": self.kind}
        d.update(self.params(attrs))
        return d


def _group_name(code, attrs):
    return attrs.label(code) if attrs is not None else code


@dataclass(frozen=True)
class Edges(Term):
    kind: ClassVar[str] = "edges"

    def stat(self, g, X):
        return g.edge_count

    def change(self, g, X, i, j):
        return 1


@dataclass(frozen=True)
class Mutual(Term):
    """Number of unordered pairs {i, j} with both edges present."""

    kind: ClassVar[str] = "mutual"

    def stat(self, g, X):
        out = g._out
        return sum(1 for (i, j) in g._edges if i < j and i in out[j])

    def change(self, g, X, i, j):
        return 1 if i in g._out[j] else 0


@dataclass(frozen=True)
class NodeMatch(Term):
    """Number of edges whose endpoints share a group."""

    kind: ClassVar[str] = "nodematch"

    def stat(self, g, X):
        grp = X.groups
        return sum(1 for (i, j) in g._edges if grp[i] == grp[j])

    def change(self, g, X, i, j):
        grp = X.groups
        return 1 if grp[i] == grp[j] else 0


@dataclass(frozen=True)
class NodeMix(Term):
    """Number of edges from one specific group to another (ordered pair)."""

    kind: ClassVar[str] = "nodemix"
    from_group: int
    to_group: int

    def __post_init__(self):
        if self.from_group == self.to_group:
            raise ValueError("nodemix needs two distinct groups; within-group rates belong to nodematch")
        if self.from_group < 0 or self.to_group < 0:
            raise ValueError("group codes must be nonnegative")

    def referenced_groups(self):
        return (self.from_group, self.to_group)

    def params(self, attrs=None):
        return {"from": _group_name(self.from_group, attrs), "to": _group_name(self.to_group, attrs)}

    def label(self, attrs=None):
        return f"nodemix[{_group_name(self.from_group, attrs)}->{_group_name(self.to_group, attrs)}]"

    def stat(self, g, X):
        grp = X.groups
        a, b = self.from_group, self.to_group
        return sum(1 for (i, j) in g._edges if grp[i] == a and grp[j] == b)

    def change(self, g, X, i, j):
        grp = X.groups
        return 1 if grp[i] == self.from_group and grp[j] == self.to_group else 0


@dataclass(frozen=True)
class Inhomo2Star(Term):
    """Two-paths i->j->k with i, j in the same group and k outside it.

    The count rises with boundary spanning by embedded actors; a negative
    coefficient implements active boundary maintenance for every group at
    once.
    """

    kind: ClassVar[str] = "inhomo2star"

    def stat(self, g, X):
        grp = X.groups
        cross_out = [
            sum(1 for k in g._out[v] if grp[k] != grp[v]) for v in range(g.n)
        ]
        return sum(cross_out[j] for (i, j) in g._edges if grp[i] == grp[j])

    def change(self, g, X, i, j):
        grp = X.groups
        gi = grp[i]
        gj = grp[j]
        if gi == gj:
            # outgoing ties from j that leave the shared group
            return sum(1 for k in g._out[j] if grp[k] != gj)
        # incoming ties to i from i's own group (k = j is excluded by group)
        return sum(1 for k in g._in[i] if grp[k] == gi)


@dataclass(frozen=True)
class AB2Star(Term):
    """Two-paths i->j->k with i, j in reference group A and k in group B."""

    kind: ClassVar[str] = "ab2star"
    ref_group: int
    stig_group: int

    def __post_init__(self):
        if self.ref_group == self.stig_group:
            raise ValueError("ab2star needs two distinct groups")
        if self.ref_group < 0 or self.stig_group < 0:
            raise ValueError("group codes must be nonnegative")

    def referenced_groups(self):
        return (self.ref_group, self.stig_group)

    def params(self, attrs=None):
        return {"A": _group_name(self.ref_group, attrs), "B": _group_name(self.stig_group, attrs)}

    def label(self, attrs=None):
        return f"ab2star[{_group_name(self.ref_group, attrs)}->{_group_name(self.stig_group, attrs)}]"

    def stat(self, g, X):
        grp = X.groups
        a, b = self.ref_group, self.stig_group
        out_b = [sum(1 for k in g._out[v] if grp[k] == b) for v in range(g.n)]
        return sum(out_b[j] for (i, j) in g._edges if grp[i] == a and grp[j] == a)

    def change(self, g, X, i, j):
        grp = X.groups
        a, b = self.ref_group, self.stig_group
        if grp[i] != a:
            return 0
        if grp[j] == a:
            # ties from j into the stigmatized group (k = i excluded by group)
            return sum(1 for k in g._out[j] if grp[k] == b)
        if grp[j] == b:
            # ties into i from the reference group (k = j excluded by group)
            return sum(1 for k in g._in[i] if grp[k] == a)
        return 0


def _validate_decay(decay):
    if not (isinstance(decay, (int, float)) and math.isfinite(decay) and decay >= 0):
        raise ValueError(f"decay must be finite and >= 0, got {decay!r}")


@dataclass(frozen=True)
class GwEsp(Term):
    """Geometrically weighted edgewise shared partners (outgoing two-paths)."""

    kind: ClassVar[str] = "gwesp"
    decay: float

    def __post_init__(self):
        _validate_decay(self.decay)

    def params(self, attrs=None):
        return {"decay": self.decay}

    def label(self, attrs=None):
        return f"gwesp[{self.decay:g}]"

    def stat(self, g, X):
        w = _gw_table(self.decay, g.n + 1)
        out, inn = g._out, g._in
        return sum(w[len(out[i] & inn[j])] for (i, j) in g._edges)

    def change(self, g, X, i, j):
        w = _gw_table(self.decay, g.n + 1)
        out, inn = g._out, g._in
        # (i, j) is never a leg of its own shared-partner count, so the raw
        # intersection works in either state; counts for the neighboring
        # edges must drop the contribution riding on the toggled edge.
        adj = 1 if j in out[i] else 0
        total = w[len(out[i] & inn[j])]
        for v in out[i] & out[j]:  # edges (i, v) gain/lose partner j
            sp = len(out[i] & inn[v]) - adj
            total += w[sp + 1] - w[sp]
        for u in inn[i] & inn[j]:  # edges (u, j) gain/lose partner i
            sp = len(out[u] & inn[j]) - adj
            total += w[sp + 1] - w[sp]
        return total


@dataclass(frozen=True)
class GwDsp(Term):
    """Geometrically weighted dyadwise shared partners over all ordered dyads."""

    kind: ClassVar[str] = "gwdsp"
    decay: float

    def __post_init__(self):
        _validate_decay(self.decay)

    def params(self, attrs=None):
        return {"decay": self.decay}

    def label(self, attrs=None):
        return f"gwdsp[{self.decay:g}]"

    def stat(self, g, X):
        w = _gw_table(self.decay, g.n + 1)
        counts: dict[tuple[int, int], int] = {}
        for v in range(g.n):
            for u in g._in[v]:
                for t in g._out[v]:
                    if t != u:
                        key = (u, t)
                        counts[key] = counts.get(key, 0) + 1
        return sum(w[c] for c in counts.values())

    def change(self, g, X, i, j):
        w = _gw_table(self.decay, g.n + 1)
        out, inn = g._out, g._in
        adj = 1 if j in out[i] else 0
        total = 0.0
        for v in out[j]:  # dyads (i, v) gain/lose the two-path i->j->v
            if v != i:
                dp = len(out[i] & inn[v]) - adj
                total += w[dp + 1] - w[dp]
        for u in inn[i]:  # dyads (u, j) gain/lose the two-path u->i->j
            if u != j:
                dp = len(out[u] & inn[j]) - adj
                total += w[dp + 1] - w[dp]
        return total


@dataclass(frozen=True)
class GwInDegree(Term):
    """Geometrically weighted in-degree distribution statistic."""

    kind: ClassVar[str] = "gwindegree"
    decay: float

    def __post_init__(self):
        _validate_decay(self.decay)

    def params(self, attrs=None):
        return {"decay": self.decay}

    def label(self, attrs=None):
        return f"gwindegree[{self.decay:g}]"

    def stat(self, g, X):
        w = _gw_table(self.decay, g.n + 1)
        return sum(w[len(s)] for s in g._in)

    def change(self, g, X, i, j):
        w = _gw_table(self.decay, g.n + 1)
        d = len(g._in[j]) - (1 if i in g._in[j] else 0)
        return w[d + 1] - w[d]


@dataclass(frozen=True)
class GwOutDegree(Term):
    """Geometrically weighted out-degree distribution statistic."""

    kind: ClassVar[str] = "gwoutdegree"
    decay: float

    def __post_init__(self):
        _validate_decay(self.decay)

    def params(self, attrs=None):
        return {"decay": self.decay}

    def label(self, attrs=None):
        return f"gwoutdegree[{self.decay:g}]"

    def stat(self, g, X):
        w = _gw_table(self.decay, g.n + 1)
        return sum(w[len(s)] for s in g._out)

    def change(self, g, X, i, j):
        w = _gw_table(self.decay, g.n + 1)
        d = len(g._out[i]) - (1 if j in g._out[i] else 0)
        return w[d + 1] - w[d]


_TERM_CLASSES = (
    Edges,
    Mutual,
    NodeMatch,
    NodeMix,
    Inhomo2Star,
    AB2Star,
    GwEsp,
    GwDsp,
    GwInDegree,
    GwOutDegree,
)
_TERM_REGISTRY = {cls.kind: cls for cls in _TERM_CLASSES}

# dyad-independent terms: their changescore depends only on the dyad's
# ordered group pair, so exact collinearity can be checked without a graph
_DYADIC_TERMS = (Edges, NodeMatch, NodeMix)


class ModelSpec:
    """Ordered list of statistic terms defining a model."""

    __slots__ = ("terms",)

    def __init__(self, terms):
        terms = tuple(terms)
        if not terms:
            raise ValueError("a model needs at least one term")
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate model terms")
        for t in terms:
            if not isinstance(t, Term):
                raise TypeError(f"not a term: {t!r}")
        self.terms = terms

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self):
        return f"ModelSpec({', '.join(t.label() for t in self.terms)})"

    def labels(self, attrs: AttributeTable | None = None) -> list[str]:
        return [t.label(attrs) for t in self.terms]

    def validate_against(self, attrs: AttributeTable, warn_collinear: bool = True):
        """Check group references; optionally warn on an exactly collinear dyadic design."""
        for t in self.terms:
            _check_groups(t, attrs)
        if warn_collinear and dyadic_design_collinear(self, attrs):
            warnings.warn(
                "dyad-independent terms are exactly collinear on the dyad design; "
                "this model is not identifiable as specified",
                CollinearModelWarning,
                stacklevel=2,
            )

    def statistics(self, g: DirectedGraph, X: AttributeTable) -> np.ndarray:
        """Vector of all term statistics on (g, X)."""
        return np.array([float(t.stat(g, X)) for t in self.terms])


def _check_groups(term: Term, attrs: AttributeTable):
    for code in term.referenced_groups():
        if code >= attrs.n_groups:
            raise UnknownGroupError(
                f"{term.label()} references group code {code}; "
                f"table has {attrs.n_groups} groups"
            )


def dyadic_design_collinear(model: ModelSpec, attrs: AttributeTable) -> bool:
    """True if the Edges/NodeMatch/NodeMix columns are exactly linearly dependent.

    Those changescores are constant within each ordered group-pair class, so
    the check reduces to a rank test on the class-level design. Dependence
    terms are graph-state dependent and are excluded; the estimator performs
    the full-design rank check.
    """
    cols = [t for t in model.terms if isinstance(t, _DYADIC_TERMS)]
    if len(cols) < 2:
        return False
    sizes = [0] * attrs.n_groups
    for c in attrs.groups:
        sizes[c] += 1
    classes = [
        (a, b)
        for a in range(attrs.n_groups)
        for b in range(attrs.n_groups)
        if (a != b and sizes[a] > 0 and sizes[b] > 0) or (a == b and sizes[a] >= 2)
    ]
    if not classes:
        return False
    rows = []
    for a, b in classes:
        row = []
        for t in cols:
            if isinstance(t, Edges):
                row.append(1.0)
            elif isinstance(t, NodeMatch):
                row.append(1.0 if a == b else 0.0)
            else:
                row.append(1.0 if (a, b) == (t.from_group, t.to_group) else 0.0)
        rows.append(row)
    mat = np.array(rows)
    return np.linalg.matrix_rank(mat) < len(cols)


# ----------------------------------------------------------------------
# operations


def eval_stat(term: Term, g: DirectedGraph, X: AttributeTable):
    """Exact value of one statistic on (g, X)."""
    require_same_n(g, X)
    _check_groups(term, X)
    return term.stat(g, X)


def change_score(term: Term, g: DirectedGraph, X: AttributeTable, i: int, j: int):
    """Exact changescore of one statistic for the (i, j) edge variable."""
    require_same_n(g, X)
    _check_groups(term, X)
    g._check_dyad(i, j)
    return term.change(g, X, i, j)


def change_vector(model: ModelSpec, g: DirectedGraph, X: AttributeTable, i: int, j: int) -> np.ndarray:
    """Changescores of every model term for the (i, j) edge variable."""
    require_same_n(g, X)
    g._check_dyad(i, j)
    for t in model.terms:
        _check_groups(t, X)
    return np.array([float(t.change(g, X, i, j)) for t in model.terms])


def weighted_change(model: ModelSpec, theta, g: DirectedGraph, X: AttributeTable, i: int, j: int) -> float:
    """theta . change_vector without array overhead; hot path, no validation."""
    return sum(th * t.change(g, X, i, j) for th, t in zip(theta, model.terms))


# ----------------------------------------------------------------------
# model files: a JSON list of term records such as
#   [{"kind": "edges", "theta": -2.0},
#    {"kind": "nodemix", "from": "girl", "to": "boy"},
#    {"kind": "ab2star", "A": "girl", "B": "boy"},
#    {"kind": "gwesp", "decay": 0.803}]
# Group references may be label strings (resolved against an attribute
# table) or integer codes. "theta" entries are all-or-none.


def _resolve_group(value, attrs, where):
    if isinstance(value, bool):
        raise ValueError(f"{where}: invalid group reference {value!r}")
    if isinstance(value, int):
        return value
    if attrs is None:
        raise ValueError(
            f"{where}: group label {value!r} needs an attribute table to resolve"
        )
    try:
        return attrs.code_of(value)
    except KeyError as exc:
        raise UnknownGroupError(f"{where}: {exc.args[0]}") from None


def term_from_json_dict(record: dict, attrs: AttributeTable | None = None) -> Term:
    if "kind" not in record:
        raise ValueError(f"term record missing 'kind': {record!r}")
    kind = str(record["kind"]).lower()
    cls = _TERM_REGISTRY.get(kind)
    if cls is None:
        raise ValueError(f"unknown term kind {kind!r}")
    where = f"term {kind!r}"
    if cls is NodeMix:
        return NodeMix(
            _resolve_group(record["from"], attrs, where),
            _resolve_group(record["to"], attrs, where),
        )
    if cls is AB2Star:
        return AB2Star(
            _resolve_group(record["A"], attrs, where),
            _resolve_group(record["B"], attrs, where),
        )
    if cls in (GwEsp, GwDsp, GwInDegree, GwOutDegree):
        return cls(float(record["decay"]))
    return cls()


def load_model(source, attrs: AttributeTable | None = None):
    """Load a model file (path or parsed list); returns (ModelSpec, theta or None)."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source) as fh:
            data = json.load(fh)
    else:
        data = source
    if not isinstance(data, list):
        raise ValueError("model file must be a JSON list of term records")
    terms = [term_from_json_dict(rec, attrs) for rec in data]
    thetas = [rec.get("theta") for rec in data]
    model = ModelSpec(terms)
    if attrs is not None:
        model.validate_against(attrs, warn_collinear=False)
    if all(t is None for t in thetas):
        return model, None
    if any(t is None for t in thetas):
        raise ValueError("model file mixes terms with and without 'theta'")
    theta = np.array([float(t) for t in thetas])
    if not np.all(np.isfinite(theta)):
        raise ValueError("model file contains non-finite theta values")
    return model, theta


def save_model(model: ModelSpec, path, theta=None, attrs: AttributeTable | None = None):
    records = [t.to_json_dict(attrs) for t in model.terms]
    if theta is not None:
        if len(theta) != len(model.terms):
            raise ValueError("theta length does not match model terms")
        for rec, value in zip(records, theta):
            rec["theta"] = float(value)
    with open(path, "w") as fh:
        json.dump(records, fh, indent=2)
        fh.write("\n")
