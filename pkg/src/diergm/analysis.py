"""Segregation metrics, conditional-expectation perturbation, degeneracy checks.

The perturbation machinery conditions on everything outside one actor's
incoming-tie column: those n-1 binary variables are either enumerated
exactly (small n) or resampled by systematic-scan Gibbs, and the expected
in-degree is compared across a forced change (one new tie, or one flipped
group membership).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .graph import AttributeTable, DirectedGraph, require_same_n
from .sampler import inv_logit
from .terms import ModelSpec, weighted_change


class UndefinedEIError(ValueError):
    """The E-I index is undefined on a graph with no edges."""


class NoEligibleCasesError(ValueError):
    """A perturbation sweep found nothing to perturb."""


class AmbiguousFlipError(ValueError):
    """An attribute flip has no unique target group."""


class EnumerationTooLargeError(ValueError):
    """Exact column enumeration was requested beyond the size cutoff."""


EXACT = "exact"
GIBBS = "gibbs"
TIE_TOGGLE = "tie"
ATTRIBUTE_FLIP = "attr"

# 2^(n-1) states stay sub-second up to here
MAX_EXACT_COLUMN = 14


def ei_index(g: DirectedGraph, X: AttributeTable) -> float:
    """(external - internal) / (external + internal) tie counts, in [-1, 1]."""
    require_same_n(g, X)
    if g.edge_count == 0:
        raise UndefinedEIError("E-I index is undefined on a graph with no edges")
    grp = X.groups
    cross = sum(1 for (i, j) in g._edges if grp[i] != grp[j])
    within = g.edge_count - cross
    return (cross - within) / (cross + within)


@dataclass
class ColumnExpectation:
    """Expected in-degree of one actor's conditional column distribution."""

    value: float
    mc_std_error: float
    method: str


def _enumerate_column(model, theta, g, X, actor):
    """Exact expectation by Gray-code enumeration of all column states.

    Walks the 2^(n-1) configurations toggling one variable at a time, so
    each step costs one changescore evaluation; log-weights accumulate the
    toggle increments and are normalized at the end.
    """
    work = g.copy()
    others = [j for j in range(g.n) if j != actor]
    for j in others:
        if work.has_edge(j, actor):
            work.toggle_edge(j, actor)
    m = len(others)
    n_states = 1 << m
    logw = np.empty(n_states)
    indeg = np.empty(n_states)
    logw[0] = 0.0
    indeg[0] = 0.0
    lw = 0.0
    d = 0
    for s in range(1, n_states):
        bit = (s & -s).bit_length() - 1
        j = others[bit]
        delta = weighted_change(model, theta, work, X, j, actor)
        if work.toggle_edge(j, actor):
            lw += delta
            d += 1
        else:
            lw -= delta
            d -= 1
        logw[s] = lw
        indeg[s] = d
    w = np.exp(logw - logw.max())
    return float((indeg * w).sum() / w.sum())


def _gibbs_column(model, theta, g, X, actor, rng, burn, sweeps, batches):
    """Systematic-scan Gibbs over the column; returns (mean, batch-means SE)."""
    work = g.copy()
    others = [j for j in range(g.n) if j != actor]
    values = np.empty(sweeps)
    for s in range(burn + sweeps):
        for j in others:
            p = inv_logit(weighted_change(model, theta, work, X, j, actor))
            have = work.has_edge(j, actor)
            if (rng.random() < p) != have:
                work.toggle_edge(j, actor)
        if s >= burn:
            values[s - burn] = work.in_degree(actor)
    mean = float(values.mean())
    b = max(2, min(batches, sweeps))
    usable = (sweeps // b) * b
    batch_means = values[:usable].reshape(b, -1).mean(axis=1)
    se = float(batch_means.std(ddof=1) / math.sqrt(b))
    return mean, se


def expected_indegree_column(
    model: ModelSpec,
    theta,
    g: DirectedGraph,
    X: AttributeTable,
    actor: int,
    method: str = EXACT,
    rng=None,
    gibbs_burn: int = 200,
    gibbs_sweeps: int = 2000,
    gibbs_batches: int = 20,
) -> ColumnExpectation:
    """Expected in-degree of `actor` with everything outside its column fixed.

    The free variables are exactly the n-1 incoming ties of `actor`;
    method "exact" sums over all of their joint states (n-1 <= 14 only),
    method "gibbs" runs systematic-scan Gibbs with a batch-means Monte
    Carlo standard error.
    """
    require_same_n(g, X)
    model.validate_against(X, warn_collinear=False)
    g._check_node(actor)
    theta = [float(t) for t in theta]
    if len(theta) != len(model.terms):
        raise ValueError("theta length does not match model terms")
    if method == EXACT:
        if g.n - 1 > MAX_EXACT_COLUMN:
            raise EnumerationTooLargeError(
                f"exact enumeration allows n-1 <= {MAX_EXACT_COLUMN}, got {g.n - 1}"
            )
        return ColumnExpectation(_enumerate_column(model, theta, g, X, actor), 0.0, EXACT)
    if method == GIBBS:
        if rng is None:
            rng = np.random.default_rng()
        mean, se = _gibbs_column(
            model, theta, g, X, actor, rng, gibbs_burn, gibbs_sweeps, gibbs_batches
        )
        return ColumnExpectation(mean, se, GIBBS)
    raise ValueError(f"unknown method {method!r}; use 'exact' or 'gibbs'")


@dataclass
class PerturbationCase:
    """Expected in-degree change for one perturbed actor (and target, if any)."""

    actor: int
    target: int | None
    change: float
    mc_std_error: float

    def case_id(self) -> str:
        return f"{self.actor}->{self.target}" if self.target is not None else str(self.actor)

    def to_json_dict(self) -> dict:
        return {
            "actor": self.actor,
            "target": self.target,
            "expected_indegree_change": self.change,
            "mc_std_error": self.mc_std_error,
        }


@dataclass
class PerturbationReport:
    """All eligible perturbation cases for one scenario, with their mean."""

    scenario: str  # "tie" or "attr"
    method: str    # "exact" or "gibbs"
    cases: list[PerturbationCase]
    mean_change: float

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "method": self.method,
            "mean_change": self.mean_change,
            "n_cases": len(self.cases),
            "cases": [c.to_json_dict() for c in self.cases],
        }


def write_histogram_csv(report: PerturbationReport, path):
    """Plot-ready per-case changes as `case_id,change` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id", "change"])
        for case in report.cases:
            writer.writerow([case.case_id(), case.change])


def perturb_tie(
    model: ModelSpec,
    theta,
    g: DirectedGraph,
    X: AttributeTable,
    actor: int,
    target: int,
    method: str = EXACT,
    rng=None,
    **gibbs_kw,
) -> PerturbationCase:
    """Expected in-degree change for `actor` from forcing the actor->target tie on.

    Both conditional expectations fix every edge variable outside the
    actor's incoming column; the actor->target tie is clamped to 1 versus 0.
    """
    require_same_n(g, X)
    g._check_dyad(actor, target)
    if g.has_edge(actor, target):
        raise ValueError(f"tie ({actor}, {target}) is already present")
    g_on = g.copy()
    g_on.toggle_edge(actor, target)
    on = expected_indegree_column(model, theta, g_on, X, actor, method, rng, **gibbs_kw)
    off = expected_indegree_column(model, theta, g, X, actor, method, rng, **gibbs_kw)
    return PerturbationCase(
        actor=actor,
        target=target,
        change=on.value - off.value,
        mc_std_error=math.hypot(on.mc_std_error, off.mc_std_error),
    )


def perturb_attr(
    model: ModelSpec,
    theta,
    g: DirectedGraph,
    X: AttributeTable,
    actor: int,
    method: str = EXACT,
    rng=None,
    new_group: int | None = None,
    **gibbs_kw,
) -> PerturbationCase:
    """Expected in-degree change for `actor` from flipping its group membership.

    With two groups the flip target is implied; otherwise `new_group` must
    be given. Column-conditional semantics match `perturb_tie`.
    """
    require_same_n(g, X)
    g._check_node(actor)
    current = X.group(actor)
    if new_group is None:
        if X.n_groups != 2:
            raise AmbiguousFlipError(
                f"{X.n_groups} groups present; pass new_group explicitly"
            )
        new_group = 1 - current
    if new_group == current:
        raise ValueError(f"node {actor} already belongs to group {new_group}")
    flipped = X.with_group(actor, new_group)
    after = expected_indegree_column(model, theta, g, flipped, actor, method, rng, **gibbs_kw)
    before = expected_indegree_column(model, theta, g, X, actor, method, rng, **gibbs_kw)
    return PerturbationCase(
        actor=actor,
        target=None,
        change=after.value - before.value,
        mc_std_error=math.hypot(after.mc_std_error, before.mc_std_error),
    )


def _sweep_case(payload):
    (model, theta, g, X, scenario, case, method, seed, gibbs_kw) = payload
    rng = np.random.default_rng(seed) if method == GIBBS else None
    if scenario == TIE_TOGGLE:
        actor, target = case
        return perturb_tie(model, theta, g, X, actor, target, method, rng, **gibbs_kw)
    return perturb_attr(model, theta, g, X, case, method, rng, **gibbs_kw)


def perturb_sweep(
    model: ModelSpec,
    theta,
    g: DirectedGraph,
    X: AttributeTable,
    scenario: str,
    method: str | None = None,
    seed: int = 0,
    jobs: int = 1,
    gibbs_burn: int = 200,
    gibbs_sweeps: int = 2000,
    gibbs_batches: int = 20,
) -> PerturbationReport:
    """Deterministic sweep over every eligible perturbation case.

    Scenario "tie" enumerates all ordered cross-group pairs (A, B) with no
    A->B tie; scenario "attr" enumerates all actors. method=None picks
    exact enumeration when the column fits the cutoff, Gibbs otherwise.
    Cases are independent; jobs > 1 fans them out to worker processes with
    per-case seeds split from `seed`, so results match a sequential run.
    """
    require_same_n(g, X)
    if scenario == TIE_TOGGLE:
        grp = X.groups
        cases = [
            (a, b)
            for a in range(g.n)
            for b in range(g.n)
            if a != b and grp[a] != grp[b] and not g.has_edge(a, b)
        ]
    elif scenario == ATTRIBUTE_FLIP:
        if X.n_groups != 2:
            raise AmbiguousFlipError(
                f"{X.n_groups} groups present; the all-actor flip sweep needs exactly 2"
            )
        cases = list(range(g.n))
    else:
        raise ValueError(f"unknown scenario {scenario!r}; use 'tie' or 'attr'")
    if not cases:
        raise NoEligibleCasesError(f"no eligible cases for scenario {scenario!r}")

    if method is None:
        method = EXACT if g.n - 1 <= MAX_EXACT_COLUMN else GIBBS
    gibbs_kw = {
        "gibbs_burn": gibbs_burn,
        "gibbs_sweeps": gibbs_sweeps,
        "gibbs_batches": gibbs_batches,
    }
    seeds = np.random.SeedSequence(seed).spawn(len(cases))
    payloads = [
        (model, theta, g, X, scenario, case, method, seeds[k], gibbs_kw)
        for k, case in enumerate(cases)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_case, payloads))
    else:
        results = [_sweep_case(p) for p in payloads]
    mean_change = float(np.mean([c.change for c in results]))
    return PerturbationReport(
        scenario=scenario, method=method, cases=results, mean_change=mean_change
    )


@dataclass
class DegeneracyReport:
    """Density trajectory plus a flag for documented degeneracy triggers."""

    density_trajectory: np.ndarray
    flagged: bool
    reason: str

    def to_json_dict(self) -> dict:
        return {
            "flagged": self.flagged,
            "reason": self.reason,
            "density_trajectory": [float(d) for d in self.density_trajectory],
        }


DENSITY_HIGH = 0.95
DENSITY_LOW = 0.001
PERSISTENCE = 0.5
MONOTONE_MIN_TAIL = 10


def degeneracy_check(chain, n: int) -> DegeneracyReport:
    """Flag chains stuck near full/empty graphs or trending without reversal.

    Triggers: density above 0.95 or below 0.001 in more than half of the
    retained samples, or any recorded statistic monotone (non-constant)
    over the final half of the chain (tail of at least 10 samples).
    """
    if len(chain.edge_counts) == 0:
        raise ValueError("degeneracy check needs a nonempty chain")
    densities = chain.edge_counts / (n * (n - 1))
    reasons = []
    frac_high = float((densities > DENSITY_HIGH).mean())
    if frac_high > PERSISTENCE:
        reasons.append(
            f"density above {DENSITY_HIGH} in {frac_high:.0%} of samples"
        )
    frac_low = float((densities < DENSITY_LOW).mean())
    if frac_low > PERSISTENCE:
        reasons.append(f"density below {DENSITY_LOW} in {frac_low:.0%} of samples")
    stats = np.asarray(chain.stats)
    tail = stats[len(stats) // 2 :]
    if len(tail) >= MONOTONE_MIN_TAIL:
        for k in range(stats.shape[1]):
            diffs = np.diff(tail[:, k])
            if ((diffs >= 0).all() and (diffs > 0).any()) or (
                (diffs <= 0).all() and (diffs < 0).any()
            ):
                name = chain.term_names[k] if chain.term_names else f"stat{k}"
                reasons.append(f"statistic {name} monotone over the final half")
    return DegeneracyReport(
        density_trajectory=densities,
        flagged=bool(reasons),
        reason="; ".join(reasons),
    )
