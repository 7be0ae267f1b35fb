"""Network simulation by Metropolis-Hastings with tie/no-tie proposals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import AttributeTable, DirectedGraph, require_same_n
from .terms import ModelSpec, weighted_change

TIE_NO_TIE = "tnt"
RANDOM_DYAD = "dyad"


def inv_logit(x: float) -> float:
    """Numerically stable logistic function."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def spawn_seeds(seed: int, k: int) -> list[int]:
    """Derive k independent 64-bit child seeds from a master seed.

    Splitting rule: numpy SeedSequence(seed).spawn(k); each child's first two
    32-bit state words are packed into one integer. Deterministic and
    order-independent, so parallel workers can be seeded before fan-out.
    """
    children = np.random.SeedSequence(seed).spawn(k)
    out = []
    for child in children:
        s = child.generate_state(2)
        out.append(int(s[0]) << 32 | int(s[1]))
    return out


@dataclass
class SamplerConfig:
    """Run parameters for `simulate`.

    burn_in proposals are applied first, then a snapshot is retained every
    `interval` proposals, n_samples times. `proposal` is "tnt" (tie/no-tie)
    or "dyad" (uniform random dyad). With keep_graphs=False only statistic
    vectors and edge counts are retained.
    """

    burn_in: int = 0
    interval: int = 1
    n_samples: int = 1
    seed: int = 0
    proposal: str = TIE_NO_TIE
    keep_graphs: bool = True

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.interval < 1:
            raise ValueError("interval must be >= 1")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.proposal not in (TIE_NO_TIE, RANDOM_DYAD):
            raise ValueError(f"unknown proposal {self.proposal!r}")


@dataclass
class SampleChain:
    """Retained samples from one simulation run."""

    term_names: list[str]
    stats: np.ndarray        # (n_samples, n_terms), recomputed exactly per snapshot
    edge_counts: np.ndarray  # (n_samples,)
    cross_counts: np.ndarray  # cross-group edges per snapshot
    graphs: list[DirectedGraph] | None
    acceptance_rate: float
    n_proposals: int

    def __len__(self):
        return len(self.edge_counts)

    def densities(self, n: int) -> np.ndarray:
        return self.edge_counts / (n * (n - 1))

    def ei_values(self) -> np.ndarray:
        """Per-sample E-I index; NaN where a sample has no edges."""
        cross = self.cross_counts.astype(float)
        within = self.edge_counts - self.cross_counts
        total = self.edge_counts.astype(float)
        out = np.full(len(total), np.nan)
        nz = total > 0
        out[nz] = (cross[nz] - within[nz]) / total[nz]
        return out


def _as_theta(model: ModelSpec, theta) -> list[float]:
    theta = [float(t) for t in theta]
    if len(theta) != len(model.terms):
        raise ValueError(
            f"theta has {len(theta)} entries for {len(model.terms)} terms"
        )
    if not all(math.isfinite(t) for t in theta):
        raise ValueError("theta must be finite")
    return theta


def conditional_edge_prob(model: ModelSpec, theta, g: DirectedGraph, X: AttributeTable, i: int, j: int) -> float:
    """Probability of the (i, j) edge given the rest of the graph.

    Inverse-logit of theta dotted with the dyad's changescores; never
    mutates g.
    """
    require_same_n(g, X)
    g._check_dyad(i, j)
    theta = _as_theta(model, theta)
    return inv_logit(weighted_change(model, theta, g, X, i, j))


def _random_dyad(rng, n):
    i = int(rng.integers(n))
    j = int(rng.integers(n - 1))
    if j >= i:
        j += 1
    return i, j


def mh_step(model: ModelSpec, theta, g: DirectedGraph, X: AttributeTable, rng, proposal: str = TIE_NO_TIE) -> bool:
    """One Metropolis-Hastings proposal; mutates g only on acceptance.

    The tie/no-tie proposal picks a uniform existing edge with probability
    1/2 (deletion candidate) and a uniform ordered dyad otherwise; with no
    edges present the deletion branch falls through to the dyad branch.
    Because the proposal is state-dependent, the acceptance ratio carries
    the forward/reverse proposal quotient: with m current edges and N
    dyads, deleting has q_fwd = (1/m + 1/N)/2 and the reverse insertion
    q_rev = 1/(2N) (or 1/N when the deletion empties the graph), and
    symmetrically for insertions. Uniform-dyad proposals are symmetric.
    """
    if not isinstance(theta, list):
        theta = _as_theta(model, theta)
    n = g.n
    n_dyads = n * (n - 1)
    if proposal == TIE_NO_TIE:
        m = g.edge_count
        if m > 0 and rng.random() < 0.5:
            i, j = g.edge_at(int(rng.integers(m)))
        else:
            i, j = _random_dyad(rng, n)
        adding = not g.has_edge(i, j)
        if adding:
            q_fwd = 0.5 / n_dyads if m > 0 else 1.0 / n_dyads
            q_rev = 0.5 * (1.0 / (m + 1) + 1.0 / n_dyads)
        else:
            q_fwd = 0.5 * (1.0 / m + 1.0 / n_dyads)
            q_rev = 0.5 / n_dyads if m > 1 else 1.0 / n_dyads
        log_hastings = math.log(q_rev) - math.log(q_fwd)
    elif proposal == RANDOM_DYAD:
        i, j = _random_dyad(rng, n)
        adding = not g.has_edge(i, j)
        log_hastings = 0.0
    else:
        raise ValueError(f"unknown proposal {proposal!r}")

    delta = weighted_change(model, theta, g, X, i, j)
    log_ratio = (delta if adding else -delta) + log_hastings
    if log_ratio >= 0.0 or rng.random() < math.exp(log_ratio):
        g.toggle_edge(i, j)
        return True
    return False


def simulate(model: ModelSpec, theta, g0: DirectedGraph, X: AttributeTable, cfg: SamplerConfig) -> SampleChain:
    """Draw networks from the model, starting from a copy of g0.

    Reproducible given cfg.seed; snapshot statistics are recomputed exactly
    from the retained graph state, so recorded stats always match a fresh
    evaluation. The acceptance rate covers all proposals including burn-in.
    """
    require_same_n(g0, X)
    model.validate_against(X, warn_collinear=False)
    theta = _as_theta(model, theta)
    g = g0.copy()
    rng = np.random.default_rng(cfg.seed)
    grp = X.groups

    accepted = 0
    for _ in range(cfg.burn_in):
        accepted += mh_step(model, theta, g, X, rng, cfg.proposal)

    stats_rows = []
    edge_counts = np.empty(cfg.n_samples, dtype=np.int64)
    cross_counts = np.empty(cfg.n_samples, dtype=np.int64)
    graphs = [] if cfg.keep_graphs else None
    for s in range(cfg.n_samples):
        for _ in range(cfg.interval):
            accepted += mh_step(model, theta, g, X, rng, cfg.proposal)
        stats_rows.append(model.statistics(g, X))
        edge_counts[s] = g.edge_count
        cross_counts[s] = sum(1 for (a, b) in g._edges if grp[a] != grp[b])
        if cfg.keep_graphs:
            graphs.append(g.copy())

    total = cfg.burn_in + cfg.n_samples * cfg.interval
    return SampleChain(
        term_names=model.labels(X),
        stats=np.array(stats_rows),
        edge_counts=edge_counts,
        cross_counts=cross_counts,
        graphs=graphs,
        acceptance_rate=accepted / total if total else 0.0,
        n_proposals=total,
    )
