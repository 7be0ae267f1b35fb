"""Coefficient estimation: maximum pseudolikelihood and Monte Carlo refinement.

The pseudolikelihood treats every ordered dyad's edge state as a Bernoulli
response with log-odds theta . changescores, i.e. logistic regression on
the dyad design. Deviances follow the all-graphs-equally-likely null
(2 * N * ln 2 on N dyads); AIC derived from the pseudolikelihood is an
approximation and is labeled pseudo-AIC everywhere.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analysis import degeneracy_check
from .graph import AttributeTable, DirectedGraph, require_same_n
from .sampler import SamplerConfig, simulate, spawn_seeds
from .terms import ModelSpec


class CollinearDesignError(ValueError):
    """The dyad design matrix is rank-deficient; the model is not identifiable."""


class PerfectSeparationError(ValueError):
    """The pseudolikelihood is maximized at infinity along some direction."""

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction or []


class DegeneracyError(RuntimeError):
    """A Monte Carlo fit was aborted because its chains degenerated."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class FitResult:
    """Fitted coefficients with uncertainty and deviance accounting."""

    term_names: list[str]
    theta_hat: np.ndarray
    std_errors: np.ndarray
    p_values: np.ndarray
    null_deviance: float
    residual_deviance: float
    dof_null: int
    dof_residual: int
    aic: float
    method: str           # "MPLE" or "MCMLE"
    converged: bool
    deviance_trace: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "converged": self.converged,
            "terms": [
                {
                    "term": name,
                    "estimate": float(est),
                    "std_error": float(se),
                    "p_value": float(p),
                }
                for name, est, se, p in zip(
                    self.term_names, self.theta_hat, self.std_errors, self.p_values
                )
            ],
            "null_deviance": float(self.null_deviance),
            "dof_null": self.dof_null,
            "residual_deviance": float(self.residual_deviance),
            "dof_residual": self.dof_residual,
            "pseudo_aic": float(self.aic),
            "aic_note": "pseudo-AIC from the pseudolikelihood; an approximation",
        }

    def summary(self) -> str:
        width = max(len(n) for n in self.term_names)
        lines = [
            f"{'term':<{width}}  {'estimate':>10}  {'std.err':>9}  {'p-value':>9}"
        ]
        for name, est, se, p in zip(
            self.term_names, self.theta_hat, self.std_errors, self.p_values
        ):
            lines.append(f"{name:<{width}}  {est:>10.3f}  {se:>9.3f}  {p:>9.2g}")
        lines.append(
            f"null deviance: {self.null_deviance:.2f} on {self.dof_null} degrees of freedom"
        )
        lines.append(
            f"residual deviance: {self.residual_deviance:.2f} on {self.dof_residual} degrees of freedom"
        )
        lines.append(f"pseudo-AIC: {self.aic:.2f} ({self.method} approximation)")
        return "\n".join(lines)


def dyad_design(model: ModelSpec, g: DirectedGraph, X: AttributeTable):
    """Changescore design matrix and edge-state response over all ordered dyads."""
    require_same_n(g, X)
    model.validate_against(X, warn_collinear=False)
    n = g.n
    terms = model.terms
    p = len(terms)
    rows = n * (n - 1)
    design = np.empty((rows, p))
    y = np.empty(rows)
    r = 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for c, t in enumerate(terms):
                design[r, c] = t.change(g, X, i, j)
            y[r] = 1.0 if g.has_edge(i, j) else 0.0
            r += 1
    return design, y


def _expit(eta):
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def _deviance(design, y, theta):
    eta = design @ theta
    # 2 * sum(log(1 + e^eta) - y * eta), stable via logaddexp
    return float(2.0 * np.sum(np.logaddexp(0.0, eta) - y * eta))


_SEPARATION_BOUND = 20.0


def mple(model: ModelSpec, g: DirectedGraph, X: AttributeTable, tol: float = 1e-8, max_iter: int = 100) -> FitResult:
    """Maximum pseudolikelihood fit by Newton iterations with step halving.

    Raises CollinearDesignError on a rank-deficient design and
    PerfectSeparationError when coefficients diverge with a non-vanishing
    score; non-convergence within max_iter returns converged=False with a
    warning.
    """
    design, y = dyad_design(model, g, X)
    p = design.shape[1]
    if np.linalg.matrix_rank(design) < p:
        raise CollinearDesignError(
            "dyad design matrix is rank-deficient; drop or merge collinear terms"
        )

    names = model.labels(X)
    theta = np.zeros(p)
    dev = _deviance(design, y, theta)
    trace = [dev]
    converged = False
    for _ in range(max_iter):
        eta = design @ theta
        prob = _expit(eta)
        score = design.T @ (y - prob)
        max_score = float(np.max(np.abs(score)))
        if max_score < tol:
            converged = True
            break
        big = np.abs(theta) > _SEPARATION_BOUND
        if big.any() and max_score > tol:
            direction = [
                f"{names[k]}{'+' if theta[k] > 0 else '-'}"
                for k in np.flatnonzero(big)
            ]
            raise PerfectSeparationError(
                "perfect separation: coefficients diverge along "
                + ", ".join(direction),
                direction=direction,
            )
        weights = prob * (1.0 - prob)
        info = (design * weights[:, None]).T @ design
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise CollinearDesignError(
                "observed information is singular; the model is not identifiable here"
            ) from None
        new_theta = theta + step
        new_dev = _deviance(design, y, new_theta)
        halvings = 0
        while new_dev > dev + 1e-10 and halvings < 30:
            step *= 0.5
            new_theta = theta + step
            new_dev = _deviance(design, y, new_theta)
            halvings += 1
        if new_dev > dev + 1e-10:
            break
        theta, dev = new_theta, new_dev
        trace.append(dev)

    if not converged:
        warnings.warn("mple did not converge; returning last iterate", stacklevel=2)

    eta = design @ theta
    prob = _expit(eta)
    weights = prob * (1.0 - prob)
    info = (design * weights[:, None]).T @ design
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise CollinearDesignError(
            "observed information is singular at the optimum"
        ) from None
    std_errors = np.sqrt(np.maximum(np.diag(cov), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std_errors > 0, theta / std_errors, np.inf)
    p_values = np.array([math.erfc(abs(zk) / math.sqrt(2.0)) for zk in z])

    n_dyads = design.shape[0]
    return FitResult(
        term_names=names,
        theta_hat=theta,
        std_errors=std_errors,
        p_values=p_values,
        null_deviance=2.0 * n_dyads * math.log(2.0),
        residual_deviance=dev,
        dof_null=n_dyads,
        dof_residual=n_dyads - p,
        aic=dev + 2.0 * p,
        method="MPLE",
        converged=converged,
        deviance_trace=trace,
    )


@dataclass
class McmleOptions:
    """Controls for the stochastic-approximation refinement.

    Defaults scale with the dyad count: burn_in = 10 * N proposals and
    interval = N proposals unless set. `tolerance` bounds the Mahalanobis
    distance between observed and simulated mean statistics (default
    0.2 * sqrt(p)).
    """

    max_iterations: int = 20
    samples: int = 512
    burn_in: int | None = None
    interval: int | None = None
    gain: float = 0.5
    gain_decay: float = 0.8
    tolerance: float | None = None
    ridge: float = 1e-8
    seed: int = 0


def mcmle(model: ModelSpec, g: DirectedGraph, X: AttributeTable, theta0, options: McmleOptions | None = None) -> FitResult:
    """Monte Carlo MLE refinement from a starting vector (typically the MPLE).

    Iterates theta <- theta + gain * Cov^-1 (t_obs - mean simulated t),
    simulating a fresh chain from the observed graph each round, and stops
    once the observed statistics fall within the Mahalanobis tolerance of
    the simulated mean. Aborts with DegeneracyError if a chain degenerates.
    """
    opts = options or McmleOptions()
    require_same_n(g, X)
    model.validate_against(X, warn_collinear=False)
    p = len(model.terms)
    theta = np.array([float(t) for t in theta0])
    if theta.shape != (p,):
        raise ValueError(f"theta0 has shape {theta.shape}, expected ({p},)")

    n_dyads = g.n * (g.n - 1)
    burn = opts.burn_in if opts.burn_in is not None else 10 * n_dyads
    interval = opts.interval if opts.interval is not None else n_dyads
    tolerance = opts.tolerance if opts.tolerance is not None else 0.2 * math.sqrt(p)

    t_obs = model.statistics(g, X)
    seeds = spawn_seeds(opts.seed, opts.max_iterations)
    gain = opts.gain
    converged = False
    cov = np.eye(p)
    for it in range(opts.max_iterations):
        cfg = SamplerConfig(
            burn_in=burn,
            interval=interval,
            n_samples=opts.samples,
            seed=seeds[it],
            keep_graphs=False,
        )
        chain = simulate(model, theta, g, X, cfg)
        report = degeneracy_check(chain, g.n)
        if report.flagged:
            raise DegeneracyError(
                f"simulation degenerated during MCMLE: {report.reason}", report=report
            )
        t_bar = chain.stats.mean(axis=0)
        cov = np.cov(chain.stats.T, ddof=1).reshape(p, p) + opts.ridge * np.eye(p)
        diff = t_obs - t_bar
        adjust = np.linalg.solve(cov, diff)
        distance = math.sqrt(max(float(diff @ adjust), 0.0))
        if distance <= tolerance:
            converged = True
            break
        theta = theta + gain * adjust
        gain *= opts.gain_decay

    if not converged:
        warnings.warn("mcmle did not converge; returning last iterate", stacklevel=2)

    try:
        fisher_cov = np.linalg.inv(cov)
    except np.linalg.LinAlgError:
        fisher_cov = np.linalg.pinv(cov)
    std_errors = np.sqrt(np.maximum(np.diag(fisher_cov), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std_errors > 0, theta / std_errors, np.inf)
    p_values = np.array([math.erfc(abs(zk) / math.sqrt(2.0)) for zk in z])

    design, y = dyad_design(model, g, X)
    dev = _deviance(design, y, theta)
    return FitResult(
        term_names=model.labels(X),
        theta_hat=theta,
        std_errors=std_errors,
        p_values=p_values,
        null_deviance=2.0 * n_dyads * math.log(2.0),
        residual_deviance=dev,
        dof_null=n_dyads,
        dof_residual=n_dyads - p,
        aic=dev + 2.0 * p,
        method="MCMLE",
        converged=converged,
        deviance_trace=[dev],
    )
