"""Bayesian MCMC fitters for small RBMs.

Three samplers share the chain bookkeeping:

* ``fit_bwtplv`` -- trick prior that cancels the normaliser, latent hiddens,
  pure Gibbs.
* ``fit_bwtnlv`` -- truncated normal prior, latent hiddens, adaptive random
  walk Metropolis on theta using the exact normaliser.
* ``fit_bwtnml`` -- truncated normal prior, hiddens summed out, adaptive random
  walk Metropolis on theta.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core import (Dataset, ModelShape, ShapeMismatchError, ThetaVector,
                   exact_distribution, hidden_conditional, log_visible_marginal,
                   partition_log, statistic_table)

METHODS = ("bwtplv", "bwtnlv", "bwtnml")


@dataclass(frozen=True)
class TrickPrior:
    C: float

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("trick prior constant C must be > 0")

    def variances(self, shape: ModelShape, n: int) -> tuple[float, float]:
        """(C1, C2) for the main and interaction blocks."""
        return (self.C / (n * shape.n_main),
                self.C / (n * shape.n_interaction))


@dataclass(frozen=True)
class TruncNormalPrior:
    sigma_main_sq: float
    sigma_int_sq: float
    trunc_mult: float = 3.0

    def __post_init__(self):
        if not (self.sigma_main_sq > 0 and self.sigma_int_sq > 0
                and self.trunc_mult > 0):
            raise ValueError("prior variances and trunc_mult must be > 0")
        if self.sigma_int_sq > self.sigma_main_sq:
            raise ValueError("sigma_int_sq must not exceed sigma_main_sq")

    @classmethod
    def default_for(cls, shape: ModelShape, trunc_mult: float = 3.0):
        """Rule-of-thumb variances 1/(nV+nH) and 1/(nV*nH).

        Shapes with nV*nH < nV+nH (one visible or one hidden node, at most
        two on the other side) would give interactions the wider prior, so
        their interaction variance is capped at the main variance.
        """
        main = 1.0 / shape.n_main
        return cls(main, min(main, 1.0 / shape.n_interaction), trunc_mult)

    def block_sd(self, shape: ModelShape) -> np.ndarray:
        """Per-coordinate prior sd in canonical order."""
        return np.concatenate([
            np.full(shape.n_main, np.sqrt(self.sigma_main_sq)),
            np.full(shape.n_interaction, np.sqrt(self.sigma_int_sq))])

    def bounds(self, shape: ModelShape) -> np.ndarray:
        return self.trunc_mult * self.block_sd(shape)


@dataclass(frozen=True)
class FitConfig:
    iterations: int = 1050
    burn_in: int = 50
    target_acceptance: float = 0.234
    adaptation_decay: float = 0.6
    initial_theta: str = "zeros"
    initial_scale: float | None = None
    block_scales: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.burn_in < 0:
            raise ValueError("iterations must be >= 1 and burn_in >= 0")
        if self.burn_in >= self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if not 0 < self.target_acceptance < 1:
            raise ValueError("target_acceptance must lie in (0, 1)")
        if self.initial_theta not in ("zeros", "prior", "map"):
            raise ValueError("initial_theta must be zeros, prior or map")
        if self.initial_scale is not None and not self.initial_scale > 0:
            raise ValueError("initial_scale must be > 0")


@dataclass
class PosteriorChain:
    method: str
    shape: ModelShape
    draws: np.ndarray
    accepted: np.ndarray
    scales: np.ndarray
    acceptance_rate: float
    final_proposal_scale: float
    config: FitConfig
    prior: TrickPrior | TruncNormalPrior
    hidden_state: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.draws.shape[0]

    @property
    def iterations(self) -> np.ndarray:
        return np.arange(self.config.burn_in + 1, self.config.iterations + 1)

    def theta(self, k: int) -> ThetaVector:
        return ThetaVector.from_flat(self.shape, self.draws[k])

    def posterior_mean_theta(self) -> ThetaVector:
        return ThetaVector.from_flat(self.shape, self.draws.mean(axis=0))

    def metadata(self) -> dict:
        prior = {"kind": type(self.prior).__name__, **asdict(self.prior)}
        return {
            "method": self.method,
            "shape": {"n_visible": self.shape.n_visible,
                      "n_hidden": self.shape.n_hidden,
                      "coding": self.shape.coding.value},
            "prior": prior,
            "config": asdict(self.config),
            "seed": self.config.seed,
            "draws": self.M,
            "acceptance_rate": self.acceptance_rate,
            "final_proposal_scale": self.final_proposal_scale,
            **self.extras,
        }


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _check_data(dataset: Dataset, shape: ModelShape):
    if dataset.shape != shape:
        raise ShapeMismatchError(
            f"dataset is coded for {dataset.shape}, model is {shape}")
    if dataset.n < 1:
        raise ValueError("dataset is empty")


def complete_statistic_sum(visibles: np.ndarray, hiddens: np.ndarray
                           ) -> np.ndarray:
    """Sum of t(x_k) over completed rows, canonical order."""
    v = np.asarray(visibles, dtype=float)
    h = np.asarray(hiddens, dtype=float)
    return np.concatenate([v.sum(0), h.sum(0), (v.T @ h).reshape(-1)])


# -- trick prior --------------------------------------------------------------

def trick_full_conditional_theta(suff_sum, shape: ModelShape, C1: float,
                                 C2: float, seed) -> ThetaVector:
    """Draw theta from its Gaussian full conditional under the trick prior.

    With the prior carrying gamma(theta)**n the normaliser cancels and the
    conditional kernel is ``exp(theta.S - |main|^2/2C1 - |inter|^2/2C2)``, i.e.
    independent normals with mean ``C*S`` and variance ``C`` per block.
    """
    if not (C1 > 0 and C2 > 0):
        raise ValueError("C1 and C2 must be > 0")
    S = np.asarray(suff_sum, dtype=float)
    if S.shape != (shape.dim,):
        raise ShapeMismatchError("statistic sum has the wrong length")
    var = np.concatenate([np.full(shape.n_main, C1),
                          np.full(shape.n_interaction, C2)])
    z = _rng(seed).standard_normal(shape.dim)
    return ThetaVector.from_flat(shape, var * S + np.sqrt(var) * z)


def gibbs_impute_hiddens(theta: ThetaVector, dataset: Dataset, seed
                         ) -> np.ndarray:
    """Draw every row's hiddens from their conditional given that row."""
    _check_data(dataset, theta.shape)
    p = hidden_conditional(theta, dataset.observations)
    u = _rng(seed).random(p.shape)
    c = theta.shape.coding
    return np.where(u < p, c.high, c.low).astype(int)


def fit_bwtplv(dataset: Dataset, shape: ModelShape, prior: TrickPrior,
               config: FitConfig = FitConfig()) -> PosteriorChain:
    _check_data(dataset, shape)
    if not isinstance(prior, TrickPrior):
        raise TypeError("fit_bwtplv needs a TrickPrior")
    if config.initial_theta != "zeros":
        raise ValueError("the trick prior chain only starts from zeros")
    rng = _rng(config.seed)
    C1, C2 = prior.variances(shape, dataset.n)
    theta = ThetaVector.zeros(shape)
    M = config.iterations - config.burn_in
    draws = np.empty((M, shape.dim))
    hid = None
    for t in range(1, config.iterations + 1):
        hid = gibbs_impute_hiddens(theta, dataset, rng)
        S = complete_statistic_sum(dataset.observations, hid)
        theta = trick_full_conditional_theta(S, shape, C1, C2, rng)
        if t > config.burn_in:
            draws[t - config.burn_in - 1] = theta.flat
    return PosteriorChain("bwtplv", shape, draws, np.ones(M, dtype=bool),
                          np.full(M, np.nan), 1.0, float("nan"), config, prior,
                          hidden_state=hid, extras={"C1": C1, "C2": C2})


# -- truncated normal prior -----------------------------------------------------

def truncnorm_log_prior(theta: ThetaVector, prior: TruncNormalPrior) -> float:
    """Unnormalised log density; -inf outside the componentwise box."""
    x = theta.flat
    sd = prior.block_sd(theta.shape)
    if np.any(np.abs(x) > prior.trunc_mult * sd):
        return -np.inf
    return float(-0.5 * np.sum((x / sd) ** 2))


def adaptive_scale_update(scale: float, accepted: bool, iteration: int,
                          config: FitConfig) -> float:
    """Robbins-Monro step on log scale toward the target acceptance rate.

    Adaptation stops once ``iteration`` passes the burn-in.
    """
    if iteration < 1:
        raise ValueError("iteration counts from 1")
    if iteration > config.burn_in:
        return scale
    step = iteration ** (-config.adaptation_decay)
    return float(scale * np.exp(step * (float(accepted) - config.target_acceptance)))


def marginal_log_likelihood(theta: ThetaVector, dataset: Dataset) -> float:
    """Visible-only log likelihood from the cell counts."""
    _check_data(dataset, theta.shape)
    return _cell_loglik(theta, dataset.cell_counts)


def _cell_loglik(theta: ThetaVector, counts: np.ndarray) -> float:
    logp = log_visible_marginal(theta)
    nz = counts > 0
    return float(counts[nz] @ logp[nz])


def empirical_log_likelihood(dataset: Dataset) -> float:
    """Multinomial log likelihood of the data at its own cell frequencies."""
    counts = dataset.cell_counts
    nz = counts > 0
    return float(counts[nz] @ np.log(counts[nz] / dataset.n))


def marginal_log_likelihood_grad(theta: ThetaVector, counts) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    dist = exact_distribution(theta)
    table = dist.joint_table
    marg = dist.visible_marginal
    cond = np.divide(table, marg, out=np.zeros_like(table), where=marg > 0)
    w = (counts[None, :] * cond - counts.sum() * table).reshape(-1)
    return statistic_table(theta.shape).T @ w


def posterior_mode(dataset: Dataset, shape: ModelShape,
                   prior: TruncNormalPrior) -> ThetaVector:
    """Maximiser of marginal log likelihood + truncated normal log prior."""
    counts = dataset.cell_counts
    sd = prior.block_sd(shape)

    def negpost(x):
        th = ThetaVector.from_flat(shape, x)
        val = _cell_loglik(th, counts) - 0.5 * np.sum((x / sd) ** 2)
        grad = marginal_log_likelihood_grad(th, counts) - x / sd ** 2
        return -val, -grad

    bound = prior.bounds(shape)
    # tiny nonzero start breaks the hidden-unit sign symmetry at the origin
    x0 = np.full(shape.dim, 1e-3)
    res = minimize(negpost, x0, jac=True, method="L-BFGS-B",
                   bounds=list(zip(-bound, bound)))
    return ThetaVector.from_flat(shape, res.x)


def _initial(dataset, shape, prior, config, rng) -> ThetaVector:
    if config.initial_theta == "zeros":
        return ThetaVector.zeros(shape)
    if config.initial_theta == "prior":
        sd, bound = prior.block_sd(shape), prior.bounds(shape)
        x = rng.standard_normal(shape.dim) * sd
        while np.any(np.abs(x) > bound):
            bad = np.abs(x) > bound
            x[bad] = rng.standard_normal(bad.sum()) * sd[bad]
        return ThetaVector.from_flat(shape, x)
    return posterior_mode(dataset, shape, prior)


def _metropolis(method, dataset, shape, prior, config, latent):
    _check_data(dataset, shape)
    if not isinstance(prior, TruncNormalPrior):
        raise TypeError(f"{method} needs a TruncNormalPrior")
    rng = _rng(config.seed)
    n = dataset.n
    counts = dataset.cell_counts
    theta = _initial(dataset, shape, prior, config, rng)
    scale = config.initial_scale or 2.38 / np.sqrt(shape.dim * n)
    direction_sd = (prior.block_sd(shape) / np.sqrt(prior.sigma_main_sq)
                    if config.block_scales else np.ones(shape.dim))

    log_prior = truncnorm_log_prior(theta, prior)
    if latent:
        log_gamma = partition_log(theta)
    else:
        loglik = _cell_loglik(theta, counts)

    M = config.iterations - config.burn_in
    draws = np.empty((M, shape.dim))
    accepted = np.empty(M, dtype=bool)
    scales = np.empty(M)
    hid = None
    n_acc = 0
    for t in range(1, config.iterations + 1):
        if latent:
            hid = gibbs_impute_hiddens(theta, dataset, rng)
            S = complete_statistic_sum(dataset.observations, hid)
        step = scale * direction_sd * rng.standard_normal(shape.dim)
        prop = ThetaVector.from_flat(shape, theta.flat + step)
        prop_prior = truncnorm_log_prior(prop, prior)
        log_u = np.log(rng.random())
        acc = False
        if np.isfinite(prop_prior):
            if latent:
                prop_gamma = partition_log(prop)
                log_ratio = (prop.flat @ S - n * prop_gamma + prop_prior
                             - (theta.flat @ S - n * log_gamma + log_prior))
            else:
                prop_lik = _cell_loglik(prop, counts)
                log_ratio = prop_lik + prop_prior - loglik - log_prior
            if log_u < log_ratio:
                acc = True
                theta, log_prior = prop, prop_prior
                if latent:
                    log_gamma = prop_gamma
                else:
                    loglik = prop_lik
        scale = adaptive_scale_update(scale, acc, t, config)
        if t > config.burn_in:
            k = t - config.burn_in - 1
            draws[k], accepted[k], scales[k] = theta.flat, acc, scale
            n_acc += acc
    return PosteriorChain(method, shape, draws, accepted, scales, n_acc / M,
                          float(scale), config, prior,
                          hidden_state=hid if latent else None)


def fit_bwtnlv(dataset: Dataset, shape: ModelShape, prior: TruncNormalPrior,
               config: FitConfig = FitConfig()) -> PosteriorChain:
    """Latent hiddens imputed by Gibbs, then one Metropolis update of theta."""
    return _metropolis("bwtnlv", dataset, shape, prior, config, latent=True)


def fit_bwtnml(dataset: Dataset, shape: ModelShape, prior: TruncNormalPrior,
               config: FitConfig = FitConfig()) -> PosteriorChain:
    """Metropolis on theta against the hidden-marginalised likelihood."""
    return _metropolis("bwtnml", dataset, shape, prior, config, latent=False)


def fit(method: str, dataset: Dataset, shape: ModelShape, prior,
        config: FitConfig = FitConfig()) -> PosteriorChain:
    fitters = {"bwtplv": fit_bwtplv, "bwtnlv": fit_bwtnlv, "bwtnml": fit_bwtnml}
    key = method.strip().lower()
    if key not in fitters:
        raise ValueError(f"unknown method {method!r}; valid: {', '.join(METHODS)}")
    return fitters[key](dataset, shape, prior, config)


def tune_trick_constant(dataset: Dataset, shape: ModelShape,
                        candidates=None, config: FitConfig = FitConfig(),
                        tuning_iterations: int = 300) -> tuple[float, dict]:
    """Pick the trick-prior C whose short chain best matches the data.

    Each candidate runs a short chain; the score is the total variation
    between its posterior-mean visible cells and the empirical cells.
    Returns the winning C and the score of every candidate.
    """
    if candidates is None:
        candidates = np.arange(0.5, 12.01, 0.25)
    iters = min(config.iterations, max(tuning_iterations, config.burn_in + 1))
    short = FitConfig(iterations=iters, burn_in=min(config.burn_in, iters - 1),
                      seed=config.seed)
    emp = dataset.empirical_cells
    scores = {}
    for C in candidates:
        chain = fit_bwtplv(dataset, shape, TrickPrior(float(C)), short)
        cells = np.mean([np.exp(log_visible_marginal(chain.theta(k)))
                         for k in range(chain.M)], axis=0)
        scores[float(C)] = float(0.5 * np.abs(cells - emp).sum())
    best = min(scores, key=lambda c: (scores[c], c))
    return best, scores
