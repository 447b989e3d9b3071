"""Canned pipelines shared by the command line and the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import Dataset, ThetaVector, exact_distribution, sample_visibles_exact
from .fitters import (METHODS, FitConfig, PosteriorChain, TrickPrior,
                      TruncNormalPrior, fit, tune_trick_constant)
from .mcmc import (ConstantSeriesError, acf, cell_probability_series,
                   default_block_len, ess_block_means, summarize_posterior)


@dataclass
class MethodResult:
    chain: PosteriorChain
    series: np.ndarray
    summary: dict
    ess: list
    acf: dict = field(default_factory=dict)

    @property
    def median_ess(self) -> float:
        vals = [e.m_eff for e in self.ess if not e.constant]
        return float(np.median(vals)) if vals else float("nan")

    def mean_abs_acf(self, lags=range(1, 11)) -> float:
        vals = [np.abs(r[list(lags)]).mean() for r in self.acf.values()
                if r is not None]
        return float(np.mean(vals)) if vals else float("nan")


def method_seed(master: int, method: str) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=(METHODS.index(method),))
    return int(ss.generate_state(1)[0])


def fit_and_summarize(method: str, dataset: Dataset, prior, config: FitConfig,
                      truth=None, block_len=None, max_lag: int = 40
                      ) -> MethodResult:
    shape = dataset.shape
    chain = fit(method, dataset, shape, prior, config)
    series = cell_probability_series(chain, shape)
    true = (np.full(shape.n_visible_cells, np.nan) if truth is None
            else exact_distribution(truth).visible_marginal)
    summary = summarize_posterior(series, true, dataset.empirical_cells, block_len)
    b = default_block_len(chain.M) if block_len is None else block_len
    ess = [ess_block_means(series[:, i], b) for i in range(series.shape[1])]
    lag = min(max_lag, chain.M - 1)
    acfs = {}
    for i in range(series.shape[1]):
        try:
            acfs[i] = acf(series[:, i], lag)
        except ConstantSeriesError:
            acfs[i] = None
    return MethodResult(chain, series, summary, ess, acfs)


@dataclass(frozen=True)
class FitExperiment:
    """Settings for the simulate-then-fit reproduction."""

    theta: ThetaVector
    n: int = 5000
    methods: tuple = METHODS
    config: FitConfig = FitConfig(initial_theta="map")
    trunc_mult: float = 3.0
    trick_c: float | None = None
    block_len: int | None = None
    max_lag: int = 40


def run_fit_experiment(exp: FitExperiment, seed: int, dataset: Dataset | None = None
                       ) -> tuple[Dataset, dict]:
    """Simulate data (unless given), then run and summarise every method."""
    shape = exp.theta.shape
    if dataset is None:
        dataset = sample_visibles_exact(exp.theta, exp.n, seed)
    results = {}
    for method in exp.methods:
        cfg = replace(exp.config, seed=method_seed(seed, method))
        if method == "bwtplv":
            cfg = replace(cfg, initial_theta="zeros")
            C = exp.trick_c
            if C is None:
                C, _ = tune_trick_constant(dataset, shape, config=cfg)
            prior = TrickPrior(C)
        else:
            prior = TruncNormalPrior.default_for(shape, exp.trunc_mult)
        results[method] = fit_and_summarize(method, dataset, prior, cfg,
                                            exp.theta, exp.block_len, exp.max_lag)
    return dataset, results
