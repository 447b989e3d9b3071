"""Chain diagnostics: per-cell probability series, ACF, block-means ESS."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModelShape, ThetaVector, log_visible_marginal


class ConstantSeriesError(ValueError):
    """The series has zero sample variance."""


@dataclass(frozen=True)
class EssReport:
    M: int
    block_len: int
    sigma2: float
    c_hat: float
    m_eff: float
    constant: bool = False


def cell_probability_series(draws, shape: ModelShape) -> np.ndarray:
    """Exact visible-cell probabilities per draw, shape ``(M, 2**nV)``.

    ``draws`` is a PosteriorChain or an ``(M, m)`` array of flat thetas.
    """
    arr = getattr(draws, "draws", draws)
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    out = np.empty((arr.shape[0], shape.n_visible_cells))
    for k, row in enumerate(arr):
        out[k] = np.exp(log_visible_marginal(ThetaVector.from_flat(shape, row)))
    return out


def acf(series, max_lag: int = 40) -> np.ndarray:
    """Biased autocorrelation estimate at lags ``0..max_lag``.

    Raises ConstantSeriesError for a zero-variance series.
    """
    x = np.asarray(series, dtype=float)
    M = x.size
    if max_lag >= M:
        raise ValueError("series must be longer than max_lag")
    if np.ptp(x) == 0:
        raise ConstantSeriesError("autocorrelation undefined for a constant series")
    d = x - x.mean()
    c0 = d @ d / M
    return np.array([(d[:M - lag] @ d[lag:]) / M / c0 for lag in range(max_lag + 1)])


def default_block_len(M: int) -> int:
    return max(1, math.isqrt(M))


def ess_block_means(series, block_len: int | None = None) -> EssReport:
    """Effective sample size ``M * var / (b * var(overlapping block means))``.

    A constant series is reported with ``constant=True`` and NaN estimates.
    """
    x = np.asarray(series, dtype=float)
    M = x.size
    b = default_block_len(M) if block_len is None else int(block_len)
    if not 1 <= b <= M:
        raise ValueError("block_len must satisfy 1 <= b <= M")
    sigma2 = float(np.var(x, ddof=1)) if M > 1 else 0.0
    if M < 2 or np.ptp(x) == 0:
        return EssReport(M, b, 0.0, float("nan"), float("nan"), constant=True)
    csum = np.concatenate([[0.0], np.cumsum(x)])
    means = (csum[b:] - csum[:-b]) / b
    if b == 1:
        s_b2 = sigma2
    elif means.size > 1:
        s_b2 = float(np.var(means, ddof=1))
    else:
        s_b2 = 0.0
    c_hat = b * s_b2
    m_eff = M * sigma2 / c_hat if c_hat > 0 else float("inf")
    return EssReport(M, b, sigma2, c_hat, m_eff)


def total_variation(p, q) -> float:
    return float(0.5 * np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())


def summarize_posterior(series: np.ndarray, reference_true, reference_empirical,
                        block_len: int | None = None) -> dict:
    """Per-cell posterior summaries against true and empirical cell values.

    Returns ``{"cells": [...], "tv_post_true": .., "tv_emp_true": ..}``.
    """
    series = np.asarray(series, dtype=float)
    true = np.asarray(reference_true, dtype=float)
    emp = np.asarray(reference_empirical, dtype=float)
    if not (series.shape[1] == true.size == emp.size):
        raise ValueError("cell dimensions disagree")
    mean = series.mean(axis=0)
    q05, q95 = np.quantile(series, [0.05, 0.95], axis=0)
    cells = []
    for i in range(true.size):
        ess = ess_block_means(series[:, i], block_len)
        cells.append({
            "cell": i + 1, "post_mean": float(mean[i]),
            "q05": float(min(q05[i], mean[i])), "q95": float(max(q95[i], mean[i])),
            "true": float(true[i]), "empirical": float(emp[i]),
            "Meff": ess.m_eff,
        })
    return {
        "cells": cells,
        "tv_post_true": total_variation(mean, true),
        "tv_emp_true": total_variation(emp, true),
        "coverage": int(sum(c["q05"] <= c["true"] <= c["q95"] for c in cells)),
    }
