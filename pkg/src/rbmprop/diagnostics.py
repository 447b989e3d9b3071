"""Near-degeneracy, instability and interpretability measures for one theta."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import (ModelShape, ShapeMismatchError, ThetaVector,
                   exact_distribution, mean_statistic, statistic_table)


@dataclass(frozen=True)
class HullEstimateSpec:
    """Settings for the support-function estimate of the hull distance.

    ``refine`` starts a facet search from that many of the best sampled
    directions, plus the direction from the centroid of T towards ``mu``
    (0 switches the search off).  Every candidate is re-scored at its unit
    direction, so the result stays an upper bound on the true distance.
    """

    direction_count: int = 1024
    include_axis_directions: bool = True
    seed: int = 0
    refine: int = 3

    def __post_init__(self):
        if self.direction_count < 1:
            raise ValueError("direction_count must be >= 1")
        if self.refine < 0:
            raise ValueError("refine must be >= 0")


@dataclass(frozen=True)
class ProprietyReport:
    hull_distance: float
    epsilon: float
    near_degenerate: bool
    lrep: float
    lrep_per_visible: float
    delta_one_flip: float
    modal_set_mass: float
    modal_eps: float
    interp_gap: np.ndarray
    interp_gap_max: float


def _directions(m: int, spec: HullEstimateSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((spec.direction_count, m))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    z = z[norms[:, 0] > 0] / norms[norms[:, 0] > 0]
    if spec.include_axis_directions:
        eye = np.eye(m)
        z = np.vstack([z, eye, -eye])
    return z


def _slack(a: np.ndarray, stats: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """h_T(a) - a.mu for each row of ``a``."""
    return (stats @ a.T).max(axis=0) - a @ mu


def _refine(g: np.ndarray, stats: np.ndarray, mu: np.ndarray,
            max_rounds: int = 10) -> np.ndarray | None:
    """Walk to a facet normal near ``g`` by repeated linear programs.

    With the sphere constraint replaced by ``a.g = 1`` the slack minimisation
    is an LP whose basic optimum is normal to a facet of the hull.  Feeding
    the unit normal back in as ``g`` repeats until the facet stops changing.
    """
    centred = stats - mu
    m = g.size
    cost = np.append(np.zeros(m), 1.0)
    A_ub = np.hstack([centred, -np.ones((len(centred), 1))])
    b_ub = np.zeros(len(centred))
    free = [(None, None)] * (m + 1)
    found = None
    for _ in range(max_rounds):
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=np.append(g, 0.0)[None, :],
                      b_eq=[1.0], bounds=free, method="highs")
        if res.status != 0:
            break
        a = res.x[:m] / np.linalg.norm(res.x[:m])
        if found is not None and np.allclose(a, g, atol=1e-10):
            break
        g = found = a
    return found


def hull_distance(mu, shape: ModelShape,
                  spec: HullEstimateSpec = HullEstimateSpec()) -> float:
    """Upper bound on the distance from ``mu`` to the boundary of conv(T).

    For a unit direction ``a`` the hyperplane ``a.x = max_t a.t`` supports the
    hull, so its distance from ``mu`` bounds the boundary distance from above.
    The minimum is taken over random directions, optionally the +/- unit
    axes, and the facet normals reached by the refinement search.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (shape.dim,):
        raise ShapeMismatchError(
            f"mu has shape {mu.shape}, expected ({shape.dim},)")
    stats = statistic_table(shape)
    dirs = _directions(shape.dim, spec)
    best = np.empty(len(dirs))
    for lo in range(0, len(dirs), 512):
        best[lo:lo + 512] = _slack(dirs[lo:lo + 512], stats, mu)
    dist = float(best.min())
    if spec.refine:
        starts = [dirs[k] for k in np.argsort(best)[:spec.refine]]
        outward = mu - stats.mean(axis=0)
        if np.linalg.norm(outward) > 0:
            starts.append(outward / np.linalg.norm(outward))
        for g in starts:
            a = _refine(g, stats, mu)
            if a is not None:
                dist = min(dist, float(_slack(a[None, :], stats, mu)[0]))
    return max(dist, 0.0)


def degeneracy_epsilon(shape: ModelShape | int, eps0: float = 0.05) -> float:
    """Distance threshold whose boundary-shell volume matches the 1x1 model's.

    Solves ``1 - (1 - 2 eps0)**3 = 1 - (1 - 2 eps)**m``.
    """
    m = shape if isinstance(shape, (int, np.integer)) else shape.dim
    if not 0 <= eps0 < 0.5:
        raise ValueError("eps0 must lie in [0, 0.5)")
    if m < 1:
        raise ValueError("dimension must be >= 1")
    return (1.0 - (1.0 - 2.0 * eps0) ** (3.0 / m)) / 2.0


def lrep(theta: ThetaVector, dist=None) -> tuple[float, float]:
    """Log ratio of the largest to smallest visible-cell probability."""
    logp = (dist or exact_distribution(theta)).log_visible_marginal
    value = max(float(logp.max() - logp.min()), 0.0)
    return value, value / theta.shape.n_visible


def one_flip_sensitivity(theta: ThetaVector, dist=None) -> float:
    """Largest log-probability ratio between visible cells one flip apart."""
    logp = (dist or exact_distribution(theta)).log_visible_marginal
    idx = np.arange(logp.size)
    out = 0.0
    for k in range(theta.shape.n_visible):
        out = max(out, float(np.abs(logp - logp[idx ^ (1 << k)]).max()))
    return out


def modal_set_mass(theta: ThetaVector, eps: float, dist=None) -> float:
    if not 0 < eps < 1:
        raise ValueError("eps must lie strictly between 0 and 1")
    dist = dist or exact_distribution(theta)
    logp = dist.log_visible_marginal
    cut = (1 - eps) * logp.max() + eps * logp.min()
    return float(min(dist.visible_marginal[logp > cut].sum(), 1.0))


def interpretability_gap(theta: ThetaVector, dist=None
                         ) -> tuple[np.ndarray, float]:
    """|E t(X) at theta - E t(X) at theta with interactions zeroed|."""
    independent = theta.with_interaction(np.zeros_like(theta.interaction))
    gap = np.abs(mean_statistic(theta, dist) - mean_statistic(independent))
    return gap, float(gap.max())


def diagnose(theta: ThetaVector, spec: HullEstimateSpec = HullEstimateSpec(),
             eps_modal: float = 0.1, eps0: float = 0.05) -> ProprietyReport:
    dist = exact_distribution(theta)
    hd = hull_distance(mean_statistic(theta, dist), theta.shape, spec)
    eps = degeneracy_epsilon(theta.shape, eps0)
    lr, lr_nv = lrep(theta, dist)
    gap, gap_max = interpretability_gap(theta, dist)
    return ProprietyReport(
        hull_distance=hd,
        epsilon=eps,
        near_degenerate=hd < eps,
        lrep=lr,
        lrep_per_visible=lr_nv,
        delta_one_flip=one_flip_sensitivity(theta, dist),
        modal_set_mass=modal_set_mass(theta, eps_modal, dist),
        modal_eps=eps_modal,
        interp_gap=gap,
        interp_gap_max=gap_max,
    )
