"""Reference computations written without the package's enumeration engine.

Everything here loops over states with itertools in plain Python floats, so
agreement with the vectorised implementation is meaningful.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.spatial import ConvexHull


def split_theta(flat, nv, nh):
    flat = list(map(float, flat))
    a = flat[:nv]
    b = flat[nv:nv + nh]
    w = [flat[nv + nh + i * nh:nv + nh + (i + 1) * nh] for i in range(nv)]
    return a, b, w


def neg_potential(flat, nv, nh, v, h):
    a, b, w = split_theta(flat, nv, nh)
    q = sum(a[i] * v[i] for i in range(nv)) + sum(b[j] * h[j] for j in range(nh))
    q += sum(w[i][j] * v[i] * h[j] for i in range(nv) for j in range(nh))
    return q


def cell_of(v, high):
    """Cell number with v_1 as the least significant bit."""
    return sum(1 << i for i, x in enumerate(v) if x == high)


def brute_force(flat, nv, nh, coding):
    """Return (log_gamma, joint dict {(v, h): p}, marginal list by cell)."""
    lo, hi = (0, 1) if coding == "01" else (-1, 1)
    states = [(v, h) for v in itertools.product((lo, hi), repeat=nv)
              for h in itertools.product((lo, hi), repeat=nh)]
    qs = [neg_potential(flat, nv, nh, v, h) for v, h in states]
    top = max(qs)
    log_gamma = top + math.log(math.fsum(math.exp(q - top) for q in qs))
    joint = {s: math.exp(q - log_gamma) for s, q in zip(states, qs)}
    marg = [0.0] * (1 << nv)
    for (v, h), p in joint.items():
        marg[cell_of(v, hi)] += p
    return log_gamma, joint, marg


def statistic(v, h):
    return list(v) + list(h) + [vi * hj for vi in v for hj in h]


def brute_mean_statistic(flat, nv, nh, coding):
    _, joint, _ = brute_force(flat, nv, nh, coding)
    m = nv + nh + nv * nh
    out = [0.0] * m
    for (v, h), p in joint.items():
        for k, t in enumerate(statistic(v, h)):
            out[k] += p * t
    return out


def closed_form_11_zero_one(a, b, c):
    """gamma and mean statistic for one visible and one hidden, 0/1 coding."""
    gamma = 1 + math.exp(a) + math.exp(b) + math.exp(a + b + c)
    mu = ((math.exp(a) + math.exp(a + b + c)) / gamma,
          (math.exp(b) + math.exp(a + b + c)) / gamma,
          math.exp(a + b + c) / gamma)
    return gamma, mu


def exact_hull_distance(mu, nv, nh, coding):
    """Distance from an interior point to the boundary via qhull facets."""
    lo, hi = (0, 1) if coding == "01" else (-1, 1)
    pts = np.array([statistic(v, h)
                    for v in itertools.product((lo, hi), repeat=nv)
                    for h in itertools.product((lo, hi), repeat=nh)], float)
    hull = ConvexHull(pts)
    normals, offsets = hull.equations[:, :-1], hull.equations[:, -1]
    return float(np.min(-(normals @ np.asarray(mu) + offsets)))


def trunc_box_posterior_11(counts, sigma_main_sq, sigma_int_sq, trunc_mult,
                           points=161):
    """Midpoint-grid posterior over (a, b, c) for the 1x1 +/-1 model.

    ``counts`` are the two visible cell counts (v=-1, v=+1).  Returns the three
    coordinate grids and their marginal posterior masses.
    """
    sm, si = math.sqrt(sigma_main_sq), math.sqrt(sigma_int_sq)
    axes = []
    for sd in (sm, sm, si):
        bound = trunc_mult * sd
        edges = np.linspace(-bound, bound, points + 1)
        axes.append((edges[:-1] + edges[1:]) / 2)
    A, B, C = np.meshgrid(*axes, indexing="ij")
    # P(v) proportional to sum_h exp(a v + b h + c v h) = exp(a v) 2 cosh(b + c v)
    log_up = A + np.log(2 * np.cosh(B + C))
    log_dn = -A + np.log(2 * np.cosh(B - C))
    log_z = np.logaddexp(log_up, log_dn)
    ll = counts[1] * (log_up - log_z) + counts[0] * (log_dn - log_z)
    lp = ll - A ** 2 / (2 * sigma_main_sq) - B ** 2 / (2 * sigma_main_sq) \
        - C ** 2 / (2 * sigma_int_sq)
    w = np.exp(lp - lp.max())
    w /= w.sum()
    margins = [w.sum(axis=(1, 2)), w.sum(axis=(0, 2)), w.sum(axis=(0, 1))]
    return axes, margins


def kolmogorov_to_grid(sample, grid, mass):
    """Sup distance between a sample's CDF and a midpoint-grid CDF."""
    step = grid[1] - grid[0]
    edges = np.concatenate([[grid[0] - step / 2], grid + step / 2])
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    xs = np.sort(np.asarray(sample))
    ref = np.interp(xs, edges, cdf)
    n = xs.size
    upper = np.arange(1, n + 1) / n - ref
    lower = ref - np.arange(n) / n
    return float(max(upper.max(), lower.max()))
