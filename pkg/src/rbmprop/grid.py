"""Sphere-sampled parameter grid study of model impropriety."""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ModelShape, ThetaVector
from .diagnostics import HullEstimateSpec, ProprietyReport, diagnose


def sample_sphere(dim: int, radius: float, seed) -> np.ndarray:
    """Uniform point on the radius-``radius`` sphere in R^dim."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.standard_normal(dim)
    while not np.any(z):
        z = rng.standard_normal(dim)
    return radius * z / np.linalg.norm(z)


def theta_at_gridpoint(shape: ModelShape, g_main: float, g_interaction: float,
                       seed) -> ThetaVector:
    """Random theta whose mains/interactions have the given average magnitudes.

    The main block lies on the sphere of radius ``g_main * (nV + nH)`` and the
    interaction block on the sphere of radius ``g_interaction * nV * nH``.
    """
    if g_main < 0 or g_interaction < 0:
        raise ValueError("grid magnitudes must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    main = sample_sphere(shape.n_main, g_main * shape.n_main, rng)
    inter = sample_sphere(shape.n_interaction,
                          g_interaction * shape.n_interaction, rng)
    return ThetaVector.from_flat(shape, np.concatenate([main, inter]))


@dataclass(frozen=True)
class GridSpec:
    shapes: tuple[ModelShape, ...] = tuple(
        ModelShape(nv, nh) for nv in range(1, 5) for nh in range(1, 5))
    magnitude_min: float = 0.001
    magnitude_max: float = 3.0
    breaks: int = 24
    replicates: int = 100
    seed: int = 0
    hull: HullEstimateSpec = field(default_factory=HullEstimateSpec)
    eps0: float = 0.05
    eps_modal: float = 0.1
    spacing: str = "linear"
    workers: int = 1

    def __post_init__(self):
        if not self.magnitude_min > 0:
            raise ValueError("magnitude_min must be > 0")
        if self.magnitude_max < self.magnitude_min:
            raise ValueError("magnitude_max must be >= magnitude_min")
        if self.breaks < 2:
            raise ValueError("breaks must be >= 2")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.spacing not in ("linear", "geometric"):
            raise ValueError("spacing must be 'linear' or 'geometric'")
        object.__setattr__(self, "shapes", tuple(self.shapes))

    def magnitudes(self) -> np.ndarray:
        if self.spacing == "geometric":
            return np.geomspace(self.magnitude_min, self.magnitude_max, self.breaks)
        return np.linspace(self.magnitude_min, self.magnitude_max, self.breaks)


@dataclass(frozen=True)
class GridRow:
    shape: ModelShape
    i_main: int
    i_interaction: int
    g_main: float
    g_interaction: float
    replicate: int
    report: ProprietyReport


ROW_COLUMNS = ("n_v", "n_h", "coding", "i_main", "i_int", "g_main", "g_int",
               "replicate", "hull_dist", "epsilon", "near_degenerate", "lrep",
               "lrep_per_nv", "delta", "modal_mass", "gap_max")
AGG_COLUMNS = ("n_v", "n_h", "g_main", "g_int", "frac_degenerate",
               "mean_lrep_per_nv", "mean_gap_max", "n_reps")


def task_seed(master: int, shape: ModelShape, i: int, j: int, rep: int
              ) -> np.random.SeedSequence:
    """Seed owned by one grid task, independent of execution order."""
    coding = 0 if shape.coding.value == "01" else 1
    return np.random.SeedSequence(
        entropy=int(master),
        spawn_key=(shape.n_visible, shape.n_hidden, coding, i, j, rep))


def _run_task(args) -> GridRow:
    spec, shape, i, j, rep = args
    mags = spec.magnitudes()
    theta_ss, hull_ss = task_seed(spec.seed, shape, i, j, rep).spawn(2)
    theta = theta_at_gridpoint(shape, mags[i], mags[j],
                               np.random.default_rng(theta_ss))
    hull = replace(spec.hull, seed=int(hull_ss.generate_state(1)[0]))
    report = diagnose(theta, hull, eps_modal=spec.eps_modal, eps0=spec.eps0)
    return GridRow(shape, i, j, float(mags[i]), float(mags[j]), rep, report)


def grid_tasks(spec: GridSpec):
    for shape in spec.shapes:
        for i, j, rep in itertools.product(range(spec.breaks), range(spec.breaks),
                                           range(spec.replicates)):
            yield (spec, shape, i, j, rep)


def aggregate(rows: list[GridRow]) -> list[dict]:
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.shape, r.i_main, r.i_interaction), []).append(r)
    out = []
    for (shape, _, _), rs in groups.items():
        out.append({
            "n_v": shape.n_visible, "n_h": shape.n_hidden,
            "g_main": rs[0].g_main, "g_int": rs[0].g_interaction,
            "frac_degenerate": float(np.mean([r.report.near_degenerate for r in rs])),
            "mean_lrep_per_nv": float(np.mean([r.report.lrep_per_visible for r in rs])),
            "mean_gap_max": float(np.mean([r.report.interp_gap_max for r in rs])),
            "n_reps": len(rs),
        })
    return out


def run_grid_study(spec: GridSpec) -> tuple[list[GridRow], list[dict]]:
    """Diagnose every (shape, grid point, replicate) task.

    Rows come back in task order whatever ``spec.workers`` is, and each task
    derives its randomness only from its own key.
    """
    tasks = list(grid_tasks(spec))
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=64))
    else:
        rows = [_run_task(t) for t in tasks]
    return rows, aggregate(rows)


def row_record(row: GridRow) -> dict:
    r = row.report
    return {
        "n_v": row.shape.n_visible, "n_h": row.shape.n_hidden,
        "coding": row.shape.coding.value, "i_main": row.i_main,
        "i_int": row.i_interaction, "g_main": row.g_main,
        "g_int": row.g_interaction, "replicate": row.replicate,
        "hull_dist": r.hull_distance, "epsilon": r.epsilon,
        "near_degenerate": int(r.near_degenerate), "lrep": r.lrep,
        "lrep_per_nv": r.lrep_per_visible, "delta": r.delta_one_flip,
        "modal_mass": r.modal_set_mass, "gap_max": r.interp_gap_max,
    }
