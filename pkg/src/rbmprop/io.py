"""CSV/JSON persistence.  Floats are written with ``repr`` so output is
byte-stable across runs."""
from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import Coding, Dataset, ExactDistribution, ModelShape, ThetaVector

INDEXING = ("state index bit k is node k at its high value; v_1 is bit 0; "
            "visibles occupy the low bits, hiddens the high bits")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path, columns, rows) -> Path:
    """``rows`` is an iterable of dicts or sequences matching ``columns``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            vals = [row[c] for c in columns] if isinstance(row, dict) else row
            w.writerow([fmt(v) for v in vals])
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable)
                    + "\n", encoding="utf-8")
    return path


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, Coding):
        return o.value
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


# -- datasets and distributions ----------------------------------------------

def write_dataset(path, dataset: Dataset) -> Path:
    nv = dataset.shape.n_visible
    cols = ["obs_id"] + [f"v{i + 1}" for i in range(nv)]
    rows = ([k + 1, *map(int, obs)] for k, obs in enumerate(dataset.observations))
    return write_csv(path, cols, rows)


def read_dataset(path, shape: ModelShape) -> Dataset:
    rows = read_csv(path)
    cols = [f"v{i + 1}" for i in range(shape.n_visible)]
    if rows and set(cols) - set(rows[0]):
        raise ValueError(f"{path}: expected columns obs_id,{','.join(cols)}")
    obs = np.array([[int(r[c]) for c in cols] for r in rows], dtype=int)
    return Dataset(shape, obs.reshape(-1, shape.n_visible))


def write_distribution(csv_path, json_path, dist: ExactDistribution
                       ) -> tuple[Path, Path]:
    s = dist.shape
    a = write_csv(csv_path, ["state_index", "probability"],
                  enumerate(dist.joint.tolist()))
    b = write_json(json_path, {
        "n_visible": s.n_visible, "n_hidden": s.n_hidden,
        "coding": s.coding.value, "indexing": INDEXING,
        "log_gamma": dist.log_gamma,
        "visible_marginal": dist.visible_marginal.tolist(),
    })
    return a, b


def theta_columns(shape: ModelShape) -> list[str]:
    return [f"theta_{k + 1}" for k in range(shape.dim)]


def read_theta_lines(path, shape: ModelShape) -> list[ThetaVector]:
    """One theta per non-blank line, comma or whitespace separated."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        vals = [float(x) for x in line.replace(",", " ").split()]
        out.append(ThetaVector.from_flat(shape, vals))
    return out


# -- reports -------------------------------------------------------------------

REPORT_COLUMNS = ("theta_id", "n_v", "n_h", "coding", "hull_dist", "epsilon",
                  "near_degenerate", "lrep", "lrep_per_nv", "delta",
                  "modal_mass", "gap_max")


def report_record(theta_id, shape: ModelShape, report) -> dict:
    return {
        "theta_id": theta_id, "n_v": shape.n_visible, "n_h": shape.n_hidden,
        "coding": shape.coding.value, "hull_dist": report.hull_distance,
        "epsilon": report.epsilon, "near_degenerate": report.near_degenerate,
        "lrep": report.lrep, "lrep_per_nv": report.lrep_per_visible,
        "delta": report.delta_one_flip, "modal_mass": report.modal_set_mass,
        "gap_max": report.interp_gap_max,
    }


def write_chain(csv_path, json_path, chain) -> tuple[Path, Path]:
    cols = ["iter", *theta_columns(chain.shape), "accepted", "scale"]
    rows = ([int(it), *row.tolist(), bool(acc), float(sc)]
            for it, row, acc, sc in zip(chain.iterations, chain.draws,
                                        chain.accepted, chain.scales))
    return write_csv(csv_path, cols, rows), write_json(json_path, chain.metadata())


# -- manifest ------------------------------------------------------------------

def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir, manifest: dict, files) -> Path:
    """Record digests of ``files`` and write ``manifest.json`` atomically."""
    out_dir = Path(out_dir)
    manifest = dict(manifest)
    manifest["outputs"] = [
        {"file": str(Path(f).relative_to(out_dir)), "sha256": sha256(f)}
        for f in sorted(map(Path, files))]
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest", suffix=".json")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True,
                            default=_jsonable) + "\n")
    target = out_dir / "manifest.json"
    os.replace(tmp, target)
    return target


def verify_manifest(out_dir) -> bool:
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / "manifest.json").read_text())
    return all(sha256(out_dir / e["file"]) == e["sha256"]
               for e in manifest["outputs"])
