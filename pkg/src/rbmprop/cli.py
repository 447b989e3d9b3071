"""``rbmprop`` command line: diagnose | grid | simulate | fit | repro."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import Config, ConfigError, describe_keys
from .core import (EnumerationCapError, ModelShape, ShapeMismatchError,
                   ThetaVector, exact_distribution, sample_visibles_exact)
from .diagnostics import HullEstimateSpec, diagnose
from .experiments import MethodResult, fit_and_summarize, method_seed
from .fitters import METHODS, FitConfig, TrickPrior, TruncNormalPrior, tune_trick_constant
from .grid import AGG_COLUMNS, ROW_COLUMNS, GridSpec, row_record, run_grid_study, theta_at_gridpoint
from .io import (REPORT_COLUMNS, read_dataset, read_theta_lines, report_record,
                 write_chain, write_csv, write_dataset, write_distribution,
                 write_manifest)
from .presets import table1_labelled, table1_theta

log = logging.getLogger("rbmprop")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
REPRO_TARGETS = ("table1", "table3", "fig12", "fig13", "fig8to11")


# -- config -> domain objects ----------------------------------------------------

def shape_of(cfg: Config) -> ModelShape:
    return ModelShape(cfg["model.n_visible"], cfg["model.n_hidden"],
                      cfg["model.coding"], cfg["model.max_nodes"])


def thetas_of(cfg: Config) -> list[ThetaVector]:
    source = cfg["theta.source"]
    if source == "table1":
        return [table1_theta()]
    shape = shape_of(cfg)
    if source == "zeros":
        return [ThetaVector.zeros(shape)]
    if source == "explicit":
        vals = cfg["theta.values"]
        if len(vals) != shape.dim:
            raise ConfigError(
                f"theta.values has {len(vals)} entries; shape {shape} needs {shape.dim}")
        return [ThetaVector.from_flat(shape, vals)]
    if source == "file":
        path = cfg["theta.file"]
        if not path:
            raise ConfigError("theta.file must be set when theta.source = file")
        try:
            return read_theta_lines(path, shape)
        except ShapeMismatchError as exc:
            raise ConfigError(f"theta.file {path}: {exc}") from None
        except (OSError, ValueError) as exc:
            raise ConfigError(f"theta.file {path}: {exc}") from None
    if source == "grid":
        seed = cfg["theta.seed"] if cfg["theta.seed"] is not None else cfg["run.seed"]
        return [theta_at_gridpoint(shape, cfg["theta.g_main"],
                                   cfg["theta.g_interaction"], seed)]
    raise ConfigError("theta.source = none provides no theta for this command")


def hull_spec_of(cfg: Config) -> HullEstimateSpec:
    return HullEstimateSpec(cfg["diagnostics.directions"], cfg["diagnostics.axis"],
                            cfg["diagnostics.hull_seed"], cfg["diagnostics.refine"])


def fit_config_of(cfg: Config, method: str) -> FitConfig:
    seed = cfg["fit.seed"]
    if seed is None:
        seed = method_seed(cfg["run.seed"], method)
    initial = cfg["fit.initial_theta"] if method != "bwtplv" else "zeros"
    return FitConfig(cfg["fit.iterations"], cfg["fit.burn_in"],
                     cfg["fit.target_acceptance"], cfg["fit.adaptation_decay"],
                     initial, cfg["fit.initial_scale"], cfg["fit.block_scales"], seed)


def grid_spec_of(cfg: Config) -> GridSpec:
    coding = cfg["model.coding"]
    shapes = tuple(ModelShape(a, b, coding, cfg["model.max_nodes"])
                   for a, b in cfg["grid.shapes"])
    return GridSpec(shapes, cfg["grid.min"], cfg["grid.max"], cfg["grid.breaks"],
                    cfg["grid.replicates"], cfg["run.seed"], hull_spec_of(cfg),
                    cfg["diagnostics.eps0"], cfg["diagnostics.eps_modal"],
                    cfg["grid.spacing"], cfg["grid.workers"])


# -- commands ----------------------------------------------------------------------

class Run:
    """Collects output files and writes the manifest at the end."""

    def __init__(self, command: str, cfg: Config, out: Path):
        self.command, self.cfg, self.out = command, cfg, Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []
        self.extra: dict = {}
        self.started = datetime.now(timezone.utc).isoformat()

    def add(self, *paths):
        self.files.extend(Path(p) for p in paths)

    def path(self, name: str) -> Path:
        return self.out / name

    def finish(self) -> Path:
        manifest = {
            "command": self.command,
            "config": self.cfg.resolved(),
            "seed": self.cfg["run.seed"],
            "version": __version__,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            **self.extra,
        }
        return write_manifest(self.out, manifest, self.files)


def cmd_diagnose(cfg: Config, run: Run):
    spec = hull_spec_of(cfg)
    rows = []
    for k, theta in enumerate(thetas_of(cfg), 1):
        rep = diagnose(theta, spec, cfg["diagnostics.eps_modal"],
                       cfg["diagnostics.eps0"])
        rows.append(report_record(k, theta.shape, rep))
    run.add(write_csv(run.path("report.csv"), REPORT_COLUMNS, rows))
    return rows


def cmd_grid(cfg: Config, run: Run):
    spec = grid_spec_of(cfg)
    rows, agg = run_grid_study(spec)
    run.add(write_csv(run.path("grid_rows.csv"), ROW_COLUMNS, map(row_record, rows)),
            write_csv(run.path("grid_agg.csv"), AGG_COLUMNS, agg))
    run.extra["grid"] = {
        "shapes": [str(s) for s in spec.shapes],
        "magnitudes": spec.magnitudes().tolist(),
        "replicates": spec.replicates, "spacing": spec.spacing,
        "hull": asdict(spec.hull), "eps0": spec.eps0,
        "rows": len(rows), "grid_points": len(agg),
    }
    return rows, agg


def _data_seed(cfg: Config) -> int:
    return cfg["data.seed"] if cfg["data.seed"] is not None else cfg["run.seed"]


def cmd_simulate(cfg: Config, run: Run):
    theta = thetas_of(cfg)[0]
    data = sample_visibles_exact(theta, cfg["data.n"], _data_seed(cfg))
    run.add(write_dataset(run.path("data.csv"), data),
            *write_distribution(run.path("distribution.csv"),
                                run.path("distribution.json"),
                                exact_distribution(theta)))
    return data


def _prior_for(cfg: Config, method: str, data) -> object:
    shape = data.shape
    if method == "bwtplv":
        C = cfg["prior.trick_c"]
        if C is None:
            C, _ = tune_trick_constant(data, shape, config=fit_config_of(cfg, method))
        return TrickPrior(C)
    base = TruncNormalPrior.default_for(shape, cfg["prior.trunc_mult"])
    sm = cfg["prior.sigma_main_sq"] or base.sigma_main_sq
    si = cfg["prior.sigma_int_sq"] or base.sigma_int_sq
    try:
        return TruncNormalPrior(sm, si, cfg["prior.trunc_mult"])
    except ValueError as exc:
        raise ConfigError(f"bad prior: {exc}") from None


def run_fits(cfg: Config, run: Run, methods=None) -> dict[str, MethodResult]:
    methods = methods or cfg["fit.methods"]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"fit.methods: unknown method(s) {', '.join(bad)}; "
                          f"valid methods are {', '.join(METHODS)}")
    shape = shape_of(cfg) if cfg["theta.source"] != "table1" else table1_theta().shape
    truth = None if cfg["theta.source"] == "none" else thetas_of(cfg)[0]
    if truth is not None:
        shape = truth.shape
    if cfg["data.file"]:
        try:
            data = read_dataset(cfg["data.file"], shape)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"data.file: {exc}") from None
    elif truth is None:
        raise ConfigError("fit needs data.file when theta.source = none")
    else:
        data = sample_visibles_exact(truth, cfg["data.n"], _data_seed(cfg))
    run.add(write_dataset(run.path("data.csv"), data))
    results = {}
    for method in methods:
        prior = _prior_for(cfg, method, data)
        res = fit_and_summarize(method, data, prior, fit_config_of(cfg, method),
                                truth, cfg["diagnostics.block_len"],
                                cfg["diagnostics.max_lag"])
        results[method] = res
        run.add(*write_chain(run.path(f"chain_{method}.csv"),
                             run.path(f"chain_{method}.json"), res.chain))
    return results


def write_fit_tables(run: Run, results: dict[str, MethodResult], which=("ess", "acf", "posterior", "comparison")):
    if "ess" in which:
        rows = [{"cell": i + 1, "method": m, "M": e.M, "b": e.block_len,
                 "sigma2": e.sigma2, "Chat": e.c_hat, "Meff": e.m_eff}
                for m, r in results.items() for i, e in enumerate(r.ess)]
        run.add(write_csv(run.path("ess.csv"),
                          ("cell", "method", "M", "b", "sigma2", "Chat", "Meff"), rows))
    if "acf" in which:
        rows = [{"cell": i + 1, "method": m, "lag": lag, "rho": float(rho)}
                for m, r in results.items() for i, vals in r.acf.items()
                if vals is not None for lag, rho in enumerate(vals)]
        run.add(write_csv(run.path("acf.csv"), ("cell", "method", "lag", "rho"), rows))
    if "posterior" in which:
        rows = [{**c, "method": m} for m, r in results.items()
                for c in r.summary["cells"]]
        run.add(write_csv(run.path("posterior_cells.csv"),
                          ("cell", "method", "post_mean", "q05", "q95", "true",
                           "empirical", "Meff"), rows))
    if "comparison" in which:
        rows = [{"method": m, "M": r.chain.M,
                 "acceptance_rate": r.chain.acceptance_rate,
                 "median_Meff": r.median_ess,
                 "mean_abs_acf_1_10": r.mean_abs_acf(),
                 "tv_post_true": r.summary["tv_post_true"],
                 "tv_emp_true": r.summary["tv_emp_true"],
                 "coverage_90": r.summary["coverage"]}
                for m, r in results.items()]
        run.add(write_csv(run.path("comparison.csv"),
                          ("method", "M", "acceptance_rate", "median_Meff",
                           "mean_abs_acf_1_10", "tv_post_true", "tv_emp_true",
                           "coverage_90"), rows))


def cmd_fit(cfg: Config, run: Run):
    results = run_fits(cfg, run)
    write_fit_tables(run, results)
    return results


def cmd_repro(cfg: Config, run: Run, target: str):
    if target == "table1":
        run.add(write_csv(run.path("table1_theta.csv"), ("parameter", "value"),
                          table1_labelled()))
        theta = table1_theta()
        rep = diagnose(theta, hull_spec_of(cfg), cfg["diagnostics.eps_modal"],
                       cfg["diagnostics.eps0"])
        run.add(write_csv(run.path("report.csv"), REPORT_COLUMNS,
                          [report_record(1, theta.shape, rep)]))
        return
    if target == "fig8to11":
        return cmd_grid(cfg, run)
    methods = {"table3": ("bwtnlv", "bwtnml"), "fig12": ("bwtnlv", "bwtnml"),
               "fig13": ("bwtplv", "bwtnml")}[target]
    results = run_fits(cfg, run, methods)
    if target == "table3":
        write_fit_tables(run, results, ("ess", "comparison"))
        nlv, nml = results["bwtnlv"].median_ess, results["bwtnml"].median_ess
        summary = [{"method": m, "median_Meff": r.median_ess,
                    "min_Meff": min(e.m_eff for e in r.ess),
                    "max_Meff": max(e.m_eff for e in r.ess)}
                   for m, r in results.items()]
        summary.append({"method": "ratio_bwtnml_over_bwtnlv",
                        "median_Meff": nml / nlv, "min_Meff": "", "max_Meff": ""})
        run.add(write_csv(run.path("table3_summary.csv"),
                          ("method", "median_Meff", "min_Meff", "max_Meff"), summary))
    elif target == "fig12":
        write_fit_tables(run, results, ("acf",))
    else:
        write_fit_tables(run, results, ("posterior", "comparison"))
    return results


REPRO_PRESET = {"table1": "table1", "table3": "table1-fit", "fig12": "table1-fit",
                "fig13": "table1-fit", "fig8to11": "desk"}


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rbmprop", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("diagnose", "grid", "simulate", "fit", "repro", "keys"):
        sp = sub.add_parser(name)
        if name == "repro":
            sp.add_argument("target", choices=REPRO_TARGETS)
        if name == "keys":
            continue
        sp.add_argument("--config", help="config file of 'section.key = value' lines")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--preset", help="named preset applied before the config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "keys":
        print(describe_keys())
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = {}
        for item in args.set:
            k, sep, v = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            overrides[k.strip()] = v.strip()
        if args.seed is not None:
            overrides["run.seed"] = str(args.seed)
        preset = args.preset
        if args.command == "repro" and preset is None:
            preset = REPRO_PRESET[args.target]
        cfg = Config.load(args.config, preset, overrides)
        label = args.command + (f" {args.target}" if args.command == "repro" else "")
        run = Run(label, cfg, Path(args.out))
        if args.command == "repro":
            cmd_repro(cfg, run, args.target)
        else:
            {"diagnose": cmd_diagnose, "grid": cmd_grid, "simulate": cmd_simulate,
             "fit": cmd_fit}[args.command](cfg, run)
        manifest = run.finish()
        log.info("wrote %d files and %s", len(run.files), manifest)
        return EXIT_OK
    except ConfigError as exc:
        print(f"rbmprop: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EnumerationCapError, ShapeMismatchError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"rbmprop: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"rbmprop: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
