"""Command-line entry points.

Subcommands: dataset gen|filter, train, vlm eval, stability eval,
optimize, evaluate, report, pipeline, version. Exit codes: 0 success,
2 validation error (including argument parsing), 3 numerical failure,
4 I/O or file-format error. CHIMERA_THREADS caps labeling parallelism.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, dataset as ds, report as rp
from .errors import (ChimeraError, ConfigError, FileFormatError,
                     InvalidInputError, NumericalError)
from .geometry import (BOUNDS_PRESETS, DESIGN_VARIABLES, Bounds, DesignVector,
                       build_mesh, camber_line)
from .optimize import (ObjectiveSpec, OptConfig, OptRun, RUNNERS,
                       SurrogateBackend, evaluate_design)
from .stability import (CLASS_NAMES, DERIVATIVE_NAMES, FixedAirframe,
                        TESTED_DERIVATIVES, analyze_design, linear_models)
from .surrogate import MlpConfig, SurrogateModel, train
from .vlm import FlowState, isa_density, solve


# -- shared argument handling ----------------------------------------------

def _load_json_value(text: str):
    """Inline JSON if the value looks like an object, else a file path."""
    text = text.strip()
    if text.startswith("{") or text.startswith("["):
        try:
            return json.loads(text)
        except ValueError as exc:
            raise ConfigError(f"invalid inline JSON: {exc}") from exc
    path = Path(text)
    if not path.exists():
        raise ConfigError(f"no such file: {text}")
    try:
        return json.loads(path.read_text())
    except ValueError as exc:
        raise FileFormatError(f"{text}: invalid JSON: {exc}") from exc


def _design_from_arg(text: str) -> DesignVector:
    record = _load_json_value(text)
    if not isinstance(record, dict):
        raise ConfigError("design must be a JSON object of the 8 variables")
    unknown = set(record) - set(DESIGN_VARIABLES)
    if unknown:
        raise ConfigError(f"unknown design fields: {sorted(unknown)}")
    missing = set(DESIGN_VARIABLES) - set(record)
    if missing:
        raise ConfigError(f"missing design fields: {sorted(missing)}")
    return DesignVector(**{k: float(v) for k, v in record.items()})


def _bounds_from_arg(text: str) -> Bounds:
    if text in BOUNDS_PRESETS:
        return BOUNDS_PRESETS[text]
    record = _load_json_value(text)
    if not isinstance(record, dict) or "lb" not in record or "ub" not in record:
        raise ConfigError("bounds must be a preset name or JSON with lb/ub")
    return Bounds(lb=np.asarray(record["lb"], dtype=float),
                  ub=np.asarray(record["ub"], dtype=float))


def _airframe_from_arg(value) -> Optional[FixedAirframe]:
    if value is None:
        return None
    record = value if isinstance(value, dict) else _load_json_value(value)
    if not isinstance(record, dict):
        raise ConfigError("airframe must be a JSON object")
    try:
        return FixedAirframe(**record)
    except TypeError as exc:
        raise ConfigError(f"bad airframe field: {exc}") from exc


def _write_or_print(record: dict, out: Optional[str]) -> None:
    blob = json.dumps(record, sort_keys=True, indent=1)
    if out:
        Path(out).write_text(blob + "\n")
    else:
        print(blob)


# -- dataset ----------------------------------------------------------------

def cmd_dataset_gen(args) -> int:
    bounds = _bounds_from_arg(args.bounds)
    airframe = _airframe_from_arg(args.airframe)
    designs = ds.sample_designs(bounds, args.n, args.seed)
    samples, failures = ds.label_samples(
        designs, airframe=airframe, altitude=args.altitude,
        n_chord=args.n_chord, n_span=args.n_span, threads=args.threads)
    if not samples:
        raise NumericalError("all samples failed to label",
                             failures=len(failures))
    meta = {
        "bounds": {"lb": [float(v) for v in bounds.lb],
                   "ub": [float(v) for v in bounds.ub]},
        "seed": args.seed,
        "altitude": args.altitude,
        "panels": [args.n_chord, args.n_span],
        "failures": len(failures),
    }
    data = ds.WingDataset.from_samples(samples, meta=meta)
    if args.binary:
        ds.save_binary(data, args.out)
    else:
        ds.save_csv(data, args.out)
    print(f"wrote {data.data.shape[0]} samples to {args.out} "
          f"({len(failures)} failed)")
    return 0


def cmd_dataset_filter(args) -> int:
    data = ds.load_any(getattr(args, "in"))
    kept, removed = ds.lof_filter(data, k=args.k, contamination=args.contamination)
    if args.binary:
        ds.save_binary(kept, args.out)
    else:
        ds.save_csv(kept, args.out)
    print(f"removed {len(removed)} of {data.data.shape[0]} rows; "
          f"wrote {kept.data.shape[0]} to {args.out}")
    return 0


# -- training -----------------------------------------------------------------

def _mlp_config_from(record: dict, head: str, seed: int) -> MlpConfig:
    allowed = {f.name for f in dataclasses.fields(MlpConfig)}
    unknown = set(record) - allowed
    if unknown:
        raise ConfigError(f"unknown surrogate config fields: {sorted(unknown)}")
    merged = {"head": head, "seed": seed, **record}
    if head == "classification":
        merged.setdefault("n_groups", len(TESTED_DERIVATIVES))
    return MlpConfig(**merged)


def cmd_train(args) -> int:
    data = ds.load_any(args.data)
    bounds = data.bounds()
    if bounds is None:
        raise ConfigError(f"{args.data}: dataset has no bounds metadata")
    scaling = ds.ScalingSpec.from_bounds(bounds)
    overrides = _load_json_value(args.config) if args.config else {}
    overrides = dict(overrides)
    for name, value in (("hidden_layers", args.hidden), ("width", args.width),
                        ("epochs", args.epochs), ("batch_size", args.batch),
                        ("learning_rate", args.lr), ("l2", args.l2),
                        ("optimizer", args.optimizer)):
        if value is not None:
            overrides[name] = value
    config = _mlp_config_from(overrides, args.head, args.seed)

    if args.head == "regression":
        targets = data.aero_matrix
        names = list(ds.AERO_COLUMNS)
    else:
        targets = data.label_matrix
        names = list(TESTED_DERIVATIVES)
    model = train(data.design_matrix, targets, config, scaling, names,
                  holdout=args.holdout,
                  meta={"dataset": str(args.data), "rows": int(data.data.shape[0]),
                        "head": args.head})
    model.save(args.out)
    last_train = model.history["train_loss"][-1]
    last_test = model.history["test_loss"][-1] if model.history["test_loss"] else float("nan")
    print(f"trained {args.head} surrogate: train loss {last_train:.6g}, "
          f"test loss {last_test:.6g}; saved to {args.out}")
    return 0


# -- single-design physics ----------------------------------------------------

def cmd_vlm_eval(args) -> int:
    dv = _design_from_arg(args.design)
    camber = None if args.flat else camber_line
    mesh = build_mesh(dv, n_chord=args.n_chord, n_span=args.n_span, camber=camber)
    flow = FlowState(U=dv.velocity, rho=isa_density(args.altitude),
                     altitude=args.altitude)
    sol = solve(mesh, flow)
    record = {
        "design": dv.as_dict(),
        "panels": [args.n_chord, args.n_span],
        "altitude": args.altitude,
        "rho": flow.rho,
        "lift": sol.lift,
        "drag": sol.drag,
        "drag_trefftz": sol.drag_trefftz,
        "c_lift": sol.c_lift,
        "c_drag": sol.c_drag,
        "force_body": [float(v) for v in sol.force],
        "moment_body": [float(v) for v in sol.moment],
    }
    _write_or_print(record, args.out)
    return 0


def cmd_stability_eval(args) -> int:
    dv = _design_from_arg(args.design)
    airframe = _airframe_from_arg(args.airframe)
    analysis = analyze_design(dv, airframe=airframe, n_chord=args.n_chord,
                              n_span=args.n_span, altitude=args.altitude)
    models = linear_models(analysis.derivatives, analysis.mass_props)
    record = {
        "design": dv.as_dict(),
        "panels": [args.n_chord, args.n_span],
        "altitude": args.altitude,
        "trim": {"lift": analysis.trim_solution.lift,
                 "drag": analysis.trim_solution.drag,
                 "c_lift": analysis.trim_solution.c_lift,
                 "c_drag": analysis.trim_solution.c_drag},
        "mass": {"mass": analysis.mass_props.mass,
                 "cg": [float(v) for v in analysis.mass_props.cg],
                 "inertia": [[float(v) for v in row]
                             for row in analysis.mass_props.inertia]},
        "derivatives": {name: float(getattr(analysis.derivatives, name))
                        for name in DERIVATIVE_NAMES},
        "labels": {name: CLASS_NAMES[analysis.report[name]]
                   for name in TESTED_DERIVATIVES},
        "longitudinal_modes": [{"eigenvalue": [ev.real, ev.imag], "label": lab}
                               for ev, lab in zip(models.eig_longitudinal,
                                                  models.modes_longitudinal)],
        "lateral_modes": [{"eigenvalue": [ev.real, ev.imag], "label": lab}
                          for ev, lab in zip(models.eig_lateral,
                                             models.modes_lateral)],
    }
    _write_or_print(record, args.out)
    return 0


# -- optimization -------------------------------------------------------------

def _opt_config_from(path: Optional[str], seed: int) -> OptConfig:
    overrides = dict(_load_json_value(path)) if path else {}
    allowed = {f.name for f in dataclasses.fields(OptConfig)}
    unknown = set(overrides) - allowed
    if unknown:
        raise ConfigError(f"unknown optimizer config fields: {sorted(unknown)}")
    overrides["seed"] = seed
    return OptConfig(**overrides)


def cmd_optimize(args) -> int:
    aero = SurrogateModel.load(args.model)
    if aero.config.head != "regression":
        raise ConfigError(f"{args.model}: not a regression surrogate")
    stab = SurrogateModel.load(args.stab) if args.stab else None
    bounds = _bounds_from_arg(args.bounds)
    config = _opt_config_from(args.config, args.seed)
    spec = ObjectiveSpec(backend=SurrogateBackend(aero))

    run = RUNNERS[args.method](spec, bounds, config)
    if stab is not None and np.isfinite(run.f_best):
        run.stability = [int(v) for v in
                         stab.predict_stability(run.x_best).labels]
    run.save(args.out)
    if args.history_csv:
        run.history_csv(args.history_csv)
    status = run.meta.get("status", "ok")
    print(f"{args.method}: f_best {run.f_best:.6g}, |h| {abs(run.h_best):.3g}, "
          f"feasible {run.feasible}, status {status}; saved to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    aero = SurrogateModel.load(args.model)
    stab = SurrogateModel.load(args.stab) if args.stab else None
    method = None
    if args.run:
        run = OptRun.load(args.run)
        dv = DesignVector.from_array(run.x_best)
        method = run.method
    elif args.design:
        dv = _design_from_arg(args.design)
    else:
        raise ConfigError("provide --design or --run")
    airframe = _airframe_from_arg(args.airframe)
    result = evaluate_design(dv, aero, stab, airframe=airframe,
                             n_chord=args.n_chord, n_span=args.n_span,
                             altitude=args.altitude)
    record = result.to_dict()
    if method is not None:
        record["method"] = method
    _write_or_print(record, args.out)
    if args.out:
        print(f"pct dC_L {result.pct_dc_lift:+.3f}%, pct dC_D "
              f"{result.pct_dc_drag:+.3f}%, dL {result.delta_lift:+.2f} N; "
              f"saved to {args.out}")
    return 0


def cmd_report(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    evals = []
    for path in args.runs:
        run = OptRun.load(path)
        rp.write_run_artifacts(run, out_dir, prefix=run.method)
    for path in args.evals or []:
        record = _load_json_value(path)
        for field in ("nn", "vlm", "pct_dc_lift", "pct_dc_drag", "delta_lift"):
            if field not in record:
                raise FileFormatError(f"{path}: field {field!r}: missing")
        evals.append(record)
    if evals:
        rp.write_metrics_table(out_dir / "metrics_table.csv", evals)
    print(f"wrote report artifacts to {out_dir}")
    return 0


# -- pipeline -----------------------------------------------------------------

_PIPELINE_FIELDS = {
    "bounds": (str, dict),
    "dataset_size": int,
    "altitude": (int, float),
    "airframe": (str, dict, type(None)),
    "label_panels": list,
    "eval_panels": list,
    "lof": dict,
    "aero": dict,
    "stab": dict,
    "methods": list,
    "seeds": dict,
    "out_dir": str,
}

_PIPELINE_DEFAULTS = {
    "bounds": "set1",
    "dataset_size": 5000,
    "altitude": 1200.0,
    "airframe": None,
    "label_panels": [10, 20],
    "eval_panels": [20, 40],
    "lof": {"k": 200, "contamination": 1e-4},
    "aero": {"hidden_layers": 4, "width": 64, "epochs": 400},
    "stab": {"hidden_layers": 4, "width": 64, "epochs": 200},
    "methods": ["grad", "pso", "ga", "bayes", "lipschitz"],
    "seeds": {"dataset": 0, "train": 0, "optimize": 0},
}


@dataclasses.dataclass
class PipelineConfig:
    """Validated pipeline settings; see _PIPELINE_DEFAULTS for the schema."""

    bounds: Bounds
    dataset_size: int
    altitude: float
    airframe: Optional[FixedAirframe]
    label_panels: tuple
    eval_panels: tuple
    lof: dict
    aero: dict
    stab: dict
    methods: tuple
    seeds: dict
    out_dir: Path
    opt_config: Optional[str] = None

    @classmethod
    def from_dict(cls, record: dict, out_dir: Optional[str] = None) -> "PipelineConfig":
        if not isinstance(record, dict):
            raise ConfigError("pipeline config must be a JSON object")
        unknown = set(record) - set(_PIPELINE_FIELDS) - {"opt_config"}
        if unknown:
            raise ConfigError(f"unknown pipeline fields: {sorted(unknown)}")
        merged = {**_PIPELINE_DEFAULTS, **record}
        for name, types in _PIPELINE_FIELDS.items():
            if name == "out_dir":
                continue
            if not isinstance(merged[name], types):
                raise ConfigError(f"pipeline field {name!r} has wrong type")
        if out_dir is None:
            out_dir = merged.get("out_dir")
        if not out_dir:
            raise ConfigError("pipeline field 'out_dir' is required")
        bounds = merged["bounds"]
        bounds = (_bounds_from_arg(bounds) if isinstance(bounds, str)
                  else _bounds_from_arg(json.dumps(bounds)))
        if merged["dataset_size"] < 1:
            raise ConfigError("pipeline field 'dataset_size' must be >= 1")
        methods = tuple(merged["methods"])
        for m in methods:
            if m not in RUNNERS:
                raise ConfigError(f"pipeline field 'methods': unknown method {m!r}")
        seeds = {**_PIPELINE_DEFAULTS["seeds"], **merged["seeds"]}
        unknown = set(seeds) - {"dataset", "train", "optimize"}
        if unknown:
            raise ConfigError(f"pipeline field 'seeds': unknown keys {sorted(unknown)}")
        panels = []
        for name in ("label_panels", "eval_panels"):
            value = merged[name]
            if len(value) != 2 or any(int(v) < 1 for v in value):
                raise ConfigError(f"pipeline field {name!r} must be two counts")
            panels.append((int(value[0]), int(value[1])))
        lof = {**_PIPELINE_DEFAULTS["lof"], **merged["lof"]}
        return cls(
            bounds=bounds,
            dataset_size=int(merged["dataset_size"]),
            altitude=float(merged["altitude"]),
            airframe=_airframe_from_arg(merged["airframe"]),
            label_panels=panels[0],
            eval_panels=panels[1],
            lof=lof,
            aero=dict(merged["aero"]),
            stab=dict(merged["stab"]),
            methods=methods,
            seeds=seeds,
            out_dir=Path(out_dir),
            opt_config=merged.get("opt_config"),
        )


def cmd_pipeline(args) -> int:
    record = _load_json_value(args.config)
    config = PipelineConfig.from_dict(record, out_dir=args.out_dir)
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)

    def stage(name, outputs, builder):
        paths = [Path(p) for p in outputs]
        if paths and all(p.exists() for p in paths):
            print(f"[pipeline] {name}: outputs exist, skipping")
            return
        try:
            builder()
        except Exception as exc:
            print(f"[pipeline] stage {name!r} failed: {exc}", file=sys.stderr)
            raise
        print(f"[pipeline] {name}: done")

    raw_path = out / "dataset.csv"
    filtered_path = out / "filtered.csv"
    aero_path = out / "aero.chm"
    stab_path = out / "stab.chm"

    def build_dataset():
        designs = ds.sample_designs(config.bounds, config.dataset_size,
                                    config.seeds["dataset"])
        samples, failures = ds.label_samples(
            designs, airframe=config.airframe, altitude=config.altitude,
            n_chord=config.label_panels[0], n_span=config.label_panels[1],
            threads=args.threads)
        if not samples:
            raise NumericalError("all samples failed to label")
        meta = {"bounds": {"lb": [float(v) for v in config.bounds.lb],
                           "ub": [float(v) for v in config.bounds.ub]},
                "seed": config.seeds["dataset"],
                "altitude": config.altitude,
                "panels": list(config.label_panels),
                "failures": len(failures)}
        ds.save_csv(ds.WingDataset.from_samples(samples, meta=meta), raw_path)

    def build_filtered():
        data = ds.load_any(raw_path)
        k = min(int(config.lof["k"]), data.data.shape[0] - 1)
        kept, removed = ds.lof_filter(data, k=k,
                                      contamination=float(config.lof["contamination"]))
        ds.save_csv(kept, filtered_path)

    def build_models():
        data = ds.load_any(filtered_path)
        scaling = ds.ScalingSpec.from_bounds(data.bounds())
        aero_record = dict(config.aero)
        aero_holdout = float(aero_record.pop("holdout", 0.1))
        aero_cfg = _mlp_config_from(aero_record, "regression", config.seeds["train"])
        aero = train(data.design_matrix, data.aero_matrix, aero_cfg, scaling,
                     list(ds.AERO_COLUMNS), holdout=aero_holdout,
                     meta={"dataset": str(filtered_path), "head": "regression"})
        aero.save(aero_path)
        stab_record = dict(config.stab)
        stab_holdout = float(stab_record.pop("holdout", 0.1))
        stab_cfg = _mlp_config_from(stab_record, "classification", config.seeds["train"])
        stab = train(data.design_matrix, data.label_matrix, stab_cfg, scaling,
                     list(TESTED_DERIVATIVES), holdout=stab_holdout,
                     meta={"dataset": str(filtered_path), "head": "classification"})
        stab.save(stab_path)

    stage("dataset", [raw_path], build_dataset)
    stage("filter", [filtered_path], build_filtered)
    stage("train", [aero_path, stab_path], build_models)

    if not config.methods:
        print("[pipeline] no optimizer methods requested; stopping after training")
        return 0

    aero = SurrogateModel.load(aero_path)
    stab = SurrogateModel.load(stab_path)
    spec = ObjectiveSpec(backend=SurrogateBackend(aero))
    opt_config = _opt_config_from(config.opt_config, config.seeds["optimize"])

    run_paths = {}
    for method in config.methods:
        run_path = out / f"run_{method}.json"
        run_paths[method] = run_path

        def build_run(method=method, run_path=run_path):
            run = RUNNERS[method](spec, config.bounds, opt_config)
            if np.isfinite(run.f_best):
                run.stability = [int(v) for v in
                                 stab.predict_stability(run.x_best).labels]
            run.save(run_path)
            run.history_csv(out / f"run_{method}_history.csv")

        stage(f"optimize[{method}]", [run_path], build_run)

    eval_paths = {}
    for method in config.methods:
        eval_path = out / f"eval_{method}.json"
        eval_paths[method] = eval_path

        def build_eval(method=method, eval_path=eval_path):
            run = OptRun.load(run_paths[method])
            result = evaluate_design(DesignVector.from_array(run.x_best),
                                     aero, stab, airframe=config.airframe,
                                     n_chord=config.eval_panels[0],
                                     n_span=config.eval_panels[1],
                                     altitude=config.altitude)
            record = result.to_dict()
            record["method"] = method
            Path(eval_path).write_text(json.dumps(record, sort_keys=True, indent=1) + "\n")

        stage(f"evaluate[{method}]", [eval_path], build_eval)

    report_dir = out / "report"

    def build_report():
        evals = []
        for method in config.methods:
            run = OptRun.load(run_paths[method])
            rp.write_run_artifacts(run, report_dir, prefix=method)
            evals.append(json.loads(Path(eval_paths[method]).read_text()))
        rp.write_metrics_table(report_dir / "metrics_table.csv", evals)

    stage("report", [report_dir / "metrics_table.csv"], build_report)
    print(f"[pipeline] complete: artifacts in {out}")
    return 0


def cmd_version(args) -> int:
    print(f"chimera {__version__}")
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chimera",
        description="Glider wing design: VLM aerodynamics, stability "
                    "analysis, neural surrogates, and design optimization.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="generate or filter wing datasets")
    dsub = p.add_subparsers(dest="dataset_command", required=True)

    g = dsub.add_parser("gen", help="sample and label designs")
    g.add_argument("--bounds", default="table1",
                   help="preset (table1|set1|set2) or JSON file with lb/ub")
    g.add_argument("--n", type=int, required=True, help="number of designs")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--altitude", type=float, default=1200.0)
    g.add_argument("--n-chord", type=int, default=10)
    g.add_argument("--n-span", type=int, default=20)
    g.add_argument("--airframe", default=None, help="JSON airframe overrides")
    g.add_argument("--threads", type=int, default=None,
                   help="labeling workers (default: CHIMERA_THREADS or 1)")
    g.add_argument("--binary", action="store_true", help="write CHD1 binary")
    g.set_defaults(func=cmd_dataset_gen)

    f = dsub.add_parser("filter", help="drop local-outlier-factor anomalies")
    f.add_argument("--in", dest="in", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--k", type=int, default=200, help="neighborhood size")
    f.add_argument("--contamination", type=float, default=1e-4)
    f.add_argument("--binary", action="store_true")
    f.set_defaults(func=cmd_dataset_filter)

    t = sub.add_parser("train", help="train a surrogate on a dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--head", choices=("regression", "classification"),
                   required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--config", default=None, help="JSON MlpConfig overrides")
    t.add_argument("--hidden", type=int, default=None)
    t.add_argument("--width", type=int, default=None)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--batch", type=int, default=None)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--l2", type=float, default=None)
    t.add_argument("--optimizer", choices=("adam", "sgd"), default=None)
    t.add_argument("--holdout", type=float, default=0.1)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    v = sub.add_parser("vlm", help="vortex-lattice analysis")
    vsub = v.add_subparsers(dest="vlm_command", required=True)
    ve = vsub.add_parser("eval", help="lift/drag for one design")
    ve.add_argument("--design", required=True,
                    help="JSON object or file with the 8 design variables")
    ve.add_argument("--n-chord", type=int, default=20)
    ve.add_argument("--n-span", type=int, default=40)
    ve.add_argument("--altitude", type=float, default=1200.0)
    ve.add_argument("--flat", action="store_true", help="disable camber")
    ve.add_argument("--out", default=None)
    ve.set_defaults(func=cmd_vlm_eval)

    s = sub.add_parser("stability", help="stability derivative analysis")
    ssub = s.add_subparsers(dest="stability_command", required=True)
    se = ssub.add_parser("eval", help="derivatives, labels, and modes")
    se.add_argument("--design", required=True)
    se.add_argument("--n-chord", type=int, default=20)
    se.add_argument("--n-span", type=int, default=40)
    se.add_argument("--altitude", type=float, default=1200.0)
    se.add_argument("--airframe", default=None)
    se.add_argument("--out", default=None)
    se.set_defaults(func=cmd_stability_eval)

    o = sub.add_parser("optimize", help="run one optimization strategy")
    o.add_argument("--method", choices=sorted(RUNNERS), required=True)
    o.add_argument("--model", required=True, help="regression surrogate file")
    o.add_argument("--stab", default=None, help="classification surrogate file")
    o.add_argument("--bounds", default="set1")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", required=True, help="run record JSON path")
    o.add_argument("--config", default=None, help="JSON OptConfig overrides")
    o.add_argument("--history-csv", default=None)
    o.set_defaults(func=cmd_optimize)

    e = sub.add_parser("evaluate", help="surrogate vs VLM cross-check")
    e.add_argument("--model", required=True)
    e.add_argument("--stab", default=None)
    e.add_argument("--design", default=None)
    e.add_argument("--run", default=None, help="take the design from a run file")
    e.add_argument("--airframe", default=None)
    e.add_argument("--n-chord", type=int, default=20)
    e.add_argument("--n-span", type=int, default=40)
    e.add_argument("--altitude", type=float, default=1200.0)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="CSV/SVG artifacts from run files")
    r.add_argument("--runs", nargs="+", required=True)
    r.add_argument("--evals", nargs="*", default=None,
                   help="evaluation JSONs for the metrics table")
    r.add_argument("--out-dir", required=True)
    r.set_defaults(func=cmd_report)

    pl = sub.add_parser("pipeline", help="dataset -> train -> optimize -> report")
    pl.add_argument("--config", required=True, help="pipeline JSON config")
    pl.add_argument("--out-dir", default=None, help="override config out_dir")
    pl.add_argument("--threads", type=int, default=None)
    pl.set_defaults(func=cmd_pipeline)

    ver = sub.add_parser("version", help="print the package version")
    ver.set_defaults(func=cmd_version)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except FileFormatError as exc:
        print(f"file format error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except ChimeraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
