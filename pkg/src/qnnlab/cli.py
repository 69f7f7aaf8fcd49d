"""Command-line entry point: ``qnnlab <subcommand> [--config FILE] [overrides]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import data as qdata
from .errors import DataError, InvalidArgument
from .experiments import (
    EXPERIMENTS, SYNTH_TARGETS, ExperimentConfig, resolve_output_dir, run_experiment,
    synth_target, validate_config, write_json, write_rows,
)
from .fourier import FourierSeries, empirical_spectrum, spectrum_spec
from .models import CircuitTemplate, evaluate_batch, param_count
from .qsp import WZW, YZY, expectation_z, synthesize_any_report, synthesize_even_report
from .training import TrainConfig, fit, pca_reduce, predict_classes

EXIT_USAGE = 2
EXIT_FAILURE = 1


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _emit(obj, out=None):
    if out:
        write_json(out, obj)
    else:
        json.dump(obj, sys.stdout, indent=2)
        sys.stdout.write("\n")


def _load_template(arg) -> CircuitTemplate:
    """A template JSON file, or a report/summary that embeds one under 'template'."""
    obj = _load_json(arg)
    if "ansatz" not in obj and isinstance(obj.get("template"), dict):
        obj = obj["template"]
    return CircuitTemplate.from_json(obj)


def _load_params(arg, template: CircuitTemplate) -> np.ndarray:
    obj = _load_json(arg)
    if isinstance(obj, dict):
        obj = obj.get("best_params", obj.get("params"))
    p = np.asarray(obj, dtype=float)
    if p.shape != (param_count(template),):
        raise InvalidArgument(f"expected {param_count(template)} parameters, got shape {p.shape}")
    return p


def _experiment_config(args, name=None) -> ExperimentConfig:
    obj = _load_json(args.config) if getattr(args, "config", None) else {}
    if name is not None:
        if obj.get("experiment", name) != name:
            raise InvalidArgument(f"config is for {obj['experiment']!r}, not {name!r}")
        obj["experiment"] = name
    elif getattr(args, "experiment", None):
        obj["experiment"] = args.experiment
    if "experiment" not in obj:
        raise InvalidArgument("give --config or --experiment")
    validate_config(obj, check_paths=False)
    train = dict(obj.get("train", {}))
    for key in ("iterations", "instances"):
        if getattr(args, key, None) is not None:
            train[key] = getattr(args, key)
    obj["train"] = train
    if getattr(args, "out", None):
        obj["output_dir"] = args.out
    return ExperimentConfig.from_json(obj, seed=args.seed)


def _run(cfg: ExperimentConfig):
    out, summary = run_experiment(cfg)
    summary = {k: v for k, v in summary.items() if k not in ("config", "support")}
    _emit({"output_dir": str(out), **summary})


# -- subcommands --------------------------------------------------------------------------

def cmd_run(args):
    _run(_experiment_config(args))


def cmd_synthesize(args):
    if args.series:
        fK = FourierSeries.from_json(_load_json(args.series))
    else:
        _, fK = synth_target(args.target, args.order)
    syn = synthesize_even_report(fK, args.inner_order) if args.ansatz == YZY else synthesize_any_report(fK, args.inner_order)
    xs = np.linspace(-np.pi, np.pi, 2001)
    sup = float(np.max(np.abs(expectation_z(syn.angles, xs) - fK.real(xs))))
    _emit({**syn.to_json(), "pair": syn.pair.to_json(), "sup_error": sup}, args.out)


def cmd_train(args):
    if args.config:
        cfg = _experiment_config(args)
        if cfg.experiment in ("synth_demo",):
            raise InvalidArgument("synth_demo has no training stage; use 'synthesize' or 'run'")
        return _run(cfg)
    if not (args.template and args.data):
        raise InvalidArgument("train needs --config, or --template and --data")
    t = _load_template(args.template)
    ds = qdata.read_dataset_csv(args.data)
    tc = TrainConfig.from_json(_load_json(args.train_config)) if args.train_config else TrainConfig()
    if args.seed is not None:
        tc = TrainConfig(**{**tc.to_json(), "seed": args.seed})
    rep = fit(t, ds, tc)
    out = Path(args.out or "train")
    out.mkdir(parents=True, exist_ok=True)
    rep.extra["template"] = t.to_json()
    write_json(out / "report.json", rep.to_json())
    rep.write_curve_csv(out / "loss_curve.csv")
    _emit({"output_dir": str(out), "best_instance": rep.best, "final_train_loss": rep.final_train.tolist()})


def cmd_eval(args):
    t = _load_template(args.template)
    p = _load_params(args.params, t)
    if args.data:
        ds = qdata.read_dataset_csv(args.data)
        X, target = ds.inputs, ds.targets[:, 0]
    elif args.x:
        X = np.array([[float(v) for v in s.split(",")] for s in args.x])
        target = np.full(X.shape[0], np.nan)
    else:
        raise InvalidArgument("eval needs --data or --x")
    pred = evaluate_batch(t, p, X)
    cols = ["x"] if X.shape[1] == 1 else ["x", "y"] if X.shape[1] == 2 else [f"x{i}" for i in range(X.shape[1])]
    rows = [list(x) + [y, v] for x, y, v in zip(X, target, pred)]
    if args.out:
        write_rows(args.out, cols + ["target", "prediction"], rows)
        _emit({"output": args.out, "rows": len(rows)})
    else:
        _emit({"predictions": pred.tolist()})


def cmd_spectrum(args):
    if args.config:
        return _run(_experiment_config(args, "spectrum_demo"))
    if not (args.template and args.params):
        raise InvalidArgument("spectrum needs --config, or --template and --params")
    t = _load_template(args.template)
    p = _load_params(args.params, t)
    spec = empirical_spectrum(lambda pts: evaluate_batch(t, p, pts), t.d, args.grid_size, max_frequency=t.K)
    report = {**spectrum_spec(t.d, t.K).report(), "max_outside": spec.max_outside(t.K)}
    if args.out:
        header = [f"n{i + 1}" for i in range(t.d)] + ["magnitude"]
        write_rows(args.out, header, (list(f) + [m] for f, m in spec.rows()))
    _emit(report)


def cmd_classify(args):
    cfg = _experiment_config(args, "iris")
    opts = dict(cfg.options)
    for key in ("csv", "label_column", "pca_dim", "n_samples"):
        v = getattr(args, key)
        if v is not None:
            opts[key] = int(v) if key == "label_column" and v.lstrip("-").isdigit() else v
    cfg.options = opts
    if args.template and args.params:
        t = _load_template(args.template)
        p = _load_params(args.params, t)
        table = qdata.read_table(opts["csv"] or qdata.iris_path(), opts["label_column"])
        X = table.features
        if opts["pca_dim"]:
            X = pca_reduce(X, int(opts["pca_dim"]))
        pred = predict_classes(t, p, qdata.minmax_to_pi(X), table.n_classes)
        _emit({"accuracy": float(np.mean(pred == table.labels)),
               "predictions": [table.classes[i] for i in pred]})
        return
    _run(cfg)


def cmd_gen_data(args):
    if args.kind == "sinc":
        ds = qdata.gen_sinc(args.n_points or 300, seed=args.seed or 0)
    elif args.kind == "square_wave":
        ds = qdata.gen_square_wave(args.n_points or 400, period=args.period, amplitude=args.amplitude)
    elif args.kind == "bivariate":
        ds = qdata.gen_bivariate(args.n_points or 400, seed=args.seed or 0)
    else:
        ds = qdata.sample_classification(qdata.load_iris(), args.n_points or 100, 0.8, args.seed or 0)
    qdata.write_dataset_csv(ds, args.out)
    _emit({"output": args.out, "rows": len(ds), "d": ds.d})


def cmd_validate_config(args):
    obj = _load_json(args.config)
    validate_config(obj)
    cfg = ExperimentConfig.from_json(obj)
    _emit({"valid": True, "experiment": cfg.experiment, "output_dir": str(resolve_output_dir(cfg))})


# -- parser ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qnnlab", description="Data re-uploading QNN toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        p.add_argument("--seed", type=int, default=None, help="seed override")
        if config:
            p.add_argument("--config", help="experiment config JSON")
        return p

    p = common(sub.add_parser("run", help="run a named experiment"))
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--out", help="output directory")
    p.add_argument("--iterations", type=int)
    p.add_argument("--instances", type=int)
    p.set_defaults(func=cmd_run)

    p = common(sub.add_parser("synthesize", help="Fourier series to circuit angles"))
    p.add_argument("--target", choices=SYNTH_TARGETS, default="sinc")
    p.add_argument("--series", help="FourierSeries JSON instead of a named target")
    p.add_argument("--order", type=int, default=8, help="truncation order K of the target series")
    p.add_argument("--inner-order", type=int, default=None)
    p.add_argument("--ansatz", choices=(YZY, WZW), default=WZW)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synthesize)

    p = common(sub.add_parser("train", help="train a template"))
    p.add_argument("--template")
    p.add_argument("--data", help="dataset CSV written by gen-data")
    p.add_argument("--train-config")
    p.add_argument("--out")
    p.add_argument("--iterations", type=int)
    p.add_argument("--instances", type=int)
    p.set_defaults(func=cmd_train)

    p = common(sub.add_parser("eval", help="evaluate a trained model"), config=False)
    p.add_argument("--template", required=True)
    p.add_argument("--params", required=True, help="report JSON or a JSON parameter list")
    p.add_argument("--data")
    p.add_argument("--x", nargs="+", help="points, comma separated coordinates")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = common(sub.add_parser("spectrum", help="FFT spectrum of a model"))
    p.add_argument("--template")
    p.add_argument("--params")
    p.add_argument("--grid-size", type=int, default=32)
    p.add_argument("--out")
    p.add_argument("--iterations", type=int)
    p.add_argument("--instances", type=int)
    p.set_defaults(func=cmd_spectrum)

    p = common(sub.add_parser("classify", help="train or apply a classifier"))
    p.add_argument("--csv")
    p.add_argument("--label-column")
    p.add_argument("--pca-dim", type=int)
    p.add_argument("--n-samples", type=int)
    p.add_argument("--template")
    p.add_argument("--params")
    p.add_argument("--out")
    p.add_argument("--iterations", type=int)
    p.add_argument("--instances", type=int)
    p.set_defaults(func=cmd_classify)

    p = common(sub.add_parser("gen-data", help="write a generated dataset CSV"), config=False)
    p.add_argument("--kind", choices=("sinc", "square_wave", "bivariate", "iris"), required=True)
    p.add_argument("--n-points", type=int)
    p.add_argument("--period", type=float, default=4.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("validate-config", help="check a config against the schema")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate_config)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InvalidArgument, DataError, FileNotFoundError, json.JSONDecodeError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001 - every failure becomes a structured message
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
