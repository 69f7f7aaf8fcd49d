"""One-command reproductions of the training and synthesis experiments.

Every experiment writes into a fresh temporary directory next to the target
and renames it into place at the end, so a failed run leaves no partial
output behind.
"""
from __future__ import annotations

import copy
import csv
import json
import os
import shutil
import tempfile
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import data as qdata
from .errors import InvalidArgument
from .fourier import empirical_spectrum, project, spectrum_spec, truncation_error
from .models import (
    MULTIVARIATE_UZU, PARALLEL_ENTANGLEMENT, CircuitTemplate, evaluate_batch,
)
from .qsp import WZW, YZY, expectation_z, synthesize_any_report, synthesize_even_report
from .training import Dataset, TrainConfig, fit, pca_reduce, predict_classes

OUT_DIR_ENV = "QNNLAB_OUT_DIR"
EXPERIMENTS = ("sinc", "square_wave", "bivariate", "parallel_2q", "iris", "synth_demo", "spectrum_demo")

# Per-experiment defaults; a config overrides them key by key within each section.
DEFAULTS = {
    "sinc": {
        "template": {"ansatz": YZY, "layers": 3},
        "train": {"learning_rate": 0.1, "iterations": 100, "batch_size": 20, "instances": 5},
        "grid_size": 2001,
        "options": {"layers": [3, 7, 15], "n_points": 300, "truncation_order": 3},
    },
    "square_wave": {
        "template": {"ansatz": WZW, "layers": 45},
        "train": {"learning_rate": 0.1, "iterations": 100, "batch_size": 20, "instances": 5},
        "grid_size": 601,
        # period 2*pi: a native model is 2*pi-periodic, so only commensurate periods are learnable
        "options": {"n_points": 400, "train_interval": [0.0, 20.0], "test_interval": [20.0, 30.0],
                    "period": 2 * np.pi, "amplitude": 1.0, "test_points": 200},
    },
    "bivariate": {
        "template": {"ansatz": MULTIVARIATE_UZU, "layers": 40, "d": 2},
        "train": {"learning_rate": 0.1, "iterations": 100, "batch_size": 20, "instances": 5},
        "grid_size": 64,
        "options": {"layers": [10, 20, 40], "n_points": 400},
    },
    "parallel_2q": {
        "template": {"ansatz": PARALLEL_ENTANGLEMENT, "n_qubits": 2, "layers": 10, "d": 2, "d_tr": 3},
        "train": {"learning_rate": 0.1, "iterations": 100, "batch_size": 20, "instances": 5},
        "grid_size": 64,
        "options": {"n_points": 400},
    },
    "iris": {
        "template": {"ansatz": PARALLEL_ENTANGLEMENT, "n_qubits": 4, "layers": 1, "d": 4, "d_tr": 1},
        "train": {"learning_rate": 0.1, "iterations": 100, "batch_size": 40, "instances": 10},
        "grid_size": 0,
        "options": {"csv": None, "label_column": "species", "n_samples": 100, "train_fraction": 0.8,
                    "pca_dim": None},
    },
    "synth_demo": {
        "template": None,
        "train": {},
        "grid_size": 2001,
        "options": {"target": "sinc", "order": 8, "inner_order": None, "ansatz": WZW},
    },
    "spectrum_demo": {
        "template": {"ansatz": MULTIVARIATE_UZU, "layers": 6, "d": 2},
        "train": {"learning_rate": 0.1, "iterations": 100, "batch_size": 20, "instances": 1},
        "grid_size": 32,
        "options": {"n_points": 400},
    },
}

SYNTH_TARGETS = ("sinc", "square_wave", "cos", "sin")


@dataclass
class ExperimentConfig:
    experiment: str
    template: dict | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str | None = None
    grid_size: int = 0
    seed: int = 0
    options: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj, seed: int | None = None) -> "ExperimentConfig":
        """Merge a (schema-valid) config object over the experiment defaults."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        name = obj.get("experiment")
        if name not in EXPERIMENTS:
            raise InvalidArgument(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
        base = copy.deepcopy(DEFAULTS[name])
        template = base["template"]
        if obj.get("template") is not None:
            template = {**(template or {}), **obj["template"]}
        train = {**base["train"], **obj.get("train", {})}
        seed = int(obj.get("seed", train.get("seed", 0)) if seed is None else seed)
        train["seed"] = seed
        options = {**base["options"], **obj.get("options", {})}
        unknown = set(obj.get("options", {})) - set(base["options"])
        if unknown:
            raise InvalidArgument(f"unknown options for {name}: {sorted(unknown)}")
        return cls(name, template, TrainConfig(**train), obj.get("output_dir"),
                   int(obj.get("grid_size", base["grid_size"])), seed, options)

    def to_json(self) -> dict:
        return {"experiment": self.experiment, "template": self.template, "train": self.train.to_json(),
                "output_dir": self.output_dir, "grid_size": self.grid_size, "seed": self.seed,
                "options": self.options}

    def circuit(self, **overrides) -> CircuitTemplate:
        return CircuitTemplate.from_json({**(self.template or {}), **overrides})


def config_schema() -> dict:
    return json.loads((resources.files("qnnlab") / "schemas" / "experiment.schema.json").read_text())


def validate_config(obj, check_paths: bool = True) -> None:
    """Schema check plus the cross-field rules the schema cannot express.

    With ``check_paths`` the referenced CSV must exist and the output
    directory's nearest existing ancestor must be writable.
    """
    errors = sorted(jsonschema.Draft202012Validator(config_schema()).iter_errors(obj), key=lambda e: list(e.path))
    if errors:
        msgs = [f"{'/'.join(str(p) for p in e.path) or '<root>'}: {e.message}" for e in errors]
        raise InvalidArgument("invalid config: " + "; ".join(msgs))
    unknown = set(obj.get("options", {})) - set(DEFAULTS[obj["experiment"]]["options"])
    if unknown:
        raise InvalidArgument(f"unknown options for {obj['experiment']}: {sorted(unknown)}")
    cfg = ExperimentConfig.from_json(obj)
    if cfg.template is not None:
        try:
            cfg.circuit()
        except (KeyError, InvalidArgument) as e:
            raise InvalidArgument(f"invalid template: {e}") from None
    if not check_paths:
        return
    csv_path = cfg.options.get("csv")
    if csv_path and not Path(csv_path).is_file():
        raise InvalidArgument(f"csv file {csv_path} does not exist")
    target = resolve_output_dir(cfg)
    parent = target
    while not parent.exists():
        parent = parent.parent
    if not os.access(parent, os.W_OK):
        raise InvalidArgument(f"output directory {target} is not writable")


def resolve_output_dir(config: ExperimentConfig) -> Path:
    """Relative output directories hang off $QNNLAB_OUT_DIR (or the working directory)."""
    out = Path(config.output_dir or config.experiment)
    if not out.is_absolute():
        out = Path(os.environ.get(OUT_DIR_ENV, ".")) / out
    return out


# -- file helpers ----------------------------------------------------------------------------

def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_rows(path):
    """Inverse of write_rows: header plus rows of floats."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def _finite(v):
    return None if v is None or not np.isfinite(v) else float(v)


def _write_training(out: Path, tag: str, report, extra=None):
    report.extra.update(extra or {})
    write_json(out / f"report{tag}.json", report.to_json())
    report.write_curve_csv(out / f"loss_curve{tag}.csv")


def _grid_1d(a, b, n):
    return np.linspace(a, b, n)


def _grid_2d(n):
    g = np.linspace(-np.pi, np.pi, n)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


# -- experiments -----------------------------------------------------------------------------

def _sinc(cfg: ExperimentConfig, out: Path) -> dict:
    opts = cfg.options
    ds = qdata.gen_sinc(int(opts["n_points"]), seed=cfg.seed)
    xs = _grid_1d(0.0, np.pi, cfg.grid_size)
    fx = qdata.sinc5(xs)
    trunc = truncation_error(qdata.sinc5, project(qdata.sinc5, int(opts["truncation_order"])),
                             (0.0, np.pi), cfg.grid_size)
    rows, per_layer = [], {}
    for L in opts["layers"]:
        t = cfg.circuit(layers=int(L))
        rep = fit(t, ds, cfg.train)
        pred = evaluate_batch(t, rep.best_params, xs[:, None])
        sup = float(np.max(np.abs(pred - fx)))
        _write_training(out, f"_L{L}", rep, {"template": t.to_json(), "sup_error": sup})
        write_rows(out / f"predictions_L{L}.csv", ["x", "target", "prediction"], zip(xs, fx, pred))
        rows.append((int(L), sup))
        per_layer[str(L)] = {"sup_error": sup, "final_train_loss": float(rep.final_train[rep.best]),
                             "final_test_loss": _finite(rep.final_test[rep.best])}
    write_rows(out / "sup_error.csv", ["layers", "sup_error"], rows)
    sups = [s for _, s in rows]
    return {"layers": per_layer, "truncation_error": trunc,
            "truncation_order": int(opts["truncation_order"]),
            "strictly_decreasing": bool(all(a > b for a, b in zip(sups, sups[1:]))),
            "deepest_below_truncation": bool(sups[-1] < trunc)}


def _square_wave(cfg: ExperimentConfig, out: Path) -> dict:
    o = cfg.options
    a, b = o["train_interval"]
    ds = qdata.gen_square_wave(int(o["n_points"]), (a, b), float(o["period"]), float(o["amplitude"]))
    t = cfg.circuit()
    rep = fit(t, ds, cfg.train)
    p = rep.best_params
    ta, tb = o["test_interval"]
    xt = _grid_1d(ta, tb, int(o["test_points"]))
    test_mse = float(np.mean((evaluate_batch(t, p, xt[:, None]) - qdata.square_wave(xt, o["period"], o["amplitude"])) ** 2))
    train_mse = float(rep.final_train[rep.best])
    xs = _grid_1d(min(a, ta), max(b, tb), cfg.grid_size)
    write_rows(out / "predictions.csv", ["x", "target", "prediction"],
               zip(xs, qdata.square_wave(xs, o["period"], o["amplitude"]), evaluate_batch(t, p, xs[:, None])))
    _write_training(out, "", rep, {"template": t.to_json()})
    return {"train_region_mse": train_mse, "test_region_mse": test_mse,
            "ratio": test_mse / train_mse if train_mse > 0 else None}


def _write_surface(out: Path, name, t, params, n):
    pts = _grid_2d(n)
    lo, hi = qdata.bivariate_range()
    target = qdata.normalize_bivariate(qdata.bivariate_raw(pts[:, 0], pts[:, 1]), lo, hi)
    write_rows(out / name, ["x", "y", "target", "prediction"],
               zip(pts[:, 0], pts[:, 1], target, evaluate_batch(t, params, pts)))


def _bivariate(cfg: ExperimentConfig, out: Path) -> dict:
    ds = qdata.gen_bivariate(int(cfg.options["n_points"]), seed=cfg.seed)
    per_layer = {}
    for L in cfg.options["layers"]:
        t = cfg.circuit(layers=int(L))
        rep = fit(t, ds, cfg.train)
        _write_training(out, f"_L{L}", rep, {"template": t.to_json()})
        _write_surface(out, f"predictions_L{L}.csv", t, rep.best_params, cfg.grid_size)
        per_layer[str(L)] = {"best_final_train_loss": float(rep.final_train.min()),
                             "mean_final_train_loss": float(rep.final_train.mean())}
    return {"layers": per_layer}


def _parallel_2q(cfg: ExperimentConfig, out: Path) -> dict:
    ds = qdata.gen_bivariate(int(cfg.options["n_points"]), seed=cfg.seed)
    t = cfg.circuit()
    rep = fit(t, ds, cfg.train)
    _write_training(out, "", rep, {"template": t.to_json()})
    _write_surface(out, "predictions.csv", t, rep.best_params, cfg.grid_size)
    return {"best_final_train_loss": float(rep.final_train.min()),
            "mean_final_train_loss": float(rep.final_train.mean())}


def _iris(cfg: ExperimentConfig, out: Path) -> dict:
    o = cfg.options
    path = o["csv"] or qdata.iris_path()
    table = qdata.read_table(path, o["label_column"])
    X = table.features
    if o["pca_dim"]:
        X = pca_reduce(X, int(o["pca_dim"]))
    full = Dataset(qdata.minmax_to_pi(X), qdata.one_hot_pm(table.labels, table.n_classes),
                   n_classes=table.n_classes)
    ds = qdata.sample_classification(full, int(o["n_samples"]), float(o["train_fraction"]), cfg.seed)
    t = cfg.circuit(n_qubits=ds.d, d=ds.d)
    rep = fit(t, ds, cfg.train)
    _write_training(out, "", rep, {"template": t.to_json(), "classes": list(table.classes)})
    test = ds.test()
    pred = predict_classes(t, rep.best_params, test.inputs, ds.n_classes)
    write_rows(out / "predictions.csv", [f"x{i}" for i in range(ds.d)] + ["target", "prediction"],
               (list(x) + [int(y), int(p)] for x, y, p in zip(test.inputs, test.labels, pred)))
    return {"mean_test_accuracy": float(np.nanmean(rep.accuracy_test)),
            "std_test_accuracy": float(np.nanstd(rep.accuracy_test)),
            "mean_train_accuracy": float(np.mean(rep.accuracy_train)),
            "classes": list(table.classes), "n_train": len(ds.train()), "n_test": len(test)}


def synth_target(name: str, K: int) -> tuple:
    """(f, f_K) for the named demo target on [-pi, pi)."""
    if name == "sinc":
        f = qdata.sinc5
    elif name == "square_wave":
        def f(x):
            return qdata.square_wave(x, 2 * np.pi)
    elif name == "cos":
        f = np.cos
    elif name == "sin":
        f = np.sin
    else:
        raise InvalidArgument(f"unknown synthesis target {name!r}; expected one of {SYNTH_TARGETS}")
    return f, project(f, K)


def _synth_demo(cfg: ExperimentConfig, out: Path) -> dict:
    o = cfg.options
    f, fK = synth_target(o["target"], int(o["order"]))
    inner = None if o["inner_order"] is None else int(o["inner_order"])
    if o["ansatz"] == YZY:
        syn = synthesize_even_report(fK, inner)
    elif o["ansatz"] == WZW:
        syn = synthesize_any_report(fK, inner)
    else:
        raise InvalidArgument("synth_demo ansatz must be YZY or WZW")
    xs = _grid_1d(-np.pi, np.pi, cfg.grid_size)
    pred = expectation_z(syn.angles, xs)
    target = fK.real(xs)
    sup = float(np.max(np.abs(pred - target)))
    write_json(out / "angles.json", {**syn.to_json(), "series": fK.to_json(), "sup_error": sup})
    write_rows(out / "predictions.csv", ["x", "target", "prediction"], zip(xs, target, pred))
    return {"layers": syn.angles.L, "sup_error": sup, "bound": syn.bound, "within_bound": bool(sup <= syn.bound + 1e-6),
            "truncation_error": truncation_error(f, fK)}


def _spectrum_demo(cfg: ExperimentConfig, out: Path) -> dict:
    t = cfg.circuit()
    ds = qdata.gen_bivariate(int(cfg.options["n_points"]), seed=cfg.seed)
    rep = fit(t, ds, cfg.train)
    _write_training(out, "", rep, {"template": t.to_json()})
    spec = empirical_spectrum(lambda pts: evaluate_batch(t, rep.best_params, pts), t.d, cfg.grid_size,
                              max_frequency=t.K)
    header = [f"n{i + 1}" for i in range(t.d)] + ["magnitude"]
    write_rows(out / "spectrum.csv", header, (list(fr) + [m] for fr, m in spec.rows()))
    return {**spectrum_spec(t.d, t.K).report(), "max_outside": spec.max_outside(t.K),
            "support": [list(s) for s in spec.support(1e-8)]}


RUNNERS = {
    "sinc": _sinc, "square_wave": _square_wave, "bivariate": _bivariate, "parallel_2q": _parallel_2q,
    "iris": _iris, "synth_demo": _synth_demo, "spectrum_demo": _spectrum_demo,
}


def run_experiment(config: ExperimentConfig, output_dir=None) -> tuple[Path, dict]:
    """Run one experiment and atomically publish its artifacts; returns (directory, summary)."""
    out = Path(output_dir) if output_dir is not None else resolve_output_dir(config)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        t0 = time.perf_counter()
        summary = RUNNERS[config.experiment](config, tmp)
        summary = {"experiment": config.experiment, "config": config.to_json(),
                   "seconds": time.perf_counter() - t0, **summary}
        write_json(tmp / "summary.json", summary)
        old = None
        if out.exists():
            old = out.with_name(f".{out.name}.old-{os.getpid()}")
            os.replace(out, old)
        os.replace(tmp, out)
        if old is not None:
            shutil.rmtree(old, ignore_errors=True)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out, summary


def default_config(name: str, **overrides) -> ExperimentConfig:
    return ExperimentConfig.from_json({"experiment": name, **overrides})


def with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(config, seed=seed, train=replace(config.train, seed=seed))
