"""MSE training of circuit templates with parameter-shift gradients and Adam."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidArgument, NumericalError
from .models import CircuitTemplate, expectations, init_params, param_count, shift_mask

FD_STEP = 1e-5
PCA_EIG_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Dataset:
    """Inputs ``(N, d)``, targets ``(N, m)`` and a ``train``/``test`` tag per row."""

    inputs: np.ndarray
    targets: np.ndarray
    split: np.ndarray | None = None
    n_classes: int = 0  # > 0 for one-hot (+-1) classification targets

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        Y = np.asarray(self.targets, dtype=float)
        if Y.ndim == 1:
            Y = Y.reshape(-1, 1)
        if X.shape[0] != Y.shape[0]:
            raise InvalidArgument(f"{X.shape[0]} inputs but {Y.shape[0]} targets")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InvalidArgument("non-finite data")
        if np.any(np.abs(Y) > 1 + 1e-12):
            raise InvalidArgument("targets must lie in [-1, 1]")
        split = np.full(X.shape[0], "train") if self.split is None else np.asarray(self.split, dtype=str)
        if split.shape != (X.shape[0],) or not set(split.tolist()) <= {"train", "test"}:
            raise InvalidArgument("split tags must be 'train' or 'test', one per row")
        for a in (X, Y, split):
            a.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", Y)
        object.__setattr__(self, "split", split)

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    def subset(self, tag: str) -> "Dataset":
        m = self.split == tag
        return Dataset(self.inputs[m], self.targets[m], self.split[m], self.n_classes)

    def train(self) -> "Dataset":
        return self.subset("train")

    def test(self) -> "Dataset":
        return self.subset("test")

    @property
    def labels(self) -> np.ndarray:
        if not self.n_classes:
            raise InvalidArgument("dataset has no class labels")
        return np.argmax(self.targets, axis=1)


def one_hot_pm(labels, n_classes: int) -> np.ndarray:
    """+1 at the class index, -1 elsewhere."""
    labels = np.asarray(labels, dtype=int)
    Y = -np.ones((labels.size, n_classes))
    Y[np.arange(labels.size), labels] = 1.0
    return Y


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    iterations: int = 100
    batch_size: int = 20
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    instances: int = 5

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidArgument("learning_rate must be positive")
        if self.iterations < 0 or self.batch_size < 1 or self.instances < 1:
            raise InvalidArgument("iterations >= 0, batch_size >= 1 and instances >= 1 required")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.epsilon > 0):
            raise InvalidArgument("bad Adam hyperparameters")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj) -> "TrainConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(**obj)


@dataclass
class TrainReport:
    curves: np.ndarray  # (instances, iterations) mini-batch loss before each step
    final_train: np.ndarray  # full training-split loss per instance
    final_test: np.ndarray  # test-split loss per instance (nan without test rows)
    initial_train: np.ndarray
    params: np.ndarray  # (instances, P) final parameters
    seconds: np.ndarray
    accuracy_train: np.ndarray | None = None
    accuracy_test: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def best(self) -> int:
        return int(np.argmin(self.final_train))

    @property
    def best_params(self) -> np.ndarray:
        return self.params[self.best]

    def to_json(self) -> dict:
        def arr(a):
            return None if a is None else [None if not np.isfinite(v) else float(v) for v in np.ravel(a)]

        return {
            "instances": int(self.curves.shape[0]),
            "iterations": int(self.curves.shape[1]),
            "best_instance": self.best,
            "final_train_loss": arr(self.final_train),
            "final_test_loss": arr(self.final_test),
            "initial_train_loss": arr(self.initial_train),
            "accuracy_train": arr(self.accuracy_train),
            "accuracy_test": arr(self.accuracy_test),
            "seconds": arr(self.seconds),
            "best_params": self.best_params.tolist(),
            **self.extra,
        }

    def write_curve_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "instance", "loss"])
            for k in range(self.curves.shape[0]):
                for i, v in enumerate(self.curves[k]):
                    w.writerow([i, k, repr(float(v))])


# -- loss and gradients ---------------------------------------------------------------

def _batch(template: CircuitTemplate, batch):
    if isinstance(batch, Dataset):
        X, Y = batch.inputs, batch.targets
    else:
        X, Y = batch
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, template.d)
        if Y.ndim == 1:
            Y = Y.reshape(-1, 1)
    if X.shape[0] == 0:
        raise InvalidArgument("empty batch")
    if Y.shape[1] > template.n_qubits:
        raise InvalidArgument(f"{Y.shape[1]} outputs but only {template.n_qubits} qubits to measure")
    return X, Y


def _outputs(template, params, X, m):
    return expectations(template, params, X, tuple(range(m)))


def mse_loss(template: CircuitTemplate, params, batch) -> float:
    """Mean over samples and outputs of (<Z_i> - target_i)^2."""
    X, Y = _batch(template, batch)
    return float(np.mean((_outputs(template, params, X, Y.shape[1]) - Y) ** 2))


def _shift_grad(template, params, X, Y):
    """(loss, gradient) with all +-pi/2 shifts evaluated in one batched pass."""
    params = np.asarray(params, dtype=float)
    idx = np.flatnonzero(shift_mask(template))
    k = idx.size
    stack = np.repeat(params[None, :], 2 * k + 1, axis=0)
    stack[1 + np.arange(k), idx] += np.pi / 2
    stack[1 + k + np.arange(k), idx] -= np.pi / 2
    out = _outputs(template, stack, X, Y.shape[1])  # (2k+1, B, m)
    resid = out[0] - Y
    loss = float(np.mean(resid ** 2))
    dfdp = 0.5 * (out[1:k + 1] - out[k + 1:])  # (k, B, m)
    grad = np.zeros(params.size)
    grad[idx] = 2.0 * np.mean(dfdp * resid[None], axis=(1, 2))
    rest = np.flatnonzero(~shift_mask(template))
    if rest.size:
        grad[rest] = _fd_grad(template, params, X, Y, rest)
    return loss, grad


def _fd_grad(template, params, X, Y, idx, h=FD_STEP):
    stack = np.repeat(params[None, :], 2 * idx.size, axis=0)
    stack[np.arange(idx.size), idx] += h
    stack[idx.size + np.arange(idx.size), idx] -= h
    out = _outputs(template, stack, X, Y.shape[1])
    loss = np.mean((out - Y[None]) ** 2, axis=(1, 2))
    return (loss[:idx.size] - loss[idx.size:]) / (2 * h)


def grad_parameter_shift(template: CircuitTemplate, params, batch) -> np.ndarray:
    """Gradient of :func:`mse_loss`; angles by the shift rule, hybrid weights by central differences."""
    X, Y = _batch(template, batch)
    return _shift_grad(template, params, X, Y)[1]


def grad_finite_difference(template: CircuitTemplate, params, batch, h: float = FD_STEP) -> np.ndarray:
    X, Y = _batch(template, batch)
    params = np.asarray(params, dtype=float)
    return _fd_grad(template, params, X, Y, np.arange(params.size), h)


# -- optimizer ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(params, grads, state: AdamState, config: TrainConfig):
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise InvalidArgument("parameter, gradient and state shapes differ")
    t = state.t + 1
    m = config.beta1 * state.m + (1 - config.beta1) * grads
    v = config.beta2 * state.v + (1 - config.beta2) * grads ** 2
    mhat = m / (1 - config.beta1 ** t)
    vhat = v / (1 - config.beta2 ** t)
    new = params - config.learning_rate * mhat / (np.sqrt(vhat) + config.epsilon)
    return new, AdamState(m, v, t)


# -- training loop ---------------------------------------------------------------------

def _batches(rng, n, size):
    """Endless shuffled mini-batches, reshuffled every epoch."""
    while True:
        perm = rng.permutation(n)
        for s in range(0, n, size):
            yield perm[s:s + size]


def _train_one(template, X, Y, config, rng):
    params = init_params(template, rng)
    state = AdamState.zeros(params.size)
    curve = np.empty(config.iterations)
    batches = _batches(rng, X.shape[0], config.batch_size)
    for it in range(config.iterations):
        b = next(batches)
        loss, g = _shift_grad(template, params, X[b], Y[b])
        if not np.isfinite(loss) or not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite loss or gradient at iteration {it}")
        curve[it] = loss
        params, state = adam_step(params, g, state, config)
    return params, curve


def fit(template: CircuitTemplate, dataset: Dataset, config: TrainConfig) -> TrainReport:
    """Independent restarts of mini-batched Adam on the training split.

    Instance k draws its initial angles and batch order from
    ``np.random.default_rng([config.seed, k])``.
    """
    if dataset.d != template.d:
        raise InvalidArgument(f"dataset dimension {dataset.d} does not match template d = {template.d}")
    train, test = dataset.train(), dataset.test()
    if len(train) == 0:
        raise InvalidArgument("no training rows")
    Xtr, Ytr = _batch(template, train)
    K = config.instances
    curves = np.empty((K, config.iterations))
    params = np.empty((K, param_count(template)))
    secs, initial = np.empty(K), np.empty(K)
    for k in range(K):
        rng = np.random.default_rng([config.seed, k])
        t0 = time.perf_counter()
        p, curve = _train_one(template, Xtr, Ytr, config, rng)
        secs[k] = time.perf_counter() - t0
        curves[k], params[k] = curve, p
        initial[k] = mse_loss(template, init_params(template, np.random.default_rng([config.seed, k])), train)
    final_train = np.array([mse_loss(template, p, train) for p in params])
    final_test = np.array([mse_loss(template, p, test) if len(test) else np.nan for p in params])
    report = TrainReport(curves, final_train, final_test, initial, params, secs)
    if dataset.n_classes:
        report.accuracy_train = np.array([accuracy(template, p, train) for p in params])
        report.accuracy_test = np.array([accuracy(template, p, test) if len(test) else np.nan for p in params])
    return report


# -- classification --------------------------------------------------------------------

def _argmax_first(values) -> np.ndarray:
    # np.argmax already returns the lowest index among ties
    return np.argmax(np.asarray(values), axis=-1)


def classify_head(template: CircuitTemplate, params, x, n_classes: int) -> int:
    """argmax_i <Z_i> over qubits 0..n_classes-1; ties go to the lowest index."""
    if n_classes > template.n_qubits:
        raise InvalidArgument(f"{n_classes} classes need at least that many qubits, template has {template.n_qubits}")
    z = expectations(template, params, np.atleast_2d(np.asarray(x, dtype=float)), tuple(range(n_classes)))
    return int(_argmax_first(z[0]))


def predict_classes(template: CircuitTemplate, params, X, n_classes: int) -> np.ndarray:
    if n_classes > template.n_qubits:
        raise InvalidArgument(f"{n_classes} classes need at least that many qubits, template has {template.n_qubits}")
    return _argmax_first(expectations(template, params, X, tuple(range(n_classes))))


def accuracy(template: CircuitTemplate, params, data: Dataset) -> float:
    pred = predict_classes(template, params, data.inputs, data.n_classes)
    return float(np.mean(pred == data.labels))


# -- PCA ------------------------------------------------------------------------------------

def pca_reduce(rows, out_dim: int) -> np.ndarray:
    """Projection of centered rows onto the top ``out_dim`` covariance eigenvectors.

    Each component is signed so that its largest-magnitude entry is positive.
    Directions with eigenvalue below PCA_EIG_TOL (relative to the largest)
    project to zero.
    """
    A = np.asarray(rows, dtype=float)
    if A.ndim != 2 or not 1 <= out_dim <= A.shape[1]:
        raise InvalidArgument(f"out_dim must be in [1, {A.shape[1] if A.ndim == 2 else '?'}]")
    C = A - A.mean(axis=0)
    cov = C.T @ C / max(A.shape[0] - 1, 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:out_dim]
    vals, vecs = vals[order], vecs[:, order]
    big = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.sign(vecs[big, np.arange(out_dim)])
    top = vals[0] if vals.size and vals[0] > 0 else 1.0
    vecs[:, vals < PCA_EIG_TOL * top] = 0.0
    return C @ vecs
