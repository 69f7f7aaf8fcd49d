"""Re-uploading circuit templates and model evaluation.

A :class:`CircuitTemplate` is compiled into a flat list of operations in
time order (first applied first).  Parameter vectors are flat float arrays
whose layout is part of the public contract:

* YZY: ``theta_0 .. theta_L`` (same as :class:`qsp.AngleSet`).
* WZW: ``theta_0, phi_0, theta_1, phi_1, .., theta_L, phi_L, varphi``.
* UZU / MULTIVARIATE_UZU: ``(theta_j, phi_j, lam_j)`` for j = 0..L.
* PARALLEL_ENTANGLEMENT: per trainable block (time order), per sub-block,
  per qubit, ``(theta, phi, lam)``.
* PARALLEL_ENTANGLEMENT_UTB: per trainable block, per sub-block, the 15
  angles of one universal two-qubit block (see :data:`UTB_LAYOUT`).
* Hybrid templates append ``w_1 .. w_d`` after the angles.

For the single-qubit ansatzes block 0 is the leftmost factor of the written
product, i.e. it is applied last.  For the Parallel-Entanglement models
block 0 is applied first, matching the left-to-right circuit drawing.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import qsim
from .errors import InvalidArgument
from .qsp import WZW, YZY, AngleSet

UZU = "UZU"
MULTIVARIATE_UZU = "MULTIVARIATE_UZU"
PARALLEL_ENTANGLEMENT = "PARALLEL_ENTANGLEMENT"
PARALLEL_ENTANGLEMENT_UTB = "PARALLEL_ENTANGLEMENT_UTB"
ANSATZES = (YZY, WZW, UZU, MULTIVARIATE_UZU, PARALLEL_ENTANGLEMENT, PARALLEL_ENTANGLEMENT_UTB)
SINGLE_QUBIT = (YZY, WZW, UZU, MULTIVARIATE_UZU)

DENSE_MAX_QUBITS = 3

# Universal two-qubit block built from three CNOTs (offsets into its 15 angles):
# U3 (x) U3, CNOT(1->0), RZ (x) RY, CNOT(0->1), I (x) RY, CNOT(1->0), U3 (x) U3
UTB_LAYOUT = (
    ("u3", 0, 0), ("u3", 1, 3),
    ("cnot", 1, 0),
    ("rz", 0, 6), ("ry", 1, 7),
    ("cnot", 0, 1),
    ("ry", 1, 8),
    ("cnot", 1, 0),
    ("u3", 0, 9), ("u3", 1, 12),
)
UTB_PARAMS = 15


@dataclass(frozen=True)
class CircuitTemplate:
    ansatz: str
    n_qubits: int = 1
    L: int = 1
    d: int = 1
    layout: tuple = field(default=())
    d_tr: int = 1
    hybrid: bool = False

    def __post_init__(self):
        if self.ansatz not in ANSATZES:
            raise InvalidArgument(f"unknown ansatz {self.ansatz!r}")
        if self.L < 0 or self.d < 1 or self.n_qubits < 1 or self.d_tr < 1:
            raise InvalidArgument("need L >= 0, d >= 1, n_qubits >= 1, d_tr >= 1")
        layout = tuple(int(i) for i in self.layout)
        if self.ansatz in SINGLE_QUBIT and self.n_qubits != 1:
            raise InvalidArgument(f"{self.ansatz} is a single-qubit ansatz")
        if self.ansatz == MULTIVARIATE_UZU:
            if not layout:
                if self.L % self.d:
                    raise InvalidArgument(f"L = {self.L} is not a multiple of d = {self.d}")
                layout = tuple(j % self.d for j in range(self.L))
            if len(layout) != self.L or any(not 0 <= i < self.d for i in layout):
                raise InvalidArgument("layout must assign each of the L encoding slots a dimension in [0, d)")
            counts = np.bincount(layout, minlength=self.d) if layout else np.zeros(self.d, int)
            if np.any(counts != counts[0]):
                raise InvalidArgument(f"every dimension must be uploaded equally often, got counts {counts.tolist()}")
        elif layout:
            raise InvalidArgument(f"layout only applies to {MULTIVARIATE_UZU}")
        if self.ansatz in (YZY, WZW, UZU) and self.d != 1 and not self.hybrid:
            raise InvalidArgument(f"{self.ansatz} encodes a scalar input; use hybrid weights or {MULTIVARIATE_UZU}")
        if self.ansatz in (PARALLEL_ENTANGLEMENT, PARALLEL_ENTANGLEMENT_UTB):
            if self.n_qubits != self.d:
                raise InvalidArgument("Parallel-Entanglement needs n_qubits = d")
            if self.hybrid:
                raise InvalidArgument("hybrid weights are only defined for single-qubit ansatzes")
        if self.ansatz == PARALLEL_ENTANGLEMENT_UTB and self.n_qubits != 2:
            raise InvalidArgument("the universal trainable block is defined for two qubits")
        object.__setattr__(self, "layout", layout)

    @property
    def K(self) -> int:
        """Uploads per input dimension."""
        if self.ansatz == MULTIVARIATE_UZU:
            return self.L // self.d
        return self.L

    def to_json(self) -> dict:
        return {"ansatz": self.ansatz, "n_qubits": self.n_qubits, "layers": self.L, "d": self.d,
                "layout": list(self.layout), "d_tr": self.d_tr, "hybrid": self.hybrid}

    @classmethod
    def from_json(cls, obj) -> "CircuitTemplate":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(obj["ansatz"], int(obj.get("n_qubits", 1)), int(obj["layers"]), int(obj.get("d", 1)),
                   tuple(obj.get("layout", ())), int(obj.get("d_tr", 1)), bool(obj.get("hybrid", False)))


# -- compilation ----------------------------------------------------------------

def _angle_count(t: CircuitTemplate) -> int:
    if t.ansatz == YZY:
        return t.L + 1
    if t.ansatz == WZW:
        return 2 * t.L + 3
    if t.ansatz in (UZU, MULTIVARIATE_UZU):
        return 3 * (t.L + 1)
    if t.ansatz == PARALLEL_ENTANGLEMENT:
        return 3 * t.n_qubits * t.d_tr * (t.L + 1)
    return UTB_PARAMS * t.d_tr * (t.L + 1)


def param_count(template: CircuitTemplate) -> int:
    return _angle_count(template) + (template.d if template.hybrid else 0)


def shift_mask(template: CircuitTemplate) -> np.ndarray:
    """True for entries that are Pauli-rotation angles (parameter-shift applies)."""
    mask = np.zeros(param_count(template), dtype=bool)
    mask[:_angle_count(template)] = True
    return mask


def _ladder(n):
    if n == 1:
        return []
    if n == 2:
        return [("cnot", 0, 1), ("cnot", 1, 0)]
    return [("cnot", q, q + 1) for q in range(n - 1)] + [("cnot", n - 1, 0)]


def compile_ops(t: CircuitTemplate) -> list:
    """Operations in time order.

    ``("u3", q, i)`` reads params[i:i+3]; ``("ry"|"rz", q, i)`` reads params[i];
    ``("enc", q, k)`` is RZ of input component k, or of w.x when k is None;
    ``("cnot", c, t)``.
    """
    enc = None if t.hybrid else 0
    ops = []
    if t.ansatz == YZY:
        for j in range(t.L, -1, -1):
            ops.append(("ry", 0, j))
            if j:
                ops.append(("enc", 0, enc))
    elif t.ansatz == WZW:
        for j in range(t.L, -1, -1):
            ops += [("rz", 0, 2 * j + 1), ("ry", 0, 2 * j)]
            if j:
                ops.append(("enc", 0, enc))
        ops.append(("rz", 0, 2 * t.L + 2))
    elif t.ansatz in (UZU, MULTIVARIATE_UZU):
        for j in range(t.L, -1, -1):
            ops.append(("u3", 0, 3 * j))
            if j:
                k = t.layout[j - 1] if t.ansatz == MULTIVARIATE_UZU and not t.hybrid else enc
                ops.append(("enc", 0, k))
    else:
        n = t.n_qubits
        per_sub = 3 * n if t.ansatz == PARALLEL_ENTANGLEMENT else UTB_PARAMS
        i = 0
        for block in range(t.L + 1):
            for _ in range(t.d_tr):
                if t.ansatz == PARALLEL_ENTANGLEMENT:
                    ops += [("u3", q, i + 3 * q) for q in range(n)] + _ladder(n)
                else:
                    ops += [(op, a, b if op == "cnot" else i + b) for op, a, b in UTB_LAYOUT]
                i += per_sub
            if block < t.L:
                ops += [("enc", q, q) for q in range(n)]
    return ops


# -- evaluation -----------------------------------------------------------------

def u3_stack(theta, phi, lam) -> np.ndarray:
    """Stack of U3 matrices, shape ``theta.shape + (2, 2)``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    ep, el = np.exp(1j * phi), np.exp(1j * lam)
    return np.stack([np.stack([c + 0j, -el * s], -1), np.stack([ep * s, ep * el * c], -1)], -2)


def ry_stack(theta) -> np.ndarray:
    c, s = np.cos(theta / 2) + 0j, np.sin(theta / 2) + 0j
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def _check(template, params, X):
    params = np.asarray(params, dtype=float)
    if params.shape[-1] != param_count(template):
        raise InvalidArgument(f"expected {param_count(template)} parameters, got {params.shape[-1]}")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if template.d == 1 else X.reshape(1, -1)
    if X.shape[-1] != template.d:
        raise InvalidArgument(f"inputs have dimension {X.shape[-1]}, template expects {template.d}")
    if not (np.all(np.isfinite(params)) and np.all(np.isfinite(X))):
        raise InvalidArgument("non-finite parameter or input")
    return params, X


def run_states(template: CircuitTemplate, params, X) -> np.ndarray:
    """Final states for every parameter set and input.

    ``params`` has shape ``(S, P)`` (or ``(P,)``), ``X`` shape ``(B, d)``; the
    result has shape ``(S, B, 2**n)`` (``(B, 2**n)`` for 1-D params).
    """
    params, X = _check(template, params, X)
    single = params.ndim == 1
    P = params.reshape(-1, params.shape[-1])
    n = template.n_qubits
    S, B = P.shape[0], X.shape[0]
    amps = np.zeros((S, B, 1 << n), dtype=complex)
    amps[..., 0] = 1.0
    if template.hybrid:
        wx = P[:, _angle_count(template):] @ X.T  # (S, B)
    for op, q, i in compile_ops(template):
        if op == "u3":
            amps = qsim.batch_apply_single(amps, u3_stack(P[:, i], P[:, i + 1], P[:, i + 2])[:, None], q, n)
        elif op == "ry":
            amps = qsim.batch_apply_single(amps, ry_stack(P[:, i])[:, None], q, n)
        elif op == "rz":
            amps = qsim.batch_apply_phase(amps, np.exp(0.5j * P[:, i])[:, None], q, n)
        elif op == "enc":
            angle = wx if i is None else X[None, :, i]
            amps = qsim.batch_apply_phase(amps, np.exp(0.5j * angle), q, n)
        else:
            amps = qsim.batch_apply_cnot(amps, q, i, n)
    return amps[0] if single else amps


def expectations(template: CircuitTemplate, params, X, qubits=(0,)) -> np.ndarray:
    """<Z_q> for each q in ``qubits``; shape ``(..., B, len(qubits))``."""
    amps = run_states(template, params, X)
    n = template.n_qubits
    for q in qubits:
        if not 0 <= q < n:
            raise InvalidArgument(f"qubit {q} out of range for {n} qubits")
    return np.stack([qsim.batch_expect_z(amps, q, n) for q in qubits], axis=-1)


def evaluate_batch(template: CircuitTemplate, params, X, obs: qsim.Observable | None = None) -> np.ndarray:
    """Model outputs for a batch of inputs (default observable Z on qubit 0)."""
    if obs is None:
        return expectations(template, params, X)[..., 0]
    if obs.n != template.n_qubits:
        raise InvalidArgument(f"observable on {obs.n} qubits, template has {template.n_qubits}")
    return qsim.batch_expect(run_states(template, params, X), obs).real


def evaluate(template: CircuitTemplate, params, x, obs: qsim.Observable | None = None) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != template.d:
        raise InvalidArgument(f"input has dimension {x.size}, template expects {template.d}")
    return float(evaluate_batch(template, np.asarray(params, dtype=float), x.reshape(1, -1), obs)[0])


def build_unitary(template: CircuitTemplate, params, x) -> np.ndarray:
    """Dense circuit unitary from explicit Kronecker products (n <= 3)."""
    n = template.n_qubits
    if n > DENSE_MAX_QUBITS:
        raise InvalidArgument(f"dense unitaries are limited to {DENSE_MAX_QUBITS} qubits")
    params, X = _check(template, params, np.atleast_1d(np.asarray(x, dtype=float)))
    if params.ndim != 1 or X.shape[0] != 1:
        raise InvalidArgument("build_unitary takes one parameter vector and one input")
    x = X[0]
    wx = float(params[_angle_count(template):] @ x) if template.hybrid else None

    def lift(g, q):
        out = np.ones((1, 1), dtype=complex)
        for k in range(n):
            out = np.kron(out, g if k == q else np.eye(2))
        return out

    U = np.eye(1 << n, dtype=complex)
    for op, q, i in compile_ops(template):
        if op == "u3":
            G = lift(qsim.u3_gate(*params[i:i + 3]), q)
        elif op == "ry":
            G = lift(qsim.rot_gate("Y", params[i]), q)
        elif op == "rz":
            G = lift(qsim.rot_gate("Z", params[i]), q)
        elif op == "enc":
            G = lift(qsim.rot_gate("Z", wx if i is None else x[i]), q)
        else:
            G = qsim.cnot_matrix(q, i, n)
        U = G @ U
    return U


def encode_hybrid(x, weights) -> float:
    """Argument w.x of the weighted encoding gate RZ(w.x)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if x.shape != w.shape:
        raise InvalidArgument(f"input length {x.size} and weight length {w.size} differ")
    return float(x @ w)


def init_params(template: CircuitTemplate, rng: np.random.Generator) -> np.ndarray:
    """Angles uniform on [0, 2pi]; hybrid weights start at 1 (the native encoding)."""
    p = rng.uniform(0.0, 2 * np.pi, param_count(template))
    p[_angle_count(template):] = 1.0
    return p


def angles_to_params(angles: AngleSet) -> np.ndarray:
    if angles.ansatz == YZY:
        return np.array(angles.theta, dtype=float)
    inter = np.stack([angles.theta, angles.phi], axis=1).reshape(-1)
    return np.concatenate([inter, [angles.varphi]])


def params_to_angles(template: CircuitTemplate, params) -> AngleSet:
    params = np.asarray(params, dtype=float)
    if template.ansatz == YZY:
        return AngleSet(YZY, params[:template.L + 1])
    if template.ansatz == WZW:
        a = params[:2 * template.L + 2].reshape(-1, 2)
        return AngleSet(WZW, a[:, 0], a[:, 1], params[2 * template.L + 2])
    raise InvalidArgument(f"{template.ansatz} has no polynomial-pair angle set")
