"""Exact statevector simulation for small circuits.

Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of the
amplitude index: on two qubits ``|10>`` is index 2.  Gates are plain 2x2
complex numpy arrays.  :class:`StateVector` is value-semantic; every apply
function returns a new state.

The ``batch_*`` kernels operate on arrays of shape ``(..., 2**n)`` and accept
gate stacks of shape ``(..., 2, 2)`` that broadcast against the leading
axes.  The model evaluator uses them to run many parameter sets and inputs
in one pass.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import cos, isfinite, sin

import numpy as np

from .errors import InvalidArgument

MAX_QUBITS = 16

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _finite(*values):
    for v in values:
        if not isfinite(v):
            raise InvalidArgument(f"non-finite angle {v!r}")


def rot_gate(axis: str, angle: float) -> np.ndarray:
    """Pauli rotation exp(-i * angle * P / 2) for P in {X, Y, Z}."""
    _finite(angle)
    c, s = cos(angle / 2), sin(angle / 2)
    axis = axis.upper()
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "Z":
        return np.array([[complex(c, -s), 0], [0, complex(c, s)]], dtype=complex)
    raise InvalidArgument(f"unknown rotation axis {axis!r}")


def u3_gate(theta: float, phi: float, lam: float) -> np.ndarray:
    """Generic single-qubit rotation.

    Equal to ``exp(i(phi+lam)/2) RZ(phi) RY(theta) RZ(lam)``, so the three
    angles each enter through exactly one Pauli rotation.
    """
    _finite(theta, phi, lam)
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
        ],
        dtype=complex,
    )


def cnot_matrix(control: int, target: int, n: int) -> np.ndarray:
    """Dense 2**n permutation matrix of CNOT (used by oracles and build_unitary)."""
    _check_pair(control, target, n)
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    cbit, tbit = 1 << (n - 1 - control), 1 << (n - 1 - target)
    for i in range(dim):
        j = i ^ tbit if i & cbit else i
        out[j, i] = 1.0
    return out


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size != 1 << n or not 1 <= n <= MAX_QUBITS:
            raise InvalidArgument(f"amplitude count {amps.size} is not 2**n with 1 <= n <= {MAX_QUBITS}")
        if not np.all(np.isfinite(amps)):
            raise InvalidArgument("non-finite amplitude")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise InvalidArgument(f"state norm {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def basis(cls, bits: str) -> "StateVector":
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(amps)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True)
class Observable:
    """Tensor product of Pauli factors, one character per qubit, e.g. ``"ZI"``."""

    paulis: str

    def __post_init__(self):
        p = self.paulis.upper()
        if not p or any(ch not in PAULI for ch in p):
            raise InvalidArgument(f"bad Pauli string {self.paulis!r}")
        object.__setattr__(self, "paulis", p)

    @property
    def n(self) -> int:
        return len(self.paulis)

    @classmethod
    def z(cls, qubit: int, n: int) -> "Observable":
        if not 0 <= qubit < n:
            raise InvalidArgument(f"qubit {qubit} out of range for {n} qubits")
        return cls("".join("Z" if q == qubit else "I" for q in range(n)))

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for ch in self.paulis:
            out = np.kron(out, PAULI[ch])
        return out


def _check_target(target, n):
    if not 0 <= target < n:
        raise IndexError(f"qubit {target} out of range for {n} qubits")


def _check_pair(control, target, n):
    if control == target:
        raise InvalidArgument("control and target must differ")
    if not (0 <= control < n and 0 <= target < n):
        raise InvalidArgument(f"qubits ({control}, {target}) out of range for {n} qubits")


def apply_single(state: StateVector, gate: np.ndarray, target: int) -> StateVector:
    _check_target(target, state.n)
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2):
        raise InvalidArgument(f"gate shape {gate.shape} is not (2, 2)")
    return StateVector(batch_apply_single(state.amplitudes, gate, target, state.n))


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    _check_pair(control, target, state.n)
    return StateVector(batch_apply_cnot(state.amplitudes, control, target, state.n))


def expect(state: StateVector, obs: Observable) -> float:
    if obs.n != state.n:
        raise InvalidArgument(f"observable on {obs.n} qubits, state on {state.n}")
    val = batch_expect(state.amplitudes, obs)
    if abs(val.imag) > 1e-12:
        raise InvalidArgument(f"expectation has imaginary residue {val.imag!r}")
    return float(val.real)


# -- batched kernels ---------------------------------------------------------

def batch_apply_single(amps, gate, target, n):
    """Apply ``gate`` (shape (..., 2, 2)) to qubit ``target`` of ``amps`` (shape (..., 2**n))."""
    batch = amps.shape[:-1]
    s = amps.reshape(batch + (1 << target, 2, 1 << (n - target - 1)))
    g = np.asarray(gate)[..., None, None]
    s0, s1 = s[..., 0, :], s[..., 1, :]
    out = np.stack(
        [g[..., 0, 0, :, :] * s0 + g[..., 0, 1, :, :] * s1,
         g[..., 1, 0, :, :] * s0 + g[..., 1, 1, :, :] * s1],
        axis=-2,
    )
    return out.reshape(out.shape[:-3] + (1 << n,))


def batch_apply_phase(amps, phase, target, n):
    """Apply diag(conj(phase), phase) to qubit ``target``; RZ(a) has phase exp(i a / 2)."""
    batch = amps.shape[:-1]
    s = amps.reshape(batch + (1 << target, 2, 1 << (n - target - 1)))
    p = np.asarray(phase)[..., None, None]
    out = np.stack([np.conj(p) * s[..., 0, :], p * s[..., 1, :]], axis=-2)
    return out.reshape(out.shape[:-3] + (1 << n,))


def batch_apply_cnot(amps, control, target, n):
    batch = amps.shape[:-1]
    s = amps.reshape(batch + (2,) * n).copy()
    lo = [slice(None)] * n
    hi = [slice(None)] * n
    lo[control] = hi[control] = 1
    lo[target], hi[target] = 0, 1
    lo, hi = (Ellipsis, *lo), (Ellipsis, *hi)
    s[lo], s[hi] = s[hi].copy(), s[lo].copy()
    return s.reshape(batch + (1 << n,))


def batch_expect_z(amps, qubit, n):
    """Real <Z_qubit> over the leading axes of ``amps``."""
    p = (amps.real ** 2 + amps.imag ** 2).reshape(amps.shape[:-1] + (1 << qubit, 2, -1))
    return p[..., 0, :].sum(axis=(-2, -1)) - p[..., 1, :].sum(axis=(-2, -1))


def batch_expect(amps, obs: Observable):
    """Complex <psi|M|psi> over the leading axes (imaginary part is rounding)."""
    n = obs.n
    if set(obs.paulis) <= {"I", "Z"}:
        p = amps.real ** 2 + amps.imag ** 2
        sign = np.ones(1 << n)
        for q, ch in enumerate(obs.paulis):
            if ch == "Z":
                bit = (np.arange(1 << n) >> (n - 1 - q)) & 1
                sign = sign * (1 - 2 * bit)
        return (p * sign).sum(axis=-1).astype(complex)
    phi = amps
    for q, ch in enumerate(obs.paulis):
        if ch != "I":
            phi = batch_apply_single(phi, PAULI[ch], q, n)
    return np.sum(np.conj(amps) * phi, axis=-1)
