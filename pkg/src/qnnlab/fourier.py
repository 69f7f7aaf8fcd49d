"""Truncated Fourier series, truncation error and frequency spectra.

The series convention is ``s(x) = sum_{|n|<=K} c_n exp(2 pi i n x / T)`` with
``c_n = (1/T) int_T f(x) exp(-2 pi i n x / T) dx``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, InvalidArgument

TWO_PI = 2 * np.pi


def quadrature_points(K: int) -> int:
    return max(4096, 64 * K)


@dataclass(frozen=True, eq=False)
class FourierSeries:
    coeffs: np.ndarray
    period: float = TWO_PI

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size % 2 == 0:
            raise InvalidArgument("coefficient vector must have length 2K+1")
        if not self.period > 0:
            raise InvalidArgument("period must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def K(self) -> int:
        return (self.coeffs.size - 1) // 2

    @classmethod
    def from_dict(cls, terms: dict, period: float = TWO_PI) -> "FourierSeries":
        K = max((abs(int(n)) for n in terms), default=0)
        c = np.zeros(2 * K + 1, dtype=complex)
        for n, v in terms.items():
            c[int(n) + K] += v
        return cls(c, period)

    def __getitem__(self, n: int) -> complex:
        return complex(self.coeffs[n + self.K]) if abs(n) <= self.K else 0j

    def is_real_valued(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1]))) < tol)

    def is_even(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.coeffs - self.coeffs[::-1])) < tol)

    def padded(self, K: int) -> "FourierSeries":
        if K >= self.K:
            return FourierSeries(np.pad(self.coeffs, K - self.K), self.period)
        return FourierSeries(self.coeffs[self.K - K: self.K + K + 1], self.period)

    def __call__(self, x):
        return eval_series(self, x)

    def real(self, x):
        return np.real(eval_series(self, x))

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "period": self.period,
            "coeffs": [[n - self.K, float(c.real), float(c.imag)] for n, c in enumerate(self.coeffs)],
        }

    @classmethod
    def from_json(cls, obj) -> "FourierSeries":
        if isinstance(obj, str):
            obj = json.loads(obj)
        s = cls.from_dict({int(n): complex(re, im) for n, re, im in obj["coeffs"]}, float(obj.get("period", TWO_PI)))
        return s.padded(int(obj.get("K", s.K)))


def project(f, K: int, period: float = TWO_PI, n_points: int | None = None) -> FourierSeries:
    """Fourier coefficients of ``f`` up to order K by the periodic trapezoid rule.

    The N-point and N/2-point sums are combined by one Richardson step.

    ``f`` is called once with an array of sample points covering
    ``[-T/2, T/2)``.
    """
    if K < 0:
        raise InvalidArgument("K must be >= 0")
    N = n_points or quadrature_points(K)
    x = -period / 2 + period * np.arange(N) / N
    y = np.asarray(f(x))
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    if not np.all(np.isfinite(y)):
        raise DataError("non-finite sample in projection")
    ns = np.arange(-K, K + 1)
    terms = np.exp(-1j * TWO_PI / period * np.multiply.outer(ns, x)) * y
    c = terms.sum(axis=1) / N
    if N % 2 == 0:
        # targets like sinc on [-pi, pi) have a derivative jump at the seam, which
        # leaves an h^2 trapezoid error; one Richardson step against the
        # every-other-point rule removes it without new samples
        c = (4 * c - terms[:, 0::2].sum(axis=1) / (N // 2)) / 3
    if np.isrealobj(y):
        # exact Hermitian symmetry for real samples
        c = 0.5 * (c + np.conj(c[::-1]))
    return FourierSeries(c, period)


def eval_series(s: FourierSeries, x):
    x = np.asarray(x, dtype=float)
    ns = np.arange(-s.K, s.K + 1)
    vals = np.exp(1j * TWO_PI / s.period * np.multiply.outer(x, ns)) @ s.coeffs
    return complex(vals) if vals.ndim == 0 else vals


def truncation_error(f, s: FourierSeries, interval=None, n_points: int = 2048) -> float:
    """Uniform-norm distance sup |s(x) - f(x)| over a 2048-point grid.

    The default interval is one period centred on 0.
    """
    a, b = interval if interval is not None else (-s.period / 2, s.period / 2)
    x = np.linspace(a, b, n_points)
    vals = s(x)
    if s.is_real_valued():
        vals = vals.real
    return float(np.max(np.abs(vals - np.asarray(f(x)))))


@dataclass(frozen=True)
class SpectrumSpec:
    """Frequency set {-K..K}^d of a model uploading each of d inputs K times."""

    d: int
    K: int

    @property
    def size(self) -> int:
        return (2 * self.K + 1) ** self.d

    @property
    def dof(self) -> int:
        # trainable reals of a (Kd)-layer single-qubit U3 model
        return 3 * (self.K * self.d + 1)

    def omega(self):
        return itertools.product(range(-self.K, self.K + 1), repeat=self.d)

    def contains(self, freq) -> bool:
        return all(abs(int(w)) <= self.K for w in freq)

    def report(self) -> dict:
        return {"d": self.d, "K": self.K, "spectrum_size": self.size, "dof": self.dof,
                "dof_below_spectrum": self.dof < self.size}


def spectrum_spec(d: int, K: int) -> SpectrumSpec:
    if d < 1 or K < 1:
        raise InvalidArgument("need d >= 1 and K >= 1")
    return SpectrumSpec(d, K)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """DFT coefficients of a sampled model on the integer grid {-g/2..g/2-1}^d."""

    coeffs: np.ndarray
    grid_size: int

    @property
    def d(self) -> int:
        return self.coeffs.ndim

    def frequencies(self) -> np.ndarray:
        return np.arange(self.grid_size) - self.grid_size // 2

    def __getitem__(self, freq) -> complex:
        if np.ndim(freq) == 0:
            freq = (freq,)
        idx = tuple(int(w) + self.grid_size // 2 for w in freq)
        return complex(self.coeffs[idx])

    def max_outside(self, K: int) -> float:
        f = np.abs(self.frequencies())
        mask = np.zeros(self.coeffs.shape, dtype=bool)
        for axis in range(self.d):
            shape = [1] * self.d
            shape[axis] = -1
            mask |= (f > K).reshape(shape)
        vals = np.abs(self.coeffs[mask])
        return float(vals.max()) if vals.size else 0.0

    def support(self, tol: float = 1e-9):
        idx = np.argwhere(np.abs(self.coeffs) > tol)
        return [tuple(int(i) - self.grid_size // 2 for i in row) for row in idx]

    def rows(self):
        """(frequency tuple, magnitude) for every bin, in C order."""
        freqs = self.frequencies()
        for idx in np.ndindex(self.coeffs.shape):
            yield tuple(int(freqs[i]) for i in idx), float(abs(self.coeffs[idx]))


def empirical_spectrum(model_eval, d: int, grid_size: int = 64, max_frequency: int | None = None) -> Spectrum:
    """Multidimensional DFT of ``model_eval`` sampled on a uniform grid over [-pi, pi)^d.

    ``model_eval`` receives an ``(M, d)`` array of points and returns ``M``
    values.  With ``max_frequency`` given, grids that would alias it are
    rejected.
    """
    if d < 1 or d > 3:
        raise InvalidArgument("d must be 1, 2 or 3")
    if grid_size < 2 or grid_size & (grid_size - 1):
        raise InvalidArgument("grid_size must be a power of two")
    if max_frequency is not None and grid_size < 2 * max_frequency + 2:
        raise InvalidArgument(f"grid_size {grid_size} aliases frequency {max_frequency}")
    axis = -np.pi + TWO_PI * np.arange(grid_size) / grid_size
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    vals = np.asarray(model_eval(pts), dtype=complex).reshape((grid_size,) * d)
    c = np.fft.fftn(vals) / grid_size ** d
    # samples start at -pi: shift each axis by exp(i n pi) = (-1)^n
    sign = (-1.0) ** np.arange(grid_size)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = -1
        c = c * sign.reshape(shape)
    return Spectrum(np.fft.fftshift(c), grid_size)


def continuous_frequency_fit(x, y, omegas) -> tuple[float, np.ndarray]:
    """Best single non-negative frequency for y ~ a + b cos(w x) + c sin(w x).

    Scans ``omegas`` and returns ``(best_omega, residuals)`` where
    ``residuals[i]`` is the RMS least-squares residual at ``omegas[i]``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    res = []
    for w in omegas:
        A = np.stack([np.ones_like(x), np.cos(w * x), np.sin(w * x)], axis=1)
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        res.append(np.sqrt(np.mean((A @ coef - y) ** 2)))
    res = np.asarray(res)
    return float(np.asarray(omegas)[np.argmin(res)]), res
