"""Laurent polynomials in w = exp(i x / 2).

Exponent ``k`` stands for ``w**k = exp(i k x / 2)``; an integer frequency
``n`` of ``exp(i n x)`` is exponent ``2 n``.  Coefficients are stored densely
over ``[-D, D]`` as a read-only complex array with ``coeffs[k + D]`` the
coefficient of ``w**k``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConditionError

ZERO_TOL = 1e-14
#: validation grid for the |P|^2 + |Q|^2 = 1 condition; w has period 4*pi
GRID_POINTS = 1024
MIXED = "mixed"


def validation_grid(n: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(-2 * np.pi, 2 * np.pi, n)


@dataclass(frozen=True, eq=False)
class LaurentPoly:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size % 2 == 0:
            raise ValueError("dense coefficient vector must have odd length 2D+1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # -- construction -------------------------------------------------------
    @classmethod
    def from_dict(cls, terms: dict) -> "LaurentPoly":
        if not terms:
            return cls.zero()
        D = max(abs(int(k)) for k in terms)
        c = np.zeros(2 * D + 1, dtype=complex)
        for k, v in terms.items():
            c[int(k) + D] += v
        return cls(c)

    @classmethod
    def zero(cls, D: int = 0) -> "LaurentPoly":
        return cls(np.zeros(2 * D + 1, dtype=complex))

    @classmethod
    def monomial(cls, k: int, value=1.0) -> "LaurentPoly":
        return cls.from_dict({k: value})

    # -- metadata -----------------------------------------------------------
    @property
    def D(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def degree(self) -> int:
        nz = np.nonzero(np.abs(self.coeffs) >= ZERO_TOL)[0]
        if nz.size == 0:
            return 0
        return int(np.max(np.abs(nz - self.D)))

    @property
    def parity(self):
        return parity_of(self)

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(self.coeffs.imag) < ZERO_TOL))

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.D:
            return 0j
        return complex(self.coeffs[k + self.D])

    def to_dict(self, tol: float = 0.0) -> dict:
        return {k - self.D: complex(c) for k, c in enumerate(self.coeffs) if abs(c) > tol}

    def padded(self, D: int) -> "LaurentPoly":
        """Same polynomial stored over [-D, D]; truncates if D < self.D."""
        if D >= self.D:
            return LaurentPoly(np.pad(self.coeffs, D - self.D))
        return LaurentPoly(self.coeffs[self.D - D: self.D + D + 1])

    def trimmed(self) -> "LaurentPoly":
        return self.padded(self.degree)

    # -- arithmetic ---------------------------------------------------------
    def __call__(self, x):
        return eval(self, x)

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            return mul(self, other)
        return LaurentPoly(self.coeffs * other)

    __rmul__ = __mul__

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        D = max(self.D, other.D)
        return LaurentPoly(self.padded(D).coeffs + other.padded(D).coeffs)

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return self + other * -1.0

    def __neg__(self):
        return self * -1.0

    def shift(self, s: int) -> "LaurentPoly":
        """Multiply by w**s."""
        D = self.D + abs(s)
        c = np.zeros(2 * D + 1, dtype=complex)
        start = D - self.D + s
        c[start:start + self.coeffs.size] = self.coeffs
        return LaurentPoly(c)

    def allclose(self, other: "LaurentPoly", atol: float) -> bool:
        return max_coeff_diff(self, other) < atol

    def __repr__(self):
        terms = ", ".join(f"{k}: {v:.6g}" for k, v in self.to_dict(ZERO_TOL).items())
        return f"LaurentPoly({{{terms}}})"

    # -- serialization ------------------------------------------------------
    def to_json(self) -> dict:
        return {"coeffs": [[k - self.D, float(c.real), float(c.imag)] for k, c in enumerate(self.coeffs)]}

    @classmethod
    def from_json(cls, obj) -> "LaurentPoly":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls.from_dict({int(k): complex(re, im) for k, re, im in obj["coeffs"]})


def eval(p: LaurentPoly, x):
    """Sum_k c_k exp(i k x / 2); vectorized over ``x``."""
    x = np.asarray(x, dtype=float)
    ks = np.arange(-p.D, p.D + 1)
    vals = np.exp(0.5j * np.multiply.outer(x, ks)) @ p.coeffs
    return complex(vals) if vals.ndim == 0 else vals


def mul(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    return LaurentPoly(np.convolve(a.coeffs, b.coeffs))


def conj_reflect(p: LaurentPoly) -> LaurentPoly:
    """P* with P*(x) = conj(P(x)) for real x: c_k -> conj(c_{-k})."""
    return LaurentPoly(np.conj(p.coeffs[::-1]))


def parity_of(p: LaurentPoly):
    """0 if only even exponents are nonzero, 1 if only odd, else ``"mixed"``.

    The zero polynomial reports parity 0; use :func:`has_parity` to test
    membership, which accepts zero for either parity.
    """
    ks = np.arange(-p.D, p.D + 1)
    nz = np.abs(p.coeffs) >= ZERO_TOL
    odd = bool(np.any(nz & (ks % 2 == 1)))
    even = bool(np.any(nz & (ks % 2 == 0)))
    if odd and even:
        return MIXED
    return 1 if odd else 0


def has_parity(p: LaurentPoly, parity: int, tol: float = ZERO_TOL) -> bool:
    ks = np.arange(-p.D, p.D + 1)
    wrong = (ks % 2) != parity
    return bool(np.all(np.abs(p.coeffs[wrong]) < tol))


def max_coeff_diff(a: LaurentPoly, b: LaurentPoly) -> float:
    D = max(a.D, b.D)
    return float(np.max(np.abs(a.padded(D).coeffs - b.padded(D).coeffs)))


@dataclass(frozen=True, eq=False)
class PolyPair:
    """Entries of the block [[P, -Q], [Q*, P*]] for an L-layer circuit."""

    P: LaurentPoly
    Q: LaurentPoly
    L: int

    def matrix(self, x):
        """Stack of 2x2 matrices at the points ``x`` (shape (..., 2, 2))."""
        p, q = np.asarray(self.P(x)), np.asarray(self.Q(x))
        return np.stack([np.stack([p, -q], -1), np.stack([np.conj(q), np.conj(p)], -1)], -2)

    def unitarity_residual(self, grid=None) -> float:
        x = validation_grid() if grid is None else grid
        return float(np.max(np.abs(np.abs(self.P(x)) ** 2 + np.abs(self.Q(x)) ** 2 - 1.0)))

    def check(self, tol: float = 1e-9, real: bool = False, rel_zero: float = 1e-12) -> None:
        """Raise :class:`ConditionError` naming the first violated condition."""
        if real and not (np.all(np.abs(self.P.coeffs.imag) < rel_zero)
                         and np.all(np.abs(self.Q.coeffs.imag) < rel_zero)):
            raise ConditionError("real", "coefficients must be real")
        scale = max(np.max(np.abs(self.P.coeffs)), np.max(np.abs(self.Q.coeffs)), 1.0)
        zero = rel_zero * scale
        for name, poly in (("P", self.P), ("Q", self.Q)):
            big = np.nonzero(np.abs(poly.coeffs) >= zero)[0] - poly.D
            if big.size and np.max(np.abs(big)) > self.L:
                raise ConditionError(1, f"deg({name}) = {np.max(np.abs(big))} exceeds L = {self.L}")
        for name, poly in (("P", self.P), ("Q", self.Q)):
            if not has_parity(poly, self.L % 2, zero):
                raise ConditionError(2, f"{name} does not have parity {self.L % 2}")
        res = self.unitarity_residual()
        if res > tol:
            raise ConditionError(3, f"max | |P|^2 + |Q|^2 - 1 | = {res:.3g} exceeds {tol:g}")

    def to_json(self) -> dict:
        return {"L": self.L, "P": self.P.to_json(), "Q": self.Q.to_json()}

    @classmethod
    def from_json(cls, obj) -> "PolyPair":
        return cls(LaurentPoly.from_json(obj["P"]), LaurentPoly.from_json(obj["Q"]), int(obj["L"]))
