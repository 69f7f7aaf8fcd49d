"""Gate angles <-> Laurent polynomial pairs for single-qubit re-uploading circuits.

Two circuit families are handled, both acting as ``[[P, -Q], [Q*, P*]]``:

* YZY: ``RY(t0) * prod_j RZ(x) RY(t_j)`` with real-coefficient P, Q.
* WZW: ``RZ(varphi) W(t0, p0) * prod_j RZ(x) W(t_j, p_j)`` with
  ``W(t, p) = RY(t) RZ(p)`` and complex coefficients.

:func:`forward_yzy` / :func:`forward_wzw` expand angles into the pair,
:func:`peel_yzy` / :func:`peel_wzw` invert the expansion one layer at a time,
:func:`complete` builds Q from P by spectral factorization, and
:func:`synthesize_even` / :func:`synthesize_any` chain these into a circuit
whose ``<Z>`` on ``|0>`` approximates a given real Fourier series.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import cos, isfinite, sin

import flint
import numpy as np

from .errors import (
    ConditionError,
    ConstraintViolation,
    DomainError,
    InvalidArgument,
    NumericalDegeneracyError,
    NumericalError,
)
from .fourier import FourierSeries, project, quadrature_points
from .laurent import LaurentPoly, PolyPair, conj_reflect, has_parity, max_coeff_diff, mul, validation_grid

YZY = "YZY"
WZW = "WZW"

PEEL_TOL = 1e-8
CANCEL_TOL = 1e-8
REL_ZERO = 1e-12
SERIES_NOISE = 1e-15
BOUNDARY_TOL = 1e-9
CLAMP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AngleSet:
    """Angles of a YZY or WZW circuit, stored unreduced.

    ``theta[j]`` and ``phi[j]`` belong to the trainable block multiplying the
    j-th encoding gate from the right; block 0 is applied last.
    """

    ansatz: str
    theta: np.ndarray
    phi: np.ndarray | None = None
    varphi: float = 0.0

    def __post_init__(self):
        if self.ansatz not in (YZY, WZW):
            raise InvalidArgument(f"unknown ansatz {self.ansatz!r}")
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if theta.size < 1:
            raise InvalidArgument("need at least one theta")
        if self.ansatz == WZW:
            phi = np.zeros_like(theta) if self.phi is None else np.array(self.phi, dtype=float).reshape(-1)
            if phi.shape != theta.shape:
                raise InvalidArgument("phi and theta lengths differ")
            phi.setflags(write=False)
        else:
            phi = None
        if not (np.all(np.isfinite(theta)) and (phi is None or np.all(np.isfinite(phi))) and isfinite(self.varphi)):
            raise InvalidArgument("non-finite angle")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "varphi", float(self.varphi))

    @property
    def L(self) -> int:
        return self.theta.size - 1

    def to_json(self) -> dict:
        out = {"ansatz": self.ansatz, "L": self.L, "theta": self.theta.tolist()}
        if self.ansatz == WZW:
            out["phi"] = self.phi.tolist()
            out["varphi"] = self.varphi
        return out

    @classmethod
    def from_json(cls, obj) -> "AngleSet":
        if isinstance(obj, str):
            obj = json.loads(obj)
        angles = cls(obj["ansatz"], obj["theta"], obj.get("phi"), obj.get("varphi", 0.0))
        if "L" in obj and int(obj["L"]) != angles.L:
            raise InvalidArgument(f"L = {obj['L']} does not match {angles.L + 1} thetas")
        return angles


# -- forward expansion --------------------------------------------------------

def _step_forward(P, Q, theta, phi):
    """Right-multiply [[P,-Q],[Q*,P*]] by RZ(x) RY(theta) RZ(phi)."""
    c, s = cos(theta / 2), sin(theta / 2)
    em, ep = np.exp(-0.5j * phi), np.exp(0.5j * phi)
    n = P.size
    Pn = np.zeros(n + 2, dtype=complex)
    Qn = np.zeros(n + 2, dtype=complex)
    # w^-1 * X fills [0, n), w * X fills [2, n + 2)
    Pn[:n] += c * em * P
    Pn[2:] -= s * em * Q
    Qn[:n] += s * ep * P
    Qn[2:] += c * ep * Q
    return Pn, Qn


def forward_yzy(angles: AngleSet) -> PolyPair:
    if angles.ansatz != YZY:
        raise InvalidArgument(f"forward_yzy needs a YZY angle set, got {angles.ansatz}")
    t = angles.theta
    P = np.array([cos(t[0] / 2)], dtype=complex)
    Q = np.array([sin(t[0] / 2)], dtype=complex)
    for k in range(1, t.size):
        P, Q = _step_forward(P, Q, t[k], 0.0)
    return PolyPair(LaurentPoly(P.real.astype(complex)), LaurentPoly(Q.real.astype(complex)), angles.L)


def forward_wzw(angles: AngleSet) -> PolyPair:
    if angles.ansatz != WZW:
        raise InvalidArgument(f"forward_wzw needs a WZW angle set, got {angles.ansatz}")
    t, p, vp = angles.theta, angles.phi, angles.varphi
    P = np.array([np.exp(-0.5j * (vp + p[0])) * cos(t[0] / 2)])
    Q = np.array([np.exp(-0.5j * (vp - p[0])) * sin(t[0] / 2)])
    for k in range(1, t.size):
        P, Q = _step_forward(P, Q, t[k], p[k])
    return PolyPair(LaurentPoly(P), LaurentPoly(Q), angles.L)


def forward(angles: AngleSet) -> PolyPair:
    return forward_yzy(angles) if angles.ansatz == YZY else forward_wzw(angles)


def expectation_z(angles: AngleSet, x):
    """<0|U(x)^dag Z U(x)|0> = |P(x)|^2 - |Q(x)|^2."""
    pair = forward(angles)
    return np.abs(pair.P(x)) ** 2 - np.abs(pair.Q(x)) ** 2


# -- peeling --------------------------------------------------------------------

# Layer stripping reads each angle off the leading coefficients of the
# remaining pair.  In deep circuits those coefficients are tiny products of
# half-angle sines and cosines, and any defect in |P|^2 + |Q|^2 = 1 grows by
# roughly two decimal digits per stripped layer.  A double-precision pair is
# therefore first projected onto an exactly unitary pair and then stripped in
# extended precision.  Coefficients are kept compressed: index i holds the
# coefficient of w**(2i - l), the only exponents allowed by the parity.

BITS_BASE = 96
BITS_PER_LAYER = 10
MAX_BITS = 8192


def _mid_abs(z):
    return abs(z).mid()


def _reflect(a, real):
    return a[::-1] if real else [z.conjugate() for z in a[::-1]]


def _defect(p, q, real):
    """Independent real entries of |P|^2 + |Q|^2 - 1 at exponents >= 0."""
    n = len(p)
    C = flint.acb_poly(p) * flint.acb_poly(_reflect(p, real)) + flint.acb_poly(q) * flint.acb_poly(_reflect(q, real))
    c = C.coeffs()
    c += [flint.acb(0)] * (2 * n - 1 - len(c))
    c[n - 1] -= 1
    tail = c[n - 1:]
    if real:
        return [z.real for z in tail]
    return [z.real for z in tail] + [z.imag for z in tail[1:]]


def _defect_jacobian_q(q, real):
    """Derivative of :func:`_defect` with respect to the entries of Q.

    Complex Q contributes its real and imaginary parts as separate unknowns;
    a last row pins the global phase of Q, which leaves |Q| unchanged.
    """
    n = len(q)
    zero = flint.acb(0)

    def g(i):
        return q[i] if 0 <= i < n else zero

    if real:
        return [[(g(j - m) + g(j + m)).real for j in range(n)] for m in range(n)]
    re_rows, im_rows = [], []
    for m in range(n):
        re_row, im_row = [], []
        for j in range(n):
            a, b = g(j - m).conjugate(), g(j + m)
            da, db = a + b, (a - b) * 1j
            re_row += [da.real, db.real]
            im_row += [da.imag, db.imag]
        re_rows.append(re_row)
        if m:
            im_rows.append(im_row)
    gauge = [v for z in q for v in (-z.imag, z.real)]
    return re_rows + im_rows + [gauge]


def _lstsq_step(J, rhs):
    Jf = np.array([[float(J[i, j].mid()) for j in range(J.ncols())] for i in range(J.nrows())])
    bf = np.array([float(rhs[i, 0].mid()) for i in range(rhs.nrows())])
    sol = np.linalg.lstsq(Jf, bf, rcond=None)[0]
    return flint.arb_mat([[float(v)] for v in sol])


def _restore_unitarity(p, q, real, bits):
    """Newton iteration until |P|^2 + |Q|^2 = 1 holds to about 2**(32 - bits).

    Steps move Q alone while its Jacobian is invertible.  Each such linear
    solve runs only at the precision the next quadratic step can use, which
    keeps the early iterations cheap.  Otherwise the rest of the iteration
    takes joint steps at full precision.
    """
    target = flint.arb(2) ** (32 - bits)
    prev = None
    joint = False
    for _ in range(16):
        r = _defect(p, q, real)
        size = max(abs(v).mid() for v in r)
        if size <= target or (prev is not None and size >= prev):
            break
        prev = size
        du = None
        if not joint:
            digits = -int(float(size.log() / flint.arb(2).log())) if size > 0 else bits
            with flint.ctx.workprec(min(bits, 2 * digits + 64)):
                J = flint.arb_mat(_defect_jacobian_q(q, real))
                rhs = flint.arb_mat([[-v] for v in r] + ([] if real else [[0]]))
                try:
                    du = J.solve(rhs, algorithm="approx")
                except ZeroDivisionError:
                    joint = True
        # the update itself runs at full precision
        if du is not None:
            q = _apply_step(q, du, 0, real)
        else:
            p, q = _joint_step(p, q, r, real)
    return p, q


def _apply_step(a, du, offset, real):
    if real:
        return [a[j] + du[offset + j, 0] for j in range(len(a))]
    return [a[j] + flint.acb(du[offset + 2 * j, 0], du[offset + 2 * j + 1, 0]) for j in range(len(a))]


def _joint_step(p, q, r, real):
    """Minimum-norm Newton step moving P and Q together.

    Used when the Q-only Jacobian is singular, which happens when Q's band is
    narrower than P's (Q and its reflection then share roots at 0).  The defect
    is symmetric in P and Q, so both blocks share one Jacobian form; the gauge
    rows are dropped since the minimum-norm solution ignores that null space.
    """
    rows = len(r)
    Jp = _defect_jacobian_q(p, real)[:rows]
    Jq = _defect_jacobian_q(q, real)[:rows]
    J = flint.arb_mat([a + b for a, b in zip(Jp, Jq)])
    rhs = flint.arb_mat([[-v] for v in r])
    try:
        y = (J * J.transpose()).solve(rhs, algorithm="approx")
        du = J.transpose() * y
    except ZeroDivisionError:
        du = _lstsq_step(J, rhs)
    k = len(p) if real else 2 * len(p)
    return _apply_step(p, du, 0, real), _apply_step(q, du, k, real)


def _degree(p, q, ell, tiny):
    nz = [i for i in range(len(p)) if _mid_abs(p[i]) > tiny or _mid_abs(q[i]) > tiny]
    return max(abs(2 * i - ell) for i in nz) if nz else 0


def _layer_angles(pd, pmd, qd, qmd, real):
    """Angles cancelling the leading terms of one peel step.

    YZY solves cos(t/2) p_d + sin(t/2) q_d = 0 or equivalently
    -sin(t/2) p_-d + cos(t/2) q_-d = 0, using whichever pair of coefficients
    is larger.  WZW solves tan(t/2) exp(-i phi) = -p_d / q_d or
    tan(t/2) exp(i phi) = q_-d / p_-d.  Coefficients below REL_ZERO times
    the largest leading coefficient are zeroed first, so the degenerate
    cases (a vanishing pair, p_d = q_-d = 0, p_-d = q_d = 0) come out of the
    same arctangents as 0 or pi.
    """
    mags = [_mid_abs(v) for v in (pd, pmd, qd, qmd)]
    zero = max(mags) * REL_ZERO
    pd, pmd, qd, qmd = (flint.acb(0) if m < zero else v for v, m in zip((pd, pmd, qd, qmd), mags))
    top = abs(pd) ** 2 + abs(qd) ** 2
    bottom = abs(pmd) ** 2 + abs(qmd) ** 2
    nil = flint.arb(0)
    if top.mid() == 0 and bottom.mid() == 0:
        return nil, nil
    upper = top.mid() >= bottom.mid()
    if real:
        theta = 2 * (flint.arb.atan2(-pd.real, qd.real) if upper else flint.arb.atan2(qmd.real, pmd.real))
        return theta, nil
    a, b = (-qd, pd) if upper else (qmd, pmd)
    theta = 2 * flint.arb.atan2(abs(pd), abs(qd)) if upper else 2 * flint.arb.atan2(abs(qmd), abs(pmd))
    phi = a.arg() - b.arg() if a != 0 and b != 0 else nil
    return theta, phi


def _peel_step(p, q, theta, phi, real):
    """Undo RZ(x) W(theta, phi) on the right; returns the reduced lists and the edge residual."""
    c, s = (theta / 2).cos(), (theta / 2).sin()
    if real:
        A = [c * u + s * v for u, v in zip(p, q)]
        B = [c * v - s * u for u, v in zip(p, q)]
    else:
        ep = flint.acb(0, phi / 2).exp()
        em = ep.conjugate()
        pc, ps, qc, qs = ep * c, ep * s, em * c, em * s
        A = [pc * u + qs * v for u, v in zip(p, q)]
        B = [qc * v - ps * u for u, v in zip(p, q)]
    # P_hat = w A and Q_hat = B / w; the dropped exponents +-(l+1) must vanish
    return A[:-1], B[1:], float(max(_mid_abs(A[-1]), _mid_abs(B[0])))


def _band(p, q):
    nz = [i for i in range(len(p)) if p[i] != 0 or q[i] != 0]
    return (nz[0], nz[-1]) if nz else (0, -1)


def _peel_exact(P, Q, L, real, bits, trace):
    with flint.ctx.workprec(bits):
        p = [flint.acb(v.real, v.imag) for v in P]
        q = [flint.acb(v.real, v.imag) for v in Q]
        lo, hi = _band(p, q)
        if hi >= lo:
            p[lo:hi + 1], q[lo:hi + 1] = _restore_unitarity(p[lo:hi + 1], q[lo:hi + 1], real, bits)
        tiny = flint.arb(2) ** (24 - bits)
        nil = flint.arb(0)
        thetas = [0.0] * (L + 1)
        phis = [0.0] * (L + 1)
        for ell in range(L, 0, -1):
            d = _degree(p, q, ell, tiny)
            if d == 0:
                theta, phi = nil, nil
            else:
                top, bot = (ell + d) // 2, (ell - d) // 2
                theta, phi = _layer_angles(p[top], p[bot], q[top], q[bot], real)
            p, q, edge = _peel_step(p, q, theta, phi, real)
            if edge > CANCEL_TOL:
                raise NumericalDegeneracyError(
                    f"layer {ell}: leading coefficients left residual {edge:.3g} after angle choice"
                )
            if trace is not None:
                trace.append((ell, d, _degree(p, q, ell - 1, tiny), edge))
            thetas[ell], phis[ell] = float(theta), float(phi)
        p, q = p[0], q[0]
        if real:
            return AngleSet(YZY, [float(2 * flint.arb.atan2(q.real, p.real))] + thetas[1:])
        # P = exp(-i(varphi+phi0)/2) cos(t0/2), Q = exp(-i(varphi-phi0)/2) sin(t0/2)
        zero = max(_mid_abs(p), _mid_abs(q)) * REL_ZERO
        ap = p.arg() if _mid_abs(p) > zero else nil
        aq = q.arg() if _mid_abs(q) > zero else nil
        thetas[0] = float(2 * flint.arb.atan2(abs(q), abs(p)))
        phis[0] = float(aq - ap)
        return AngleSet(WZW, thetas, phis, float(-(ap + aq)))


def _prepare(pair: PolyPair, real: bool):
    if pair.L < 0:
        raise InvalidArgument("L must be >= 0")
    pair.check(tol=PEEL_TOL, real=real, rel_zero=REL_ZERO)
    P = pair.P.padded(pair.L).coeffs[0::2]
    Q = pair.Q.padded(pair.L).coeffs[0::2]
    return P, Q


def _pair_error(angles: AngleSet, pair: PolyPair) -> float:
    got = forward(angles)
    return max(max_coeff_diff(got.P, pair.P), max_coeff_diff(got.Q, pair.Q))


def _peel(pair: PolyPair, ansatz: str, trace):
    real = ansatz == YZY
    P, Q = _prepare(pair, real)
    bits = BITS_BASE + BITS_PER_LAYER * pair.L
    while True:
        steps = []
        try:
            angles = _peel_exact(P, Q, pair.L, real, bits, steps)
            err = _pair_error(angles, pair)
            failure = f"peeled angles reproduce the pair only to {err:.3g}"
        except NumericalDegeneracyError as exc:
            err, failure = np.inf, str(exc)
        if err <= PEEL_TOL:
            break
        if bits >= MAX_BITS:
            raise NumericalDegeneracyError(f"{failure} at {bits} bits of precision")
        bits = min(2 * bits, MAX_BITS)
    if trace is not None:
        trace.extend(steps)
    return angles


def peel_yzy(pair: PolyPair, trace: list | None = None) -> AngleSet:
    """Angles of a YZY circuit realizing ``pair`` (real coefficients).

    ``trace``, when given, receives ``(layer, degree_before, degree_after,
    cancellation_residual)`` for every peeled layer.
    """
    return _peel(pair, YZY, trace)


def peel_wzw(pair: PolyPair, trace: list | None = None) -> AngleSet:
    """Angles of a WZW circuit realizing ``pair`` (complex coefficients)."""
    return _peel(pair, WZW, trace)


def peel(pair: PolyPair, ansatz: str) -> AngleSet:
    return peel_yzy(pair) if ansatz == YZY else peel_wzw(pair)


# -- complementary polynomial -----------------------------------------------------

def companion_roots(coeffs) -> np.ndarray:
    """Roots of sum_k coeffs[k] u**k (ascending order) via companion-matrix eigenvalues."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    lead_zeros = 0
    while lead_zeros < c.size and c[lead_zeros] == 0:
        lead_zeros += 1
    c = c[lead_zeros:]
    n = c.size - 1
    if n < 1:
        return np.zeros(lead_zeros, dtype=complex)
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    return np.concatenate([np.linalg.eigvals(comp), np.zeros(lead_zeros, dtype=complex)])


def _select_roots(roots, count):
    """One root from each reciprocal-conjugate pair: inside the unit disk, boundary alternating."""
    mod = np.abs(roots)
    inside = roots[mod < 1 - BOUNDARY_TOL]
    boundary = roots[np.abs(mod - 1) <= BOUNDARY_TOL]
    need = count - inside.size
    if 0 <= need <= boundary.size:
        boundary = boundary[np.argsort(np.angle(boundary), kind="stable")]
        picked = boundary[::2][:need]
        if picked.size == need:
            return np.concatenate([inside, picked])
    return roots[np.argsort(mod, kind="stable")[:count]]


def _poly_from_roots_on_circle(roots) -> np.ndarray:
    """Ascending coefficients of prod (u - r), interpolated from values on |u| = 1.

    Expanding the product directly (np.poly) cancels catastrophically when
    many roots share a modulus; values on the circle are well conditioned and
    only they matter for the completion.
    """
    n = roots.size
    N = 1 << max(3, (2 * n + 1).bit_length())
    u = np.exp(2j * np.pi * np.arange(N) / N)
    factors = u[:, None] - roots[None, :]
    logmag = np.sum(np.log(np.abs(factors)), axis=1)
    phase = np.prod(factors / np.abs(factors), axis=1)
    shift = float(np.max(logmag))
    c = np.fft.fft(np.exp(logmag - shift) * phase) / N
    # conjugate convention: vals_k = sum_j c_j u_k^j, so c = fft(vals)/N
    return c[: n + 1] * np.exp(shift)


def complete(P: LaurentPoly, L: int, field: str = "real") -> LaurentPoly:
    """Q with deg <= L, parity L mod 2 and |P|^2 + |Q|^2 = 1 on the unit circle.

    Factors A = 1 - P P* (nonnegative on |w| = 1) through the roots of its
    associated ordinary polynomial, keeping one root of each
    reciprocal-conjugate pair.
    """
    if field not in ("real", "complex"):
        raise InvalidArgument("field must be 'real' or 'complex'")
    if L < 0:
        raise InvalidArgument("L must be >= 0")
    pair_zero = REL_ZERO * max(1.0, float(np.max(np.abs(P.coeffs))))
    if P.degree > L:
        raise ConditionError(1, f"deg(P) = {P.degree} exceeds L = {L}")
    if not has_parity(P, L % 2, pair_zero):
        raise ConditionError(2, f"P does not have parity {L % 2}")
    if field == "real" and not np.all(np.abs(P.coeffs.imag) < pair_zero):
        raise ConditionError("real", "P has complex coefficients")
    x = validation_grid()
    absP = np.abs(P(x))
    i = int(np.argmax(absP))
    if absP[i] > 1 + 1e-10:
        raise ConstraintViolation(float(x[i]), float(absP[i]))

    P = P.padded(L)
    A = LaurentPoly(-mul(P, conj_reflect(P)).coeffs)
    A = A + LaurentPoly.monomial(0, 1.0)
    a = A.coeffs[0::2]  # even exponents only: coefficients of u = w^2 from -L to L
    if field == "real":
        a = a.real.astype(complex)
    a = 0.5 * (a + np.conj(a[::-1]))  # A is real on the circle
    amax = np.max(np.abs(a))
    if amax < 1e-14:
        return LaurentPoly.zero(L)
    # outer coefficients are short sums of products and keep relative accuracy,
    # so only exact zeros (padding) are dropped
    nz = np.nonzero(np.abs(a) > 0)[0]
    half = int(max(abs(nz[0] - L), abs(nz[-1] - L)))  # degree of A in u
    a = a[L - half: L + half + 1]
    if half == 0:
        R = np.array([1.0 + 0j])
    else:
        roots = companion_roots(a)
        R = _poly_from_roots_on_circle(_select_roots(roots, half))
    if field == "real":
        R = R.real.astype(complex)
    # shift so exponents sit in [-L, L] with parity L mod 2
    m = half if (half - L) % 2 == 0 else half + 1
    q = np.zeros(2 * L + 1, dtype=complex)
    for j, r in enumerate(R):
        q[2 * j - m + L] = r
    Qraw = LaurentPoly(q)
    Avals = np.real(A(x))
    Rvals = np.abs(Qraw(x)) ** 2
    scale = float(np.dot(Avals, Rvals) / np.dot(Rvals, Rvals))
    if not scale > 0:
        raise NumericalError("spectral factor has non-positive scale")
    Q = Qraw * np.sqrt(scale)
    resid = float(np.max(np.abs(absP ** 2 + np.abs(Q(x)) ** 2 - 1.0)))
    if resid > 1e-7:
        raise NumericalError(f"completion residual {resid:.3g} exceeds 1e-7")
    return Q


# -- function -> circuit ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Synthesis:
    """Outcome of the function-to-circuit pipeline.

    ``inner_error`` is sup |P(x) - sqrt((1 + f_K(x)) / 2)| for the P actually
    realized, so ``4 * inner_error`` bounds sup |<Z> - f_K|.
    """

    angles: AngleSet
    pair: PolyPair
    order: int
    inner_error: float
    scale: float

    @property
    def bound(self) -> float:
        return 4.0 * self.inner_error

    def to_json(self) -> dict:
        return {"angles": self.angles.to_json(), "order": self.order, "inner_error": self.inner_error,
                "bound": self.bound, "scale": self.scale}


def _trig_sup(coeffs, n_fine=1 << 16, n_polish=8):
    """Near-exact sup |g| of a trigonometric polynomial.

    A zero-padded FFT locates the peaks; Newton steps on d|g|^2/dx then
    refine the largest few, since a peak between samples can hide an
    excess over 1 that breaks the completion.
    """
    K = (coeffs.size - 1) // 2
    buf = np.zeros(n_fine, dtype=complex)
    buf[:K + 1] = coeffs[K:]
    if K:
        buf[-K:] = coeffs[:K]
    vals = np.abs(np.fft.ifft(buf) * n_fine)
    best = float(np.max(vals))
    if K == 0 or n_polish <= 0:
        return best
    n = np.arange(-K, K + 1)
    for x in 2 * np.pi * np.argsort(vals)[-n_polish:] / n_fine:
        for _ in range(6):
            e = np.exp(1j * n * x)
            g0, g1, g2 = e @ coeffs, e @ (1j * n * coeffs), e @ (-(n ** 2) * coeffs)
            d1 = 2 * np.real(np.conj(g0) * g1)
            d2 = 2 * (abs(g1) ** 2 + np.real(np.conj(g0) * g2))
            if d2 >= 0:
                break
            x -= d1 / d2
        best = max(best, float(abs(np.exp(1j * n * x) @ coeffs)))
    return best


def _half_angle_series(fK: FourierSeries, order: int, even: bool):
    if fK.period != 2 * np.pi:
        raise InvalidArgument("synthesis expects a 2*pi-periodic target")
    n = quadrature_points(order)
    x = -np.pi + 2 * np.pi * np.arange(n) / n
    fv = fK.real(x)
    low = float(np.min(1 + fv))
    if low < -CLAMP_TOL:
        raise DomainError(f"1 + f_K reaches {low:.3g} < 0; target leaves [-1, 1]")

    def h(t):
        return np.sqrt(np.maximum(1 + fK.real(t), 0.0) / 2)

    g = project(h, order).coeffs.copy()
    if even:
        g = 0.5 * (g + g[::-1]).real.astype(complex)
    # quadrature round-off in structurally empty slots would otherwise reach
    # complete() as tiny outer coefficients and spurious roots near 0 and infinity
    g[np.abs(g) < SERIES_NOISE * np.max(np.abs(g))] = 0
    sup = _trig_sup(g)
    scale = 1.0
    if sup > 1.0:
        scale = 1.0 / (sup * (1 + 1e-12))
        g = g * scale
    L = 2 * order
    p = np.zeros(2 * L + 1, dtype=complex)
    p[0::2] = g  # integer frequency n -> exponent 2n
    P = LaurentPoly(p)
    xe = np.linspace(-np.pi, np.pi, 4097)
    inner = float(np.max(np.abs(P(xe) - h(xe))))
    return P, L, inner, scale


def _synthesize(fK: FourierSeries, order: int | None, even: bool) -> Synthesis:
    if order is None:
        order = max(2 * fK.K, 16)
    if order < 0:
        raise InvalidArgument("order must be >= 0")
    P, L, inner, scale = _half_angle_series(fK, order, even)
    Q = complete(P, L, "real" if even else "complex")
    pair = PolyPair(P, Q, L)
    angles = peel_yzy(pair) if even else peel_wzw(pair)
    return Synthesis(angles, pair, order, inner, scale)


def synthesize_even_report(fK: FourierSeries, order: int | None = None) -> Synthesis:
    if not fK.is_real_valued() or not fK.is_even() or np.max(np.abs(fK.coeffs.imag)) > 1e-10:
        raise InvalidArgument("synthesize_even needs real coefficients with c_n = c_-n")
    return _synthesize(fK, order, even=True)


def synthesize_any_report(fK: FourierSeries, order: int | None = None) -> Synthesis:
    if not fK.is_real_valued():
        raise InvalidArgument("target series must be real-valued (c_-n = conj(c_n))")
    return _synthesize(fK, order, even=False)


def synthesize_even(fK: FourierSeries, order: int | None = None) -> AngleSet:
    """YZY angles whose <Z> approximates the even real series ``fK``.

    The inner order (frequencies of the half-angle series) defaults to
    ``max(2K, 16)``; the circuit has twice that many layers.
    """
    return synthesize_even_report(fK, order).angles


def synthesize_any(fK: FourierSeries, order: int | None = None) -> AngleSet:
    """WZW angles whose <Z> approximates the real-valued series ``fK``."""
    return synthesize_any_report(fK, order).angles
