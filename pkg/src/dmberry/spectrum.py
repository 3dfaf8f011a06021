"""Eigenvalues via the quartic secular equation, with a Jacobi oracle.

The characteristic polynomial of the Hamiltonian is the depressed quartic
``16 E^4 + S E^2 + L E + C``.  After rescaling to unit root size, roots come
from a Ferrari factorisation (largest root of the resolvent cubic), are
Newton-polished, and clusters of
nearly equal roots are re-polished on the matching derivative so exact
multiple roots are recovered to full precision.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import (NoConvergence, NotHermitian, NumericalFailure,
                     PreconditionViolated)
from .model import build_hamiltonian

#: Absolute gap (energy units) below which two levels count as degenerate.
EPS_GAP = 1e-8
#: Largest accepted secular-root uncertainty, relative to the root scale.
ROOT_TOL = 1e-10

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny
_NEWTON_STEPS = 8


class SecularCoeffs(NamedTuple):
    s: float
    l: float
    c: float

    def poly(self):
        """Descending coefficients of the full quartic."""
        return (16.0, 0.0, self.s, self.l, self.c)


@dataclass(frozen=True)
class Spectrum:
    energies: Tuple[float, float, float, float]
    min_gap: float
    degenerate: Tuple[bool, bool, bool]
    source: str = "secular"

    @classmethod
    def from_energies(cls, energies, source="secular"):
        e = tuple(sorted(float(x) for x in energies))
        gaps = [e[k + 1] - e[k] for k in range(3)]
        return cls(e, max(0.0, min(gaps)), tuple(g <= EPS_GAP for g in gaps), source)

    def gap(self, level):
        """Distance from ``level`` to its nearest neighbour."""
        e = self.energies
        gaps = []
        if level > 0:
            gaps.append(e[level] - e[level - 1])
        if level < 3:
            gaps.append(e[level + 1] - e[level])
        return min(gaps)

    @property
    def upper_width(self):
        """Spread of the three excited levels, zero at a threefold point."""
        return self.energies[3] - self.energies[1]


def secular_coefficients(p):
    j2, d2, jz2, b2 = p.j * p.j, p.d * p.d, p.jz * p.jz, p.b * p.b
    s = -8.0 * (2 * j2 + jz2 + 2 * d2 + b2)
    l = 16.0 * p.jz * (j2 + d2)
    cos2 = math.cos(p.theta) ** 2
    c = (b2 + jz2) ** 2 - 4 * d2 * jz2 - 4 * j2 * jz2 + 4 * b2 * cos2 * (j2 + d2 - jz2)
    return SecularCoeffs(s, l, c)


def _horner(coeffs, x):
    acc = 0.0
    for a in coeffs:
        acc = acc * x + a
    return acc


def _noise(coeffs, x):
    # running bound on the rounding error of Horner evaluation
    ax = abs(x)
    acc = 0.0
    for a in coeffs:
        acc = acc * ax + abs(a)
    return 8 * _EPS * acc


def _derivative(coeffs):
    n = len(coeffs) - 1
    return tuple(a * (n - k) for k, a in enumerate(coeffs[:-1]))


def _newton(coeffs, x, steps=_NEWTON_STEPS, max_step=math.inf):
    """Newton iteration that stops once |f| no longer drops.

    Steps longer than ``max_step`` are refused: near a multiple root f' is
    rounding noise and a full step can land on an unrelated root.
    """
    dcoeffs = _derivative(coeffs)
    fx = _horner(coeffs, x)
    for _ in range(steps):
        if fx == 0.0:
            break
        dfx = _horner(dcoeffs, x)
        if dfx == 0.0:
            break
        xn = x - fx / dfx
        if not abs(xn - x) <= max_step:
            break
        fn = _horner(coeffs, xn)
        if abs(fn) >= abs(fx):
            break
        x, fx = xn, fn
    return x


def _cubic_largest_root(a2, a1, a0):
    """Largest real root of the monic cubic m^3 + a2 m^2 + a1 m + a0."""
    shift = a2 / 3.0
    pp = a1 - a2 * shift
    qq = 2 * shift ** 3 - shift * a1 + a0
    disc = qq * qq / 4 + pp ** 3 / 27
    r = math.sqrt(-pp / 3) if pp < 0 else 0.0
    if disc <= 0 and r ** 3 > 0:
        arg = max(-1.0, min(1.0, -qq / (2 * r ** 3)))
        y = 2 * r * math.cos(math.acos(arg) / 3)
    else:
        sq = math.sqrt(max(disc, 0.0))
        y = np.cbrt(-qq / 2 + sq) + np.cbrt(-qq / 2 - sq)
    m = float(y) - shift
    return _newton((1.0, a2, a1, a0), m)


def _quadratic(b, c):
    """Real roots of x^2 + b x + c, negative discriminant clamped to zero."""
    disc = max(b * b - 4 * c, 0.0)
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return [0.0, 0.0]
    return [q, c / q]


def _ferrari(p, q, r):
    """Candidate root sets of the monic depressed quartic x^4 + p x^2 + q x + r.

    The general factorisation is used whenever the resolvent root is
    positive; the biquadratic split is added as a second candidate when that
    root is small enough for rounding to matter.
    """
    scale = max(1.0, abs(p), abs(q), abs(r))
    m = _cubic_largest_root(p, p * p / 4 - r, -q * q / 8)
    candidates = []
    if m > 0:
        s2 = math.sqrt(2 * m)
        half = p / 2 + m
        t = q / (2 * s2)
        candidates.append(_quadratic(-s2, half + t) + _quadratic(s2, half - t))
    if m <= 1e-8 * scale:
        # biquadratic: y = x^2 solves y^2 + p y + r
        roots = []
        for y in _quadratic(p, r):
            y = max(y, 0.0)
            roots += [math.sqrt(y), -math.sqrt(y)]
        candidates.append(roots)
    return candidates


def _polish_clusters(coeffs, roots):
    """Re-polish groups of nearly equal roots as one multiple root.

    A k-fold root of f is a simple root of its (k-1)th derivative; it is
    accepted when f and the lower derivatives vanish to rounding noise there.
    Groups that fail the test keep their individually polished values.
    """
    roots = sorted(roots)
    scale = max(1.0, max(abs(x) for x in roots))
    # Ferrari loses up to eps**(1/3) on a triple root, so the window is wide
    near = [roots[k + 1] - roots[k] <= 1e-4 * scale for k in range(3)]
    derivs = [coeffs]
    for _ in range(3):
        derivs.append(_derivative(derivs[-1]))
    out = list(roots)
    done = set()
    for k in (4, 3, 2):
        for lo in range(5 - k):
            idx = range(lo, lo + k)
            if done.intersection(idx) or not all(near[lo:lo + k - 1]):
                continue
            x = _newton(derivs[k - 1], sum(roots[i] for i in idx) / k, max_step=1e-3 * scale)
            if all(abs(_horner(derivs[i], x)) <= _noise(derivs[i], x) for i in range(k - 1)):
                for i in idx:
                    out[i] = x
                done.update(idx)
    return sorted(out)


def _root_uncertainty(coeffs, roots):
    """Largest rounding-limited error among roots not pinned as exact multiples.

    For a simple root the error is about (evaluation noise) / |f'|; roots of
    a near-degenerate cluster have small |f'| and large error.
    """
    dcoeffs = _derivative(coeffs)
    worst = 0.0
    for x in roots:
        if roots.count(x) > 1:
            continue
        slope = abs(_horner(dcoeffs, x))
        worst = max(worst, _noise(coeffs, x) / slope if slope > 0 else math.inf)
    return worst


def _root_scale(s, l, c):
    """Size of the roots of 16E^4 + S E^2 + L E + C (zero only if all vanish)."""
    return max(abs(s / 16) ** 0.5, abs(l / 16) ** (1 / 3), abs(c / 16) ** 0.25)


def _solve(s, l, c):
    """Roots of the secular quartic and their rounding-limited uncertainty."""
    sigma = _root_scale(s, l, c)
    if sigma == 0.0:
        return (0.0, 0.0, 0.0, 0.0), 0.0
    # divide step by step so tiny scales do not underflow
    p = s / 16 / sigma / sigma
    q = l / 16 / sigma / sigma / sigma
    r = c / 16 / sigma / sigma / sigma / sigma
    unit = (1.0, 0.0, p, q, r)
    best, best_res = None, math.inf
    for raw in _ferrari(p, q, r):
        roots = [_newton(unit, x, max_step=1e-3) for x in raw]
        roots = _polish_clusters(unit, roots)
        res = max(abs(_horner(unit, x)) for x in roots)
        if res < best_res:
            best, best_res = roots, res
    return tuple(sigma * y for y in best), sigma * _root_uncertainty(unit, best)


def _solve_checked(coeffs):
    s, l, c = (float(v) for v in coeffs)
    if not all(math.isfinite(v) for v in (s, l, c)):
        raise NumericalFailure("non-finite secular coefficients")
    roots, shaky = _solve(s, l, c)
    poly = (16.0, 0.0, s, l, c)
    tol = 1e-12 * max(1.0, abs(s), abs(l), abs(c))
    worst = max(abs(_horner(poly, x)) for x in roots)
    if worst > tol:
        raise NumericalFailure(f"quartic residual {worst:.3g} exceeds {tol:.3g}")
    return roots, shaky <= ROOT_TOL * _root_scale(s, l, c)


def solve_secular(coeffs):
    """Four real roots of ``16E^4 + S E^2 + L E + C``, ascending.

    The quartic is rescaled so its roots are of order one, solved there and
    scaled back; this keeps the relative accuracy independent of the energy
    scale.
    """
    return _solve_checked(coeffs)[0]


def _exact_coefficients(p):
    """S, L, C as exact rationals of the binary64 parameters."""
    j2, d2 = Fraction(p.j) ** 2, Fraction(p.d) ** 2
    jz, b2 = Fraction(p.jz), Fraction(p.b) ** 2
    jz2 = jz * jz
    cos2 = Fraction(math.cos(p.theta)) ** 2
    s = -8 * (2 * j2 + jz2 + 2 * d2 + b2)
    l = 16 * jz * (j2 + d2)
    c = (b2 + jz2) ** 2 - 4 * d2 * jz2 - 4 * j2 * jz2 + 4 * b2 * cos2 * (j2 + d2 - jz2)
    return s, l, c


def _refine_exact(p, roots):
    """One Newton step per simple root with the residual evaluated exactly.

    Rounding S, L and C to binary64 shifts clustered roots by up to
    eps / |f'|; the exact residual removes that error.
    """
    s, l, c = _exact_coefficients(p)
    fs, fl = float(s), float(l)
    out = []
    for x in roots:
        slope = 64 * x ** 3 + 2 * fs * x + fl
        if roots.count(x) > 1 or slope == 0:
            out.append(x)
            continue
        xq = Fraction(x)
        f = ((16 * xq * xq + s) * xq + l) * xq + c
        out.append(x - float(f) / slope)
    return out


def eigenvalues(p):
    """Spectrum of the model; independent of the field azimuth.

    Secular roots are used unless solving fails or a near-degenerate cluster
    leaves them less accurate than ``ROOT_TOL`` times the energy scale; the
    Jacobi eigenvalues of the matrix are returned instead.  Accepted roots
    get a final Newton step against the exactly formed quartic.
    """
    try:
        roots, sharp = _solve_checked(secular_coefficients(p))
        if sharp:
            return Spectrum.from_energies(_refine_exact(p, list(roots)))
    except NumericalFailure:
        pass
    w, _ = jacobi_eigensystem(build_hamiltonian(p, 0.0))
    return Spectrum.from_energies(w, source="jacobi")


def jacobi_batch(m, tol=1e-14, max_sweeps=100):
    """Cyclic complex Jacobi diagonalisation of a stack of Hermitian matrices.

    ``m`` has shape ``(..., n, n)``.  Returns ascending eigenvalues
    ``(..., n)`` and eigenvectors as columns ``(..., n, n)``.
    """
    m = np.asarray(m, dtype=complex)
    shape = m.shape
    n = shape[-1]
    a = m.reshape(-1, n, n).copy()
    norm = np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2)))
    herm_err = np.max(np.abs(a - np.conj(np.swapaxes(a, 1, 2))), axis=(1, 2))
    if np.any(herm_err > 1e-12 * np.maximum(1.0, norm)):
        raise NotHermitian(f"Hermiticity defect {herm_err.max():.3g}")
    a = 0.5 * (a + np.conj(np.swapaxes(a, 1, 2)))
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    pairs = [(p, q) for p in range(n) for q in range(p + 1, n)]
    offmask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a[:, offmask]) ** 2, axis=1))
        if np.all(off <= tol * norm):
            break
        for p, q in pairs:
            apq = a[:, p, q]
            mag = np.abs(apq)
            # subnormal couplings are dropped: dividing by them overflows
            live = mag >= _TINY
            safe = np.where(live, mag, 1.0)
            with np.errstate(over="ignore"):
                tau = (a[:, q, q].real - a[:, p, p].real) / (2 * safe)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            t = np.where(live, t, 0.0)
            c = 1 / np.hypot(1.0, t)
            s = t * c
            w = np.where(live, (apq.real / safe) + 1j * (apq.imag / safe), 1.0)
            cs = (c[:, None], s[:, None], w[:, None])
            _rotate_cols(a, p, q, *cs)
            _rotate_rows(a, p, q, *cs)
            _rotate_cols(v, p, q, *cs)
            a[:, p, q] = 0.0
            a[:, q, p] = 0.0
    else:
        off = np.sqrt(np.sum(np.abs(a[:, offmask]) ** 2, axis=1))
        if not np.all(off <= tol * norm):
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.real(np.diagonal(a, axis1=1, axis2=2))
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w.reshape(shape[:-1]), v.reshape(shape)


def _rotate_cols(x, p, q, c, s, w):
    xp = x[:, :, p].copy()
    xq = x[:, :, q]
    x[:, :, p] = c * xp - s * np.conj(w) * xq
    x[:, :, q] = s * w * xp + c * xq


def _rotate_rows(x, p, q, c, s, w):
    xp = x[:, p, :].copy()
    xq = x[:, q, :]
    x[:, p, :] = c * xp - s * w * xq
    x[:, q, :] = s * np.conj(w) * xp + c * xq


def jacobi_eigensystem(m, tol=1e-14, max_sweeps=100):
    """Eigenvalues (ascending) and orthonormal eigenvector columns of ``m``."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    w, v = jacobi_batch(m, tol=tol, max_sweeps=max_sweeps)
    return w, v


def zero_field_eigenvalues(p):
    """Closed-form levels at b = 0, in the order E1, E2, E3, E4."""
    if p.b != 0:
        raise PreconditionViolated("zero-field eigenvalues need b = 0")
    root = math.sqrt(p.j * p.j + p.d * p.d)
    return (-p.jz / 2 - root, -p.jz / 2 + root, p.jz / 2, p.jz / 2)


def critical_dm(j, jz) -> Optional[float]:
    """DM strength at which three levels meet for b -> 0, if any."""
    diff = jz * jz - j * j
    if diff < 0:
        return None
    return math.sqrt(diff)
