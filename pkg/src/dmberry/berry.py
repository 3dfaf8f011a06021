"""Berry phase of each level for a field rotating once about z.

Three independent routes:

* ``berry_closed`` evaluates 2*pi*(|a|^2 - |d|^2)/u^2 from the closed-form
  amplitudes;
* ``berry_wilson`` takes minus the argument of the product of overlaps of
  Jacobi eigenvectors around a discrete loop (gauge invariant);
* ``berry_adiabatic`` integrates the Schroedinger equation over a slow
  cycle with RK4 and subtracts the dynamical phase.
"""
import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .eigenstates import _gauge_fix_array, closed_form_state
from .errors import (AdiabaticityWarning, DegenerateLevel, GridTooCoarse,
                     NumericalError, StepGuard)
from .model import ROTATION_CHARGE, build_hamiltonian, hamiltonian_stack
from .spectrum import (EPS_GAP, Spectrum, eigenvalues, jacobi_batch,
                       jacobi_eigensystem)

TWO_PI = 2 * math.pi
MIN_STEP_OVERLAP = 0.9


@dataclass(frozen=True)
class BerryResult:
    level: int
    phase: float
    method: str
    loop_min_gap: float
    detail: dict = field(default_factory=dict)


def principal(x):
    """Map an angle into (-pi, pi]."""
    return math.pi - (math.pi - x) % TWO_PI


def phase_distance(p1, p2):
    """Distance between two angles on the circle, in [0, pi]."""
    r = abs(p1 - p2) % TWO_PI
    return min(r, TWO_PI - r)


def _check_level(level):
    if level not in (0, 1, 2, 3):
        raise ValueError(f"level must be 0..3, got {level!r}")


def _level_gap(spectrum, level):
    gap = spectrum.gap(level)
    if gap <= EPS_GAP:
        raise DegenerateLevel(f"level {level} is within {gap:.3g} of a neighbour")
    return gap


def berry_closed(p, level, spectrum=None):
    _check_level(level)
    spectrum = spectrum or eigenvalues(p)
    gap = _level_gap(spectrum, level)
    if math.sin(p.theta) < 1e-12:
        # field parallel to z: the loop shrinks to a point
        return BerryResult(level, 0.0, "closed", gap, {"convention": "point-loop"})
    st = closed_form_state(p, 0.0, spectrum.energies[level], spectrum)
    a, _, _, d, u = st.coeffs
    phase = TWO_PI * (abs(a) ** 2 - abs(d) ** 2) / u ** 2
    return BerryResult(level, phase, "closed", gap, {"energy": st.energy})


def _loop_eigensystem(p, n):
    phis = TWO_PI * np.arange(n) / n
    return jacobi_batch(hamiltonian_stack(p, phis))


def _level_states(w, v, level):
    gaps = np.full(len(w), np.inf)
    if level > 0:
        gaps = np.minimum(gaps, w[:, level] - w[:, level - 1])
    if level < 3:
        gaps = np.minimum(gaps, w[:, level + 1] - w[:, level])
    return _gauge_fix_array(v[:, :, level]), gaps


def loop_states(p, level, n):
    """Gauge-fixed eigenvectors of ``level`` at phi_k = 2 pi k / n.

    Returns ``(states, gaps)`` with states of shape (n, 4) and the gap of the
    level to its nearest neighbour at each loop point.
    """
    _check_level(level)
    return _level_states(*_loop_eigensystem(p, n), level)


def wilson_phase(states):
    """-arg of the closed overlap chain of ``states`` (shape (n, 4)).

    Returns the principal value and the smallest single-step |overlap|.
    """
    states = np.asarray(states, dtype=complex)
    ov = np.sum(np.conj(states) * np.roll(states, -1, axis=0), axis=1)
    total = float(np.sum(np.angle(ov)))
    return principal(-total), float(np.min(np.abs(ov)))


def _wilson_result(states, gaps, level, n):
    gap = float(gaps.min())
    if gap <= EPS_GAP:
        raise DegenerateLevel(f"level {level} touches a neighbour on the loop (gap {gap:.3g})")
    phase, worst = wilson_phase(states)
    if worst < MIN_STEP_OVERLAP:
        raise GridTooCoarse(f"step overlap {worst:.3g} < {MIN_STEP_OVERLAP}; increase n")
    return BerryResult(level, phase, "wilson", gap, {"n": n, "min_step_overlap": worst})


def berry_wilson(p, level, n=1024):
    if n < 16:
        raise ValueError("wilson loop needs n >= 16")
    return _wilson_result(*loop_states(p, level, n), level, n)


def berry_wilson_levels(p, n=1024):
    """Wilson-loop phases of all four levels from one loop diagonalisation.

    Entries are BerryResult, or the NumericalError raised for that level.
    """
    if n < 16:
        raise ValueError("wilson loop needs n >= 16")
    w, v = _loop_eigensystem(p, n)
    out = []
    for level in range(4):
        try:
            out.append(_wilson_result(*_level_states(w, v, level), level, n))
        except NumericalError as exc:
            out.append(exc)
    return out


@numba.njit(cache=True)
def _h_at(h0, charge, phi):
    h = np.empty((4, 4), dtype=np.complex128)
    for r in range(4):
        for c in range(4):
            dm = charge[r] - charge[c]
            h[r, c] = h0[r, c] * np.exp(-1j * dm * phi)
    return h


@numba.njit(cache=True)
def _deriv(h0, charge, phi, psi):
    h = _h_at(h0, charge, phi)
    hpsi = h @ psi
    norm2 = 0.0
    expect = 0.0
    for k in range(4):
        norm2 += psi[k].real ** 2 + psi[k].imag ** 2
        expect += (np.conj(psi[k]) * hpsi[k]).real
    return -1j * hpsi, -expect / norm2


@numba.njit(cache=True)
def _rk4_cycle(h0, charge, psi0, period, steps):
    dt = period / steps
    omega = 2 * np.pi / period
    psi = psi0.copy()
    dyn = 0.0
    for k in range(steps):
        t = k * dt
        k1, g1 = _deriv(h0, charge, omega * t, psi)
        k2, g2 = _deriv(h0, charge, omega * (t + dt / 2), psi + dt / 2 * k1)
        k3, g3 = _deriv(h0, charge, omega * (t + dt / 2), psi + dt / 2 * k2)
        k4, g4 = _deriv(h0, charge, omega * (t + dt), psi + dt * k3)
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        dyn += dt / 6 * (g1 + 2 * g2 + 2 * g3 + g4)
        psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2))
    return psi, dyn


def berry_adiabatic(p, level, period, steps):
    """Geometric phase from slow driving over one period ``T``."""
    _check_level(level)
    if not period > 0:
        raise ValueError("period must be positive")
    steps = int(steps)
    h0 = build_hamiltonian(p, 0.0)
    w, v = jacobi_eigensystem(h0)
    gap = _level_gap(Spectrum.from_energies(w, source="jacobi"), level)
    dt_e = period / steps * float(np.max(np.abs(w)))
    if not dt_e < 0.1:
        raise StepGuard(f"T/steps * max|E| = {dt_e:.3g} >= 0.1")
    psi0 = _gauge_fix_array(v[:, level])
    psi, dyn = _rk4_cycle(h0, ROTATION_CHARGE.astype(np.float64), psi0, float(period), steps)
    overlap = complex(np.vdot(psi0, psi))
    total = math.atan2(overlap.imag, overlap.real)
    fidelity = abs(overlap)
    geometric = principal(total - dyn)
    warn = fidelity < 0.99
    if warn:
        warnings.warn(f"final fidelity {fidelity:.4f} < 0.99; period too short", AdiabaticityWarning)
    detail = {"period": float(period), "steps": steps, "total_phase": total,
              "dynamical_phase": dyn, "fidelity": fidelity, "adiabatic_warning": warn}
    return BerryResult(level, geometric, "adiabatic", gap, detail)

