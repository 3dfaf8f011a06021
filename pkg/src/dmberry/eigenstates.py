"""Instantaneous eigenstates: closed form with a Jacobi nullspace fallback."""
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateFormula, DegenerateLevel, NotAnEigenvalue
from .model import build_hamiltonian
from .spectrum import EPS_GAP, eigenvalues, jacobi_eigensystem

#: Smallest admissible |denominator| in the closed-form amplitudes.
EPS_DEN = 1e-10
EIGEN_TOL = 1e-9
RESIDUAL_TOL = 1e-9

PAPER_GAUGE = "paper-gauge"
LARGEST_REAL = "largest-component-real"


class ClosedFormCoeffs(NamedTuple):
    a: complex
    b: complex
    c: complex
    d: complex
    u: float


@dataclass(frozen=True)
class EigenState:
    amp: np.ndarray
    energy: float
    coeffs: Optional[ClosedFormCoeffs] = None
    gauge: str = LARGEST_REAL
    residual: float = field(default=0.0, compare=False)

    def __post_init__(self):
        amp = np.array(self.amp, dtype=complex).reshape(4)
        amp.flags.writeable = False
        object.__setattr__(self, "amp", amp)


def closed_form_coeffs(p, phi, energy):
    """Unnormalised amplitudes (a, b, c, d) and their norm u.

    Raises DegenerateFormula when a denominator or the field's transverse
    part falls below EPS_DEN.
    """
    bs = p.b * math.sin(p.theta)
    bc = p.b * math.cos(p.theta)
    den_b = complex(2 * p.j, -2 * p.d)
    den_d = 2 * energy - p.jz + bc
    if bs <= EPS_DEN:
        raise DegenerateFormula("transverse field b*sin(theta) vanishes")
    if abs(den_b) <= EPS_DEN:
        raise DegenerateFormula("2j - 2di vanishes")
    if abs(den_d) <= EPS_DEN:
        raise DegenerateFormula("2E - jz + b cos(theta) vanishes")
    a = bs * complex(math.cos(phi), -math.sin(phi))
    b = (4 * energy ** 2 - p.jz ** 2 - p.b ** 2 - 2 * p.jz * bc) / den_b
    c = complex(2 * energy - p.jz - bc)
    d = bs * complex(math.cos(phi), math.sin(phi)) * b / den_d
    u = math.sqrt(abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 + abs(d) ** 2)
    return ClosedFormCoeffs(a, b, c, d, u)


def closed_form_state(p, phi, energy, spectrum=None):
    """Eigenstate at azimuth ``phi`` from the closed-form amplitudes."""
    coeffs = closed_form_coeffs(p, phi, energy)
    spectrum = spectrum or eigenvalues(p)
    if min(abs(energy - e) for e in spectrum.energies) > EIGEN_TOL:
        raise NotAnEigenvalue(f"{energy!r} is not an eigenvalue")
    amp = np.array(coeffs[:4]) / coeffs.u
    res = float(np.linalg.norm(build_hamiltonian(p, phi) @ amp - energy * amp))
    if not res <= RESIDUAL_TOL:
        # cancellation near a vanishing numerator/denominator pair
        raise DegenerateFormula(f"closed-form residual {res:.3g}")
    return EigenState(amp, float(energy), coeffs, PAPER_GAUGE, res)


def gauge_fix(state):
    """Rotate the global phase so the largest amplitude is real positive."""
    amp = state.amp
    return EigenState(_gauge_fix_array(amp), state.energy, state.coeffs, LARGEST_REAL, state.residual)


def _gauge_fix_array(amp):
    """Batched gauge fixing over the last axis."""
    amp = np.asarray(amp, dtype=complex)
    mag = np.abs(amp)
    # first index within rounding of the maximum wins ties
    big = mag >= mag.max(axis=-1, keepdims=True) * (1 - 1e-12)
    idx = np.argmax(big, axis=-1)
    pivot = np.take_along_axis(amp, idx[..., None], axis=-1)
    pmag = np.abs(pivot)
    phase = np.where(pmag > 0, np.conj(pivot) / np.where(pmag > 0, pmag, 1.0), 1.0)
    out = amp * phase
    np.put_along_axis(out, idx[..., None], np.take_along_axis(mag, idx[..., None], axis=-1), axis=-1)
    return out


def nullspace_state(m, energy):
    """Unit eigenvector of ``m`` for a nondegenerate eigenvalue ``energy``."""
    m = np.asarray(m, dtype=complex)
    w, v = jacobi_eigensystem(m)
    dist = np.abs(w - energy)
    k = int(np.argmin(dist))
    if dist[k] > EIGEN_TOL:
        raise NotAnEigenvalue(f"{energy!r} is not an eigenvalue (nearest {w[k]!r})")
    if np.count_nonzero(dist <= EPS_GAP) > 1 or _neighbour_gap(w, k) <= EPS_GAP:
        raise DegenerateLevel(f"eigenvalue {w[k]!r} is degenerate")
    amp = _gauge_fix_array(v[:, k])
    res = float(np.linalg.norm(m @ amp - w[k] * amp))
    return EigenState(amp, float(w[k]), None, LARGEST_REAL, res)


def _neighbour_gap(w, k):
    gaps = [w[k] - w[k - 1]] if k > 0 else []
    if k < len(w) - 1:
        gaps.append(w[k + 1] - w[k])
    return min(gaps)


def state_overlap(s1, s2):
    """Inner product <s1|s2>."""
    return complex(np.vdot(s1.amp, s2.amp))
