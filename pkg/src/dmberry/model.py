"""Two-spin XXZ Hamiltonian with z-axis DM coupling and a one-site field.

Basis order is ``|11>, |10>, |01>, |00>`` with ``|1> = |up>``; every vector
and matrix in the package uses it.  hbar = 1.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

#: Sz-like charge of each basis state; H(phi) = U H(0) U^+ with U = diag(exp(-i*m*phi)).
ROTATION_CHARGE = np.array([1, 0, 0, -1])
BASIS_LABELS = ("11", "10", "01", "00")


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: exchange ``j``, z-coupling ``jz``, DM strength
    ``d``, field magnitude ``b`` and field elevation ``theta`` (radians)."""

    j: float = 1.0
    jz: float = 1.0
    d: float = 0.0
    b: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for name in ("j", "jz", "d", "b", "theta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.b < 0:
            raise ValueError("b must be >= 0; reverse the field via theta -> pi - theta, phi -> phi + pi")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta!r}")

    def with_(self, **changes):
        return type(self)(**{**self.as_dict(), **changes})

    def as_dict(self):
        return {"j": self.j, "jz": self.jz, "d": self.d, "b": self.b, "theta": self.theta}


class FieldVector(NamedTuple):
    x: float
    y: float
    z: float


def field_vector(p, phi):
    st = math.sin(p.theta)
    return FieldVector(p.b * st * math.cos(phi), p.b * st * math.sin(phi), p.b * math.cos(p.theta))


def build_hamiltonian(p, phi=0.0):
    """Return the 4x4 Hermitian Hamiltonian at azimuth ``phi``.

    The global factor 1/2 is folded into the entries, so the exchange
    element between ``|10>`` and ``|01>`` is ``j + i d``.
    """
    return hamiltonian_stack(p, np.asarray([phi], dtype=float))[0]


def hamiltonian_stack(p, phis):
    """Hamiltonians for an array of azimuths, shape ``phis.shape + (4, 4)``."""
    phis = np.asarray(phis, dtype=float)
    bc = p.b * math.cos(p.theta)
    bs = 0.5 * p.b * math.sin(p.theta)
    h = np.zeros(phis.shape + (4, 4), dtype=complex)
    h[..., 0, 0] = 0.5 * (p.jz + bc)
    h[..., 1, 1] = 0.5 * (-p.jz + bc)
    h[..., 2, 2] = 0.5 * (-p.jz - bc)
    h[..., 3, 3] = 0.5 * (p.jz - bc)
    h[..., 1, 2] = complex(p.j, p.d)
    h[..., 2, 1] = complex(p.j, -p.d)
    down = bs * np.exp(-1j * phis)
    h[..., 0, 2] = down
    h[..., 1, 3] = down
    h[..., 2, 0] = np.conj(down)
    h[..., 3, 1] = np.conj(down)
    return h


def rotation(phi):
    """Diagonal unitary mapping H(0) to H(phi)."""
    return np.diag(np.exp(-1j * ROTATION_CHARGE * phi))
