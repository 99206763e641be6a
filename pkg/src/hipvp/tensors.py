"""Symmetric second-order tensors and stress invariants.

Components are stored in the order ``(11, 22, 33, 12, 23, 13)``. Off-diagonal
entries are the true tensor components (no engineering-shear factor of 2).
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

COMPONENT_NAMES = ("11", "22", "33", "12", "23", "13")

# weights turning a component-wise product into the full double contraction
_DDOT_WEIGHTS = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


class SymTensor3:
    """Immutable symmetric 3x3 tensor."""

    __slots__ = ("_v",)

    def __init__(self, components):
        v = np.array(components, dtype=float).reshape(6)
        v.flags.writeable = False
        self._v = v

    # -- constructors -----------------------------------------------------
    @classmethod
    def zeros(cls) -> SymTensor3:
        return cls(np.zeros(6))

    @classmethod
    def identity(cls, scale: float = 1.0) -> SymTensor3:
        return cls([scale, scale, scale, 0.0, 0.0, 0.0])

    @classmethod
    def diag(cls, d1: float, d2: float, d3: float) -> SymTensor3:
        return cls([d1, d2, d3, 0.0, 0.0, 0.0])

    @classmethod
    def from_matrix(cls, m) -> SymTensor3:
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        sym = 0.5 * (m + m.T)
        return cls([sym[0, 0], sym[1, 1], sym[2, 2],
                    sym[0, 1], sym[1, 2], sym[0, 2]])

    # -- accessors --------------------------------------------------------
    @property
    def components(self) -> np.ndarray:
        """Read-only view of the six stored components."""
        return self._v

    def matrix(self) -> np.ndarray:
        a11, a22, a33, a12, a23, a13 = self._v
        return np.array([[a11, a12, a13],
                         [a12, a22, a23],
                         [a13, a23, a33]])

    def trace(self) -> float:
        v = self._v
        return float(v[0] + v[1] + v[2])

    def deviator(self) -> SymTensor3:
        v = self._v.copy()
        m = (v[0] + v[1] + v[2]) / 3.0
        v[:3] -= m
        return SymTensor3(v)

    def ddot(self, other: SymTensor3) -> float:
        """Full double contraction ``a : b``."""
        return float(np.dot(self._v * _DDOT_WEIGHTS, other._v))

    def norm(self) -> float:
        """Frobenius norm of the full 3x3 matrix."""
        return math.sqrt(self.ddot(self))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other: SymTensor3) -> SymTensor3:
        if not isinstance(other, SymTensor3):
            return NotImplemented
        return SymTensor3(self._v + other._v)

    def __sub__(self, other: SymTensor3) -> SymTensor3:
        if not isinstance(other, SymTensor3):
            return NotImplemented
        return SymTensor3(self._v - other._v)

    def __neg__(self) -> SymTensor3:
        return SymTensor3(-self._v)

    def __mul__(self, scalar) -> SymTensor3:
        if isinstance(scalar, SymTensor3):
            return NotImplemented
        return SymTensor3(self._v * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> SymTensor3:
        return SymTensor3(self._v / float(scalar))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymTensor3):
            return NotImplemented
        return bool(np.array_equal(self._v, other._v))

    def __hash__(self):
        return hash(self._v.tobytes())

    def allclose(self, other: SymTensor3, rtol=1e-12, atol=0.0) -> bool:
        return bool(np.allclose(self._v, other._v, rtol=rtol, atol=atol))

    def __repr__(self) -> str:
        body = ", ".join(f"{x:.6g}" for x in self._v)
        return f"SymTensor3([{body}])"


class StressInvariants(NamedTuple):
    """Invariant bundle of a stress tensor (MPa, MPa^2)."""

    I1: float
    J2: float
    p: float
    q: float


def invariants(stress: SymTensor3) -> StressInvariants:
    """Return ``I1``, ``J2``, pressure ``p = -I1/3`` and von Mises ``q``."""
    I1 = stress.trace()
    s = stress.deviator()
    J2 = max(0.5 * s.ddot(s), 0.0)
    return StressInvariants(I1=I1, J2=J2, p=-I1 / 3.0, q=math.sqrt(3.0 * J2))


def flow_direction(stress: SymTensor3) -> SymTensor3:
    """Von Mises flow direction ``n = dq/dsigma = 3 s / (2 q)``.

    Returns the zero tensor for a purely hydrostatic state.
    """
    s = stress.deviator()
    q = math.sqrt(1.5 * s.ddot(s))
    if q == 0.0:
        return SymTensor3.zeros()
    return s * (1.5 / q)
