"""The Weyl-Heisenberg Hopf algebra h(1) and its q-deformation h_q(1)."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .fock import (
    FockError,
    Operator,
    SpaceDescriptor,
    adjoint,
    annihilator,
    identity,
    number,
)


@dataclass(frozen=True)
class DeformationParameter:
    """Deformation ``q``, real positive (``q = e^{2 theta}``) or on the unit circle."""

    q: complex

    def __post_init__(self):
        q = complex(self.q)
        real_positive = q.imag == 0 and q.real > 0
        if not real_positive and abs(abs(q) - 1.0) > 1e-12:
            raise FockError(f"q must be real positive or of modulus one, got {q}")
        object.__setattr__(self, "q", q)

    @classmethod
    def from_theta(cls, theta: float) -> "DeformationParameter":
        return cls(math.exp(2.0 * theta))

    @property
    def is_real(self) -> bool:
        return self.q.imag == 0 and self.q.real > 0

    @property
    def theta(self) -> float:
        if not self.is_real:
            raise FockError("theta is only defined for real positive q")
        return 0.5 * math.log(self.q.real)

    def power(self, x: float) -> complex:
        """Principal branch of ``q**x``."""
        if self.is_real:
            return math.exp(2.0 * self.theta * x)
        return cmath.exp(1j * x * cmath.phase(self.q))


def _as_q(q) -> DeformationParameter:
    return q if isinstance(q, DeformationParameter) else DeformationParameter(q)


def q_number(x: float, q) -> complex | float:
    """``[x]_q = (q^x - q^-x) / (q - q^-1)``, continuous at ``q = 1``.

    For real ``q = e^{2t}`` this is ``sinh(2tx)/sinh(2t)``; on the unit circle
    ``q = e^{i phi}`` it is ``sin(x phi)/sin(phi)``.
    """
    q = _as_q(q)
    if q.is_real:
        s = 2.0 * q.theta
        if s == 0.0:
            return float(x)
        return math.sinh(s * x) / math.sinh(s)
    phi = cmath.phase(q.q)
    if phi == 0.0:
        return float(x)
    if abs(math.sin(phi)) < 1e-15:
        raise FockError("[x]_q is singular at q = -1")
    return math.sin(x * phi) / math.sin(phi)


@dataclass(frozen=True, eq=False)
class AlgebraRealization:
    """Generators of h(1) on one factor; ``H`` is the scalar ``h`` times identity."""

    space: SpaceDescriptor
    label: str
    a: Operator
    a_dag: Operator
    N: Operator
    H: Operator
    h: float

    def casimir(self) -> Operator:
        return 2.0 * self.h * self.N - self.a_dag @ self.a

    def deformed_annihilator(self, q) -> Operator:
        """``a_q`` with ``[a_q, a_q^dag] = [2h]_q``; equal to ``a`` when ``h = 1/2``."""
        scale = q_number(2.0 * self.h, q) / (2.0 * self.h)
        return complex(scale) ** 0.5 * self.a


def realization(space: SpaceDescriptor, label, h: float = 0.5) -> AlgebraRealization:
    if h <= 0:
        raise FockError("central value h must be positive")
    pos = space.position(label)
    a = math.sqrt(2.0 * h) * annihilator(space, pos)
    return AlgebraRealization(
        space=space,
        label=space.labels[pos],
        a=a,
        a_dag=adjoint(a),
        N=number(space, pos),
        H=h * identity(space),
        h=h,
    )


def fundamental_realization(space: SpaceDescriptor, label) -> AlgebraRealization:
    """The ``H = 1/2`` representation, where h(1) and h_q(1) coincide."""
    return realization(space, label, 0.5)


def casimir_deformed(rep: AlgebraRealization, q) -> Operator:
    """``C_q = N [2H]_q - a_q^dag a_q`` with ``H`` acting as its scalar value."""
    a_q = rep.deformed_annihilator(q)
    return q_number(2.0 * rep.h, q) * rep.N - adjoint(a_q) @ a_q


_GENERATORS = ("a", "a_dag", "H", "N")


def coproduct_primitive(name: str, space: SpaceDescriptor, h: float = 0.5) -> Operator:
    """``Delta O = O x 1 + 1 x O`` on a two-factor space."""
    if name not in _GENERATORS:
        raise FockError(f"unknown generator {name!r}; expected one of {_GENERATORS}")
    if len(space.factors) != 2:
        raise FockError("coproduct needs a two-factor space")
    reps = [realization(space, i, h) for i in (0, 1)]
    return getattr(reps[0], name) + getattr(reps[1], name)


def _legs(q, h: float) -> tuple[complex, complex]:
    q = _as_q(q)
    return q.power(h), q.power(-h)


def coproduct_deformed_a(q, space: SpaceDescriptor, h: float = 0.5) -> Operator:
    """``Delta a_q = a_q x q^H + q^-H x a_q``; for ``h = 1/2`` it is ``q^{1/2} a_1 + q^{-1/2} a_2``."""
    if len(space.factors) != 2:
        raise FockError("coproduct needs a two-factor space")
    up, down = _legs(q, h)
    a1 = realization(space, 0, h).deformed_annihilator(q)
    a2 = realization(space, 1, h).deformed_annihilator(q)
    return up * a1 + down * a2


def coproduct_deformed_a_dag(q, space: SpaceDescriptor, h: float = 0.5) -> Operator:
    """Creation partner ``a_q^dag x q^H + q^-H x a_q^dag`` (not the plain adjoint when ``|q| = 1``)."""
    if len(space.factors) != 2:
        raise FockError("coproduct needs a two-factor space")
    up, down = _legs(q, h)
    a1 = adjoint(realization(space, 0, h).deformed_annihilator(q))
    a2 = adjoint(realization(space, 1, h).deformed_annihilator(q))
    return up * a1 + down * a2
