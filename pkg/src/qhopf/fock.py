"""Truncated bosonic Fock spaces, dense operators and states.

Every multi-factor object uses a row-major layout over the factors in
declaration order: the basis index of ``|n_1, ..., n_k>`` is the C-order
ravel of ``(n_1, ..., n_k)`` with per-factor dimension ``cutoff + 1``.
Values are immutable once built.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

#: Eigenvalues below this are treated as zero in entropy computations.
EIGEN_CLAMP = 1e-14
#: Default bound on the discarded geometric weight when picking a cutoff.
DEFAULT_TAIL = 1e-12


class FockError(ValueError):
    """Invalid space, operator or state construction."""


class SpaceMismatchError(FockError):
    """Two objects living on different spaces were combined."""


class ConvergenceError(ArithmeticError):
    """The matrix exponential series failed its self-check."""


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ordered bosonic factors ``(label, cutoff)``; cutoff is the top occupation."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        labels = [lab for lab, _ in self.factors]
        if len(set(labels)) != len(labels):
            raise FockError(f"duplicate mode label in {labels}")
        for lab, n_max in self.factors:
            if int(n_max) < 1:
                raise FockError(f"cutoff for {lab!r} must be >= 1, got {n_max}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.factors)

    @property
    def cutoffs(self) -> tuple[int, ...]:
        return tuple(n for _, n in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(n + 1 for _, n in self.factors)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def position(self, label: Union[str, int]) -> int:
        if isinstance(label, (int, np.integer)):
            if not 0 <= label < len(self.factors):
                raise FockError(f"factor position {label} out of range")
            return int(label)
        try:
            return self.labels.index(label)
        except ValueError:
            raise FockError(f"unknown mode label {label!r}") from None

    def occupations(self) -> np.ndarray:
        """``(total_dim, n_factors)`` integer array of basis occupations."""
        grids = np.indices(self.dims).reshape(len(self.dims), -1)
        return grids.T.copy()

    def index(self, occupation: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(occupation), self.dims))

    def low_block(self, margin: int = 2) -> np.ndarray:
        """Mask of basis states with every occupation <= cutoff - margin."""
        occ = self.occupations()
        return np.all(occ <= np.array(self.cutoffs) - margin, axis=1)

    def subspace(self, labels: Iterable[str]) -> "SpaceDescriptor":
        wanted = set(labels)
        return SpaceDescriptor(tuple(f for f in self.factors if f[0] in wanted))


def make_space(modes: Iterable[tuple[str, int]]) -> SpaceDescriptor:
    return SpaceDescriptor(tuple((str(lab), int(n)) for lab, n in modes))


def _frozen(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


def _check_same(x, y):
    if x.space != y.space:
        raise SpaceMismatchError(f"{x.space.labels} vs {y.space.labels}")


@dataclass(frozen=True, eq=False)
class Operator:
    space: SpaceDescriptor
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        n = self.space.total_dim
        if m.shape != (n, n):
            raise FockError(f"operator shape {m.shape} does not match dimension {n}")
        object.__setattr__(self, "matrix", m)

    def _wrap(self, matrix) -> "Operator":
        return Operator(self.space, matrix)

    def __add__(self, other):
        if isinstance(other, Operator):
            _check_same(self, other)
            return self._wrap(self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            _check_same(self, other)
            return self._wrap(self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return self._wrap(-self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, complex, np.number)):
            return self._wrap(scalar * self.matrix)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._wrap(self.matrix / scalar)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _check_same(self, other)
            return self._wrap(self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            return apply(self, other)
        return NotImplemented

    @property
    def dag(self) -> "Operator":
        return adjoint(self)

    def max_abs(self, mask: np.ndarray | None = None) -> float:
        """Largest entry modulus, optionally restricted to ``mask`` rows and columns."""
        m = self.matrix if mask is None else self.matrix[np.ix_(mask, mask)]
        return float(np.max(np.abs(m))) if m.size else 0.0


@dataclass(frozen=True, eq=False)
class StateVector:
    space: SpaceDescriptor
    amplitudes: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        v = _frozen(self.amplitudes).reshape(-1)
        if v.shape != (self.space.total_dim,):
            raise FockError(f"state length {v.size} does not match dimension {self.space.total_dim}")
        if self.normalized and abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise FockError(f"state flagged normalized has norm {np.linalg.norm(v)!r}")
        object.__setattr__(self, "amplitudes", v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.dims)

    def amplitude(self, occupation: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.space.index(occupation)])

    def __add__(self, other):
        _check_same(self, other)
        return StateVector(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other):
        _check_same(self, other)
        return StateVector(self.space, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar):
        return StateVector(self.space, scalar * self.amplitudes)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: SpaceDescriptor
    matrix: np.ndarray
    atol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        n = self.space.total_dim
        if m.shape != (n, n):
            raise FockError(f"density matrix shape {m.shape} does not match dimension {n}")
        if np.max(np.abs(m - m.conj().T)) >= self.atol:
            raise FockError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) >= self.atol:
            raise FockError(f"density matrix trace {np.trace(m).real!r} != 1")
        if np.linalg.eigvalsh(m).min() < -self.atol:
            raise FockError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


# -- construction ---------------------------------------------------------

def ladder(cutoff: int) -> np.ndarray:
    """Single-factor annihilation matrix, ``a|n> = sqrt(n)|n-1>``."""
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1).astype(complex)


def embed(op, space: SpaceDescriptor, factor: Union[str, int]) -> Operator:
    """Place a single-factor operator at ``factor``, identities elsewhere."""
    pos = space.position(factor)
    m = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    d = space.dims[pos]
    if m.shape != (d, d):
        raise FockError(f"operator of shape {m.shape} cannot act on factor of dimension {d}")
    left = math.prod(space.dims[:pos])
    right = math.prod(space.dims[pos + 1:])
    return Operator(space, np.kron(np.kron(np.eye(left), m), np.eye(right)))


def annihilator(space: SpaceDescriptor, label: Union[str, int]) -> Operator:
    pos = space.position(label)
    return embed(ladder(space.cutoffs[pos]), space, pos)


def creator(space: SpaceDescriptor, label: Union[str, int]) -> Operator:
    return adjoint(annihilator(space, label))


def number(space: SpaceDescriptor, label: Union[str, int]) -> Operator:
    pos = space.position(label)
    return embed(np.diag(np.arange(space.cutoffs[pos] + 1)), space, pos)


def identity(space: SpaceDescriptor) -> Operator:
    return Operator(space, np.eye(space.total_dim))


def zero(space: SpaceDescriptor) -> Operator:
    return Operator(space, np.zeros((space.total_dim,) * 2))


def basis_state(space: SpaceDescriptor, occupation: Sequence[int]) -> StateVector:
    v = np.zeros(space.total_dim, dtype=complex)
    v[space.index(occupation)] = 1.0
    return StateVector(space, v, normalized=True)


def vacuum(space: SpaceDescriptor) -> StateVector:
    return basis_state(space, [0] * len(space.factors))


# -- algebra --------------------------------------------------------------

def adjoint(op: Operator) -> Operator:
    return Operator(op.space, op.matrix.conj().T)


def _require_pair(space: SpaceDescriptor):
    if len(space.factors) != 2 or space.cutoffs[0] != space.cutoffs[1]:
        raise FockError("twisted adjoint needs exactly two factors with equal cutoffs")


def swap(space: SpaceDescriptor) -> Operator:
    """Permutation exchanging the two factors of a pair space."""
    _require_pair(space)
    d = space.dims[0]
    p = np.eye(d * d).reshape(d, d, d, d).transpose(1, 0, 2, 3).reshape(d * d, d * d)
    return Operator(space, p)


def twisted_adjoint(op: Operator) -> Operator:
    """Hermitian conjugate followed by exchange of the two tensor factors."""
    _require_pair(op.space)
    d = op.space.dims[0]
    t = op.matrix.conj().T.reshape(d, d, d, d).transpose(1, 0, 3, 2)
    return Operator(op.space, t.reshape(d * d, d * d))


def commutator(x: Operator, y: Operator) -> Operator:
    _check_same(x, y)
    return Operator(x.space, x.matrix @ y.matrix - y.matrix @ x.matrix)


def expm_array(x: np.ndarray, order: int = 8, tol: float = 1e-12) -> np.ndarray:
    """Scaling-and-squaring exponential with a Taylor kernel.

    The argument is scaled so its 1-norm is at most 1/16. The kernel sum is
    carried to ``2 * order`` terms and must agree with the ``order``-term sum
    to ``tol`` (relative); otherwise :class:`ConvergenceError` is raised.
    """
    x = np.asarray(x)
    if np.iscomplexobj(x) and not np.any(x.imag):
        x = x.real
    n = x.shape[0]
    norm = np.linalg.norm(x, 1) if x.size else 0.0
    squarings = max(0, math.ceil(math.log2(norm * 16))) if norm > 0 else 0
    xs = x / 2.0**squarings
    term = np.eye(n, dtype=x.dtype)
    total = term.copy()
    low = None
    for k in range(1, 2 * order + 1):
        term = term @ xs / k
        total = total + term
        if k == order:
            low = total.copy()
    scale = max(1.0, float(np.max(np.abs(total))))
    if np.max(np.abs(total - low)) > tol * scale:
        raise ConvergenceError("matrix exponential series did not converge")
    for _ in range(squarings):
        total = total @ total
    return total.astype(complex)


def matrix_exp(op: Operator) -> Operator:
    return Operator(op.space, expm_array(op.matrix))


def apply(op: Operator, state: StateVector) -> StateVector:
    _check_same(op, state)
    return StateVector(state.space, op.matrix @ state.amplitudes)


def apply_local(matrix: np.ndarray, state: StateVector, factor: Union[str, int]) -> StateVector:
    """Act with a single-factor matrix on one factor without building the full operator."""
    pos = state.space.position(factor)
    t = np.tensordot(np.asarray(matrix, dtype=complex), state.tensor(), axes=([1], [pos]))
    return StateVector(state.space, np.moveaxis(t, 0, pos).reshape(-1))


def local_expectation(state: StateVector, matrix: np.ndarray, factor: Union[str, int]) -> complex:
    """``<psi| O_factor |psi>`` for a single-factor matrix."""
    return complex(np.vdot(state.amplitudes, apply_local(matrix, state, factor).amplitudes))


def inner(x: StateVector, y: StateVector) -> complex:
    _check_same(x, y)
    return complex(np.vdot(x.amplitudes, y.amplitudes))


def expectation(state: StateVector, op: Operator) -> complex:
    _check_same(op, state)
    return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))


# -- reduced states -------------------------------------------------------

def partial_trace(obj: Union[StateVector, DensityMatrix], keep: Iterable[Union[str, int]]) -> DensityMatrix:
    """Reduced density matrix on the ``keep`` factors (kept in declaration order)."""
    space = obj.space
    keep_pos = sorted({space.position(k) for k in keep})
    if not keep_pos or len(keep_pos) == len(space.factors):
        raise FockError("keep must be a nonempty proper subset of the factors")
    rest = [i for i in range(len(space.factors)) if i not in keep_pos]
    dims = space.dims
    dk = math.prod(dims[i] for i in keep_pos)
    dr = math.prod(dims[i] for i in rest)
    if isinstance(obj, StateVector):
        m = obj.tensor().transpose(keep_pos + rest).reshape(dk, dr)
        rho = m @ m.conj().T
    else:
        k = len(dims)
        t = obj.matrix.reshape(dims + dims)
        order = keep_pos + rest + [k + i for i in keep_pos] + [k + i for i in rest]
        t = t.transpose(order).reshape(dk, dr, dk, dr)
        rho = np.einsum("ijkj->ik", t)
    sub = SpaceDescriptor(tuple(space.factors[i] for i in keep_pos))
    return DensityMatrix(sub, rho)


def density_matrix(state: StateVector) -> DensityMatrix:
    v = state.amplitudes
    return DensityMatrix(state.space, np.outer(v, v.conj()))


def von_neumann_entropy(dm: DensityMatrix) -> float:
    lam = dm.eigenvalues()
    if lam.min() < -1e-10:
        raise FockError("density matrix has negative eigenvalues beyond tolerance")
    lam = lam[lam > EIGEN_CLAMP]
    return float(max(0.0, -np.sum(lam * np.log(lam))))


# -- truncation -----------------------------------------------------------

def pair_tail(theta: float, cutoff: int) -> float:
    """Discarded weight sum_{n > cutoff} tanh^{2n}/cosh^2 of a squeezed pair."""
    return float(np.tanh(abs(theta)) ** (2 * (cutoff + 1)))


def cutoff_for_tail(theta: float, eps: float = DEFAULT_TAIL, minimum: int = 1) -> int:
    """Smallest cutoff whose pair tail is below ``eps``."""
    t2 = np.tanh(abs(theta)) ** 2
    if t2 == 0.0:
        return minimum
    n = math.ceil(math.log(eps) / math.log(t2)) - 1
    while pair_tail(theta, n) >= eps:
        n += 1
    return max(minimum, n)


# -- serialization --------------------------------------------------------

def to_json(obj: Union[Operator, StateVector]) -> str:
    """Flat ``[re, im]`` pairs in row-major order under a space header."""
    if isinstance(obj, Operator):
        kind, data = "operator", obj.matrix.reshape(-1)
    elif isinstance(obj, StateVector):
        kind, data = "state", obj.amplitudes
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    payload = {
        "kind": kind,
        "space": [[lab, n] for lab, n in obj.space.factors],
        "data": [[float(z.real), float(z.imag)] for z in data],
    }
    return json.dumps(payload)


def from_json(text: str) -> Union[Operator, StateVector]:
    payload = json.loads(text)
    space = make_space(payload["space"])
    data = np.array([complex(re, im) for re, im in payload["data"]])
    if payload["kind"] == "operator":
        return Operator(space, data.reshape(space.total_dim, space.total_dim))
    if payload["kind"] == "state":
        return StateVector(space, data)
    raise FockError(f"unknown kind {payload['kind']!r}")
