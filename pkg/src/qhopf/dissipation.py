"""Time-dependent deformation: heat term, Heisenberg residual and entropy traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bogoliubov import bogoliubov_closed, generator, pair_space
from .fock import (
    FockError,
    Operator,
    SpaceDescriptor,
    commutator,
    cutoff_for_tail,
    expm_array,
    number,
)
from .table import ResultTable
from .thermofield import (
    DegenerateInputError,
    ModeSpec,
    closed_vacua,
    energy_expectation,
    entropy_expectation,
    entropy_operator,
    stationary_theta,
    vacuum_closed_pair,
)

TRACE_COLUMNS = (
    "t", "theta", "S_A", "S_B", "S_A_minus_S_B", "E_A", "F_A", "dQ_entropy", "dQ_energy",
)


@dataclass(frozen=True, eq=False)
class ThetaSchedule:
    """Samples of ``theta(t)`` (one column per mode) on a uniform time grid."""

    t0: float
    dt: float
    thetas: np.ndarray
    theta_dots: np.ndarray
    betas: np.ndarray | None = None
    kind: str = "sampled"

    def __post_init__(self):
        if not self.dt > 0:
            raise FockError(f"time step must be positive, got {self.dt}")
        th = np.atleast_1d(np.asarray(self.thetas, dtype=float))
        td = np.broadcast_to(np.asarray(self.theta_dots, dtype=float), th.shape).copy()
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "theta_dots", td)
        if self.betas is not None:
            b = np.asarray(self.betas, dtype=float)
            if b.shape != (th.shape[0],):
                raise FockError("betas must have one entry per grid point")
            object.__setattr__(self, "betas", b)

    @property
    def steps(self) -> int:
        return self.thetas.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)

    def theta(self, mode_index: int = 0) -> np.ndarray:
        return self.thetas if self.thetas.ndim == 1 else self.thetas[:, mode_index]

    def theta_dot(self, mode_index: int = 0) -> np.ndarray:
        return self.theta_dots if self.theta_dots.ndim == 1 else self.theta_dots[:, mode_index]

    def reversed(self) -> "ThetaSchedule":
        """Same samples traversed backwards; velocities change sign."""
        betas = None if self.betas is None else self.betas[::-1].copy()
        return ThetaSchedule(self.t0, self.dt, self.thetas[::-1].copy(),
                             -self.theta_dots[::-1], betas, self.kind + "-reversed")

    @classmethod
    def constant(cls, theta: float, steps: int, dt: float, t0: float = 0.0) -> "ThetaSchedule":
        return cls(t0, dt, np.full(steps + 1, float(theta)), np.zeros(steps + 1), kind="constant")

    @classmethod
    def linear(cls, theta0: float, gamma: float, steps: int, dt: float,
               t0: float = 0.0) -> "ThetaSchedule":
        """``theta(t) = gamma t + theta0``."""
        t = t0 + dt * np.arange(steps + 1)
        return cls(t0, dt, gamma * t + theta0, np.full(steps + 1, float(gamma)), kind="linear")

    @classmethod
    def bose_path(cls, beta_start: float, beta_end: float, omegas: Sequence[float],
                  steps: int, dt: float, t0: float = 0.0) -> "ThetaSchedule":
        """Quasi-static path through free-energy minima with beta linear in t."""
        betas = np.linspace(beta_start, beta_end, steps + 1)
        thetas = np.array([[stationary_theta(b, w) for w in omegas] for b in betas])
        dots = np.gradient(thetas, dt, axis=0, edge_order=2)
        return cls(t0, dt, thetas, dots, betas, kind="bose")


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    records: np.ndarray
    overlap_with_initial: np.ndarray
    columns: tuple[str, ...] = field(default=TRACE_COLUMNS)

    def column(self, name: str) -> np.ndarray:
        return self.records[:, self.columns.index(name)]

    def to_table(self) -> ResultTable:
        return ResultTable(list(self.columns), [list(map(float, r)) for r in self.records])

    def to_csv(self) -> str:
        return self.to_table().to_csv()


def heat_term(theta_dot: float, generator_G: Operator) -> Operator:
    """``Q = (d theta / dt) G``."""
    if not math.isfinite(theta_dot):
        raise FockError("theta_dot must be finite")
    return theta_dot * generator_G


def difference_hamiltonian(space: SpaceDescriptor, omega: float = 1.0) -> Operator:
    """``omega (N_A - N_B)``; commutes with the pair generator."""
    return omega * (number(space, 0) - number(space, 1))


def _propagator(h: Operator, t: float) -> np.ndarray:
    m = h.matrix
    if np.count_nonzero(m - np.diag(np.diag(m))) == 0:
        return np.diag(np.exp(1j * t * np.diag(m)))
    return expm_array(1j * t * m)


def heisenberg_residual(schedule: ThetaSchedule, index: int, hamiltonian: Operator | None = None,
                        cutoff: int = 20, omega: float = 1.0, margin: int = 2) -> float:
    """``|| -i dA/dt - [H + Q, A] ||`` at grid point ``index``.

    ``A(t) = exp(iHt) A(theta(t)) exp(-iHt)``, ``dA/dt`` is the central
    difference over the neighbouring grid points and ``Q`` uses the schedule's
    ``theta_dot``. The default ``H`` is :func:`difference_hamiltonian`.
    """
    if not 0 < index < schedule.steps:
        raise FockError(f"index {index} is not interior to a grid of {schedule.steps} steps")
    space = pair_space(cutoff) if hamiltonian is None else hamiltonian.space
    h = difference_hamiltonian(space, omega) if hamiltonian is None else hamiltonian
    thetas, times = schedule.theta(0), schedule.times

    def heisenberg_A(j):
        u = _propagator(h, times[j])
        a_theta, _ = bogoliubov_closed(thetas[j], space)
        return Operator(space, u @ a_theta.matrix @ u.conj().T)

    a_prev, a_now, a_next = (heisenberg_A(j) for j in (index - 1, index, index + 1))
    lhs = -1j * (a_next - a_prev) / (2.0 * schedule.dt)
    q = heat_term(schedule.theta_dot(0)[index], generator(space))
    rhs = commutator(h + q, a_now)
    return (lhs - rhs).max_abs(space.low_block(margin))


def evolve(schedule: ThetaSchedule, modes: Sequence[ModeSpec], beta: float | None = None,
           cutoff: int | None = None, eps: float = 1e-16) -> EvolutionTrace:
    """Trace entropies, energy, free energy and heat increments along ``schedule``.

    Expectations are taken on closed-form vacua, term by term from the
    single-factor pieces of the entropy and number operators. Each step's heat increment is recorded twice: from the entropy
    change divided by the step-averaged beta, and from the energy change.
    """
    modes = tuple(modes)
    thetas = np.stack([schedule.theta(i) for i in range(len(modes))], axis=1)
    if np.any(thetas <= 0):
        raise DegenerateInputError("schedule reaches theta <= 0 where the entropy operator is undefined")
    if schedule.betas is not None:
        betas = schedule.betas
    elif beta is not None and beta > 0:
        betas = np.full(schedule.steps + 1, float(beta))
    else:
        raise FockError("a positive beta is required when the schedule carries none")
    if cutoff is None:
        cutoff = cutoff_for_tail(float(thetas.max()), eps, minimum=4)

    records = np.zeros((schedule.steps + 1, len(TRACE_COLUMNS)))
    overlaps = np.zeros(schedule.steps + 1)
    first = closed_vacua([ModeSpec(m.label, m.omega, th) for m, th in zip(modes, thetas[0])], cutoff, eps=1.0)
    for i, t in enumerate(schedule.times):
        step_modes = [ModeSpec(m.label, m.omega, th) for m, th in zip(modes, thetas[i])]
        vac = closed_vacua(step_modes, cutoff, eps=1.0)
        s_a = entropy_expectation(vac, "A")
        s_b = entropy_expectation(vac, "B")
        e_a = energy_expectation(vac)
        records[i, :7] = (t, thetas[i, 0], s_a, s_b, s_a - s_b, e_a, e_a - s_a / betas[i])
        if i:
            beta_mid = 0.5 * (betas[i] + betas[i - 1])
            records[i, 7] = (s_a - records[i - 1, 2]) / beta_mid
            records[i, 8] = e_a - records[i - 1, 5]
        overlaps[i] = abs(np.prod([np.vdot(x.amplitudes, y.amplitudes) for x, y in zip(first.states, vac.states)]))
    return EvolutionTrace(records, overlaps)


@dataclass(frozen=True)
class ConservationCheck:
    commutator_norm: float
    expectation: float
    number_commutator_norm: float


def check_sA_minus_sB(theta: float, cutoff: int = 30, margin: int = 2) -> ConservationCheck:
    """``||[S_A - S_B, G]||`` and ``||[N_A - N_B, G]||`` on the low sub-block, plus ``<S_A - S_B>``."""
    if theta == 0.0:
        raise DegenerateInputError("S_A - S_B is undefined at theta=0")
    vac = vacuum_closed_pair(theta, cutoff, eps=1.0)
    space = vac.states[0].space
    mode = vac.modes[0]
    diff = entropy_operator([mode], "A", space=space) - entropy_operator([mode], "B", space=space)
    g = generator(space)
    mask = space.low_block(margin)
    n_diff = number(space, 0) - number(space, 1)
    psi = vac.states[0].amplitudes
    return ConservationCheck(
        commutator_norm=commutator(diff, g).max_abs(mask),
        expectation=float(np.vdot(psi, diff.matrix @ psi).real),
        number_commutator_norm=commutator(n_diff, g).max_abs(mask),
    )
