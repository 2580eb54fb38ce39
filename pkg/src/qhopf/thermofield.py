"""Theta vacua, entropy operator, free energy and entanglement weights.

A multimode vacuum is kept as one small state per mode (two factors, or four
for the charged construction) because the vacuum is an exact product over
modes; global quantities are assembled as products or sums of per-mode ones.
Factor labels are ``"<k>:A"``/``"<k>:B"`` for a pair and
``"<k>:A+"``, ``"<k>:Abar+"``, ``"<k>:A-"``, ``"<k>:Abar-"`` for the charged case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.optimize import bisect

from .bogoliubov import generator, pair_space
from .fock import (
    DEFAULT_TAIL,
    FockError,
    Operator,
    SpaceDescriptor,
    StateVector,
    apply_local,
    cutoff_for_tail,
    local_expectation,
    embed,
    expm_array,
    ladder,
    make_space,
    number,
    pair_tail,
    partial_trace,
    vacuum,
    von_neumann_entropy,
)
from .table import ResultTable

EXPONENTIAL_MAP = "exponential_map"
CLOSED_FORM = "closed_form"


class DegenerateInputError(FockError):
    """Input sits on a genuine singularity (e.g. the entropy operator at theta = 0)."""


class TruncationError(FockError):
    """The chosen cutoff leaves a discarded tail above the requested bound."""


@dataclass(frozen=True)
class ModeSpec:
    label: str
    omega: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise FockError(f"mode {self.label!r}: omega must be positive, got {self.omega}")


@dataclass(frozen=True, eq=False)
class ThetaVacuum:
    modes: tuple[ModeSpec, ...]
    states: tuple[StateVector, ...]
    construction_tag: str

    @property
    def norm(self) -> float:
        return float(np.prod([s.norm for s in self.states]))

    @property
    def charged(self) -> bool:
        return len(self.states[0].space.factors) == 4

    @property
    def tail(self) -> float:
        """Discarded probability weight, ``1 - prod_k (1 - tail_k)`` over all pairs."""
        log_keep = 0.0
        for mode, state in zip(self.modes, self.states):
            pairs = 2 if len(state.space.factors) == 4 else 1
            log_keep += pairs * math.log1p(-pair_tail(mode.theta, min(state.space.cutoffs)))
        return max(0.0, -math.expm1(log_keep))


def _as_modes(modes) -> tuple[ModeSpec, ...]:
    if isinstance(modes, ModeSpec):
        return (modes,)
    return tuple(modes)


def _cutoff_list(cutoffs, count: int) -> list[int]:
    if isinstance(cutoffs, (int, np.integer)):
        return [int(cutoffs)] * count
    cutoffs = [int(c) for c in cutoffs]
    if len(cutoffs) != count:
        raise FockError(f"{len(cutoffs)} cutoffs for {count} modes")
    return cutoffs


def _check_tail(theta: float, cutoff: int, eps: float, pairs: int = 1):
    tail = 1.0 - (1.0 - pair_tail(theta, cutoff)) ** pairs
    if tail >= eps:
        raise TruncationError(
            f"cutoff {cutoff} at theta={theta} discards weight {tail:.3e} >= {eps:.1e}"
        )


def _pair_amplitudes(theta: float, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    return np.tanh(theta) ** n / np.cosh(theta)


# -- vacuum constructions -------------------------------------------------

def vacuum_exponential(modes, cutoffs, eps: float = DEFAULT_TAIL) -> ThetaVacuum:
    """``exp(i sum_k theta_k G_k)|0>``, one exponential per mode."""
    modes = _as_modes(modes)
    states = []
    for mode, cutoff in zip(modes, _cutoff_list(cutoffs, len(modes))):
        _check_tail(mode.theta, cutoff, eps)
        space = pair_space(cutoff, mode.label)
        u = expm_array(1j * mode.theta * generator(space).matrix)
        states.append(StateVector(space, u[:, 0]))
    return ThetaVacuum(modes, tuple(states), EXPONENTIAL_MAP)


def vacuum_closed_pair(theta: float, cutoff: int, eps: float = DEFAULT_TAIL,
                       label: str = "k", omega: float = 1.0) -> ThetaVacuum:
    """``(1/cosh theta) exp(tanh theta A^dag B^dag)|0>`` with truncated amplitudes."""
    _check_tail(theta, cutoff, eps)
    space = pair_space(cutoff, label)
    amp = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    np.fill_diagonal(amp, _pair_amplitudes(theta, cutoff))
    mode = ModeSpec(label, omega, theta)
    return ThetaVacuum((mode,), (StateVector(space, amp),), CLOSED_FORM)


def closed_vacua(modes, cutoffs, eps: float = DEFAULT_TAIL) -> ThetaVacuum:
    """Multimode product of closed-form pair vacua."""
    modes = _as_modes(modes)
    states = [
        vacuum_closed_pair(m.theta, c, eps, m.label, m.omega).states[0]
        for m, c in zip(modes, _cutoff_list(cutoffs, len(modes)))
    ]
    return ThetaVacuum(modes, tuple(states), CLOSED_FORM)


def charged_space(cutoff: int, label: str = "k") -> SpaceDescriptor:
    return make_space([(f"{label}:{name}", cutoff) for name in ("A+", "Abar+", "A-", "Abar-")])


def vacuum_four_mode(theta: float, cutoff: int, eps: float = DEFAULT_TAIL,
                     label: str = "k", omega: float = 1.0) -> ThetaVacuum:
    """Charged-pair vacuum ``(1/cosh^2) exp[tanh (A+^dag Abar-^dag + A-^dag Abar+^dag)]|0>``.

    The exponential series is applied to the Fock vacuum factor by factor; it
    terminates because every term raises the total occupation.
    """
    _check_tail(theta, cutoff, eps, pairs=2)
    space = charged_space(cutoff, label)
    up = ladder(cutoff).conj().T
    t = math.tanh(theta)

    def pair_creation(state):
        first = apply_local(up, apply_local(up, state, 0), 3)
        second = apply_local(up, apply_local(up, state, 2), 1)
        return t * (first + second)

    term = vacuum(space)
    total = term.amplitudes.copy()
    for k in range(1, 2 * cutoff + 1):
        term = pair_creation(term) * (1.0 / k)
        if not np.any(term.amplitudes):
            break
        total += term.amplitudes
    state = StateVector(space, total / math.cosh(theta) ** 2)
    return ThetaVacuum((ModeSpec(label, omega, theta),), (state,), CLOSED_FORM)


def _split(state: StateVector) -> tuple[list[int], list[int]]:
    """Factor positions on either side of the entanglement cut."""
    if len(state.space.factors) == 4:
        return [0, 1], [2, 3]
    return [0], [1]


def _pairs(state: StateVector) -> list[tuple[int, int]]:
    """(particle, partner) factor positions of each squeezed pair."""
    if len(state.space.factors) == 4:
        return [(0, 3), (2, 1)]
    return [(0, 1)]


def annihilation_residual(vac: ThetaVacuum) -> float:
    """Largest ``||A_k(theta_k)|0(theta)>||`` over every pair and both partners."""
    worst = 0.0
    for mode, state in zip(vac.modes, vac.states):
        c, s = math.cosh(mode.theta), math.sinh(mode.theta)
        a = ladder(state.space.cutoffs[0])
        for i, j in _pairs(state):
            for x, y in ((i, j), (j, i)):
                out = c * apply_local(a, state, x).amplitudes - s * apply_local(a.conj().T, state, y).amplitudes
                worst = max(worst, float(np.linalg.norm(out)))
    return worst


# -- overlaps -------------------------------------------------------------

def overlap(vac_a: ThetaVacuum, vac_b: ThetaVacuum) -> complex:
    if len(vac_a.states) != len(vac_b.states):
        raise FockError("vacua have different mode counts")
    total = 1.0 + 0j
    for x, y in zip(vac_a.states, vac_b.states):
        if x.space != y.space:
            raise FockError(f"layout mismatch: {x.space.labels} vs {y.space.labels}")
        total *= np.vdot(x.amplitudes, y.amplitudes)
    return complex(total)


def overlap_scan(theta: float, theta_prime: float, k_max: int,
                 cutoff: int | None = None) -> ResultTable:
    """``|<0(theta)|0(theta')>|`` for ``K = 1..k_max`` identical modes.

    Each mode's overlap is measured on its own truncated pair space and the
    K-mode value is the running product (also tracked in log form).
    """
    if cutoff is None:
        cutoff = cutoff_for_tail(max(abs(theta), abs(theta_prime)), 1e-20, minimum=4)
    table = ResultTable(["K", "abs_overlap", "log_abs_overlap", "closed_form"])
    closed_one = 1.0 / math.cosh(theta - theta_prime)
    log_total = 0.0
    for k in range(1, k_max + 1):
        label = f"k{k}"
        a = vacuum_closed_pair(theta, cutoff, eps=1.0, label=label)
        b = vacuum_closed_pair(theta_prime, cutoff, eps=1.0, label=label)
        log_total += math.log(abs(overlap(a, b)))
        table.append(k, math.exp(log_total), log_total, closed_one ** k)
    table.meta.update(
        theta=theta, theta_prime=theta_prime, cutoff=cutoff,
        truncation_tail=pair_tail(max(abs(theta), abs(theta_prime)), cutoff),
    )
    return table


# -- entropy --------------------------------------------------------------

def entropy_closed(theta: float) -> float:
    """``cosh^2 ln cosh^2 - sinh^2 ln sinh^2`` (zero at theta = 0)."""
    c2, s2 = math.cosh(theta) ** 2, math.sinh(theta) ** 2
    return c2 * math.log(c2) - (s2 * math.log(s2) if s2 > 0 else 0.0)


def _factor(mode: ModeSpec, sector: str) -> str:
    if sector not in ("A", "B"):
        raise FockError(f"sector must be 'A' or 'B', got {sector!r}")
    return f"{mode.label}:{sector}"


def entropy_operator(modes, sector: str = "A", cutoff: int | None = None,
                     space: SpaceDescriptor | None = None) -> Operator:
    """``S = -sum_k {N_k ln sinh^2 theta_k - a_k a_k^dag ln cosh^2 theta_k}``.

    The second term keeps the ``a a^dag`` ordering as written; on a truncated
    factor it is wrong only on the top level.
    """
    modes = _as_modes(modes)
    if space is None:
        if cutoff is None:
            raise FockError("give either a cutoff or a space")
        factors = []
        for m in modes:
            factors += [(f"{m.label}:A", cutoff), (f"{m.label}:B", cutoff)]
        space = make_space(factors)
    total = Operator(space, np.zeros((space.total_dim,) * 2))
    for m in modes:
        if m.theta == 0.0:
            raise DegenerateInputError(f"entropy operator undefined at theta=0 (mode {m.label!r})")
        label = _factor(m, sector)
        n_max = space.cutoffs[space.position(label)]
        a = ladder(n_max)
        aad = embed(a @ a.conj().T, space, label)
        total = total - (math.log(math.sinh(m.theta) ** 2) * number(space, label)
                         - math.log(math.cosh(m.theta) ** 2) * aad)
    return total


def entropy_theta_derivative(mode: ModeSpec, space: SpaceDescriptor, sector: str = "A") -> Operator:
    """Analytic ``dS/dtheta = -(N 2 coth - a a^dag 2 tanh)`` for one mode."""
    if mode.theta == 0.0:
        raise DegenerateInputError("entropy derivative undefined at theta=0")
    label = _factor(mode, sector)
    a = ladder(space.cutoffs[space.position(label)])
    aad = embed(a @ a.conj().T, space, label)
    th = mode.theta
    return -(2.0 / math.tanh(th) * number(space, label) - 2.0 * math.tanh(th) * aad)


def mode_expectation(vac: ThetaVacuum, build) -> float:
    """Sum over modes of ``<psi_k| build(mode, space) |psi_k>``."""
    total = 0.0
    for mode, state in zip(vac.modes, vac.states):
        op = build(mode, state.space)
        total += np.vdot(state.amplitudes, op.matrix @ state.amplitudes).real
    return float(total)


def _local_mean(vac: ThetaVacuum, mode_index: int, sector: str, which: str) -> float:
    mode, state = vac.modes[mode_index], vac.states[mode_index]
    label = _factor(mode, sector)
    n_max = state.space.cutoffs[state.space.position(label)]
    if which == "N":
        m = np.diag(np.arange(n_max + 1.0))
    else:
        a = ladder(n_max)
        m = a @ a.conj().T
    return local_expectation(state, m, label).real


def entropy_expectation(vac: ThetaVacuum, sector: str = "A") -> float:
    """``<S>`` assembled from single-factor expectations (no dense operator)."""
    total = 0.0
    for i, m in enumerate(vac.modes):
        if m.theta == 0.0:
            raise DegenerateInputError(f"entropy operator undefined at theta=0 (mode {m.label!r})")
        total -= (math.log(math.sinh(m.theta) ** 2) * _local_mean(vac, i, sector, "N")
                  - math.log(math.cosh(m.theta) ** 2) * _local_mean(vac, i, sector, "aad"))
    return total


def number_expectation(vac: ThetaVacuum, sector: str = "A") -> float:
    return sum(_local_mean(vac, i, sector, "N") for i in range(len(vac.modes)))


def energy_expectation(vac: ThetaVacuum) -> float:
    """``<H_A>`` with ``H_A = sum_k omega_k A_k^dag A_k``."""
    return sum(m.omega * _local_mean(vac, i, "A", "N") for i, m in enumerate(vac.modes))


def entanglement_entropy(vac: ThetaVacuum) -> float:
    """Von Neumann entropy of the reduced state across the cut, summed over modes.

    Each truncated state is renormalized before tracing out.
    """
    total = 0.0
    for state in vac.states:
        keep, _ = _split(state)
        normed = StateVector(state.space, state.amplitudes / state.norm)
        total += von_neumann_entropy(partial_trace(normed, keep))
    return total


def _closed_amplitudes(theta: float, cutoff: int) -> np.ndarray:
    amp = np.zeros((cutoff + 1, cutoff + 1))
    np.fill_diagonal(amp, _pair_amplitudes(theta, cutoff))
    return amp.reshape(-1)


def entropy_gradient_relation(theta: float, cutoff: int, step: float = 1e-5) -> float:
    """``|| d/dtheta |0(theta)> + (1/2)(dS_A/dtheta)|0(theta)> ||``.

    The state derivative is a central difference of the closed-form vacuum;
    the operator side uses the analytic derivative of the entropy operator.
    """
    if theta == 0.0:
        raise DegenerateInputError("entropy gradient relation undefined at theta=0")
    space = pair_space(cutoff)
    psi = _closed_amplitudes(theta, cutoff)
    dpsi = (_closed_amplitudes(theta + step, cutoff) - _closed_amplitudes(theta - step, cutoff)) / (2 * step)
    ds = entropy_theta_derivative(ModeSpec("k", 1.0, theta), space)
    return float(np.linalg.norm(dpsi + 0.5 * (ds.matrix @ psi)))


def generator_flow_residual(theta: float, cutoff: int, step: float = 1e-5) -> float:
    """``|| d/dtheta |0(theta)> - i G |0(theta)> ||`` with the same difference quotient."""
    space = pair_space(cutoff)
    psi = _closed_amplitudes(theta, cutoff)
    dpsi = (_closed_amplitudes(theta + step, cutoff) - _closed_amplitudes(theta - step, cutoff)) / (2 * step)
    return float(np.linalg.norm(dpsi - 1j * (generator(space).matrix @ psi)))


# -- free energy ----------------------------------------------------------

def _check_thermal(beta: float, omega: float):
    if not beta > 0:
        raise FockError(f"beta must be positive, got {beta}")
    if not omega > 0:
        raise FockError(f"omega must be positive, got {omega}")


def free_energy(modes, beta: float) -> float:
    """``F_A = sum_k omega_k sinh^2 theta_k - S_A / beta`` (closed form)."""
    total = 0.0
    for m in _as_modes(modes):
        _check_thermal(beta, m.omega)
        total += m.omega * math.sinh(m.theta) ** 2 - entropy_closed(m.theta) / beta
    return total


def free_energy_gradient(theta: float, beta: float, omega: float) -> float:
    """``dF/dtheta = sinh(2 theta) (omega - (2/beta) ln coth theta)`` for theta > 0."""
    _check_thermal(beta, omega)
    log_coth = math.log1p(2.0 / math.expm1(2.0 * theta))
    return math.sinh(2.0 * theta) * (omega - 2.0 * log_coth / beta)


def stationary_theta(beta: float, omega: float, lo: float = 1e-8, hi: float = 20.0,
                     xtol: float = 1e-12) -> float:
    """Minimizer of the single-mode free energy by bisection on its gradient."""
    _check_thermal(beta, omega)
    # very cold modes sit below the default bracket; widen it downwards
    while free_energy_gradient(lo, beta, omega) >= 0.0:
        lo *= 1e-4
        if lo < 1e-300:
            return 0.0
    return bisect(free_energy_gradient, lo, hi, args=(beta, omega), xtol=xtol)


def bose_occupation(beta: float, omega: float) -> float:
    return 1.0 / math.expm1(beta * omega)


# -- entanglement weights -------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeightDistribution:
    thetas: tuple[float, ...]
    weights: np.ndarray
    tail: float

    @property
    def partial_sum(self) -> float:
        return float(self.weights.sum())

    def __getitem__(self, index):
        return self.weights[index]


def weights(theta_spectrum: Union[float, Sequence[float]], n_max: int) -> WeightDistribution:
    """``W_n = prod_k sinh^{2 n_k} theta_k / cosh^{2(n_k + 1)} theta_k`` for ``n_k <= n_max``.

    Returns an array indexed by the occupation multi-index; ``tail`` is the
    exact discarded weight ``1 - prod_k (1 - tanh^{2(n_max+1)} theta_k)``.
    """
    thetas = (float(theta_spectrum),) if np.isscalar(theta_spectrum) else tuple(map(float, theta_spectrum))
    n = np.arange(n_max + 1)
    w = np.ones(())
    log_keep = 0.0
    for th in thetas:
        per_mode = np.tanh(th) ** (2 * n) / np.cosh(th) ** 2
        w = np.multiply.outer(w, per_mode)
        log_keep += math.log1p(-pair_tail(th, n_max))
    w = np.array(w)
    w.flags.writeable = False
    return WeightDistribution(thetas, w, -math.expm1(log_keep))


def sector_states(state: StateVector) -> dict[int, np.ndarray]:
    """Amplitude tensor restricted to each pair-number sector ``sum(occupations) = 2n``."""
    occ_total = np.indices(state.space.dims).sum(axis=0)
    t = state.tensor()
    out = {}
    for n in range(int(occ_total.max()) // 2 + 1):
        sector = np.where(occ_total == 2 * n, t, 0.0)
        if np.any(sector):
            out[n] = sector
    return out


def schmidt_rank(tensor: np.ndarray, keep: list[int], rtol: float = 1e-10) -> int:
    rest = [i for i in range(tensor.ndim) if i not in keep]
    dk = math.prod(tensor.shape[i] for i in keep)
    m = tensor.transpose(keep + rest).reshape(dk, -1)
    sv = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(sv > rtol * sv[0])) if sv.size and sv[0] > 0 else 0


def entanglement_report(vac: ThetaVacuum) -> ResultTable:
    """Per pair-number sector: weight, expected W_n, Schmidt rank and reduced entropy."""
    if len(vac.states) != 1:
        raise FockError("entanglement report expects a single-mode vacuum")
    state = vac.states[0]
    theta = vac.modes[0].theta
    keep, _ = _split(state)
    n_pairs = len(_pairs(state))
    cutoff = min(state.space.cutoffs)
    dist = weights([theta] * n_pairs, cutoff)
    table = ResultTable(["n", "weight", "W_n", "schmidt_rank", "entropy"])
    for n, sector in sector_states(state).items():
        weight = float(np.sum(np.abs(sector) ** 2))
        expected = float(sum(dist.weights[idx] for idx in np.ndindex(dist.weights.shape) if sum(idx) == n))
        normed = StateVector(state.space, sector / math.sqrt(weight))
        entropy = von_neumann_entropy(partial_trace(normed, keep))
        table.append(n, weight, expected, schmidt_rank(sector, keep), entropy)
    table.meta.update(
        construction=vac.construction_tag,
        theta=theta,
        factors=list(state.space.labels),
        cutoff=cutoff,
        truncation_tail=vac.tail,
        total_entropy=entanglement_entropy(vac),
        total_entropy_closed=n_pairs * entropy_closed(theta),
    )
    return table
