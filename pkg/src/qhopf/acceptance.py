"""Exit criteria 1-9, each measured at its pinned tolerance.

Every criterion returns the worst measured value against its threshold so a
run is self-auditing; :func:`run_all` is what ``qhopf acceptance`` executes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bogoliubov as bg
from . import dissipation as ds
from . import fock
from . import hopf
from . import thermofield as tf

THETA_GRID = (0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0)


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool | None = None

    def __post_init__(self):
        if self.passed is None:
            self.passed = bool(self.value < self.tolerance)


@dataclass
class Criterion:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = "; ".join(f"{c.name}={c.value:.3e} (tol {c.tolerance:.0e})" for c in self.checks)
        return f"[{status}] criterion {self.number}: {self.title} -- {parts}"


def deformed_ccr(cutoff: int = 20) -> Criterion:
    space = bg.pair_space(cutoff)
    mask = space.low_block(2)
    worst = 0.0
    for theta in THETA_GRID:
        q = hopf.DeformationParameter.from_theta(theta)
        da = hopf.coproduct_deformed_a(q, space)
        da_dag = hopf.coproduct_deformed_a_dag(q, space)
        target = (q.q.real + 1.0 / q.q.real) * fock.identity(space)
        worst = max(worst, (fock.commutator(da, da_dag) - target).max_abs(mask))
    return Criterion(1, "deformed ccr closure", [Check("ccr_residual", worst, 1e-10)])


def bogoliubov_forms(cutoff: int = 20) -> Criterion:
    space = bg.pair_space(cutoff)
    worst = max(bg.form_residual(theta, space) for theta in THETA_GRID)
    return Criterion(2, "twisted-adjoint combination equals closed Bogoliubov form",
                     [Check("form_residual", worst, 1e-12)])


def generator_translation(cutoff: int = 30) -> Criterion:
    space = bg.pair_space(cutoff)
    fd = bg.generator_residual(0.5, space, step=1e-5)
    _, _, conj = bg.conjugate(bg.make_pair(0.2, space), 0.3)
    return Criterion(3, "generator and theta translation", [
        Check("generator_fd_residual", fd, 1e-8),
        Check("translation_residual", conj, 1e-6),
    ])


def vacuum_equivalence(theta: float = 0.5) -> Criterion:
    cutoff = fock.cutoff_for_tail(theta, 1e-12)
    exp_vac = tf.vacuum_exponential([tf.ModeSpec("k", 1.0, theta)], cutoff)
    closed = tf.vacuum_closed_pair(theta, cutoff)
    dev = abs(tf.overlap(exp_vac, closed) - 1.0)
    return Criterion(4, "vacuum equivalence and annihilation", [
        Check("overlap_deviation", dev, 1e-10),
        Check("annihilation_norm", tf.annihilation_residual(closed), 1e-10),
    ])


def inequivalence(k_max: int = 1000) -> Criterion:
    worst = 0.0
    for theta, theta_prime in ((0.3, 0.8), (0.0, 0.5), (-0.4, 0.6), (1.0, 0.2)):
        cutoff = fock.cutoff_for_tail(max(abs(theta), abs(theta_prime)), 1e-20)
        a = tf.vacuum_closed_pair(theta, cutoff)
        b = tf.vacuum_closed_pair(theta_prime, cutoff)
        worst = max(worst, abs(abs(tf.overlap(a, b)) - 1.0 / math.cosh(theta - theta_prime)))
    scan = tf.overlap_scan(0.0, 0.5, k_max)
    beyond = [v for k, v in zip(scan.column("K"), scan.column("abs_overlap")) if k >= 64]
    return Criterion(5, "inequivalence curve", [
        Check("per_mode_overlap_error", worst, 1e-10),
        Check("max_overlap_for_K_ge_64", max(beyond), 1e-12),
    ])


def entropy_relations(theta: float = 0.5, cutoff: int = 40) -> Criterion:
    vac = tf.vacuum_closed_pair(theta, cutoff)
    mode = vac.modes[0]
    dense = tf.mode_expectation(vac, lambda m, sp: tf.entropy_operator([m], "A", space=sp))
    closed = tf.entropy_closed(theta)
    return Criterion(6, "entropy operator relations", [
        Check("S_A_vs_closed", abs(dense - closed), 1e-10),
        Check("gradient_relation_residual", tf.entropy_gradient_relation(mode.theta, cutoff), 1e-6),
        Check("S_A_vs_entanglement", abs(dense - tf.entanglement_entropy(vac)), 1e-8),
    ])


def quasi_static_balance(steps: int = 1000) -> float:
    schedule = ds.ThetaSchedule.bose_path(1.0, 2.0, [1.0], steps, 1.0 / steps)
    trace = ds.evolve(schedule, [tf.ModeSpec("k", 1.0)])
    d_e = trace.column("dQ_energy")[1:]
    d_f = d_e - trace.column("dQ_entropy")[1:]
    return float(np.max(np.abs(d_f) / np.abs(d_e)))


def thermodynamics() -> Criterion:
    worst = 0.0
    for beta, omega in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.3)):
        theta = tf.stationary_theta(beta, omega)
        worst = max(worst, abs(math.sinh(theta) ** 2 - tf.bose_occupation(beta, omega)))
    return Criterion(7, "free-energy stationarity", [
        Check("bose_mismatch", worst, 1e-10),
        Check("dF_over_dE_per_step", quasi_static_balance(), 1e-6),
    ])


def entanglement_weights(theta: float = 0.5) -> Criterion:
    vac = tf.vacuum_closed_pair(theta, fock.cutoff_for_tail(theta, 1e-12))
    sectors = tf.sector_states(vac.states[0])
    dist = tf.weights(theta, 50)
    sector_err = max(abs(float(np.sum(np.abs(sectors[n]) ** 2)) - dist[n]) for n in range(9))
    w = dist.weights
    ratio_err = float(np.max(np.abs(w[1:] / w[:-1] - math.tanh(theta) ** 2)))
    return Criterion(8, "entanglement weights", [
        Check("sector_norm_vs_W_n", sector_err, 1e-10),
        Check("partial_sum_deviation", abs(dist.partial_sum - 1.0), 1e-12),
        Check("ratio_vs_tanh2", ratio_err, 1e-12),
    ])


def conservation(theta: float = 0.5, cutoff: int = 30) -> Criterion:
    check = ds.check_sA_minus_sB(theta, cutoff)
    schedules = (
        ds.ThetaSchedule.constant(theta, 50, 0.01),
        ds.ThetaSchedule.linear(0.1, 0.5, 100, 0.01),
        ds.ThetaSchedule.bose_path(1.0, 2.0, [1.0], 100, 0.01),
    )
    drift = 0.0
    for sch in schedules:
        col = ds.evolve(sch, [tf.ModeSpec("k", 1.0)], beta=1.0).column("S_A_minus_S_B")
        drift = max(drift, float(np.ptp(col)))
    return Criterion(9, "S_A - S_B conservation", [
        Check("entropy_commutator", check.commutator_norm, 1e-9),
        Check("number_commutator", check.number_commutator_norm, 1e-12),
        Check("trace_drift", drift, 1e-9),
    ])


CRITERIA: tuple[Callable[[], Criterion], ...] = (
    deformed_ccr,
    bogoliubov_forms,
    generator_translation,
    vacuum_equivalence,
    inequivalence,
    entropy_relations,
    thermodynamics,
    entanglement_weights,
    conservation,
)


def run_all() -> list[Criterion]:
    return [fn() for fn in CRITERIA]
