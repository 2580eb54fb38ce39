import math

import mpmath
import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qhopf import fock
from qhopf import thermofield as tf
from qhopf.bogoliubov import pair_space
from qhopf.thermofield import DegenerateInputError, ModeSpec, TruncationError


def mp_pair_tail(theta, cutoff):
    """Discarded weight summed term by term at 50 digits."""
    mpmath.mp.dps = 50
    t2 = mpmath.tanh(theta) ** 2
    head = mpmath.fsum(t2**n for n in range(cutoff + 1)) / mpmath.cosh(theta) ** 2
    return float(1 - head)


def brute_overlap(theta, theta_prime, terms=400):
    return sum(
        math.tanh(theta) ** n * math.tanh(theta_prime) ** n for n in range(terms)
    ) / (math.cosh(theta) * math.cosh(theta_prime))


def four_mode_by_expm(theta, cutoff):
    space = tf.charged_space(cutoff)
    up = [fock.creator(space, i).matrix for i in range(4)]
    pair = math.tanh(theta) * (up[0] @ up[3] + up[2] @ up[1])
    psi = scipy.linalg.expm(pair)[:, 0] / math.cosh(theta) ** 2
    return space, psi


# -- oracles ------------------------------------------------------------------

@pytest.mark.parametrize("theta,cutoff", [(0.5, 17), (1.0, 30), (2.0, 60), (0.1, 5)])
def test_pair_tail_against_high_precision_sum(theta, cutoff):
    assert fock.pair_tail(theta, cutoff) == pytest.approx(mp_pair_tail(theta, cutoff), rel=1e-10)


@pytest.mark.parametrize("theta", [0.3, 0.5, 1.0])
def test_tail_cutoff_keeps_weight(theta):
    cutoff = fock.cutoff_for_tail(theta, 1e-12)
    vac = tf.vacuum_closed_pair(theta, cutoff)
    assert 1 - vac.norm**2 == pytest.approx(mp_pair_tail(theta, cutoff), abs=1e-15)
    assert vac.tail < 1e-12


@pytest.mark.parametrize("theta,theta_prime", [(0.3, 0.8), (0.0, 0.5), (-0.4, 0.6), (1.0, 0.2)])
def test_single_mode_overlap_against_series(theta, theta_prime):
    cutoff = fock.cutoff_for_tail(1.0, 1e-20)
    a = tf.vacuum_closed_pair(theta, cutoff)
    b = tf.vacuum_closed_pair(theta_prime, cutoff)
    measured = abs(tf.overlap(a, b))
    assert measured == pytest.approx(brute_overlap(theta, theta_prime), abs=1e-12)
    assert measured == pytest.approx(1 / math.cosh(theta - theta_prime), abs=1e-10)


@pytest.mark.parametrize("theta", [0.2, 0.5])
def test_exponential_map_vacuum_matches_closed_form(theta):
    cutoff = 30
    exp_vac = tf.vacuum_exponential([ModeSpec("k", 1.0, theta)], cutoff)
    closed = tf.vacuum_closed_pair(theta, cutoff)
    assert abs(tf.overlap(exp_vac, closed) - 1) < 1e-10


def test_exponential_map_vacuum_against_scipy():
    theta, cutoff = 0.4, 12
    space = pair_space(cutoff)
    g = -1j * (fock.creator(space, 0) @ fock.creator(space, 1)
               - fock.annihilator(space, 0) @ fock.annihilator(space, 1))
    ref = scipy.linalg.expm(1j * theta * g.matrix)[:, 0]
    vac = tf.vacuum_exponential([ModeSpec("k", 1.0, theta)], cutoff, eps=1.0)
    assert np.allclose(vac.states[0].amplitudes, ref, atol=1e-13)


@pytest.mark.parametrize("theta", [0.3, 0.5])
def test_four_mode_vacuum_against_dense_exponential(theta):
    cutoff = 4
    space, ref = four_mode_by_expm(theta, cutoff)
    vac = tf.vacuum_four_mode(theta, cutoff, eps=1.0)
    assert vac.states[0].space == space
    # the dense exponential is not truncated in total occupation the same way;
    # amplitudes agree wherever both pair numbers stay below the cutoff
    occ = space.occupations()
    inside = (occ[:, 0] == occ[:, 3]) & (occ[:, 1] == occ[:, 2])
    assert np.allclose(vac.states[0].amplitudes[inside], ref[inside], atol=1e-12)
    assert not np.any(vac.states[0].amplitudes[~inside])


def test_four_mode_amplitudes_closed_form():
    theta, cutoff = 0.5, 8
    vac = tf.vacuum_four_mode(theta, cutoff, eps=1.0)
    t = math.tanh(theta)
    for n, m in [(0, 0), (1, 0), (2, 3), (8, 8)]:
        amp = vac.states[0].amplitude((n, m, m, n))
        assert amp.real == pytest.approx(t ** (n + m) / math.cosh(theta) ** 2, rel=1e-12)


@pytest.mark.parametrize("theta", [0.25, 0.5, 1.0])
def test_entropy_closed_form_against_reduced_spectrum(theta):
    cutoff = fock.cutoff_for_tail(theta, 1e-16)
    probs = np.array([math.tanh(theta) ** (2 * n) / math.cosh(theta) ** 2 for n in range(cutoff + 1)])
    shannon = -float(np.sum(probs * np.log(probs)))
    assert tf.entropy_closed(theta) == pytest.approx(shannon, abs=1e-12)


@pytest.mark.parametrize("theta", [0.25, 0.5])
def test_entropy_operator_expectation(theta):
    vac = tf.vacuum_closed_pair(theta, 40)
    dense = tf.mode_expectation(vac, lambda m, sp: tf.entropy_operator([m], "A", space=sp))
    assert dense == pytest.approx(tf.entropy_closed(theta), abs=1e-10)
    assert tf.entropy_expectation(vac, "A") == pytest.approx(dense, abs=1e-12)
    assert tf.entropy_expectation(vac, "B") == pytest.approx(dense, abs=1e-12)
    assert tf.entanglement_entropy(vac) == pytest.approx(dense, abs=1e-8)


def test_entropy_gradient_relation():
    assert tf.entropy_gradient_relation(0.5, 40) < 1e-6


def test_generator_flow_of_vacuum():
    assert tf.generator_flow_residual(0.5, 40) < 1e-6


def test_entropy_rejects_theta_zero():
    vac = tf.vacuum_closed_pair(0.0, 4)
    with pytest.raises(DegenerateInputError):
        tf.entropy_expectation(vac)
    with pytest.raises(DegenerateInputError):
        tf.entropy_operator([ModeSpec("k", 1.0, 0.0)], "A", cutoff=4)


@pytest.mark.parametrize("theta", [0.5, 0.8])
def test_closed_vacuum_is_annihilated(theta):
    vac = tf.vacuum_closed_pair(theta, fock.cutoff_for_tail(theta, 1e-12))
    assert tf.annihilation_residual(vac) < 1e-10


def test_charged_vacuum_is_annihilated():
    vac = tf.vacuum_four_mode(0.5, 18)
    assert tf.annihilation_residual(vac) < 1e-10


def test_truncation_error_names_the_tail():
    with pytest.raises(TruncationError, match="discards weight"):
        tf.vacuum_closed_pair(1.0, 5)


# -- overlap scan -------------------------------------------------------------

def test_overlap_scan_follows_power_law():
    table = tf.overlap_scan(0.0, 0.5, 200)
    assert len(table.rows) == 200
    k = np.array(table.column("K"), dtype=float)
    measured = np.array(table.column("abs_overlap"))
    assert np.allclose(measured, math.cosh(0.5) ** -k, rtol=1e-12)
    assert np.allclose(table.column("closed_form"), math.cosh(0.5) ** -k, rtol=1e-12)


def test_overlap_scan_decay_threshold():
    """The K-mode overlap at a theta gap of 0.5 drops below 1e-12 only from K = 231 on."""
    table = tf.overlap_scan(0.0, 0.5, 240)
    below = [k for k, v in zip(table.column("K"), table.column("abs_overlap")) if v < 1e-12]
    assert below[0] == math.ceil(12 * math.log(10) / math.log(math.cosh(0.5)))
    assert below[0] == 231
    assert table.column("abs_overlap")[63] > 1e-4


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_overlap_is_symmetric_and_bounded(t1, t2):
    cutoff = fock.cutoff_for_tail(1.0, 1e-16)
    a = tf.vacuum_closed_pair(t1, cutoff, eps=1.0)
    b = tf.vacuum_closed_pair(t2, cutoff, eps=1.0)
    ab, ba = tf.overlap(a, b), tf.overlap(b, a)
    assert ab == pytest.approx(ba.conjugate(), abs=1e-15)
    assert abs(ab) <= 1 + 1e-15
    assert abs(ab) == pytest.approx(1 / math.cosh(t1 - t2), abs=1e-12)


# -- free energy --------------------------------------------------------------

@pytest.mark.parametrize("beta,omega", [(1.0, 1.0), (0.5, 2.0), (2.0, 0.3), (50.0, 1.0), (0.05, 0.1)])
def test_stationary_theta_is_bose_occupation(beta, omega):
    theta = tf.stationary_theta(beta, omega)
    assert math.sinh(theta) ** 2 == pytest.approx(1 / math.expm1(beta * omega), rel=1e-9, abs=1e-10)


def test_stationary_theta_minimizes_free_energy():
    beta, omega = 1.3, 0.7
    theta = tf.stationary_theta(beta, omega)
    f = lambda t: tf.free_energy(ModeSpec("k", omega, t), beta)  # noqa: E731
    assert f(theta) < f(theta - 1e-3)
    assert f(theta) < f(theta + 1e-3)


@pytest.mark.parametrize("theta", [0.2, 0.9])
def test_free_energy_gradient_against_difference_quotient(theta):
    beta, omega, h = 1.1, 0.8, 1e-6
    f = lambda t: tf.free_energy(ModeSpec("k", omega, t), beta)  # noqa: E731
    assert tf.free_energy_gradient(theta, beta, omega) == pytest.approx(
        (f(theta + h) - f(theta - h)) / (2 * h), rel=1e-7)


@pytest.mark.parametrize("beta,omega", [(0.0, 1.0), (1.0, -1.0)])
def test_free_energy_rejects_nonpositive(beta, omega):
    with pytest.raises(fock.FockError):
        tf.stationary_theta(beta, omega)


def test_mode_spec_rejects_nonpositive_frequency():
    with pytest.raises(fock.FockError):
        ModeSpec("k", 0.0, 0.1)


# -- weights and entanglement -------------------------------------------------

def test_weights_reference_values():
    dist = tf.weights(0.5, 10)
    assert dist[0] == pytest.approx(0.78645, abs=5e-6)
    assert dist[1] == pytest.approx(0.16795, abs=5e-6)


def test_weights_partial_sum_at_fifty():
    assert abs(tf.weights(0.5, 50).partial_sum - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 2.0), st.integers(1, 60))
def test_weight_ratios_and_tail(theta, n_max):
    dist = tf.weights(theta, n_max)
    w = dist.weights
    assert np.allclose(w[1:] / w[:-1], math.tanh(theta) ** 2, rtol=1e-12)
    assert np.all(np.diff(w) < 0)
    assert dist.partial_sum + dist.tail == pytest.approx(1.0, abs=1e-14)


def test_multimode_weights_are_product():
    dist = tf.weights([0.3, 0.7], 5)
    single = [tf.weights(t, 5).weights for t in (0.3, 0.7)]
    assert np.allclose(dist.weights, np.outer(*single), rtol=1e-14)


@pytest.mark.parametrize("theta", [0.5])
def test_sector_norms_equal_weights(theta):
    vac = tf.vacuum_closed_pair(theta, fock.cutoff_for_tail(theta, 1e-12))
    sectors = tf.sector_states(vac.states[0])
    dist = tf.weights(theta, 50)
    for n in range(9):
        assert float(np.sum(np.abs(sectors[n]) ** 2)) == pytest.approx(dist[n], abs=1e-10)


def test_charged_sectors_have_growing_schmidt_rank():
    vac = tf.vacuum_four_mode(0.5, 10, eps=1.0)
    table = tf.entanglement_report(vac)
    for n, rank, entropy in zip(table.column("n"), table.column("schmidt_rank"), table.column("entropy")):
        if n <= 10:
            assert rank == n + 1
            assert entropy == pytest.approx(math.log(n + 1), abs=1e-10)
    assert max(abs(w - e) for w, e in zip(table.column("weight"), table.column("W_n"))) < 1e-12


def test_charged_entropy_is_two_pairs():
    vac = tf.vacuum_four_mode(0.5, 18)
    assert tf.entanglement_entropy(vac) == pytest.approx(2 * tf.entropy_closed(0.5), abs=1e-8)
