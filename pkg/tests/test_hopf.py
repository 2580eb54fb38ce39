import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhopf import fock, hopf
from qhopf.bogoliubov import pair_space
from qhopf.fock import FockError
from qhopf.hopf import DeformationParameter, q_number

THETAS = [0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0]


def q_number_from_definition(x, q):
    """(q^x - q^-x) / (q - q^-1) with principal complex powers."""
    q = complex(q)
    return (q**x - q ** (-x)) / (q - 1 / q)


@pytest.mark.parametrize("q", [1.3, 0.4, 7.389, cmath.exp(0.7j), cmath.exp(-2.1j)])
@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 3.25, -1.5])
def test_q_number_matches_definition(q, x):
    assert complex(q_number(x, q)) == pytest.approx(q_number_from_definition(x, q), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("q", [1.0, 1 + 0j])
def test_q_number_is_classical_at_one(q):
    assert q_number(2.5, q) == 2.5


def test_q_number_two_is_two_cosh():
    for theta in THETAS:
        assert q_number(2, DeformationParameter.from_theta(theta)) == pytest.approx(2 * math.cosh(2 * theta))


@settings(max_examples=60, deadline=None)
@given(st.floats(-4, 4), st.floats(-1.5, 1.5))
def test_q_number_inversion_symmetry(x, theta):
    q = DeformationParameter.from_theta(theta)
    assert q_number(x, q) == pytest.approx(q_number(x, 1 / q.q.real), rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(-4, 4), st.floats(0.05, 3.0))
def test_q_number_unit_circle_symmetry(x, phi):
    a = q_number(x, cmath.exp(1j * phi))
    b = q_number(x, cmath.exp(-1j * phi))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("q", [0.0, -2.0, 2j, 1.5 + 0.5j])
def test_invalid_deformation_is_rejected(q):
    with pytest.raises(FockError):
        DeformationParameter(q)


def test_q_minus_one_is_singular():
    with pytest.raises(FockError):
        q_number(1.5, -1 + 0j)


def test_theta_round_trip():
    assert DeformationParameter.from_theta(0.37).theta == pytest.approx(0.37)
    with pytest.raises(FockError):
        DeformationParameter(cmath.exp(0.3j)).theta


@pytest.mark.parametrize("theta", THETAS)
def test_deformed_coproduct_ccr(theta):
    space = pair_space(20)
    q = DeformationParameter.from_theta(theta)
    da = hopf.coproduct_deformed_a(q, space)
    da_dag = hopf.coproduct_deformed_a_dag(q, space)
    target = 2 * math.cosh(2 * theta) * fock.identity(space)
    assert (fock.commutator(da, da_dag) - target).max_abs(space.low_block(2)) < 1e-10


@pytest.mark.parametrize("theta", THETAS)
def test_deformed_coproduct_respects_grading(theta):
    space = pair_space(12)
    q = DeformationParameter.from_theta(theta)
    da = hopf.coproduct_deformed_a(q, space)
    dn = hopf.coproduct_primitive("N", space)
    assert (fock.commutator(dn, da) + da).max_abs(space.low_block(2)) < 1e-10


def test_deformed_coproduct_has_explicit_legs():
    space = pair_space(6)
    theta = 0.4
    da = hopf.coproduct_deformed_a(DeformationParameter.from_theta(theta), space)
    ref = math.exp(theta) * fock.annihilator(space, 0) + math.exp(-theta) * fock.annihilator(space, 1)
    assert np.allclose(da.matrix, ref.matrix, atol=1e-15)


@pytest.mark.parametrize("h", [0.5, 1.0, 1.5])
def test_primitive_coproduct_is_homomorphism(h):
    space = pair_space(10)
    mask = space.low_block(2)
    d = {name: hopf.coproduct_primitive(name, space, h) for name in ("a", "a_dag", "H", "N")}
    assert (fock.commutator(d["a"], d["a_dag"]) - 2 * d["H"]).max_abs(mask) < 1e-12
    assert (fock.commutator(d["N"], d["a"]) + d["a"]).max_abs(mask) < 1e-12
    assert (fock.commutator(d["N"], d["a_dag"]) - d["a_dag"]).max_abs(mask) < 1e-12
    assert fock.commutator(d["H"], d["a"]).max_abs() == 0.0


@pytest.mark.parametrize("h", [0.5, 1.0])
def test_casimir_commutes_with_generators(h):
    space = fock.make_space([("x", 10)])
    rep = hopf.realization(space, "x", h)
    c = rep.casimir()
    mask = space.low_block(2)
    for g in (rep.a, rep.a_dag, rep.N):
        assert fock.commutator(c, g).max_abs(mask) < 1e-12


@pytest.mark.parametrize("theta", [0.3, -0.7])
def test_deformed_realization_ccr(theta):
    space = fock.make_space([("x", 10)])
    q = DeformationParameter.from_theta(theta)
    for h in (0.5, 1.0, 2.0):
        a_q = hopf.realization(space, "x", h).deformed_annihilator(q)
        ccr = fock.commutator(a_q, a_q.dag) - q_number(2 * h, q) * fock.identity(space)
        assert ccr.max_abs(space.low_block(2)) < 1e-12


def test_fundamental_casimir_is_undeformed():
    space = fock.make_space([("x", 8)])
    rep = hopf.fundamental_realization(space, "x")
    diff = hopf.casimir_deformed(rep, DeformationParameter.from_theta(0.6)) - rep.casimir()
    assert diff.max_abs() < 1e-14


@pytest.mark.parametrize("name", ["b", "a_q"])
def test_unknown_generator_is_rejected(name):
    with pytest.raises(FockError):
        hopf.coproduct_primitive(name, pair_space(3))


def test_coproduct_needs_two_factors():
    with pytest.raises(FockError):
        hopf.coproduct_deformed_a(1.5, fock.make_space([("x", 3)]))
