import numpy as np
import pytest
from scipy.stats import unitary_group

from cpblab.bose_hubbard import Basis, StateVector
from cpblab.errors import BasisMismatchError, ParameterError
from cpblab.witness import (
    PUBLISHED_STATE,
    ObservablePair,
    check_dominance,
    classical_no_go_property,
    find_violation,
    paper_instance,
    random_dominated_pair,
    witness_report,
    witness_value,
)


def test_published_pair_is_dominated_within_rounding():
    dom = check_dominance(paper_instance())
    assert dom.certified
    assert dom.margin_A == pytest.approx(-2.1e-4, abs=2e-5)
    assert dom.margin_BA == pytest.approx(-5.75e-4, abs=2e-5)
    assert not check_dominance(paper_instance(), tol=0.0).certified


def test_published_state_violates():
    value = witness_value(paper_instance(), PUBLISHED_STATE)
    assert value == pytest.approx(-0.0596, abs=1e-3)
    # unnormalized input gives the same value
    assert witness_value(paper_instance(), 3.0 * np.array(PUBLISHED_STATE)) == pytest.approx(value, abs=1e-14)


def test_optimal_violation():
    found = find_violation(paper_instance())
    assert found is not None
    assert found.value == pytest.approx(-0.05961, abs=1e-4)
    assert found.certified
    np.testing.assert_allclose(found.state.amplitudes, [0.3917, 0.9201], atol=1e-3)
    assert witness_value(paper_instance(), found.state) == pytest.approx(found.value, abs=1e-12)


def test_commuting_pairs_never_violate(rng):
    assert find_violation(random_dominated_pair(4, rng)) is None
    assert find_violation(random_dominated_pair(3, rng, rotate=True)) is None


def test_classical_no_go_property_holds():
    report = classical_no_go_property(samples=10_000, seed=7)
    assert report.passed
    assert report.samples == 10_000
    assert report.worst >= -1e-10
    assert classical_no_go_property(samples=500, dimensions=3, seed=7, rotate=True).passed


def test_undominated_violation_is_not_certified():
    p = ObservablePair(np.diag([2.0, 0.0]), np.eye(2))
    found = find_violation(p)
    assert found is not None
    assert found.value == pytest.approx(-3.0)
    assert not found.certified


def test_violation_invariant_under_unitary_conjugation():
    U = unitary_group.rvs(2, random_state=np.random.default_rng(3))
    p = paper_instance()
    q = p.conjugated(U)
    phi = np.array(PUBLISHED_STATE, dtype=complex)
    assert witness_value(q, U @ phi) == pytest.approx(witness_value(p, phi), abs=1e-12)
    assert find_violation(q).value == pytest.approx(find_violation(p).value, abs=1e-12)


def test_observable_pair_validation():
    with pytest.raises(ParameterError):
        ObservablePair(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))
    with pytest.raises(ParameterError):
        ObservablePair(np.eye(2), np.eye(3))
    with pytest.raises(ParameterError):
        ObservablePair(np.eye(1), np.eye(1))
    with pytest.raises(BasisMismatchError):
        witness_value(paper_instance(), [1.0, 0.0, 0.0])
    with pytest.raises(ParameterError):
        witness_value(paper_instance(), [0.0, 0.0])
    with pytest.raises(ParameterError):
        check_dominance(paper_instance(), tol=-1.0)
    with pytest.raises(ParameterError):
        classical_no_go_property(samples=0)


def test_state_vector_input():
    phi = StateVector(np.array([0.0, 1.0]), Basis("index", 2))
    assert witness_value(paper_instance(), phi) == pytest.approx(0.309**2 - (0.249**2 + 0.0854**2))


def test_witness_report_fields():
    report = witness_report(paper_instance(), PUBLISHED_STATE)
    assert report["certified"] is True
    assert report["witness_value"] == pytest.approx(-0.0596, abs=1e-3)
    assert report["violation_value"] == pytest.approx(-0.05961, abs=1e-4)
    assert len(report["violating_state"]) == 2
    assert set(report["margins"]) == {"A", "B_minus_A"}

    quiet = witness_report(ObservablePair(np.eye(2), 2.0 * np.eye(2)))
    assert quiet["violating_state"] is None
    assert quiet["witness_value"] == pytest.approx(3.0)
