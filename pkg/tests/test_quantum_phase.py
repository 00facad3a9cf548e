import math

import numpy as np
import pytest

from cpblab.errors import ParameterError
from cpblab.quantum_phase import (
    ConventionFlag,
    PhaseModelParams,
    band_sweep,
    build_phase_operator,
    charge_dispersion,
    convergence_check,
    is_converged,
    phase_levels,
    suggested_cutoff,
)

MATCHED = ConventionFlag(hopping_match=True)
LITERAL = ConventionFlag(hopping_match=False)


def test_free_rotor_levels():
    e = phase_levels(PhaseModelParams(1.0, 0.0, 0.0, 10), MATCHED, 5)
    np.testing.assert_allclose(e, [0.0, 1.0, 1.0, 4.0, 4.0], atol=1e-12)
    e = phase_levels(PhaseModelParams(1.0, 0.0, 0.5, 10), MATCHED, 6)
    np.testing.assert_allclose(e, [0.25, 0.25, 2.25, 2.25, 6.25, 6.25], atol=1e-12)


def test_operator_layout_and_conventions():
    p = PhaseModelParams(1.0, 50.0, 0.0, 60)
    H = build_phase_operator(p, MATCHED)
    assert H.dimension == 121
    assert H.corner == 0.0
    assert np.all(H.off_diagonal == -50.0)
    assert np.all(build_phase_operator(p, LITERAL).off_diagonal == -25.0)
    assert H.diagonal[0] == 3600.0


def test_matched_gap_near_plasma_frequency():
    e = phase_levels(PhaseModelParams(1.0, 50.0, 0.0, 60), MATCHED, 2)
    assert e[1] - e[0] == pytest.approx(math.sqrt(2.0 * 1.0 * 2.0 * 50.0), rel=0.05)


def test_cutoff_below_precondition_names_the_fix():
    with pytest.raises(ParameterError, match="M >= 39"):
        build_phase_operator(PhaseModelParams(1.0, 50.0, 0.0, 10))
    assert suggested_cutoff(1.0, 50.0) == 39


def test_offset_stored_as_fractional_part():
    p = PhaseModelParams.from_reference_occupation(1.0, 50.0, 1000.25)
    assert p.a == 0.25
    assert p.M == suggested_cutoff(1.0, 50.0)
    assert PhaseModelParams(1.0, 0.0, 1.0, 10).a == 0.0


def test_spectrum_periodic_and_even_in_offset():
    base = PhaseModelParams(1.0, 5.0, 0.3, 30)
    e = phase_levels(base, MATCHED, 5)
    np.testing.assert_allclose(phase_levels(base.with_offset(1.3), MATCHED, 5), e, atol=1e-10)
    np.testing.assert_allclose(phase_levels(base.with_offset(-0.3), MATCHED, 5), e, atol=1e-10)


def test_band_sweep_free_rotor_parabolas():
    grid = [0.0, 0.1, 0.25, 0.5, 0.75]
    table = band_sweep(PhaseModelParams(1.0, 0.0, 0.0, 10), MATCHED, grid, count=2, workers=2)
    m = np.arange(-10, 11)
    for a, row in zip(grid, table.energies):
        assert row[0] == pytest.approx(np.min((m - a) ** 2), abs=1e-12)
    # the two lowest parabolas cross at a = 1/2
    assert table.energies[3, 1] - table.energies[3, 0] == pytest.approx(0.0, abs=1e-12)


def test_band_sweep_gap_and_symmetry():
    p = PhaseModelParams(1.0, 1.0, 0.0, 20)
    table = band_sweep(p, MATCHED, [0.2, 0.5, 0.8], count=3)
    np.testing.assert_allclose(table.energies[0], table.energies[2], atol=1e-10)
    dense = np.linalg.eigvalsh(build_phase_operator(p.with_offset(0.5), MATCHED).to_dense())
    gap = table.energies[1, 1] - table.energies[1, 0]
    assert gap > 0.1
    assert gap == pytest.approx(dense[1] - dense[0], abs=1e-10)

    header, rows = table.to_columns()
    assert header == ["a", "E0", "E1", "E2"]
    assert len(rows) == 3


def test_band_sweep_rejects_offsets_outside_unit_interval():
    with pytest.raises(ParameterError):
        band_sweep(PhaseModelParams(1.0, 1.0, 0.0, 20), MATCHED, [0.0, 1.0])


def test_levels_converged_in_cutoff():
    p = PhaseModelParams(1.0, 50.0, 0.0, 60)
    assert convergence_check(p, MATCHED, 5) < 1e-9
    assert is_converged(p, MATCHED, 5)
    doubled = phase_levels(p.with_cutoff(120), MATCHED, 5)
    np.testing.assert_allclose(doubled, phase_levels(p, MATCHED, 5), rtol=1e-10)


def test_charge_dispersion_shrinks_with_josephson_ratio():
    values = []
    for ej in (0.5, 2.0, 5.0):
        p = PhaseModelParams(1.0, ej, 0.0, max(30, suggested_cutoff(1.0, ej)))
        values.append(charge_dispersion(p, MATCHED))
    assert values[0] > values[1] > values[2] > 0.0
