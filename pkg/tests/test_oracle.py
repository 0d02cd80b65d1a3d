import warnings

import numpy as np
import pytest

from tmscatter.core import Excitation, FrequencyGrid, SingularSystemError, ValidationError
from tmscatter.fixtures import monopole_array, random_blocks
from tmscatter.loads import LoadSegment, ModulationPlan, PortSchedule
from tmscatter.oracle import (
    OffsetSpectrum,
    SnapWarning,
    aligned_samples,
    compare,
    model_spectrum,
    quasi_static_spectrum,
)
from tmscatter.solver import solve

SQUARE = PortSchedule((LoadSegment(0.5, gamma=1.0), LoadSegment(0.5, gamma=-1.0)))


def test_static_loads_only_dc():
    blocks = random_blocks(np.random.default_rng(0), 3, 2, 1)
    grid = FrequencyGrid.centered(1e9, 1e3, 1)
    plan = ModulationPlan([PortSchedule.static(gamma=0.3), PortSchedule.static(gamma=-0.2j)], 1e3)
    spec = quasi_static_spectrum(blocks, plan, Excitation.single(1, 2), grid, samples=1024)
    assert np.max(np.abs(spec.amplitudes[spec.offsets != 0])) < 1e-16
    assert np.max(np.abs(spec.at(0))) > 0


def test_single_port_square_wave_line():
    blocks = random_blocks(np.random.default_rng(1), 2, 1, 1)
    blocks = blocks.replace(s_dd=np.zeros((1, 1, 1)))
    grid = FrequencyGrid.centered(1e9, 1e3, 1)
    a = np.array([0.3, -1j, 0.5, 0.2])
    spec = quasi_static_spectrum(blocks, ModulationPlan([SQUARE], 1e3), a, grid, samples=1024)
    S_fd = np.vstack([blocks.s_fd_p[0], blocks.s_fd_t[0]])
    S_df = np.hstack([blocks.s_df_p[0], blocks.s_df_t[0]])
    expected = S_fd[:, 0] * (-2j / np.pi) * (S_df[0] @ a)
    assert np.max(np.abs(spec.at(1) - expected)) < 1e-9


def test_flat_random_fixture_matches_model():
    rng = np.random.default_rng(42)
    H = 41
    blocks = random_blocks(rng, 3, 2, H, flat=True)
    blocks = blocks.replace(s_dd=np.zeros((H, 2, 2)))
    grid = FrequencyGrid.centered(1e9, 1e3, H)
    plan = ModulationPlan([PortSchedule.two_state(0.1, 0.3, {"gamma": 0.8j}, {"gamma": -0.5}),
                           PortSchedule.two_state(0.55, 0.5, {"gamma": 0.7}, {"gamma": 0.1 - 0.3j})], 1e3)
    exc = Excitation.single(grid.h_c, 2, "theta")
    report = compare(model_spectrum(solve(blocks, grid, plan, exc)),
                     quasi_static_spectrum(blocks, plan, exc, grid), 1e-9, kmax=19)
    assert report.passed, report.lines()


def test_sampling_refinement(uncoupled, plans):
    blocks, grid, _ = uncoupled
    exc = Excitation.single(grid.h_c, 5, "theta")
    n = aligned_samples(plans["II"], minimum=4096)
    coarse = quasi_static_spectrum(blocks, plans["II"], exc, grid, samples=n)
    fine = quasi_static_spectrum(blocks, plans["II"], exc, grid, samples=2 * n)
    ks = coarse.offsets[np.abs(coarse.offsets) <= n // 4]
    diff = max(np.max(np.abs(coarse.at(k) - fine.at(k))) for k in ks)
    assert diff < 1e-12


def test_dispersive_fixture_diverges(plans):
    blocks, grid = monopole_array(num_directions=8, num_harmonics=25, coupling=0.0, dispersion=0.02)
    exc = Excitation.single(grid.h_c, 2, "theta")
    report = compare(model_spectrum(solve(blocks, grid, plans["O"], exc)),
                     quasi_static_spectrum(blocks, plans["O"], exc, grid), 1e-9, kmax=10)
    assert report.max_rel_error > 1e-3


def test_aligned_samples():
    plan = ModulationPlan([PortSchedule.two_state(0.23, 0.22, {"gamma": 1}, {"gamma": 0})], 1e3)
    n = aligned_samples(plan)
    assert n >= 1 << 16 and n % 100 == 0
    assert aligned_samples(ModulationPlan([SQUARE], 1e3)) == 1 << 16


def test_snapping_warns():
    plan = ModulationPlan([PortSchedule((LoadSegment(1 / 3, gamma=1), LoadSegment(2 / 3, gamma=0)))], 1e3)
    blocks = random_blocks(np.random.default_rng(3), 1, 1, 1)
    grid = FrequencyGrid.centered(1e9, 1e3, 1)
    with pytest.warns(SnapWarning):
        quasi_static_spectrum(blocks, plan, Excitation.single(1, 1), grid, samples=1024)
    with warnings.catch_warnings():
        warnings.simplefilter("error", SnapWarning)
        quasi_static_spectrum(blocks, plan, Excitation.single(1, 1), grid, samples=3 * 1024)


def test_rejects_bad_sample_counts():
    blocks = random_blocks(np.random.default_rng(3), 1, 1, 1)
    grid = FrequencyGrid.centered(1e9, 1e3, 1)
    with pytest.raises(ValidationError):
        quasi_static_spectrum(blocks, ModulationPlan([SQUARE], 1e3), Excitation.single(1, 1), grid, samples=512)


def test_instantaneous_singularity_reports_time():
    blocks = random_blocks(np.random.default_rng(3), 1, 1, 1).replace(s_dd=np.full((1, 1, 1), 2.0))
    grid = FrequencyGrid.centered(1e9, 1e3, 1)
    plan = ModulationPlan([PortSchedule.two_state(0.25, 0.5, {"gamma": 0.5}, {"gamma": 0.1})], 1e3)
    with pytest.raises(SingularSystemError, match="t/T_m = 0.25"):
        quasi_static_spectrum(blocks, plan, Excitation.single(1, 1), grid, samples=1024)


def test_compare_identical_and_single_offset_failure():
    offsets = np.arange(-3, 4)
    amps = np.random.default_rng(0).standard_normal((7, 4)) + 0j
    same = compare(OffsetSpectrum(offsets, amps), OffsetSpectrum(offsets, amps.copy()), 1e-6)
    assert same.passed and same.max_abs_error == 0
    bumped = amps.copy()
    bumped[5, 1] += 1e-3
    report = compare(OffsetSpectrum(offsets, bumped), OffsetSpectrum(offsets, amps), 1e-6)
    assert report.failing == [2]
    assert "FAIL at offsets [2]" in report.lines()[-1]


def test_compare_needs_overlap():
    a = OffsetSpectrum(np.array([0]), np.ones((1, 2)))
    b = OffsetSpectrum(np.array([1]), np.ones((1, 2)))
    with pytest.raises(ValidationError):
        compare(a, b, 1e-9)


def test_uncoupled_regime_o_matches_model(uncoupled, plans):
    blocks, grid, _ = uncoupled
    exc = Excitation.single(grid.h_c, 5, "theta")
    report = compare(model_spectrum(solve(blocks, grid, plans["O"], exc)),
                     quasi_static_spectrum(blocks, plans["O"], exc, grid), 1e-9, kmax=10)
    assert report.passed, report.lines()


def test_coupled_gap_shrinks_with_harmonic_count(plans):
    # with load-to-load coupling the finite harmonic window truncates multiple bounces
    errors = []
    for H in (13, 25, 49):
        blocks, grid = monopole_array(num_directions=12, num_harmonics=H)
        exc = Excitation.single(grid.h_c, 5, "theta")
        report = compare(model_spectrum(solve(blocks, grid, plans["O"], exc)),
                         quasi_static_spectrum(blocks, plans["O"], exc, grid), 1e-9, kmax=4)
        errors.append(report.max_abs_error)
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.6 * errors[0]
