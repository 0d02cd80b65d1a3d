import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmscatter.core import FrequencyGrid, PortLayout, ScattererBlocks, ValidationError
from tmscatter.loads import (
    LoadSegment,
    ModulationPlan,
    PolyharmonicLoadMatrix,
    PortSchedule,
    SingularLoadError,
    apply_load_coupling,
    assemble_load_matrix,
    combine_multitone,
    fourier_coefficient,
    fourier_coefficient_numeric,
    reflection_of_impedance,
    waveform_at,
)

SQUARE = PortSchedule((LoadSegment(0.5, gamma=1.0), LoadSegment(0.5, gamma=-1.0)))
PM1 = np.array([1.0, -1.0])


def schedule_from(weights, offset=0.0):
    w = np.asarray(weights, dtype=float)
    duties = list(w[:-1] / w.sum())
    duties.append(1.0 - sum(duties))
    return PortSchedule(tuple(LoadSegment(d, gamma=0.0) for d in duties), offset)


@st.composite
def schedules(draw, max_q=6):
    q = draw(st.integers(1, max_q))
    weights = draw(st.lists(st.floats(0.05, 1.0), min_size=q, max_size=q))
    offset = draw(st.floats(0.0, 1.0, exclude_max=True))
    mags = draw(st.lists(st.floats(0.0, 1.0), min_size=q, max_size=q))
    phases = draw(st.lists(st.floats(-np.pi, np.pi), min_size=q, max_size=q))
    return schedule_from(weights, offset), np.array(mags) * np.exp(1j * np.array(phases))


@pytest.mark.parametrize("z,z_ref,expected", [
    (50, 50, 0), (0, 50, -1), (0, 50 + 10j, -0.9230769230769231 + 0.38461538461538464j),
])
def test_reflection_examples(z, z_ref, expected):
    assert reflection_of_impedance(z, z_ref) == pytest.approx(expected, abs=1e-15)


def test_reflection_singular_and_open():
    with pytest.raises(SingularLoadError):
        reflection_of_impedance(-50, 50)
    assert reflection_of_impedance(np.inf, 50) == 1


@given(st.floats(0, 1e4), st.floats(-1e4, 1e4), st.floats(1, 200), st.floats(-100, 100))
def test_passive_load_reflection_bounded(r, x, r0, x0):
    assert abs(reflection_of_impedance(complex(r, x), complex(r0, x0))) <= 1 + 1e-12


def test_waveform_examples():
    assert waveform_at(SQUARE, 0.25, PM1) == 1
    assert waveform_at(SQUARE, 0.75, PM1) == -1
    port6 = PortSchedule.two_state(0.1, 0.5, {"gamma": 1j}, {"gamma": -1j})
    assert all(waveform_at(port6, t, [-1j, 1j, -1j]) == -1j for t in (0.0, 0.05, 0.0999))
    assert waveform_at(port6, 0.1, [-1j, 1j, -1j]) == 1j


def test_zero_duty_segment_never_matches():
    s = PortSchedule((LoadSegment(0.0, gamma=9), LoadSegment(1.0, gamma=2)))
    assert waveform_at(s, 0.0, [9, 2]) == 2


def test_square_wave_lines():
    assert fourier_coefficient(SQUARE, PM1, 0) == 0
    assert fourier_coefficient(SQUARE, PM1, 1) == pytest.approx(-2j / np.pi, abs=1e-15)
    assert fourier_coefficient(SQUARE, PM1, -1) == pytest.approx(2j / np.pi, abs=1e-15)
    assert abs(fourier_coefficient(SQUARE, PM1, 2)) < 1e-15


def test_numeric_examples():
    static = PortSchedule.static(gamma=0.5)
    assert fourier_coefficient_numeric(static, [0.5], 0, 1024) == pytest.approx(0.5, abs=1e-12)
    assert fourier_coefficient_numeric(SQUARE, PM1, 1, 1 << 16) == pytest.approx(-2j / np.pi, abs=1e-4)
    with pytest.raises(ValidationError):
        fourier_coefficient_numeric(SQUARE, PM1, 1, 32)
    with pytest.raises(ValidationError):
        fourier_coefficient_numeric(SQUARE, PM1, 600, 1024)


@settings(max_examples=60, deadline=None)
@given(schedules())
def test_closed_form_matches_quadrature(sg):
    sched, gammas = sg
    ks = np.arange(-16, 17)
    closed = fourier_coefficient(sched, gammas, ks)
    numeric = fourier_coefficient_numeric(sched, gammas, ks, 1 << 16)
    assert np.max(np.abs(closed - numeric)) < 1e-8


@settings(max_examples=60, deadline=None)
@given(schedules(), st.floats(-2.0, 2.0), st.integers(-40, 40))
def test_time_shift_covariance(sg, delta, k):
    sched, gammas = sg
    base = fourier_coefficient(sched, gammas, k)
    moved = fourier_coefficient(sched.shifted(delta), gammas, k)
    assert moved == pytest.approx(base * np.exp(-2j * np.pi * k * delta), abs=1e-12)
    num = fourier_coefficient_numeric(sched.shifted(delta), gammas, k, 1 << 14)
    ref = fourier_coefficient_numeric(sched, gammas, k, 1 << 14) * np.exp(-2j * np.pi * k * delta)
    assert abs(num - ref) < 1e-6


@given(st.complex_numbers(max_magnitude=1.0), st.integers(-50, 50))
def test_static_collapse(g, k):
    c = fourier_coefficient(PortSchedule.static(gamma=g), [g], k)
    assert c == (g if k == 0 else 0)


@settings(max_examples=60)
@given(st.floats(0.0, 1.0, exclude_max=True), st.complex_numbers(max_magnitude=1.0),
       st.complex_numbers(max_magnitude=1.0), st.integers(1, 200))
def test_half_duty_parity(r_on, g_on, g_off, m):
    sched = PortSchedule.two_state(r_on, 0.5, {"gamma": g_on}, {"gamma": g_off})
    c = fourier_coefficient(sched, sched.reflections(1, 0.0, 50), [2 * m, -2 * m])
    assert np.all(np.abs(c) < 1e-15)


@settings(max_examples=60)
@given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=6), st.floats(0, 1), st.integers(1, 100))
def test_conjugate_symmetry_for_real_states(weights, offset, k):
    sched = schedule_from(weights, offset)
    gammas = np.linspace(-1, 1, len(weights))
    assert fourier_coefficient(sched, gammas, -k) == pytest.approx(np.conj(fourier_coefficient(sched, gammas, k)),
                                                                   abs=1e-15)


def test_parseval_monotone_and_bounded():
    sched = PortSchedule.two_state(0.3, 0.22, {"gamma": 0.9 - 0.2j}, {"gamma": -0.7 + 0.1j})
    gammas = sched.reflections(1, 0.0, 50)
    K = 10_000
    ks = np.concatenate([[0], np.repeat(np.arange(1, K + 1), 2) * np.tile([1, -1], K)])
    partial = np.cumsum(np.abs(fourier_coefficient(sched, gammas, ks)) ** 2)
    limit = np.sum(np.abs(gammas) ** 2 * sched.durations)
    assert np.all(np.diff(partial) >= 0)
    assert partial[-1] <= limit + 1e-12
    assert limit - partial[-1] < 1e-4 * limit


def test_two_state_expansion_and_wrap():
    s = PortSchedule.two_state(0.23, 0.22, {"gamma": 1}, {"gamma": -1})
    assert np.allclose(s.durations, [0.23, 0.22, 0.55])
    w = PortSchedule.two_state(0.8, 0.5, {"gamma": 1}, {"gamma": -1})
    assert np.allclose(w.durations, [0.3, 0.5, 0.2])
    assert [waveform_at(w, t, w.reflections(1, 0, 50)) for t in (0.1, 0.5, 0.9)] == [1, -1, 1]


def test_duty_sum_rejected():
    with pytest.raises(ValidationError, match="sum"):
        PortSchedule((LoadSegment(0.4, gamma=0), LoadSegment(0.5, gamma=0)))
    with pytest.raises(ValidationError):
        LoadSegment(0.5, impedance=50, gamma=0)


def test_impedance_forms():
    callable_seg = LoadSegment(1.0, impedance=lambda f: 50.0 if f < 1e9 else 0.0)
    assert callable_seg.reflection(1, 2e9, 50) == -1
    table = LoadSegment(1.0, impedance={1: 50.0, 2: 0.0})
    assert table.reflection(2, 0.0, 50) == -1
    with pytest.raises(ValidationError):
        table.reflection(3, 0.0, 50)


def _empty_blocks(N, H):
    return ScattererBlocks.zeros(PortLayout(1, N, H))


def test_load_matrix_square_wave_example():
    grid = FrequencyGrid.centered(1e9, 1e3, 3)
    plan = ModulationPlan([SQUARE], 1e3)
    C = assemble_load_matrix(plan, _empty_blocks(1, 3), grid).matrix
    g = -2j / np.pi
    expected = np.array([[0, -g, 0], [g, 0, -g], [0, g, 0]])
    assert np.allclose(C, expected, atol=1e-15, rtol=0)


def test_load_matrix_static_and_matched():
    grid = FrequencyGrid.centered(1e9, 1e3, 5)
    matched = ModulationPlan([PortSchedule.static(impedance=50.0)] * 3, 1e3)
    assert not np.any(assemble_load_matrix(matched, _empty_blocks(3, 5), grid).matrix)
    static = ModulationPlan([PortSchedule.static(gamma=0.3 - 0.1j)] * 3, 1e3)
    C = assemble_load_matrix(static, _empty_blocks(3, 5), grid).matrix
    assert np.array_equal(C, (0.3 - 0.1j) * np.eye(15))


def test_load_matrix_uses_input_harmonic_frequency():
    grid = FrequencyGrid.centered(1e9, 1e3, 3)
    seen = []

    def z(f):
        seen.append(f)
        return 25.0

    plan = ModulationPlan([PortSchedule((LoadSegment(0.5, impedance=z), LoadSegment(0.5, gamma=0.0)))], 1e3)
    C = assemble_load_matrix(plan, _empty_blocks(1, 3), grid)
    assert set(seen) == set(grid.frequencies)
    assert C.block(2, 2)[0, 0] == pytest.approx(0.5 * reflection_of_impedance(25.0, 50.0))


def test_load_matrix_checks_port_count():
    grid = FrequencyGrid.centered(1e9, 1e3, 3)
    with pytest.raises(ValidationError):
        assemble_load_matrix(ModulationPlan([SQUARE], 1e3), _empty_blocks(2, 3), grid)


def test_apply_load_coupling():
    base = PolyharmonicLoadMatrix(np.diag(np.arange(1, 7)).astype(complex), 3, 2)
    assert np.array_equal(apply_load_coupling(base, {}).matrix, base.matrix)
    dense = np.array([[1, 0.2], [0.2, 2]])
    out = apply_load_coupling(base, {(1, 1): dense})
    assert np.array_equal(out.block(1, 1), dense)
    assert np.array_equal(out.matrix[2:, 2:], base.matrix[2:, 2:])
    with pytest.raises(ValidationError):
        apply_load_coupling(base, {(1, 1): np.eye(3)})


def test_combine_multitone():
    one = PolyharmonicLoadMatrix(0.4 * np.eye(2), 1, 2)
    assert np.array_equal(combine_multitone([one]).matrix, one.matrix)
    two = combine_multitone([one, one])
    assert np.array_equal(two.matrix, 0.4 * np.eye(4))
    rng = np.random.default_rng(1)
    a = PolyharmonicLoadMatrix(rng.standard_normal((6, 6)), 3, 2)
    b = PolyharmonicLoadMatrix(rng.standard_normal((4, 4)), 2, 2)
    c = combine_multitone([a, b]).matrix
    assert not np.any(c[:6, 6:]) and not np.any(c[6:, :6])
    with pytest.raises(ValidationError):
        combine_multitone([a, PolyharmonicLoadMatrix(np.eye(3), 1, 3)])
