"""Periodically switched loads and the polyharmonic load matrix.

A load port cycles through impedance states; state ``q`` is engaged for the
fraction ``R_q`` of the modulation period starting at the normalized delay
``r_q``. Its reflection waveform is expanded into Fourier coefficients
``Gamma_{h,k}``, which couple input harmonic ``h`` to output harmonic
``h + k``.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.linalg import block_diag

from .core import DomainError, FrequencyGrid, ScattererBlocks, ValidationError, frequency_of

DUTY_TOL = 1e-12

ImpedanceSpec = Union[complex, float, Callable[[float], complex], Mapping]
GammaSpec = Union[complex, float, Mapping, Sequence]


class SingularLoadError(DomainError):
    """``Z + Z_ref`` vanishes, so the reflection coefficient is undefined."""


def reflection_of_impedance(z, z_ref=50.0) -> complex:
    """Power-wave reflection coefficient ``(Z - Z_ref*) / (Z + Z_ref)``.

    An infinite impedance is treated as an ideal open (``+1``).
    """
    z = complex(z)
    z_ref = complex(z_ref)
    if np.isinf(z.real) or np.isinf(z.imag):
        return 1.0 + 0j
    den = z + z_ref
    if den == 0:
        raise SingularLoadError(f"Z + Z_ref = 0 for Z={z}, Z_ref={z_ref}")
    return (z - z_ref.conjugate()) / den


def _lookup(table, h: int, what: str):
    if isinstance(table, Mapping):
        if h in table:
            return table[h]
        if str(h) in table:
            return table[str(h)]
        raise ValidationError(f"{what} table has no entry for harmonic {h}")
    if h - 1 >= len(table):
        raise ValidationError(f"{what} table has {len(table)} entries, harmonic {h} requested")
    return table[h - 1]


@dataclass(frozen=True)
class LoadSegment:
    """One load state of a switching cycle.

    Exactly one of ``impedance`` (ohms; constant, callable of frequency, or a
    per-harmonic table) and ``gamma`` (constant or per-harmonic table) is set.
    """

    duty: float
    impedance: ImpedanceSpec | None = None
    gamma: GammaSpec | None = None

    def __post_init__(self):
        if (self.impedance is None) == (self.gamma is None):
            raise ValidationError("a load segment needs exactly one of impedance or gamma")
        if not (0.0 <= self.duty <= 1.0):
            raise ValidationError(f"duty {self.duty} outside [0, 1]")

    def reflection(self, h: int, f: float, z_ref) -> complex:
        if self.gamma is not None:
            g = self.gamma
            if isinstance(g, (Mapping, list, tuple, np.ndarray)):
                g = _lookup(g, h, "gamma")
            return complex(g)
        z = self.impedance
        if callable(z):
            z = z(f)
        elif isinstance(z, (Mapping, list, tuple, np.ndarray)):
            z = _lookup(z, h, "impedance")
        return reflection_of_impedance(z, z_ref)


@dataclass(frozen=True)
class PortSchedule:
    """Ordered load states of one port over a modulation period.

    ``offset`` is the normalized start time of the first segment; the
    conventional schedule starts at 0.
    """

    segments: tuple[LoadSegment, ...]
    offset: float = 0.0

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValidationError("a port schedule needs at least one segment")
        total = sum(s.duty for s in segs)
        if abs(total - 1.0) > DUTY_TOL:
            raise ValidationError(f"segment duties sum to {total!r}, expected 1")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def static(cls, impedance=None, gamma=None) -> "PortSchedule":
        return cls((LoadSegment(1.0, impedance=impedance, gamma=gamma),))

    @classmethod
    def two_state(cls, r_on: float, duty_on: float, on: dict, off: dict) -> "PortSchedule":
        """Expand a (delay, on-duty) pair into a three-segment schedule.

        ``on``/``off`` are keyword dicts for :class:`LoadSegment` (without
        ``duty``). When the on-interval runs past the period end it wraps,
        giving an on/off/on sequence instead of off/on/off.
        """
        if not (0.0 <= r_on < 1.0):
            raise ValidationError(f"r_on {r_on} outside [0, 1)")
        if not (0.0 <= duty_on <= 1.0):
            raise ValidationError(f"duty_on {duty_on} outside [0, 1]")
        end = r_on + duty_on
        if end <= 1.0:
            duties = (r_on, duty_on, 1.0 - end)
            states = (off, on, off)
        else:
            wrapped = end - 1.0
            duties = (wrapped, r_on - wrapped, 1.0 - r_on)
            states = (on, off, on)
        return cls(tuple(LoadSegment(d, **s) for d, s in zip(duties, states)))

    @property
    def durations(self) -> np.ndarray:
        return np.array([s.duty for s in self.segments])

    @property
    def delays(self) -> np.ndarray:
        """Normalized start times ``r_q / T_m`` of each segment."""
        d = self.durations
        return self.offset + np.concatenate(([0.0], np.cumsum(d[:-1])))

    def shifted(self, delta: float) -> "PortSchedule":
        return PortSchedule(self.segments, self.offset + delta)

    def reflections(self, h: int, f: float, z_ref) -> np.ndarray:
        return np.array([s.reflection(h, f, z_ref) for s in self.segments], dtype=complex)

    @property
    def is_static(self) -> bool:
        return len(self.segments) == 1


@dataclass(frozen=True)
class ModulationPlan:
    schedules: tuple[PortSchedule, ...]
    f_m: float
    regime: str = ""
    labels: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "schedules", tuple(self.schedules))
        if not self.schedules:
            raise ValidationError("a modulation plan needs at least one port schedule")
        if not self.f_m > 0:
            raise DomainError(f"modulation frequency must be positive, got {self.f_m}")
        if self.labels and len(self.labels) != len(self.schedules):
            raise ValidationError("labels must match the number of schedules")

    @property
    def num_ports(self) -> int:
        return len(self.schedules)


def _unit_phase(x) -> np.ndarray:
    """``exp(-2j*pi*x)`` with the argument reduced modulo 1 first."""
    return np.exp(-2j * np.pi * np.mod(x, 1.0))


def waveform_at(schedule: PortSchedule, t: float, gammas) -> complex:
    """Reflection coefficient at normalized time ``t`` within a period."""
    gammas = np.asarray(gammas, dtype=complex)
    if len(gammas) != len(schedule.segments):
        raise ValidationError("one reflection value per segment is required")
    u = (t - schedule.offset) % 1.0
    start = 0.0
    for g, seg in zip(gammas, schedule.segments):
        if seg.duty > 0 and start <= u < start + seg.duty:
            return complex(g)
        start += seg.duty
    # rounding at the very end of the period
    last = max(q for q, s in enumerate(schedule.segments) if s.duty > 0)
    return complex(gammas[last])


def fourier_coefficient(schedule: PortSchedule, gammas, k):
    """Closed-form Fourier coefficient(s) of the switched reflection waveform.

    ``k`` may be an integer or an integer array.
    """
    gammas = np.asarray(gammas, dtype=complex)
    if len(gammas) != len(schedule.segments):
        raise ValidationError("one reflection value per segment is required")
    k_arr = np.atleast_1d(np.asarray(k, dtype=np.int64))
    R = schedule.durations
    r = schedule.delays
    out = np.empty(k_arr.shape, dtype=complex)
    zero = k_arr == 0
    out[zero] = np.sum(gammas * R)
    kk = k_arr[~zero][:, None]
    if kk.size:
        terms = gammas * _unit_phase(kk * r) * (_unit_phase(kk * R) - 1.0)
        out[~zero] = (1j / (2 * np.pi * kk[:, 0])) * terms.sum(axis=1)
    return complex(out[0]) if np.ndim(k) == 0 else out


def cell_averages(schedule: PortSchedule, gammas, samples: int) -> np.ndarray:
    """Exact average of the waveform over each of ``samples`` equal cells."""
    gammas = np.asarray(gammas, dtype=complex)
    avg = np.zeros(samples, dtype=complex)
    for g, a, dur in zip(gammas, schedule.delays, schedule.durations):
        if dur == 0:
            continue
        a = a % 1.0
        b = a + dur
        pieces = [(a, b)] if b <= 1.0 else [(a, 1.0), (0.0, b - 1.0)]
        for lo, hi in pieces:
            _add_interval(avg, lo * samples, hi * samples, g)
    return avg


def _add_interval(avg: np.ndarray, x: float, y: float, value: complex) -> None:
    n = len(avg)
    i0 = int(np.floor(x))
    i1 = min(int(np.floor(y)), n)
    if i0 >= n:
        return
    if i0 == i1:
        avg[i0] += value * (y - x)
        return
    avg[i0] += value * (i0 + 1 - x)
    avg[i0 + 1:i1] += value
    if i1 < n:
        avg[i1] += value * (y - i1)


def fourier_coefficient_numeric(schedule: PortSchedule, gammas, k, samples: int = 1 << 16):
    """Midpoint-rule quadrature of the Fourier integral over one period.

    The integrand is evaluated with the waveform averaged exactly over each
    cell and the exponential at the cell midpoint; all requested ``k`` come
    from a single FFT.
    """
    if samples < 64:
        raise ValidationError("at least 64 quadrature samples are required")
    k_arr = np.atleast_1d(np.asarray(k, dtype=np.int64))
    if np.any(np.abs(k_arr) >= samples // 2):
        raise ValidationError(f"|k| must stay below samples/2 = {samples // 2}")
    avg = cell_averages(schedule, gammas, samples)
    spectrum = np.fft.fft(avg) / samples
    out = spectrum[np.mod(k_arr, samples)] * np.exp(-1j * np.pi * k_arr / samples)
    return complex(out[0]) if np.ndim(k) == 0 else out


@dataclass(frozen=True, eq=False)
class PolyharmonicLoadMatrix:
    """Dense ``HN x HN`` load matrix; block ``(i, j)`` maps input harmonic j to output i."""

    matrix: np.ndarray
    num_harmonics: int
    num_loads: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        size = self.num_harmonics * self.num_loads
        if m.shape != (size, size):
            raise ValidationError(f"load matrix has shape {m.shape}, expected ({size}, {size})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def block(self, i: int, j: int) -> np.ndarray:
        N = self.num_loads
        return self.matrix[(i - 1) * N:i * N, (j - 1) * N:j * N]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def port_coefficients(schedule: PortSchedule, h: int, f: float, z_ref, ks) -> np.ndarray:
    return fourier_coefficient(schedule, schedule.reflections(h, f, z_ref), np.asarray(ks))


def assemble_load_matrix(plan: ModulationPlan, blocks: ScattererBlocks, grid: FrequencyGrid) -> PolyharmonicLoadMatrix:
    """Build the polyharmonic load matrix for uncoupled load ports.

    Reflection states are evaluated at the input-harmonic frequency ``f_j``
    of each block column.
    """
    H, N = grid.H, plan.num_ports
    if blocks.layout.N != N:
        raise ValidationError(f"plan has {N} port schedules but the scatterer has {blocks.layout.N} load ports")
    if blocks.layout.H != H:
        raise ValidationError(f"scatterer has {blocks.layout.H} harmonics but the grid has {H}")
    if abs(plan.f_m - grid.f_m) > 1e-12 * grid.f_m:
        raise ValidationError(f"plan modulation frequency {plan.f_m} Hz differs from grid {grid.f_m} Hz")
    C = np.zeros((H * N, H * N), dtype=complex)
    out_h = np.arange(1, H + 1)
    diag = np.arange(N)
    for j in range(1, H + 1):
        f_j = frequency_of(grid, j)
        ks = out_h - j
        for d, sched in enumerate(plan.schedules):
            coeffs = port_coefficients(sched, j, f_j, blocks.z_ref, ks)
            C[(out_h - 1) * N + diag[d], (j - 1) * N + d] = coeffs
    return PolyharmonicLoadMatrix(C, H, N)


def apply_load_coupling(matrix: PolyharmonicLoadMatrix, block_overrides: dict) -> PolyharmonicLoadMatrix:
    """Replace selected ``(i, j)`` blocks with dense ``N x N`` matrices."""
    H, N = matrix.num_harmonics, matrix.num_loads
    C = matrix.matrix.copy()
    for (i, j), blk in block_overrides.items():
        if not (1 <= i <= H and 1 <= j <= H):
            raise ValidationError(f"block ({i}, {j}) outside the {H}x{H} harmonic grid")
        blk = np.asarray(blk, dtype=complex)
        if blk.shape != (N, N):
            raise ValidationError(f"override for block ({i}, {j}) has shape {blk.shape}, expected ({N}, {N})")
        C[(i - 1) * N:i * N, (j - 1) * N:j * N] = blk
    return PolyharmonicLoadMatrix(C, H, N)


def combine_multitone(load_matrices: Sequence[PolyharmonicLoadMatrix]) -> PolyharmonicLoadMatrix:
    """Block-diagonal concatenation over input tones (no cross-tone coupling)."""
    if not load_matrices:
        raise ValidationError("no load matrices to combine")
    N = load_matrices[0].num_loads
    for m in load_matrices:
        if m.num_loads != N:
            raise ValidationError(f"load port counts differ ({m.num_loads} vs {N})")
    if len(load_matrices) == 1:
        return load_matrices[0]
    C = block_diag(*[m.matrix for m in load_matrices])
    return PolyharmonicLoadMatrix(C, sum(m.num_harmonics for m in load_matrices), N)
