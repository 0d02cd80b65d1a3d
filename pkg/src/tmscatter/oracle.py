"""Quasi-static time-domain reference for frequency-flat scatterers.

Over one modulation period the loaded scatterer is treated as a sequence of
static networks. The output waveform is sampled on a uniform grid, every
switch instant snapped to a grid point, and transformed back to harmonic
offsets. Because the sampled output is then exactly a staircase on the grid
cells, the DFT is corrected by the zero-order-hold factor to give the exact
Fourier coefficients of that staircase.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Excitation, FrequencyGrid, ScatterResult, ScattererBlocks, SingularSystemError, ValidationError
from .loads import ModulationPlan
from .network import unified_df, unified_fd, unified_structural

MIN_SAMPLES = 1024
COND_MAX = 1e12


class SnapWarning(UserWarning):
    """Switch instants did not fall on the sampling grid and were moved."""


@dataclass(frozen=True, eq=False)
class OffsetSpectrum:
    """Complex output amplitudes per harmonic offset, shape ``(K, 2M)``."""

    offsets: np.ndarray
    amplitudes: np.ndarray

    def at(self, k: int) -> np.ndarray:
        idx = np.searchsorted(self.offsets, k)
        if idx >= len(self.offsets) or self.offsets[idx] != k:
            raise KeyError(f"offset {k} not in spectrum")
        return self.amplitudes[idx]

    def restrict(self, kmax: int) -> "OffsetSpectrum":
        keep = np.abs(self.offsets) <= kmax
        return OffsetSpectrum(self.offsets[keep], self.amplitudes[keep])


def model_spectrum(result: ScatterResult) -> OffsetSpectrum:
    """Arrange a harmonic-domain result by offset from the center harmonic."""
    offsets = np.arange(1, result.layout.H + 1) - result.grid.h_c
    return OffsetSpectrum(offsets, result.b.reshape(result.layout.H, 2 * result.layout.M))


def aligned_samples(plan: ModulationPlan, minimum: int = 1 << 16, max_denominator: int = 10_000) -> int:
    """Smallest ``L * 2**p >= minimum`` whose grid holds every switch instant exactly.

    ``L`` is the least common denominator of the switch instants read as
    fractions with denominator at most ``max_denominator``.
    """
    lcm = 1
    for sched in plan.schedules:
        bounds = sched.offset + np.concatenate(([0.0], np.cumsum(sched.durations)))
        for x in bounds:
            frac = Fraction(float(x) % 1.0).limit_denominator(max_denominator)
            lcm = lcm * frac.denominator // math.gcd(lcm, frac.denominator)
    n = lcm
    while n < minimum:
        n *= 2
    return n


def _sample_reflections(plan: ModulationPlan, h: int, f: float, z_ref: complex, samples: int):
    """Per-sample reflection of every port, shape (samples, N), and the worst snapping error."""
    G = np.empty((samples, plan.num_ports), dtype=complex)
    worst = 0.0
    for d, sched in enumerate(plan.schedules):
        gammas = sched.reflections(h, f, z_ref)
        bounds = sched.offset + np.concatenate(([0.0], np.cumsum(sched.durations)))
        scaled = bounds * samples
        snapped = np.rint(scaled).astype(np.int64)
        worst = max(worst, float(np.max(np.abs(scaled - snapped))))
        filled = np.zeros(samples, dtype=bool)
        for q, g in enumerate(gammas):
            idx = np.arange(snapped[q], snapped[q + 1]) % samples
            G[idx, d] = g
            filled[idx] = True
        if not filled.all():
            raise ValidationError(f"port {d + 1} schedule leaves samples uncovered after snapping")
    return G, worst


def quasi_static_spectrum(blocks: ScattererBlocks, plan: ModulationPlan, a, grid: FrequencyGrid,
                          samples: int | None = None) -> OffsetSpectrum:
    """Harmonic amplitudes of the quasi-static response to a single input tone.

    Parameters
    ----------
    blocks : ScattererBlocks
        Either single-harmonic blocks or blocks on ``grid``; in the latter
        case the center-harmonic submatrices are used.
    plan : ModulationPlan
    a : Excitation or array_like
        Single-tone incident waves, as an :class:`Excitation` at the center
        harmonic or a ``2M`` vector ``[a_phi, a_theta]``.
    grid : FrequencyGrid
        Supplies the input frequency at which impedances are evaluated.
    samples : int, optional
        Time samples per period. Defaults to :func:`aligned_samples`.

    Returns
    -------
    OffsetSpectrum
        Offsets ``|k| <= samples/2 - 1``.
    """
    h_blk = 1 if blocks.layout.H == 1 else grid.h_c
    if blocks.layout.H not in (1, grid.H):
        raise ValidationError("blocks must be single-harmonic or match the grid")
    if plan.num_ports != blocks.layout.N:
        raise ValidationError(f"plan has {plan.num_ports} ports, scatterer has {blocks.layout.N}")
    M = blocks.layout.M
    if isinstance(a, Excitation):
        hs = {e.h for e in a.entries}
        if hs != {grid.h_c}:
            raise ValidationError("the oracle takes single-tone excitation at the center harmonic")
        vec = np.zeros(2 * M, dtype=complex)
        for e in a.entries:
            vec[e.tau - 1] = e.a_phi
            vec[M + e.tau - 1] = e.a_theta
        a = vec
    a = np.asarray(a, dtype=complex)
    if a.shape != (2 * M,):
        raise ValidationError(f"excitation vector must have length {2 * M}")
    if samples is None:
        samples = aligned_samples(plan)
    if samples < MIN_SAMPLES:
        raise ValidationError(f"samples must be at least {MIN_SAMPLES}")
    n_segments = sum(len(s.segments) for s in plan.schedules)
    if samples <= 100 * n_segments:
        raise ValidationError(f"samples must exceed 100x the segment count ({n_segments})")

    S_ff = unified_structural(blocks)[h_blk - 1]
    S_fd = unified_fd(blocks)[h_blk - 1]
    S_df = unified_df(blocks)[h_blk - 1]
    S_dd = blocks.s_dd[h_blk - 1]
    N = blocks.layout.N

    G, snap = _sample_reflections(plan, grid.h_c, grid.f_in, blocks.z_ref, samples)
    if snap > 1e-9:
        warnings.warn(f"switch instants moved by up to {snap:.3f} samples to fit a {samples}-point grid",
                      SnapWarning, stacklevel=2)
    flat = np.concatenate([G.real, G.imag], axis=1)
    uniq, first, inverse = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    states = uniq[:, :N] + 1j * uniq[:, N:]

    direct = S_ff @ a
    into_loads = S_df @ a
    outputs = np.empty((len(states), 2 * M), dtype=complex)
    eye = np.eye(N)
    for s, gam in enumerate(states):
        A = eye - S_dd * gam[None, :]
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > COND_MAX:
            t = first[s] / samples
            raise SingularSystemError(
                f"instantaneous load network singular at t/T_m = {t:.6f} (condition {cond:.3e})",
                rcond=1.0 / cond if cond else 0.0,
            )
        x = np.linalg.solve(A, into_loads)
        outputs[s] = direct + S_fd @ (gam * x)
    y = outputs[inverse.reshape(-1)]

    D = np.fft.fft(y, axis=0) / samples
    kmax = samples // 2 - 1
    ks = np.arange(-kmax, kmax + 1)
    coeffs = D[np.mod(ks, samples)]
    nz = ks != 0
    hold = np.ones(len(ks), dtype=complex)
    kk = ks[nz]
    hold[nz] = samples * (1 - np.exp(-2j * np.pi * kk / samples)) / (2j * np.pi * kk)
    return OffsetSpectrum(ks, coeffs * hold[:, None])


@dataclass
class ComparisonReport:
    offsets: np.ndarray
    abs_error: np.ndarray
    rel_error: np.ndarray
    tolerance: float

    @property
    def max_abs_error(self) -> float:
        return float(self.abs_error.max(initial=0.0))

    @property
    def max_rel_error(self) -> float:
        return float(self.rel_error.max(initial=0.0))

    @property
    def failing(self) -> list[int]:
        return [int(k) for k, e in zip(self.offsets, self.rel_error) if not e <= self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.failing

    def lines(self) -> list[str]:
        out = [f"{'k':>5} {'abs_error':>12} {'rel_error':>12}  verdict"]
        for k, ae, re_ in zip(self.offsets, self.abs_error, self.rel_error):
            out.append(f"{int(k):>5} {ae:12.3e} {re_:12.3e}  {'ok' if re_ <= self.tolerance else 'FAIL'}")
        out.append(f"max rel error {self.max_rel_error:.3e} at tol {self.tolerance:g}: "
                   + ("PASS" if self.passed else f"FAIL at offsets {self.failing}"))
        return out


def compare(model: OffsetSpectrum, oracle: OffsetSpectrum, tolerance: float, kmax: int | None = None,
            floor: float = 1e-6) -> ComparisonReport:
    """Per-offset errors between two spectra.

    The relative error at offset ``k`` divides the largest component error by
    the largest oracle component at ``k``, bounded below by ``floor`` times
    the spectrum peak so offsets that vanish in both do not blow up.
    """
    common = np.intersect1d(model.offsets, oracle.offsets)
    if kmax is not None:
        common = common[np.abs(common) <= kmax]
    if len(common) == 0:
        raise ValidationError("spectra share no offsets")
    m = np.array([model.at(k) for k in common])
    o = np.array([oracle.at(k) for k in common])
    if m.shape != o.shape:
        raise ValidationError(f"spectra have different widths {m.shape[1]} vs {o.shape[1]}")
    abs_err = np.max(np.abs(m - o), axis=1)
    ref = np.max(np.abs(o), axis=1)
    peak = ref.max()
    scale = np.maximum(ref, floor * peak) if peak > 0 else np.ones_like(ref)
    return ComparisonReport(common, abs_err, abs_err / scale, tolerance)
