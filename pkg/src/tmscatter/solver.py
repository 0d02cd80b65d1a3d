"""Composite system matrix, scattered waves, spectra and bistatic cross sections."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import LinAlgWarning, block_diag, lu_factor, lu_solve
from scipy.linalg.lapack import get_lapack_funcs

from .core import (
    C0,
    DomainError,
    Excitation,
    FrequencyGrid,
    PortLayout,
    ScatterResult,
    ScattererBlocks,
    SingularSystemError,
    ValidationError,
    frequency_of,
    radiation_index,
)
from .loads import ModulationPlan, PolyharmonicLoadMatrix, assemble_load_matrix, combine_multitone
from .network import assemble_dd, assemble_df, assemble_fd, assemble_structural

RCOND_MIN = 1e-12
DBM2_FLOOR = -300.0


def _factor_checked(A: np.ndarray):
    with warnings.catch_warnings():
        # exact singularity is reported below through the condition estimate
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A, check_finite=True)
    gecon = get_lapack_funcs("gecon", (lu,))
    anorm = np.linalg.norm(A, 1)
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or not np.isfinite(rcond) or rcond < RCOND_MIN:
        raise SingularSystemError(
            f"I - C_dd C_L is numerically singular (reciprocal condition estimate {rcond:.3e})",
            rcond=float(rcond),
        )
    return (lu, piv), float(rcond)


def system_matrix(C_ff, C_fd, C_df, C_dd, C_L) -> np.ndarray:
    """``C_ff + C_fd C_L (I - C_dd C_L)^-1 C_df`` via an LU solve.

    Raises
    ------
    SingularSystemError
        If the reciprocal 1-norm condition estimate of ``I - C_dd C_L`` is
        below ``RCOND_MIN``.
    """
    C_L = np.asarray(C_L, dtype=complex)
    C_ff = np.asarray(C_ff, dtype=complex)
    C_fd = np.asarray(C_fd, dtype=complex)
    C_df = np.asarray(C_df, dtype=complex)
    C_dd = np.asarray(C_dd, dtype=complex)
    n_rad, n_load = C_fd.shape
    if C_ff.shape != (n_rad, n_rad) or C_df.shape != (n_load, n_rad):
        raise ValidationError(
            f"inconsistent shapes C_ff{C_ff.shape} C_fd{C_fd.shape} C_df{C_df.shape}"
        )
    if C_dd.shape != (n_load, n_load) or C_L.shape != (n_load, n_load):
        raise ValidationError(f"inconsistent shapes C_dd{C_dd.shape} C_L{C_L.shape}")
    A = np.eye(n_load, dtype=complex) - C_dd @ C_L
    factors, _ = _factor_checked(A)
    X = lu_solve(factors, C_df)
    C_sys = C_ff + C_fd @ (C_L @ X)
    if not np.all(np.isfinite(C_sys)):
        raise SingularSystemError("system matrix has non-finite entries")
    return C_sys


def network_matrices(blocks: ScattererBlocks):
    return (assemble_structural(blocks), assemble_fd(blocks), assemble_df(blocks), assemble_dd(blocks))


def system_matrix_for(blocks: ScattererBlocks, grid: FrequencyGrid, plan_or_loads) -> np.ndarray:
    """Assemble every block and return ``C_sys`` for a plan or a prebuilt load matrix."""
    if isinstance(plan_or_loads, ModulationPlan):
        C_L = assemble_load_matrix(plan_or_loads, blocks, grid)
    else:
        C_L = plan_or_loads
    return system_matrix(*network_matrices(blocks), np.asarray(C_L))


def scatter(C_sys: np.ndarray, excitation: Excitation, layout: PortLayout, grid: FrequencyGrid) -> ScatterResult:
    a = excitation.vector(layout)
    return ScatterResult(C_sys @ a, layout, grid)


def solve(blocks: ScattererBlocks, grid: FrequencyGrid, plan, excitation: Excitation) -> ScatterResult:
    """Full pipeline: assemble, solve and apply one excitation."""
    C_sys = system_matrix_for(blocks, grid, plan)
    return scatter(C_sys, excitation, blocks.layout, grid)


class SpectrumRow(NamedTuple):
    h: int
    f_hz: float
    b_phi: complex
    b_theta: complex
    power_w: float


def harmonic_spectrum(result: ScatterResult, rho: int) -> list[SpectrumRow]:
    rows = []
    for h in range(1, result.layout.H + 1):
        bp = result.at(h, "phi", rho)
        bt = result.at(h, "theta", rho)
        rows.append(SpectrumRow(h, frequency_of(result.grid, h), bp, bt, abs(bp) ** 2 + abs(bt) ** 2))
    return rows


def to_dbm2(sigma: float) -> float:
    """Cross section in dB relative to 1 m^2, floored at ``DBM2_FLOOR``."""
    if sigma <= 0:
        return DBM2_FLOOR
    return max(10.0 * np.log10(sigma), DBM2_FLOOR)


class BcsValue(NamedTuple):
    m2: float
    dbm2: float


def bcs_from_ratio(power_ratio: float, wavelength: float, s_t: float, s_r: float,
                   gain_rx: float = 1.0, gain_tx: float = 1.0) -> float:
    return (64 * np.pi ** 3 * s_t ** 2 * s_r ** 2) / (wavelength ** 2 * gain_rx * gain_tx) * power_ratio


def bcs(result: ScatterResult, excitation: Excitation, ctx, h: int, rho: int, tau: int,
        h_c: int | None = None) -> BcsValue:
    """Bistatic cross section for incidence from ``tau`` at ``h_c`` scattered to ``rho`` at ``h``."""
    grid = result.grid
    h_c = grid.h_c if h_c is None else h_c
    p_in = excitation.incident_power(h_c, tau)
    if p_in == 0:
        raise DomainError(f"no incident power at harmonic {h_c}, direction {tau}")
    f_h = frequency_of(grid, h)
    f_c = frequency_of(grid, h_c)
    g_rx = float(ctx.gain_rx(rho, f_h))
    g_tx = float(ctx.gain_tx(tau, f_c))
    if g_rx <= 0 or g_tx <= 0:
        raise DomainError(f"gains must be positive (rx={g_rx}, tx={g_tx})")
    p_out = abs(result.at(h, "phi", rho)) ** 2 + abs(result.at(h, "theta", rho)) ** 2
    sigma = bcs_from_ratio(p_out / p_in, C0 / f_h, ctx.s_t, ctx.s_r, g_rx, g_tx)
    return BcsValue(sigma, to_dbm2(sigma))


@dataclass
class ConvergenceTable:
    harmonic_counts: list[int]
    offsets: list[int]
    magnitudes: np.ndarray  # (len(harmonic_counts), len(offsets))
    covered: np.ndarray
    changes: np.ndarray  # successive max change, length len(harmonic_counts) - 1
    settled_at: int | None
    tolerance: float


def convergence_check(build: Callable[[int], ScatterResult], H_list: Sequence[int], rho: int,
                      offsets: Sequence[int], tol: float = 1e-6) -> ConvergenceTable:
    """Track ``|b|`` at fixed harmonic offsets as the harmonic count grows.

    ``build(H)`` must return the result of a pipeline run on a centered grid
    with ``H`` harmonics. Offsets outside the window read as zero. The
    settled count is the smallest ``H`` after which every successive change
    stays below ``tol``.
    """
    H_list = list(H_list)
    if any(b <= a for a, b in zip(H_list, H_list[1:])):
        raise ValidationError("harmonic counts must be strictly increasing")
    if any(H % 2 == 0 for H in H_list):
        raise ValidationError("harmonic counts must be odd so the input tone sits at the center")
    mags = np.zeros((len(H_list), len(offsets)))
    covered = np.zeros_like(mags, dtype=bool)
    for i, H in enumerate(H_list):
        res = build(H)
        h_c = res.grid.h_c
        for j, k in enumerate(offsets):
            h = h_c + k
            if 1 <= h <= res.layout.H:
                covered[i, j] = True
                mags[i, j] = np.hypot(abs(res.at(h, "phi", rho)), abs(res.at(h, "theta", rho)))
    changes = np.max(np.abs(np.diff(mags, axis=0)), axis=1) if len(H_list) > 1 else np.zeros(0)
    settled = None
    for i in range(len(H_list) - 1):
        if np.all(changes[i:] < tol):
            settled = H_list[i]
            break
    return ConvergenceTable(H_list, list(offsets), mags, covered, changes, settled, tol)


def solve_multitone(tones: Sequence[tuple]) -> list[ScatterResult]:
    """Solve several input tones as one enlarged block system.

    Each tone is ``(blocks, grid, plan_or_load_matrix, excitation)``. The
    load network does not mix tones, so the compound load matrix is block
    diagonal over tones.
    """
    if not tones:
        raise ValidationError("no tones given")
    mats = [network_matrices(blocks) for blocks, _, _, _ in tones]
    loads = []
    for blocks, grid, plan, _ in tones:
        loads.append(assemble_load_matrix(plan, blocks, grid) if isinstance(plan, ModulationPlan) else plan)
    if not all(isinstance(m, PolyharmonicLoadMatrix) for m in loads):
        raise ValidationError("tone load matrices must be PolyharmonicLoadMatrix instances")
    C_L = combine_multitone(loads)
    C = [block_diag(*[m[i] for m in mats]) for i in range(4)]
    C_sys = system_matrix(*C, C_L.matrix)
    a = np.concatenate([exc.vector(blocks.layout) for blocks, _, _, exc in tones])
    b = C_sys @ a
    results, start = [], 0
    for blocks, grid, _, _ in tones:
        n = blocks.layout.radiation_size
        results.append(ScatterResult(b[start:start + n], blocks.layout, grid))
        start += n
    return results


def transmission(C_sys: np.ndarray, layout: PortLayout, h_out: int, rho: int, h_in: int, tau: int,
                 pol_out="phi", pol_in="phi") -> complex:
    """Single entry of ``C_sys``: (tau, h_in, pol_in) -> (rho, h_out, pol_out)."""
    return complex(C_sys[radiation_index(h_out, pol_out, rho, layout), radiation_index(h_in, pol_in, tau, layout)])
