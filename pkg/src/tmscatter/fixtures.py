"""Synthetic scatterer fixtures.

These are not measured or simulated data. They mimic a 3x3 array of
vertical monopoles observed in the azimuth plane so the pipeline can be
exercised at realistic sizes and magnitudes: radiation-to-load coupling
carries array phase progression and free-space loss, load-to-load coupling
decays with element spacing, and every block is reciprocal.
"""

from __future__ import annotations

import numpy as np

from .core import C0, FrequencyGrid, ScattererBlocks

F_IN = 2.4e9
F_M = 100e3

# PIN diode states seen at the load port (ohms)
Z_DIODE_OFF = complex(2.0, -442.0)
Z_DIODE_ON = complex(1.5, 8.0)


def element_positions(spacing: float) -> np.ndarray:
    ix, iy = np.meshgrid(np.arange(3) - 1.0, np.arange(3) - 1.0, indexing="xy")
    return spacing * np.column_stack([ix.ravel(), iy.ravel()])


def monopole_array(num_directions: int = 36, num_harmonics: int = 25, coupling: float = 1.0,
                   dispersion: float = 0.0, f_in: float = F_IN, f_m: float = F_M,
                   amplitude: float = 1e-2, z_ref: complex = 50.0) -> tuple[ScattererBlocks, FrequencyGrid]:
    """Reciprocal nine-port synthetic scatterer on a centered harmonic grid.

    Parameters
    ----------
    coupling : float
        Scale of the load-to-load matrix; 0 removes mutual coupling and
        antenna mismatch entirely.
    dispersion : float
        Relative change of every radiation-to-load entry per harmonic step.
        0 gives a frequency-flat bundle.
    """
    grid = FrequencyGrid.centered(f_in, f_m, num_harmonics)
    k0 = 2 * np.pi * f_in / C0
    pos = element_positions(C0 / f_in / 3)
    phi = 2 * np.pi * np.arange(num_directions) / num_directions
    u = np.column_stack([np.cos(phi), np.sin(phi)])
    N = len(pos)

    # element pattern tilt breaks the array's mirror symmetry slightly
    tilt = 1.0 + 0.25 * np.cos(phi[:, None] - 2 * np.pi * np.arange(N)[None, :] / N)
    fd_t = amplitude * np.exp(1j * k0 * u @ pos.T) * tilt * np.exp(0.4j)
    fd_p = 0.08 * fd_t * np.exp(1.1j)

    array_factor = np.exp(1j * k0 * u @ pos.T)
    ff_tt = 0.6 * amplitude ** 2 * (array_factor @ array_factor.T) * np.exp(-0.9j)
    ff_pp = 0.05 * ff_tt
    ff_pt = 0.02 * amplitude ** 2 * np.exp(1j * k0 * (u[:, :1] - u[:, :1].T))
    ff_tp = ff_pt.T

    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        mutual = 0.09 * np.exp(-1j * k0 * dist) / (k0 * dist)
    np.fill_diagonal(mutual, 0.06 * np.exp(0.7j))
    dd = coupling * mutual

    H, hc = grid.H, grid.h_c
    steps = (np.arange(1, H + 1) - hc)[:, None, None]
    scale = 1.0 + dispersion * steps

    def stack(m, s=None):
        out = np.broadcast_to(m, (H,) + m.shape).astype(complex)
        return out * s if s is not None else out

    blocks = ScattererBlocks(
        s_ff_pp=stack(ff_pp), s_ff_tp=stack(ff_tp), s_ff_pt=stack(ff_pt), s_ff_tt=stack(ff_tt),
        s_fd_p=stack(fd_p, scale), s_fd_t=stack(fd_t, scale),
        s_df_p=stack(fd_p.T, scale), s_df_t=stack(fd_t.T, scale),
        s_dd=stack(dd), z_ref=z_ref,
    )
    return blocks, grid


def random_blocks(rng: np.random.Generator, M: int, N: int, H: int, flat: bool = False,
                  scale: float = 0.3, symmetric: bool = False) -> ScattererBlocks:
    """Random complex blocks for property tests; ``symmetric`` makes them reciprocal."""

    def rnd(*shape):
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2 * max(shape[-2:]))

    nh = 1 if flat else H
    pp, tt = rnd(nh, M, M), rnd(nh, M, M)
    tp, pt = rnd(nh, M, M), rnd(nh, M, M)
    fd_p, fd_t = rnd(nh, M, N), rnd(nh, M, N)
    df_p, df_t = rnd(nh, N, M), rnd(nh, N, M)
    dd = rnd(nh, N, N)
    if symmetric:
        sym = lambda x: (x + np.swapaxes(x, 1, 2)) / 2  # noqa: E731
        pp, tt, dd = sym(pp), sym(tt), sym(dd)
        tp = np.swapaxes(pt, 1, 2)
        df_p, df_t = np.swapaxes(fd_p, 1, 2), np.swapaxes(fd_t, 1, 2)
    arrs = dict(s_ff_pp=pp, s_ff_tp=tp, s_ff_pt=pt, s_ff_tt=tt, s_fd_p=fd_p, s_fd_t=fd_t,
                s_df_p=df_p, s_df_t=df_t, s_dd=dd)
    if flat:
        arrs = {k: np.repeat(v, H, axis=0) for k, v in arrs.items()}
    return ScattererBlocks(**arrs)
