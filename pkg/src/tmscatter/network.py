"""Harmonic-block-diagonal network matrices built from per-harmonic S submatrices.

The antennas are linear, so every matrix here only connects subports with
the same harmonic index; off-harmonic blocks are zero.
"""

import numpy as np

from .core import ScattererBlocks


def _block_diagonal(per_harmonic: np.ndarray) -> np.ndarray:
    """Place ``per_harmonic[h]`` (shape (H, r, c)) on the block diagonal."""
    H, r, c = per_harmonic.shape
    out = np.zeros((H * r, H * c), dtype=complex)
    for h in range(H):
        out[h * r:(h + 1) * r, h * c:(h + 1) * c] = per_harmonic[h]
    return out


def unified_structural(blocks: ScattererBlocks) -> np.ndarray:
    """Per-harmonic ``2M x 2M`` blocks ``[[pp, tp], [pt, tt]]``, shape (H, 2M, 2M)."""
    top = np.concatenate([blocks.s_ff_pp, blocks.s_ff_tp], axis=2)
    bottom = np.concatenate([blocks.s_ff_pt, blocks.s_ff_tt], axis=2)
    return np.concatenate([top, bottom], axis=1)


def unified_fd(blocks: ScattererBlocks) -> np.ndarray:
    return np.concatenate([blocks.s_fd_p, blocks.s_fd_t], axis=1)


def unified_df(blocks: ScattererBlocks) -> np.ndarray:
    return np.concatenate([blocks.s_df_p, blocks.s_df_t], axis=2)


def assemble_structural(blocks: ScattererBlocks) -> np.ndarray:
    """``C_ff``: structural scattering between radiation subports (2HM x 2HM)."""
    return _block_diagonal(unified_structural(blocks))


def assemble_fd(blocks: ScattererBlocks) -> np.ndarray:
    """``C_fd``: load subports to radiation subports (2HM x HN)."""
    return _block_diagonal(unified_fd(blocks))


def assemble_df(blocks: ScattererBlocks) -> np.ndarray:
    """``C_df``: radiation subports to load subports (HN x 2HM)."""
    return _block_diagonal(unified_df(blocks))


def assemble_dd(blocks: ScattererBlocks) -> np.ndarray:
    """``C_dd``: coupling among load subports (HN x HN), polarization independent."""
    return _block_diagonal(blocks.s_dd)


def extract_harmonic_block(matrix: np.ndarray, h: int, rows: int, cols: int) -> np.ndarray:
    """Return diagonal block ``h`` (1-based) of size ``rows x cols``."""
    return matrix[(h - 1) * rows:h * rows, (h - 1) * cols:h * cols]
