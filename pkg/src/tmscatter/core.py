"""Shared domain types and index conventions.

Harmonic, direction and load-port indices are 1-based at the API surface;
flat vector positions are 0-based. The radiation vector is stacked per
harmonic as ``[b_phi(1..M), b_theta(1..M)]``, harmonic 1 first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

C0 = 299_792_458.0  # m/s

POLARIZATIONS = ("phi", "theta")
_POL_ALIASES = {"phi": 0, "p": 0, "φ": 0, "theta": 1, "t": 1, "θ": 1}


class ValidationError(ValueError):
    """Input data violates a dimensional or structural constraint."""


class DomainError(ValueError):
    """A numerical quantity falls outside its admissible domain."""


class SingularSystemError(ArithmeticError):
    """The load network system ``I - C_dd C_L`` is numerically singular."""

    def __init__(self, message: str, rcond: float | None = None):
        super().__init__(message)
        self.rcond = rcond


def pol_offset(pol) -> int:
    """Map a polarization label to 0 (phi) or 1 (theta)."""
    if isinstance(pol, (int, np.integer)) and pol in (0, 1):
        return int(pol)
    try:
        return _POL_ALIASES[str(pol).lower()]
    except KeyError:
        raise ValidationError(f"unknown polarization {pol!r}; expected 'phi' or 'theta'") from None


def _check_range(name: str, value: int, upper: int) -> None:
    if not (1 <= value <= upper):
        raise IndexError(f"{name} index {value} out of range [1, {upper}]")


@dataclass(frozen=True)
class PortLayout:
    num_directions: int
    num_loads: int
    num_harmonics: int

    def __post_init__(self):
        for name in ("num_directions", "num_loads", "num_harmonics"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")

    @property
    def M(self) -> int:
        return self.num_directions

    @property
    def N(self) -> int:
        return self.num_loads

    @property
    def H(self) -> int:
        return self.num_harmonics

    @property
    def radiation_size(self) -> int:
        return 2 * self.num_harmonics * self.num_directions

    @property
    def load_size(self) -> int:
        return self.num_harmonics * self.num_loads

    def radiation_unindex(self, flat: int) -> tuple[int, str, int]:
        """Inverse of :func:`radiation_index`: flat position -> (h, pol, m)."""
        if not (0 <= flat < self.radiation_size):
            raise IndexError(f"flat radiation index {flat} out of range [0, {self.radiation_size})")
        h, rest = divmod(flat, 2 * self.M)
        p, m = divmod(rest, self.M)
        return h + 1, POLARIZATIONS[p], m + 1

    def load_unindex(self, flat: int) -> tuple[int, int]:
        if not (0 <= flat < self.load_size):
            raise IndexError(f"flat load index {flat} out of range [0, {self.load_size})")
        h, n = divmod(flat, self.N)
        return h + 1, n + 1


def radiation_index(h: int, pol, m: int, layout: PortLayout) -> int:
    _check_range("harmonic", h, layout.H)
    _check_range("direction", m, layout.M)
    return (h - 1) * 2 * layout.M + pol_offset(pol) * layout.M + (m - 1)


def load_index(h: int, n: int, layout: PortLayout) -> int:
    _check_range("harmonic", h, layout.H)
    _check_range("load-port", n, layout.N)
    return (h - 1) * layout.N + (n - 1)


@dataclass(frozen=True)
class FrequencyGrid:
    """Harmonic frequency grid ``f_h = f_in + (h - h_c) f_m``."""

    f_in: float
    f_m: float
    num_harmonics: int
    center_index: int

    def __post_init__(self):
        if not (np.isfinite(self.f_in) and np.isfinite(self.f_m)):
            raise DomainError("frequencies must be finite")
        if self.f_in <= 0 or self.f_m <= 0:
            raise DomainError(f"f_in and f_m must be positive (f_in={self.f_in}, f_m={self.f_m})")
        if self.f_m >= self.f_in:
            raise DomainError(f"modulation frequency {self.f_m} Hz must be below the input tone {self.f_in} Hz")
        if int(self.num_harmonics) != self.num_harmonics or self.num_harmonics < 1:
            raise ValidationError(f"num_harmonics must be a positive integer, got {self.num_harmonics!r}")
        _check_range("center harmonic", self.center_index, self.num_harmonics)
        lowest = self.f_in + (1 - self.center_index) * self.f_m
        if lowest <= 0:
            raise DomainError(f"harmonic 1 would sit at {lowest} Hz; reduce H or move h_c")

    @classmethod
    def centered(cls, f_in: float, f_m: float, num_harmonics: int) -> "FrequencyGrid":
        if num_harmonics % 2 != 1:
            raise ValidationError("a centered grid needs an odd harmonic count")
        return cls(f_in, f_m, num_harmonics, (num_harmonics + 1) // 2)

    @property
    def H(self) -> int:
        return self.num_harmonics

    @property
    def h_c(self) -> int:
        return self.center_index

    @property
    def T_m(self) -> float:
        return 1.0 / self.f_m

    @property
    def center_warning(self) -> bool:
        """True when the input tone is not within one harmonic of the window middle."""
        return abs(self.center_index - (self.num_harmonics + 1) / 2) > 1

    @property
    def frequencies(self) -> np.ndarray:
        h = np.arange(1, self.num_harmonics + 1)
        return self.f_in + (h - self.center_index) * self.f_m

    def offset_of(self, h: int) -> int:
        return h - self.center_index


def frequency_of(grid: FrequencyGrid, h: int) -> float:
    _check_range("harmonic", h, grid.H)
    f = grid.f_in + (h - grid.center_index) * grid.f_m
    if f <= 0:
        raise DomainError(f"harmonic {h} maps to nonpositive frequency {f} Hz")
    return f


_BLOCK_SHAPES = {
    "s_ff_pp": ("M", "M"),
    "s_ff_tp": ("M", "M"),
    "s_ff_pt": ("M", "M"),
    "s_ff_tt": ("M", "M"),
    "s_fd_p": ("M", "N"),
    "s_fd_t": ("M", "N"),
    "s_df_p": ("N", "M"),
    "s_df_t": ("N", "M"),
    "s_dd": ("N", "N"),
}


@dataclass(frozen=True, eq=False)
class ScattererBlocks:
    """Per-harmonic S submatrices of a loaded scatterer.

    Every field is a complex array of shape ``(H, rows, cols)``. ``s_ff_tp``
    holds the theta -> phi transition, ``s_ff_pt`` phi -> theta.
    """

    s_ff_pp: np.ndarray
    s_ff_tp: np.ndarray
    s_ff_pt: np.ndarray
    s_ff_tt: np.ndarray
    s_fd_p: np.ndarray
    s_fd_t: np.ndarray
    s_df_p: np.ndarray
    s_df_t: np.ndarray
    s_dd: np.ndarray
    z_ref: complex = 50.0
    layout: PortLayout = field(default=None)

    def __post_init__(self):
        arrays = {}
        for name in _BLOCK_SHAPES:
            arr = np.array(getattr(self, name), dtype=complex)
            if arr.ndim != 3:
                raise ValidationError(f"{name} must have shape (H, rows, cols), got {arr.shape}")
            arrays[name] = arr
        H = arrays["s_dd"].shape[0]
        M = arrays["s_ff_pp"].shape[1]
        N = arrays["s_dd"].shape[1]
        layout = self.layout if self.layout is not None else PortLayout(M, N, H)
        dims = {"M": layout.M, "N": layout.N}
        for name, (r, c) in _BLOCK_SHAPES.items():
            expected = (layout.H, dims[r], dims[c])
            arr = arrays[name]
            if arr.shape != expected:
                raise ValidationError(f"block {name} has shape {arr.shape}, expected {expected}")
            if not np.all(np.isfinite(arr)):
                h = int(np.argwhere(~np.isfinite(arr))[0][0]) + 1
                raise ValidationError(f"block {name} at harmonic {h} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        z = complex(self.z_ref)
        if not np.isfinite(z):
            raise ValidationError("z_ref must be finite")
        object.__setattr__(self, "z_ref", z)
        object.__setattr__(self, "layout", layout)

    @classmethod
    def from_flat(cls, num_harmonics: int, z_ref: complex = 50.0, **blocks) -> "ScattererBlocks":
        """Broadcast one set of 2-D submatrices across ``num_harmonics`` harmonics."""
        missing = set(_BLOCK_SHAPES) - set(blocks)
        if missing:
            raise ValidationError(f"missing blocks: {sorted(missing)}")
        stacked = {}
        for name in _BLOCK_SHAPES:
            arr = np.asarray(blocks[name], dtype=complex)
            if arr.ndim != 2:
                raise ValidationError(f"{name} must be a 2-D matrix for a flat bundle, got shape {arr.shape}")
            stacked[name] = np.broadcast_to(arr, (num_harmonics,) + arr.shape).copy()
        return cls(z_ref=z_ref, **stacked)

    @classmethod
    def zeros(cls, layout: PortLayout, z_ref: complex = 50.0) -> "ScattererBlocks":
        dims = {"M": layout.M, "N": layout.N}
        return cls(
            z_ref=z_ref,
            layout=layout,
            **{n: np.zeros((layout.H, dims[r], dims[c]), complex) for n, (r, c) in _BLOCK_SHAPES.items()},
        )

    def harmonic(self, h: int) -> dict[str, np.ndarray]:
        """Submatrices of harmonic ``h`` (1-based) keyed by field name."""
        _check_range("harmonic", h, self.layout.H)
        return {name: getattr(self, name)[h - 1] for name in _BLOCK_SHAPES}

    def replace(self, **changes) -> "ScattererBlocks":
        fields = {name: getattr(self, name) for name in _BLOCK_SHAPES}
        fields["z_ref"] = self.z_ref
        fields.update(changes)
        return ScattererBlocks(**fields)

    @property
    def is_flat(self) -> bool:
        """True when every harmonic carries bit-identical submatrices."""
        return all(np.array_equal(a, a[:1].repeat(a.shape[0], axis=0)) for a in
                   (getattr(self, n) for n in _BLOCK_SHAPES))


BLOCK_NAMES = tuple(_BLOCK_SHAPES)


@dataclass(frozen=True)
class ExcitationEntry:
    h: int
    tau: int
    a_phi: complex = 0j
    a_theta: complex = 0j


class Excitation:
    """Incident power waves, one entry per (harmonic, direction) pair."""

    def __init__(self, entries: Iterable[ExcitationEntry | tuple]):
        self.entries: tuple[ExcitationEntry, ...] = tuple(
            e if isinstance(e, ExcitationEntry) else ExcitationEntry(*e) for e in entries
        )
        seen = set()
        for e in self.entries:
            key = (e.h, e.tau)
            if key in seen:
                raise ValidationError(f"excitation repeats harmonic {e.h}, direction {e.tau}")
            seen.add(key)
        if not any(e.a_phi != 0 or e.a_theta != 0 for e in self.entries):
            raise ValidationError("excitation has no nonzero amplitude")

    @classmethod
    def single(cls, h: int, tau: int, pol="phi", amplitude: complex = 1.0) -> "Excitation":
        if pol_offset(pol) == 0:
            return cls([ExcitationEntry(h, tau, complex(amplitude), 0j)])
        return cls([ExcitationEntry(h, tau, 0j, complex(amplitude))])

    def vector(self, layout: PortLayout) -> np.ndarray:
        a = np.zeros(layout.radiation_size, dtype=complex)
        for e in self.entries:
            a[radiation_index(e.h, "phi", e.tau, layout)] = e.a_phi
            a[radiation_index(e.h, "theta", e.tau, layout)] = e.a_theta
        return a

    def incident_power(self, h: int, tau: int) -> float:
        for e in self.entries:
            if e.h == h and e.tau == tau:
                return abs(e.a_phi) ** 2 + abs(e.a_theta) ** 2
        return 0.0

    def __repr__(self):
        return f"Excitation({list(self.entries)!r})"


@dataclass(frozen=True, eq=False)
class ScatterResult:
    b: np.ndarray
    layout: PortLayout
    grid: FrequencyGrid

    def __post_init__(self):
        b = np.array(self.b, dtype=complex)
        if b.shape != (self.layout.radiation_size,):
            raise ValidationError(f"result vector has shape {b.shape}, expected ({self.layout.radiation_size},)")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    def at(self, h: int, pol, m: int) -> complex:
        return complex(self.b[radiation_index(h, pol, m, self.layout)])

    def as_array(self) -> np.ndarray:
        """View of ``b`` shaped ``(H, 2, M)``: harmonic, polarization, direction."""
        return self.b.reshape(self.layout.H, 2, self.layout.M)


GainSpec = Union[float, Sequence[float], Callable[[int, float], float]]


def _as_gain(g: GainSpec) -> Callable[[int, float], float]:
    if callable(g):
        return g
    if np.isscalar(g):
        value = float(g)
        return lambda direction, f: value
    table = [float(x) for x in g]
    return lambda direction, f: table[direction - 1]


@dataclass(frozen=True)
class BcsContext:
    """Measurement geometry for bistatic cross-section extraction.

    Gains may be scalars, per-direction sequences (1-based direction), or
    callables ``gain(direction, frequency_hz)``.
    """

    s_t: float
    s_r: float
    gain_tx: GainSpec = 1.0
    gain_rx: GainSpec = 1.0

    def __post_init__(self):
        if not (self.s_t > 0 and self.s_r > 0):
            raise DomainError(f"distances must be positive (s_t={self.s_t}, s_r={self.s_r})")
        object.__setattr__(self, "gain_tx", _as_gain(self.gain_tx))
        object.__setattr__(self, "gain_rx", _as_gain(self.gain_rx))
