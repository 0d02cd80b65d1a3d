"""Multifrequency scattering from multiport structures with time-modulated loads."""

from .core import (
    BcsContext,
    DomainError,
    Excitation,
    FrequencyGrid,
    PortLayout,
    ScatterResult,
    ScattererBlocks,
    SingularSystemError,
    ValidationError,
    frequency_of,
    load_index,
    radiation_index,
)
from .loads import (
    LoadSegment,
    ModulationPlan,
    PolyharmonicLoadMatrix,
    PortSchedule,
    apply_load_coupling,
    assemble_load_matrix,
    combine_multitone,
    fourier_coefficient,
    fourier_coefficient_numeric,
    reflection_of_impedance,
    waveform_at,
)
from .network import assemble_dd, assemble_df, assemble_fd, assemble_structural
from .solver import (
    bcs,
    convergence_check,
    harmonic_spectrum,
    scatter,
    solve,
    solve_multitone,
    system_matrix,
    system_matrix_for,
)
from .oracle import compare, quasi_static_spectrum

__version__ = "0.1.0"
