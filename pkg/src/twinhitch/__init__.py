"""Mode hitching of twin beams in a traveling-wave parametric amplifier.

Lengths are in units of the wavelength and couplings in rad per wavelength,
so the default carrier wavenumber is ``k = 2 pi``.
"""

from . import core, transfer, beams, scan, fit
from ._backend import available as available_backends
from .beams import (
    BeamDiagnostics,
    SeedSpectrum,
    diagnostics,
    free_propagate,
    hitching_distance,
    net_gain,
    propagate_to,
    synthesize_seed,
)
from .core import (
    TWO_PI,
    Field1D,
    Grid1D,
    MediumParams,
    SeedSpec,
    Spectrum1D,
    TwinBeamState,
    forward_transform,
    inverse_transform,
    make_grid,
)
from .errors import (
    DatasetError,
    DiagnosticsError,
    GainNotAttainableError,
    GridMismatchError,
    GuardError,
    HitchError,
    IdlerAbsentError,
    NonMonotoneGainError,
    OnsetNotFoundError,
    ParameterError,
)
from .fit import (
    FitResult,
    Geometry,
    HitchDataset,
    SyntheticSpec,
    b_from_gain,
    fit_hitching,
    model_exit_positions,
    synthesize_dataset,
)
from .scan import (
    ExitCurvePoint,
    TrajectoryRecord,
    exit_curve,
    exit_curve_from_gains,
    hitching_onset,
    intensity_map,
    trajectory,
)
from .transfer import (
    TransferMatrix,
    direct_coupling_for_angle,
    mismatch_terms,
    oracle_propagate,
    phase_matched_angle,
    plane_wave_gain,
    transfer_matrix,
)

__version__ = "0.1.0"
