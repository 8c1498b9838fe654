"""Stored ground-state coherence grating in a three-level Lambda medium:
write-phase Bloch dynamics, storage, retrieval pulses, sweeps and fits."""
from .errors import (DegenerateSteadyState, IntegrationDiverged, ParameterError,
                     TraceFormatError, TruncatedPulse, UndefinedCoherence)
from .model import (AtomParams, BeamSet, DensityMatrix3, ReadRates, SignalNormalization,
                    bloch_rhs_read, bloch_rhs_write, coherence_steady_closed,
                    coherence_steady_limit, rabi_from_intensity, steady_state_write)
from .dynamics import (StoredGrating, TimeSequence, Trajectory, apply_storage,
                       integrate_read, integrate_write, read_envelope, read_kernel,
                       read_rates, sigma_read_closed)
from .emission import (CloudGeometry, PulseTrace, farfield_amplitude, fwhm_closed,
                       grating_period, peak_closed, pulse_energy_closed,
                       pulse_energy_numeric, pulse_fwhm, pulse_peak, pulse_trace,
                       signal_fast)
from .sweeps import (Scenario, SweepTable, sweep_read_intensity, sweep_storage_time,
                     sweep_write_intensity)
from .fitting import FitResult, fit_exponential, fit_scale_parameter
from .config import ConfigError, RunConfig

__version__ = "0.1.0"
