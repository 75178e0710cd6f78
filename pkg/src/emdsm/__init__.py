"""Direct sampling reconstruction of time-dependent electromagnetic sources from far-field data."""

from .data import (
    DatasetFormatError,
    FarFieldDataset,
    FrequencyGrid,
    Medium,
    NoiseSpec,
    add_noise,
    preprocess,
    read_dataset,
    write_dataset,
)
from .forward import Impulse, SourceSpec, Window, farfield, synthesize_dataset
from .geometry import ObservationFrame, SupportShape, perp_vector, projection_interval
from .indicator import combine_composite, combine_pair, indicator_I, indicator_S_ip2, indicator_W
from .reconstruct import IndicatorField, SamplingGrid, evaluate_hull_field, evaluate_slab_field
from .temporal import NoSignalError, SupportInterval, detect_support, eta_scan, recover_t0

__version__ = "0.1.0"
