"""Hand-silhouette verification via boundary time series and banded DTW."""

from .dtw import DtwResult, WarpingPath, band_mask, dtw, dtw_oracle, lower_bound_diag
from .errors import (
    DegenerateClassesError,
    DegenerateRegionError,
    DegenerateTangentError,
    EmptyImageError,
    LengthMismatchError,
    NoFeasiblePathError,
    ProfileStoreError,
    WarpgateError,
)
from .imageproc import (
    BinaryImage,
    Contour,
    GrayImage,
    adjust,
    angle_series,
    binarize,
    centroid_series,
    extract,
    trace_boundary,
)
from .series import (
    BandConstraint,
    LabeledSeries,
    TimeSeries,
    make_sakoe_chiba,
    read_series_csv,
    resample,
    write_series_csv,
)

__version__ = "0.1.0"
