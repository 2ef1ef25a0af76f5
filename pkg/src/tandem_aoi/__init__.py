"""Age of Information for two-stage computation and transmission tandems."""
from .analytic import AoiReport, Scheme, SystemParams, avg_aoi, avg_peak_aoi, full_report
from .dist import CompFamily, Kind, ServiceDistribution
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DegenerateConditioningError,
    NumericalError,
    ParameterError,
    TandemAoiError,
)

__version__ = "0.1.0"

__all__ = [
    "AoiReport",
    "CompFamily",
    "ConfigurationError",
    "ConsistencyError",
    "DegenerateConditioningError",
    "Kind",
    "NumericalError",
    "ParameterError",
    "Scheme",
    "ServiceDistribution",
    "SystemParams",
    "TandemAoiError",
    "avg_aoi",
    "avg_peak_aoi",
    "full_report",
]
