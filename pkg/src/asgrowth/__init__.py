"""Growth analysis of registry-assigned Autonomous System numbers.

Modules: :mod:`ingest` (delegated files and routing snapshots),
:mod:`series_stats`, :mod:`arima`, :mod:`trend`, :mod:`changepoint`,
:mod:`reachability` and :mod:`report` (pipeline and CLI tables).
"""
from .errors import AnalysisError, InputError, StatisticalError

__version__ = "0.1.0"

__all__ = ["AnalysisError", "InputError", "StatisticalError", "__version__"]
