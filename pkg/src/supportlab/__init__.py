"""Support-size testing for distributions over long bit strings, queried bit by bit."""

from .bitdist import BitString, DistributionSpec, distance_to_support_m, emd, hamming_distance
from .oracle import OracleSession, QueryLog, open_session
from .testers import TESTERS, TesterVerdict

__version__ = "0.1.0"

__all__ = ["BitString", "DistributionSpec", "OracleSession", "QueryLog", "TESTERS", "TesterVerdict",
           "distance_to_support_m", "emd", "hamming_distance", "open_session"]
