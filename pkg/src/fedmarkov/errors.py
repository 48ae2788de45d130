"""Exception hierarchy shared across the toolkit."""


class FedMarkovError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(FedMarkovError):
    """Invalid configuration: bad binning bounds, negative smoothing, bad ring."""


class InvalidValueError(FedMarkovError):
    """A value violates a numeric precondition (NaN/inf where finite required)."""


class DatasetError(FedMarkovError):
    """Malformed dataset: schema mismatch, bad CSV layout, shape mismatch."""


class ProtocolError(FedMarkovError):
    """Secure-aggregation protocol violation: missing seeds or uploads,
    length mismatch, suspected modular wraparound."""


class RoundAborted(ProtocolError):
    """A federation round was aborted before aggregation completed."""
