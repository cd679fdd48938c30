"""Exception types shared across the toolkit.

The CLI maps these onto exit codes (config 2, data 3, numerical 4); library
code raises them directly so callers can tell bad inputs from bad files from
diverged training.
"""


class ReviewKbError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ReviewKbError):
    """Invalid configuration: unknown keys, out-of-range values, missing paths."""


class DataError(ReviewKbError):
    """Malformed input data: bad JSONL lines, inconsistent dimensions, bad spans."""


class NumericalError(ReviewKbError):
    """Non-finite loss or other numerical failure during training."""
