"""Shared error types.

ConfigurationError: the run setup is inconsistent (incomplete parameter
table, degenerate box, cutoff larger than the neighbor list was built for).
InputError: the numerical input itself is invalid (NaN positions).
"""


class ConfigurationError(Exception):
    pass


class InputError(Exception):
    pass
