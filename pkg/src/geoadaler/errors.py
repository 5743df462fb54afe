"""Exception types shared across the package.

ConfigError maps to CLI exit code 2, ContractError (and subclasses) to 3.
"""


class ConfigError(ValueError):
    """Invalid user-supplied configuration (unknown key, bad type, missing file)."""


class ContractError(ValueError):
    """A runtime precondition or invariant was violated."""


class NonFiniteError(ContractError):
    """NaN or Inf encountered; carries the flat index of the first bad entry."""

    def __init__(self, what, index, value):
        self.what = what
        self.index = index
        self.value = value
        super().__init__(f"{what} has non-finite entry {value!r} at flat index {index}")
