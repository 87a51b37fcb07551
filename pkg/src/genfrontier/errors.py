"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: DataError -> 2, RangeQueryError -> 3.
"""


class DataError(ValueError):
    """Malformed or inconsistent input data (bad record, schema violation,
    mixed cell keys, vocab bound violation)."""


class RangeQueryError(ValueError):
    """A frontier query fell outside the observed sweep range.

    Extrapolation is never performed; the nearest endpoint and its value
    are attached so callers can report what *is* supported.
    """

    def __init__(self, message: str, nearest_entropy: float, nearest_ppl: float):
        super().__init__(message)
        self.nearest_entropy = nearest_entropy
        self.nearest_ppl = nearest_ppl
