"""Exception types shared across the package.

The CLI maps these onto process exit codes (parse 2, rank 3, dimension 4).
"""


class LazySpcaError(Exception):
    pass


class ParseError(LazySpcaError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(LazySpcaError, ValueError):
    pass


class RankDeficiencyError(LazySpcaError):
    """Raised when a sketch, Gram matrix or running R factor is singular.

    ``column`` is the offending QR column, ``safe_k`` the largest truncation
    the spectrum supports, ``slice_index`` the streaming block that exposed it.
    """

    def __init__(self, message, column=None, safe_k=None, slice_index=None):
        self.column = column
        self.safe_k = safe_k
        self.slice_index = slice_index
        super().__init__(message)


class ConvergenceError(LazySpcaError):
    pass
