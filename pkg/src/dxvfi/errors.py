"""Exception types; the CLI maps them to exit codes (input=1, numerical=2)."""


class DxvfiError(Exception):
    """Base class for all library errors."""


class InputError(DxvfiError):
    """Invalid shapes, parameters, file contents, or arguments."""


class NumericalError(DxvfiError):
    """Non-finite data or a degenerate numerical situation."""
