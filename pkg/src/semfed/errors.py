"""Exception types shared by the package's parsers."""


class ParseError(Exception):
    """Malformed input; carries a 1-based source position when known."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        if line:
            super().__init__(f"line {line}, column {column}: {message}")
        else:
            super().__init__(message)
        self.message = message
        self.line = line
        self.column = column
