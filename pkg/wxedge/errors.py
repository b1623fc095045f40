"""
Exception hierarchy for the wxedge edge-case generator.
"""


class WxEdgeError(Exception):
    """Base class for every error raised by wxedge."""


class InvalidConfigError(WxEdgeError):
    """A configuration value is outside its valid domain."""


class InvalidArgumentError(WxEdgeError):
    """An operation received an argument it cannot honour."""


class SchemaVersionError(WxEdgeError):
    """A persisted document carries an unsupported schema version."""

    def __init__(self, kind: str, found: object, supported: tuple[int, ...]):
        self.kind = kind
        self.found = found
        self.supported = supported
        super().__init__(
            f"Unsupported {kind} schema_version {found!r} "
            f"(supported: {', '.join(str(v) for v in supported)})"
        )


class CatalogParseError(WxEdgeError):
    """A scene catalog document is malformed."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        location = f" (line {line}, column {column})" if line else ""
        super().__init__(f"{message}{location}")


class CatalogNotFoundError(WxEdgeError):
    """The scene catalog file does not exist."""


class NonFiniteError(WxEdgeError):
    """A NaN or infinity appeared in an episode or a policy update."""

    def __init__(self, where: str, detail: str = ""):
        self.where = where
        self.detail = detail
        super().__init__(f"Non-finite value in {where}" + (f": {detail}" if detail else ""))


class ReplayMismatchError(WxEdgeError):
    """Logged episode totals disagree with the totals recomputed from its rows."""

    def __init__(self, mismatches: list[str]):
        self.mismatches = mismatches
        super().__init__("Episode totals mismatch: " + "; ".join(mismatches))
