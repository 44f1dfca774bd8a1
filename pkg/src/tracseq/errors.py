"""Exception hierarchy.

Errors that stem from bad input (files, flags, schemas) derive from
``InputError`` so the CLI can map them to exit code 2.
"""


class TracSeqError(Exception):
    pass


class InputError(TracSeqError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SchemaError(ParseError):
    pass


class IntegrityError(InputError):
    pass


class FormatError(InputError):
    pass


class TemplateError(InputError):
    def __init__(self, slot: str, message: str | None = None):
        self.slot = slot
        super().__init__(message or f"missing template slot {slot!r}")


class ValidationError(InputError):
    pass


class ManifestError(InputError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigurationError(TracSeqError, ValueError):
    pass


class StorageError(TracSeqError):
    pass


class OracleRefusal(TracSeqError, ValueError):
    pass
