"""
GROWTHLAB - ERROR TYPES
Every failure raised by the library derives from GrowthLabError so the CLI
and the HTTP API can turn it into a structured diagnostic.
"""

import json


class GrowthLabError(Exception):
    """Base class for all library errors"""
    kind = 'error'

    def to_dict(self):
        return {'kind': self.kind, 'message': str(self)}


class ShapeError(GrowthLabError, ValueError):
    """Matrix or vector dimensions do not fit together"""
    kind = 'shape'


class DomainError(GrowthLabError, ValueError):
    """Argument outside the mathematical domain of an operation"""
    kind = 'domain'


class OrderError(GrowthLabError, ValueError):
    """Levels given in the wrong order (s > t)"""
    kind = 'order'


class RangeError(GrowthLabError, ValueError):
    """Request beyond the tabulated or computed range"""
    kind = 'range'


class InputError(GrowthLabError, ValueError):
    """Word or element uses letters the engine does not know"""
    kind = 'input'


class InvalidComplexError(GrowthLabError, ValueError):
    """Boundary maps do not compose to zero"""
    kind = 'invalid-complex'


class UsageError(GrowthLabError):
    """Command line could not be understood"""
    kind = 'usage'


class ParseError(GrowthLabError):
    """Malformed input document"""
    kind = 'parse'

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ''
        if path:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)

    def to_dict(self):
        data = super().to_dict()
        data['line'] = self.line
        return data


class StretchingError(GrowthLabError):
    """A module element failed the stretching test"""
    kind = 'stretching'

    def __init__(self, message, report=None, member=None):
        self.report = report
        self.member = member
        super().__init__(message)

    def to_dict(self):
        data = super().to_dict()
        if self.member is not None:
            data['member'] = self.member
        if self.report is not None:
            data['report'] = self.report.to_dict()
        return data


def read_json(path):
    """Load a JSON document, turning decode failures into ParseError with the line"""
    try:
        with open(path, encoding='utf-8') as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise ParseError("file not found", path=path) from None
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, path=str(path)) from None
