"""Exception types raised across the pipeline."""


class FandomDynError(Exception):
    """Base class for all package errors."""


class ParseError(FandomDynError, ValueError):
    """A malformed input row.

    Carries the zero-based data row index (header excluded) and the
    offending field so callers can report file/row context.
    """

    def __init__(self, message, row=None, field=None):
        self.row = row
        self.field = field
        where = []
        if row is not None:
            where.append(f"row {row}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class InsufficientEventsError(FandomDynError, ValueError):
    pass


class DegenerateSequenceError(FandomDynError, ValueError):
    pass


class UndefinedStatisticError(FandomDynError, ValueError):
    pass


class RankDeficientError(FandomDynError, ValueError):
    def __init__(self, message, columns=()):
        self.columns = tuple(columns)
        super().__init__(message)


class MissingMetadataError(FandomDynError, KeyError):
    def __init__(self, team_id):
        self.team_id = team_id
        super().__init__(f"no metadata for team {team_id!r}")

    def __str__(self):
        return self.args[0]
