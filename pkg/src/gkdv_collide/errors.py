"""Exception types shared by all modules.

Every error carries a short machine-readable ``code`` so that the command
line driver can emit it as JSON.
"""


class GkdvError(Exception):
    code = "GkdvError"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        out.update({k: _plain(v) for k, v in self.details.items()})
        return out


def _plain(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)


class UnsupportedExponent(GkdvError):
    code = "UnsupportedExponent"


class InvalidParameter(GkdvError):
    code = "InvalidParameter"


class TailTruncation(GkdvError):
    code = "TailTruncation"


class GridMismatch(GkdvError):
    code = "GridMismatch"


class NotOrthogonal(GkdvError):
    code = "NotOrthogonal"


class SolveFailure(GkdvError):
    code = "SolveFailure"


class StructureViolation(GkdvError):
    code = "StructureViolation"


class Degenerate(GkdvError):
    code = "Degenerate"


class UnsupportedOrder(GkdvError):
    code = "UnsupportedOrder"


class WrongExponent(GkdvError):
    code = "WrongExponent"


class BlowupDetected(GkdvError):
    code = "BlowupDetected"


class TrackingLost(GkdvError):
    code = "TrackingLost"


class DomainTooSmall(GkdvError):
    code = "DomainTooSmall"
