"""Exception types raised across the package."""


class NBVError(Exception):
    """Base class for all errors raised by freqnbv."""


class DegenerateInput(NBVError, ValueError):
    """Point sets too small or too collinear to register."""


# the planner catches this name; kept as an alias so callers can be explicit
RegistrationDegenerate = DegenerateInput


class ImageTooSmall(NBVError, ValueError):
    pass


class DimensionMismatch(NBVError, ValueError):
    pass


class ZeroSpectrum(NBVError):
    """Raised when an image carries no energy outside the DC bin."""


class EmptyCandidates(NBVError, ValueError):
    pass


class Exhausted(NBVError):
    """No unvisited views remain; a normal completion signal for the planner."""


class ParseError(NBVError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class UnsupportedCameraModel(NBVError, ValueError):
    def __init__(self, model):
        self.model = model
        super().__init__(f"unsupported camera model: {model}")
