"""Exception hierarchy shared by every module of the package."""


class PCIMError(Exception):
    """Base class for all errors raised by pcim_lab."""


# --- map definition / validation ---

class ValidationError(PCIMError, ValueError):
    """A map definition violates one of the structural invariants."""


class NotAContraction(ValidationError):
    pass


class ImageEscapesDomain(ValidationError):
    pass


class UnorderedCuts(ValidationError):
    pass


class ZeroSlope(ValidationError):
    pass


class BadParameters(ValidationError):
    pass


# --- evaluation ---

class OutOfDomain(PCIMError, ValueError):
    pass


class OnCutPoint(PCIMError, ValueError):
    """The map is deliberately undefined on the cut set."""

    def __init__(self, point, step=None):
        self.point = point
        self.step = step
        msg = f"{point} is a cut point"
        if step is not None:
            msg += f" (reached at step {step})"
        super().__init__(msg)


class NotACutPoint(PCIMError, ValueError):
    pass


# --- symbolic ---

class PrefixTooShort(PCIMError, ValueError):
    pass


class ItineraryLeftXtilde(PCIMError, ValueError):
    """The orbit landed on a cut point, so the itinerary is finite."""


LeftXtilde = ItineraryLeftXtilde


class AlphaOutOfRange(PCIMError, ValueError):
    def __init__(self, alpha, n_symbols):
        self.alpha = alpha
        self.n_symbols = n_symbols
        super().__init__(
            f"fitted slope {alpha} outside 0..{n_symbols - 1}; "
            "separation property violated or data corrupted"
        )


# --- atoms / analysis ---

class DepthOverflow(PCIMError, ValueError):
    pass


class NotInCover(PCIMError, LookupError):
    def __init__(self, point, generation):
        self.point = point
        self.generation = generation
        super().__init__(f"{point} lies in no atom of generation {generation}")


class HypothesisViolation(PCIMError):
    """A standing hypothesis (separation, D inside X-tilde) does not hold."""

    def __init__(self, message, pair=None, overlap=None):
        self.pair = pair
        self.overlap = overlap
        super().__init__(message)


class SeparationRequired(HypothesisViolation):
    pass


class EpsilonTooLarge(PCIMError, ValueError):
    pass


class LambdaDegenerate(PCIMError, ValueError):
    pass


class RepresentativeOnDeltaPreimage(PCIMError):
    pass


# --- map files ---

class MapFileError(PCIMError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class MapSyntaxError(MapFileError):
    pass


class NonCanonicalRational(MapFileError):
    pass
