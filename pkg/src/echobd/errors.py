"""Exception types shared across the package."""


class EchobdError(Exception):
    pass


class CompositionNonzero(EchobdError):
    """d_out . d_in != 0, so the pair is not a chain complex."""


class NotChainMap(EchobdError):
    pass


class InvalidModel(EchobdError):
    pass


class DirectionViolated(InvalidModel):
    pass


class DegenerateDirection(EchobdError):
    pass


class DegenerateOrbit(EchobdError):
    pass


class MissingConvention(EchobdError):
    pass


class InfeasibleParameters(EchobdError):
    pass


class NotStabilized(EchobdError):
    pass


class GenerationFailed(EchobdError):
    pass


class ClaimFailed(EchobdError):
    def __init__(self, name, detail=""):
        super().__init__(f"{name}: {detail}" if detail else name)
        self.name = name
        self.detail = detail


class ConfigError(EchobdError):
    """Invalid model configuration; the message names the violated rule."""
