"""Exception hierarchy shared by the parser, engine, platform and runtime."""


class XdlError(Exception):
    """Base class. ``trace`` is filled in by the runtime when a run fails."""

    trace = None


class XdlSyntaxError(XdlError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        super().__init__(str(first) if first else "syntax error")


# condition engine

class UndefinedVariable(XdlError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"undefined variable {name!r}")


class ComparatorMismatch(XdlError):
    pass


class UnparseableComparisonValue(XdlError):
    pass


# virtual platform

class PlatformError(XdlError):
    pass


class UnknownVessel(PlatformError):
    def __init__(self, vessel_id):
        self.vessel_id = vessel_id
        super().__init__(f"unknown vessel {vessel_id!r}")


class InsufficientVolume(PlatformError):
    pass


class CapacityExceeded(PlatformError):
    pass


class InvalidTransfer(PlatformError):
    pass


class MissingReading(PlatformError):
    pass


class ConfigError(XdlError):
    pass


# runtime

class ExecutionError(XdlError):
    pass


class NonTermination(ExecutionError):
    pass


class UnknownStepName(ExecutionError):
    pass


class InvalidStep(ExecutionError):
    pass
