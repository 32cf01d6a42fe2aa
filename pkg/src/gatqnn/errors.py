"""Exception types raised across the package."""


class GatQnnError(Exception):
    """Base class for all package errors."""


# quantum backend
class WrongLength(GatQnnError, ValueError):
    pass


class NotNormalized(GatQnnError, ValueError):
    pass


class WireOutOfRange(GatQnnError, ValueError):
    pass


class ControlEqualsTarget(GatQnnError, ValueError):
    pass


class MissingSlot(GatQnnError, KeyError):
    pass


class ZeroShots(GatQnnError, ValueError):
    pass


class BackendConfigError(GatQnnError, ValueError):
    pass


# chromosome / circuit
class InvalidChromosome(GatQnnError, ValueError):
    pass


class TooManyPoints(GatQnnError, ValueError):
    pass


class WidthExceedsQubits(GatQnnError, ValueError):
    pass


# pool / model / training
class EmptyResults(GatQnnError, ValueError):
    pass


class LabelOutOfRange(GatQnnError, ValueError):
    pass


class EmptyDataset(GatQnnError, ValueError):
    pass


# GA engine
class EmptyPopulation(GatQnnError, ValueError):
    pass


class TooFewParents(GatQnnError, ValueError):
    pass


class KTooLarge(GatQnnError, ValueError):
    pass


class PoolMutationDetected(GatQnnError, RuntimeError):
    pass


# data pipeline
class BadMagic(GatQnnError, ValueError):
    pass


class CountMismatch(GatQnnError, ValueError):
    pass


class TruncatedFile(GatQnnError, ValueError):
    pass


class UnknownClass(GatQnnError, ValueError):
    pass


class TooFewSamples(GatQnnError, ValueError):
    pass


class NoConvergence(GatQnnError, RuntimeError):
    pass


class TooManyClasses(GatQnnError, ValueError):
    pass


# cli
class ConfigError(GatQnnError, ValueError):
    pass


class MissingArtifact(GatQnnError, FileNotFoundError):
    pass
