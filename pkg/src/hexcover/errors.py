"""Exception hierarchy shared across the package."""


class HexcoverError(Exception):
    """Base class for all package-specific failures."""


class SchemaError(HexcoverError):
    """A document violates the instance/corpus schema."""


class FormatVersionError(SchemaError):
    """A document declares an unsupported format version."""


class GenerationBudgetError(HexcoverError):
    """Rejection sampling exhausted its retry budget."""


class SearchBudgetError(HexcoverError):
    """An exhaustive search hit its node-expansion limit before certifying."""


class GraphConstructionError(HexcoverError):
    """The cell graph is unusable (disconnected, or base has no feasible edge)."""


class ConfigError(HexcoverError):
    """Invalid configuration or CLI flag combination."""
