"""Exception hierarchy. Every error raised on bad input derives from ``CritNodesError``."""


class CritNodesError(Exception):
    pass


class GraphParseError(CritNodesError, ValueError):
    """Malformed edge-list line."""


class GraphRangeError(CritNodesError, ValueError):
    """Edge weight outside [0, 1]."""


class GraphStructureError(CritNodesError, ValueError):
    """Self-loop or duplicate edge."""


class GraphModelError(CritNodesError, ValueError):
    """Graph violates a diffusion-model constraint (LT in-weight sum > 1)."""


class GraphLookupError(CritNodesError, KeyError):
    """Unknown node."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class GameSizeError(CritNodesError, ValueError):
    """Game or search space too large for an exhaustive method."""


class DomainError(CritNodesError, ValueError):
    """Coalition outside the game's ground set."""


class ConfigError(CritNodesError, ValueError):
    """Invalid method parameters or experiment configuration."""
