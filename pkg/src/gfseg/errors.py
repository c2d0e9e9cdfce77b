"""Exception types shared across the package."""


class ConfigError(Exception):
    """Bad manifest, CLI flag, or episode configuration (exit code 2)."""


class ProviderError(Exception):
    """A mask provider failed or violated the protocol (exit code 3)."""


class PipelineError(Exception):
    """An episode could not be processed despite valid configuration."""
