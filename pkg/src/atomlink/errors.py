class ConfigurationError(ValueError):
    """Raised when a configuration or data record is unusable."""
