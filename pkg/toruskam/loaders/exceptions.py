class ConfigLoaderException(Exception):
    """Exception raised when a config or data document cannot be read or validated."""
    pass
