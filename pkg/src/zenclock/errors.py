"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Requested qubit count exceeds what a dense statevector may hold."""


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message
