"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration, detected before any work runs."""


class ShapeError(ValueError):
    """Array argument has the wrong shape for the network or buffer it feeds."""


class DivergenceError(RuntimeError):
    """Training produced non-finite losses or gradients; the run must abort."""
