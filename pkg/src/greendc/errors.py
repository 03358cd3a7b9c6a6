class GreenDCError(Exception):
    """Base class for all errors raised by greendc."""
