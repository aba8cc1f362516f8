"""Common exception root so callers can catch any domain error in one clause."""


class SinogateError(Exception):
    """Base class for all domain errors raised by this package."""
