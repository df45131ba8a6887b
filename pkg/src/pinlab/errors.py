class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a model quantity."""
