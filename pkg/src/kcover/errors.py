"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent user input (lengths, file contents, flags)."""


class DomainError(ValueError):
    """Operation called outside its mathematical precondition."""


class CapacityError(ValueError):
    """Exhaustive enumeration requested beyond the configured cap."""


class ProtocolInvariantError(RuntimeError):
    """A protocol tree produced an invariant-violating value (must never fire)."""
