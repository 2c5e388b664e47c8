class DomainError(ValueError):
    """Input outside the domain an operation is defined on."""


class EnumerationLimitError(RuntimeError):
    """Exact enumeration would visit more outcomes than the configured cap."""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(
            f"exact enumeration needs {required} outcomes, cap is {cap}"
        )
