class CapacityError(MemoryError):
    """Raised when a computation cannot fit inside the configured memory budget."""

    def __init__(self, what: str, required: int, budget: int) -> None:
        self.what = what
        self.required = required
        self.budget = budget
        super().__init__(f"{what}: needs {required} bytes, budget is {budget} bytes")
