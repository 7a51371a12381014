"""Command-line interface modules."""

__all__: list[str] = []
