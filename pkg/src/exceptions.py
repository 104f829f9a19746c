"""
Exception hierarchy shared by the loaders, the model and the inference engine.
"""
from typing import Optional


class ShopperError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ShopperError, ValueError):
    """Invalid or unknown configuration value."""


class ParseError(ShopperError):
    """Malformed input row."""

    def __init__(self, path: str, line: Optional[int], message: str):
        self.path = str(path)
        self.line = line
        location = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{location}: {message}")


class DataError(ShopperError):
    """Input that parses but violates a dataset invariant."""


class MissingPriceError(DataError):
    """A purchased item has no price in its trip."""

    def __init__(self, trip_id: int, item_id: str):
        self.trip_id = trip_id
        self.item_id = item_id
        super().__init__(f"trip {trip_id}: purchased item '{item_id}' has no price")


class EmptyDatasetError(DataError):
    """An input file holds no rows."""


class DomainError(ShopperError, ValueError):
    """Argument outside the domain of an operation."""


class SplitError(ShopperError):
    """Not enough data to build the requested split."""


class BasketSizeError(ShopperError):
    """Basket too large for exact enumeration."""


class DegenerateVectorError(ShopperError, ValueError):
    """Zero vector where a direction is required."""


class OptimizationError(ShopperError):
    """The stochastic objective became NaN or infinite."""

    def __init__(self, iteration: int, message: str = "objective is not finite"):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: {message}")


class CatalogMismatchError(ShopperError):
    """Checkpoint and dataset disagree on the item/user registries."""


class UnknownIdError(ShopperError, KeyError):
    """Item or user identifier not in the catalog."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""
