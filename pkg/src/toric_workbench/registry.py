from typing import Any, Callable, Dict, Generic, List, Optional, TypeVar

import numpy as np
from typing_extensions import Protocol

from toric_workbench.errors import UsageError


class Decoder(Protocol):
    def decode_batch(self, sx: np.ndarray, sz: np.ndarray) -> np.ndarray:
        """Decoded joint class indices for ``(n, L, L)`` syndrome grids."""


R = TypeVar("R")


class DecoderFactory(Generic[R]):
    """A registered decoder constructor plus what the harness needs to know about it.

    ``max_L`` is the largest lattice the decoder accepts, ``None`` for no limit.
    """

    def __init__(self, fn: Callable[..., R], max_L: Optional[int] = None, description: str = ""):
        self.fn = fn
        self.max_L = max_L
        self.description = description

    def __repr__(self):
        result = f"{self.__class__.__name__}({self.fn}"
        if self.max_L is not None:
            result += f", max_L={self.max_L}"
        result += ")"
        return result

    def __call__(self, *args, **kwargs) -> R:
        return self.fn(*args, **kwargs)


class Registry:
    """Decoder constructors by name.

    Examples:
        >>> registry = Registry()
        >>> @registry.register_at("noop")
        ... def noop(lattice, noise, **options):
        ...     return None
        >>> registry.names()
        ['noop']
        >>> registry.get("nope")
        Traceback (most recent call last):
        ...
        toric_workbench.errors.UsageError: No decoder registered as 'nope'. Available decoders include: noop.
    """

    def __init__(self):
        self._registered: Dict[str, DecoderFactory] = {}

    def names(self) -> List[str]:
        return list(self._registered)

    def get(self, name: str) -> DecoderFactory:
        try:
            return self._registered[name]
        except KeyError:
            available = ", ".join(self._registered) or "N/A"
            raise UsageError(f"No decoder registered as '{name}'. Available decoders include: {available}.") from None

    def clear(self):
        self._registered = {}

    def register_at(self, name: str, *, max_L: Optional[int] = None, description: str = ""):
        def wrapper(fn):
            if name in self._registered:
                raise ValueError("Name '{}' is already registered".format(name))

            factory = fn
            if not isinstance(fn, DecoderFactory):
                factory = DecoderFactory(fn, max_L=max_L, description=description)

            self._registered[name] = factory
            return fn

        return wrapper

    def create(self, name: str, lattice, noise, **options: Any) -> Decoder:
        return self.get(name)(lattice, noise, **options)


registry = Registry()
register_at = registry.register_at
