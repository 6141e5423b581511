"""Custom pydantic types for numpy arrays."""

from __future__ import annotations

from typing import TYPE_CHECKING, Annotated, Any

import numpy as np
import numpy.typing as npt
from pydantic_core import CoreSchema, core_schema

if TYPE_CHECKING:
    from collections.abc import Callable

    from pydantic import GetJsonSchemaHandler
    from pydantic.json_schema import JsonSchemaValue


class NdArray:
    """Annotation that validates a finite float64 numpy array of a fixed rank.

    Nested lists, tuples and arrays are accepted on input. The value is stored as a
    read-only `numpy.ndarray` and serialized back to nested lists, so models carrying
    matrices round-trip through JSON.

    !!! Example
        ```python
        from typing import Annotated

        from pydantic import BaseModel

        from pymjnn.models.pydantic import Matrix


        class Gain(BaseModel):
            K: Matrix


        gain = Gain(K=[[1.0, 0.0], [0.0, 1.0]])
        assert gain.K.shape == (2, 2)
        assert gain.model_dump(mode="json") == {"K": [[1.0, 0.0], [0.0, 1.0]]}
        ```
    """

    def __init__(self, ndim: int) -> None:
        self.ndim = ndim

    def _validate(self, value: Any) -> npt.NDArray[np.float64]:
        try:
            arr = np.array(value, dtype=np.float64)
        except (TypeError, ValueError) as e:
            msg = f"Expected a numeric array, got {type(value).__name__}"
            raise ValueError(msg) from e
        if self.ndim == 2 and arr.ndim == 1 and arr.size == 0:  # noqa: PLR2004
            arr = arr.reshape(0, 0)
        if arr.ndim != self.ndim:
            msg = f"Expected an array with {self.ndim} dimension(s), got {arr.ndim}"
            raise ValueError(msg)
        if not np.all(np.isfinite(arr)):
            msg = "Array entries must be finite"
            raise ValueError(msg)
        arr.setflags(write=False)
        return arr

    @staticmethod
    def _serialize(value: npt.NDArray[np.float64]) -> list[Any]:
        return value.tolist()  # type: ignore[no-any-return]

    def __get_pydantic_core_schema__(  # noqa: DOC101, DOC103, DOC203
        self,
        source: type[Any],
        handler: Callable[[Any], CoreSchema],
    ) -> core_schema.CoreSchema:
        """Validate with numpy and always serialize to nested lists."""  # noqa: DOC201
        return core_schema.no_info_plain_validator_function(
            self._validate,
            serialization=core_schema.plain_serializer_function_ser_schema(
                self._serialize,
                when_used="always",
            ),
        )

    def __get_pydantic_json_schema__(  # noqa: DOC101, DOC103, DOC203
        self,
        schema: CoreSchema,
        handler: GetJsonSchemaHandler,
    ) -> JsonSchemaValue:
        """Describe the array as nested lists of numbers."""  # noqa: DOC201
        item: JsonSchemaValue = {"type": "number"}
        for _ in range(self.ndim):
            item = {"type": "array", "items": item}
        return item


Matrix = Annotated[npt.NDArray[np.float64], NdArray(ndim=2)]
"""A finite, read-only, two-dimensional float64 array."""

Vector = Annotated[npt.NDArray[np.float64], NdArray(ndim=1)]
"""A finite, read-only, one-dimensional float64 array."""
