from typing import Any, Dict, Type, TypeVar

import pydantic

from app.errors import ValidationError

T = TypeVar("T", bound=pydantic.BaseModel)


def deserialize_instance(model: Type[T], data: Dict[str, Any]) -> T:
    """
    Recreate a pydantic model instance from a dictionary.
    Validation failures are re-raised as ValidationError naming the first
    offending field.
    """
    try:
        return model.model_validate(data)
    except pydantic.ValidationError as error:
        first = error.errors()[0]
        field = ".".join(str(part) for part in first.get("loc", ())) or "<root>"
        raise ValidationError(
            f"Invalid value for '{field}': {first.get('msg')}", details=str(error)
        ) from error
