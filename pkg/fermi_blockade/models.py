from typing import Any, Dict, Type

import numpy as np
from pydantic import BaseModel as PydanticBaseModel


def add_required(schema: Dict[str, Any], model: Type[PydanticBaseModel]) -> None:
    """Add the property `required` to each property of the schema.

    For the pydantic :class:`~pydantic.BaseModel`, patch the schema generation to
    flag per property whether a value has to be given in the config file or
    falls back to its (experiment) default.

    Used in :func:`schema_extra` of :class:`~pydantic.BaseModel.Config`

    Args:
        schema: A dictionary of kind :class:`pydantic.BaseModel.schema`
        model: The pydantic model

    """
    for prop, value in schema.get('properties', {}).items():
        field = [x for x in model.__fields__.values() if x.alias == prop][0]
        value["required"] = bool(field.required)
        if field.allow_none:
            value["nullable"] = True


def remove_attr(schema: Dict[str, Any], model: Type[PydanticBaseModel], attr: str) -> None:
    """Remove the specified attribute `attr` from the schema.

    Args:
        schema: A dictionary of kind :class:`pydantic.BaseModel.schema`
        model: The pydantic model
        attr: The attribute to remove

    Example:
        remove_attr(schema, model, "title")

    """
    if attr in schema:
        schema.pop(attr)


def remove_prop_titles(schema: Dict[str, Any], model: Type[PydanticBaseModel]) -> None:
    """Remove the `title` from properties in the objects inside schema

    Args:
        schema: A dictionary of kind :class:`pydantic.BaseModel.schema`
        model: The pydantic model

    """
    for prop in schema.get('properties', {}).values():
        prop.pop('title', None)


class BaseModel(PydanticBaseModel):
    """Immutable value type.

    numpy arrays are allowed as fields and serialized as nested lists.

    """
    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False
        extra = "forbid"
        json_encoders = {np.ndarray: lambda x: x.tolist()}


class ConfigModel(PydanticBaseModel):
    """Block of a run configuration.

    Unknown keys are rejected and the exported schema documents which keys
    carry defaults.

    """
    class Config:
        allow_mutation = False
        extra = "forbid"
        validate_all = True

        @staticmethod
        def schema_extra(schema: Dict[str, Any], model: Type[PydanticBaseModel]) -> None:
            add_required(schema, model)
            remove_prop_titles(schema, model)
            remove_attr(schema, model, "required")
