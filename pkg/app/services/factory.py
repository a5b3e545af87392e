from __future__ import annotations

import importlib
import inspect
from typing import TYPE_CHECKING, Any, get_type_hints

from app.services.schema import ServiceType

if TYPE_CHECKING:
    from app.services.base import Service


class ServiceFactory:
    """
    Builds one service class.

    Subclasses override `create`; every parameter annotated with a service
    class becomes a dependency the manager creates first.
    """

    def __init__(self, service_class: type[Service]) -> None:
        self.service_class = service_class
        self.dependencies = infer_service_types(self, service_classes())

    def create(self, *args: Any, **kwargs: Any) -> Service:
        return self.service_class(*args, **kwargs)


def infer_service_types(factory: ServiceFactory, available: dict[str, type[Service]]) -> list[ServiceType]:
    hints = get_type_hints(factory.create, globalns=dict(available))
    dependencies = []
    for param, annotation in hints.items():
        if param == "return":
            continue
        name = getattr(annotation, "name", None)
        try:
            dependencies.append(ServiceType(name))
        except ValueError as exc:
            msg = f"{type(factory).__name__}.create: parameter {param!r} is not a registered service"
            raise ValueError(msg) from exc
    return dependencies


def service_classes() -> dict[str, type[Service]]:
    """Class name -> class for every `app.services.<name>.service` module in ServiceType."""
    from app.services.base import Service

    classes: dict[str, type[Service]] = {}
    for service_type in ServiceType:
        module_name = f"app.services.{service_type.value.removesuffix('_service')}.service"
        try:
            module = importlib.import_module(module_name)
        except ImportError as exc:
            msg = f"Could not import {module_name}"
            raise RuntimeError(msg) from exc
        classes.update(
            (name, obj)
            for name, obj in inspect.getmembers(module, inspect.isclass)
            if issubclass(obj, Service) and obj is not Service
        )
    return classes
