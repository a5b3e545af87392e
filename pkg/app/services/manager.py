from __future__ import annotations

import asyncio
import importlib
import inspect
from typing import TYPE_CHECKING

from app.logging import logger
from app.util.concurrency import KeyedMemoryLockManager

if TYPE_CHECKING:
    from app.services.base import Service
    from app.services.factory import ServiceFactory
    from app.services.schema import ServiceType


class NoFactoryRegisteredError(Exception):
    pass


class ServiceManager:
    """Creates services on first use, dependencies first, one lock per service name."""

    def __init__(self) -> None:
        self.services: dict[str, Service] = {}
        self.factories: dict[str, ServiceFactory] = {}
        self.keyed_lock = KeyedMemoryLockManager()
        self.register_factories()

    def register_factories(self) -> None:
        for factory in self.get_factories():
            try:
                self.register_factory(factory)
            except Exception:  # noqa: BLE001
                logger.exception(f"Error registering {factory}")

    def register_factory(self, service_factory: ServiceFactory) -> None:
        self.factories[service_factory.service_class.name] = service_factory

    def get(self, service_name: ServiceType, default: ServiceFactory | None = None) -> Service:
        with self.keyed_lock.lock(service_name.value):
            if service_name.value not in self.services:
                self._create_service(service_name, default)
        return self.services[service_name.value]

    def _create_service(self, service_name: ServiceType, default: ServiceFactory | None = None) -> None:
        logger.debug(f"Create service {service_name.value}")
        factory = self.factories.get(service_name.value)
        if factory is None and default is not None:
            self.register_factory(default)
            factory = default
        if factory is None:
            msg = f"No factory registered for the service class '{service_name.name}'"
            raise NoFactoryRegisteredError(msg)
        for dependency in factory.dependencies:
            if dependency.value not in self.services:
                self._create_service(dependency)

        dependent_services = {dep.value: self.services[dep.value] for dep in factory.dependencies}
        service = factory.create(**dependent_services)
        service.set_ready()
        self.services[service_name.value] = service

    async def teardown(self) -> None:
        """Teardown all the services, dependents before their dependencies."""
        for service in reversed(list(self.services.values())):
            logger.debug(f"Teardown service {service.name}")
            try:
                result = service.teardown()
                if asyncio.iscoroutine(result):
                    await result
            except Exception as exc:  # noqa: BLE001
                logger.debug(f"Error in teardown of {service.name}: {exc}")
        self.services = {}
        self.factories = {}

    @staticmethod
    def get_factories() -> list[ServiceFactory]:
        from app.services.factory import ServiceFactory
        from app.services.schema import ServiceType

        factories = []
        for service_type in ServiceType:
            module_name = f"app.services.{service_type.value.removesuffix('_service')}.factory"
            try:
                module = importlib.import_module(module_name)
            except ImportError as exc:
                msg = f"Could not import {module_name}"
                raise RuntimeError(msg) from exc
            found = [
                obj
                for _, obj in inspect.getmembers(module, inspect.isclass)
                if issubclass(obj, ServiceFactory) and obj is not ServiceFactory
            ]
            if not found:
                msg = f"{module_name} defines no ServiceFactory"
                raise RuntimeError(msg)
            factories.append(found[0]())
        return factories


service_manager = ServiceManager()
