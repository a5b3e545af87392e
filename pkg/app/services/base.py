from abc import ABC


class Service(ABC):
    """A lazily created, process-wide component owned by the service manager."""

    name: str
    ready: bool = False

    async def teardown(self) -> None:
        return

    def set_ready(self) -> None:
        self.ready = True
