"""Call-order recorder used to assert cross-module sequencing in tests."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Tracer:
    events: list[tuple[str, dict]] = field(default_factory=list)

    def record(self, event: str, **detail) -> None:
        self.events.append((event, detail))

    def names(self) -> list[str]:
        return [name for name, _ in self.events]

    def clear(self) -> None:
        self.events.clear()


class NullTracer(Tracer):
    def record(self, event: str, **detail) -> None:  # noqa: D102
        pass
