"""Clocks: a wall clock with precise sleep, and a virtual clock for
deterministic simulation.  All timing logic reads time through this
interface so it can be tested without real waiting.
"""

from __future__ import annotations

import time
from typing import Protocol

# time.sleep wakeups can overshoot by tens of milliseconds on loaded or
# virtualized hosts, so the coarse sleep stops well short of the deadline
# and a busy-wait covers the tail.
SPIN_THRESHOLD_MS = 30.0


class Clock(Protocol):
    def now_ms(self) -> float: ...

    def sleep_until(self, deadline_ms: float) -> None: ...


class WallClock:
    """Monotonic wall clock.  sleep_until sleeps coarsely, then spins the
    last stretch to hit the deadline tightly."""

    def __init__(self) -> None:
        self._origin = time.perf_counter()

    def now_ms(self) -> float:
        return (time.perf_counter() - self._origin) * 1000.0

    def sleep_until(self, deadline_ms: float) -> None:
        while True:
            remaining = deadline_ms - self.now_ms()
            if remaining <= 0:
                return
            if remaining > SPIN_THRESHOLD_MS:
                time.sleep((remaining - SPIN_THRESHOLD_MS) / 1000.0)
            # busy-wait the tail for low jitter


class VirtualClock:
    """Manually advanced clock; never waits."""

    def __init__(self, start_ms: float = 0.0) -> None:
        self._now = start_ms

    def now_ms(self) -> float:
        return self._now

    def sleep_until(self, deadline_ms: float) -> None:
        if deadline_ms > self._now:
            self._now = deadline_ms

    def advance(self, delta_ms: float) -> None:
        if delta_ms < 0:
            raise ValueError("virtual clock cannot move backwards")
        self._now += delta_ms
