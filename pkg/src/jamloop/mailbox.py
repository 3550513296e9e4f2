"""Single-slot mailbox for timeline <-> worker hand-off.

One producer, one consumer.  put overwrites any unconsumed value; take
never blocks.  A Lock guards the slot; contention is bounded to a single
assignment, so the timeline side is wait-free in practice.
"""

from __future__ import annotations

import threading
from typing import Generic, Optional, TypeVar

T = TypeVar("T")


class Mailbox(Generic[T]):
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._slot: Optional[T] = None
        self._event = threading.Event()

    def put(self, item: T) -> None:
        with self._lock:
            self._slot = item
        self._event.set()

    def take(self) -> Optional[T]:
        """Non-blocking; returns None when empty."""
        if not self._event.is_set():
            return None
        with self._lock:
            item = self._slot
            self._slot = None
            self._event.clear()
        return item

    def take_blocking(self, timeout_s: Optional[float] = None) -> Optional[T]:
        """Worker-side receive; waits up to timeout for a value."""
        if not self._event.wait(timeout_s):
            return None
        return self.take()
