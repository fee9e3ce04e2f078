"""Symbol-granularity shared buffer: one producer writes OFDM symbol slots,
any number of registered consumers read them independently and in order.

Models the shared-memory staging between the front-end and the demodulation
engines inside one process. Consumers register before the first write; the
producer blocks when the slowest consumer lags by ``capacity`` (or raises
under the fail-fast policy).
"""

import threading
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    BackpressureError,
    ConfigurationError,
    ContractError,
    LifecycleError,
)

PILOT = "pilot"
DATA = "data"

POLICIES = ("block", "fail_fast")


@dataclass
class SymbolSlot:
    seq_no: int
    kind: str  # "pilot" or "data"
    payload: np.ndarray  # (n_antennas, fft_len + cp_len) complex samples
    checksum: int = None


def slot_checksum(slot):
    tag = f"{slot.seq_no}:{slot.kind}".encode()
    return zlib.crc32(slot.payload.tobytes() + tag)


class SymbolRing:
    def __init__(self, capacity=64, policy="block", checksums=False):
        if capacity < 1 or (capacity & (capacity - 1)) != 0:
            raise ConfigurationError(
                f"ring capacity must be a power of two, got {capacity}"
            )
        if policy not in POLICIES:
            raise ConfigurationError(f"policy must be one of {POLICIES}")
        self.capacity = capacity
        self.policy = policy
        self.checksums = checksums
        self._slots = [None] * capacity
        self._write_pos = 0
        self._cursors = {}
        self._next_consumer = 0
        self._closed = False
        self._cond = threading.Condition()

    def register_consumer(self):
        """Reserve a read cursor. Must happen before the first write so the
        consumer observes the complete sequence."""
        with self._cond:
            if self._write_pos > 0 or self._closed:
                raise LifecycleError("consumers must register before the first write")
            cid = self._next_consumer
            self._next_consumer += 1
            self._cursors[cid] = 0
            return cid

    def _slowest_cursor(self):
        return min(self._cursors.values()) if self._cursors else self._write_pos

    def write(self, slot):
        with self._cond:
            if self._closed:
                raise LifecycleError("write after close")
            while self._write_pos - self._slowest_cursor() >= self.capacity:
                if self.policy == "fail_fast":
                    raise BackpressureError(
                        f"ring full: {self.capacity} slots pending on the slowest consumer"
                    )
                self._cond.wait()
                if self._closed:
                    raise LifecycleError("write after close")
            if self.checksums:
                slot.checksum = slot_checksum(slot)
            self._slots[self._write_pos % self.capacity] = slot
            self._write_pos += 1
            self._cond.notify_all()

    def read(self, consumer_id):
        """Next unread slot for this consumer, or None after close and drain."""
        with self._cond:
            if consumer_id not in self._cursors:
                raise ContractError(f"consumer {consumer_id} is not registered")
            while self._cursors[consumer_id] == self._write_pos:
                if self._closed:
                    return None
                self._cond.wait()
            slot = self._slots[self._cursors[consumer_id] % self.capacity]
            self._cursors[consumer_id] += 1
            self._cond.notify_all()
            return slot

    def close(self):
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self):
        return self._closed
