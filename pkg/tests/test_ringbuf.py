import threading
import time

import numpy as np
import pytest

from ofdmrx.errors import (
    BackpressureError,
    ConfigurationError,
    ContractError,
    LifecycleError,
)
from ofdmrx.ringbuf import DATA, SymbolRing, SymbolSlot, slot_checksum


def make_slot(seq, width=4):
    return SymbolSlot(seq_no=seq, kind=DATA, payload=np.full((2, width), seq + 0j))


def drain(ring, consumer):
    out = []
    while True:
        slot = ring.read(consumer)
        if slot is None:
            return out
        out.append(slot)


def test_fifo_order():
    ring = SymbolRing(capacity=16)
    consumer = ring.register_consumer()
    for seq in range(10):
        ring.write(make_slot(seq))
    ring.close()
    assert [s.seq_no for s in drain(ring, consumer)] == list(range(10))


def test_fail_fast_backpressure():
    ring = SymbolRing(capacity=4, policy="fail_fast")
    ring.register_consumer()  # stalled consumer
    for seq in range(4):
        ring.write(make_slot(seq))
    with pytest.raises(BackpressureError):
        ring.write(make_slot(4))


def test_blocking_write_resumes_when_consumer_catches_up():
    ring = SymbolRing(capacity=4)
    consumer = ring.register_consumer()
    received = []

    def slow_reader():
        while True:
            time.sleep(0.002)
            slot = ring.read(consumer)
            if slot is None:
                return
            received.append(slot.seq_no)

    reader = threading.Thread(target=slow_reader)
    reader.start()
    for seq in range(32):  # forces the producer to block repeatedly
        ring.write(make_slot(seq))
    ring.close()
    reader.join()
    assert received == list(range(32))


def test_two_consumers_both_get_everything():
    ring = SymbolRing(capacity=8)
    fast = ring.register_consumer()
    slow = ring.register_consumer()
    results = {fast: [], slow: []}

    def reader(cid, delay):
        while True:
            if delay:
                time.sleep(delay)
            slot = ring.read(cid)
            if slot is None:
                return
            results[cid].append(slot.seq_no)

    threads = [
        threading.Thread(target=reader, args=(fast, 0)),
        threading.Thread(target=reader, args=(slow, 0.001)),
    ]
    for t in threads:
        t.start()
    for seq in range(100):
        ring.write(make_slot(seq))
    ring.close()
    for t in threads:
        t.join()
    assert results[fast] == list(range(100))
    assert results[slow] == list(range(100))


def test_read_blocks_until_write():
    ring = SymbolRing(capacity=4)
    consumer = ring.register_consumer()
    got = {}

    def reader():
        got["slot"] = ring.read(consumer)
        got["at"] = time.perf_counter()

    t = threading.Thread(target=reader)
    t.start()
    time.sleep(0.05)
    wrote_at = time.perf_counter()
    ring.write(make_slot(7))
    t.join(timeout=2)
    assert got["slot"].seq_no == 7
    assert got["at"] >= wrote_at  # reader really waited for the write


def test_end_of_stream_after_close_and_drain():
    ring = SymbolRing(capacity=4)
    consumer = ring.register_consumer()
    ring.write(make_slot(0))
    ring.close()
    assert ring.read(consumer).seq_no == 0
    assert ring.read(consumer) is None
    assert ring.read(consumer) is None


def test_write_after_close_rejected():
    ring = SymbolRing(capacity=4)
    ring.register_consumer()
    ring.close()
    with pytest.raises(LifecycleError):
        ring.write(make_slot(0))


def test_unregistered_consumer_rejected():
    ring = SymbolRing(capacity=4)
    with pytest.raises(ContractError):
        ring.read(99)


def test_late_registration_rejected():
    ring = SymbolRing(capacity=4)
    ring.register_consumer()
    ring.write(make_slot(0))
    with pytest.raises(LifecycleError):
        ring.register_consumer()


def test_capacity_must_be_power_of_two():
    with pytest.raises(ConfigurationError):
        SymbolRing(capacity=12)


def test_interleaved_sequence_matches_producer_log():
    ring = SymbolRing(capacity=64, checksums=True)
    consumer = ring.register_consumer()
    total = 10_000
    produced = []

    def produce():
        for seq in range(total):
            slot = make_slot(seq, width=3)
            produced.append(seq)
            ring.write(slot)
        ring.close()

    t = threading.Thread(target=produce)
    t.start()
    seen = []
    checksum_failures = 0
    while True:
        slot = ring.read(consumer)
        if slot is None:
            break
        if slot_checksum(slot) != slot.checksum:
            checksum_failures += 1
        seen.append(slot.seq_no)
    t.join()
    assert seen == produced == list(range(total))
    assert checksum_failures == 0
