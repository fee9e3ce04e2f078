"""Multi-antenna OFDM uplink receiver: PN packet detection, block LS channel
estimation, maximal-ratio combining, and a benchmark harness comparing a
sequential engine against a data-parallel worker-pool engine."""

__version__ = "0.1.0"
