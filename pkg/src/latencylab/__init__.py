"""Inter-market latency measurement, microwave route physics and a synthetic validation market."""

__version__ = "0.1.0"
