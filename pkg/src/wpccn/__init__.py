"""Throughput and outage analysis for wireless-powered cooperative networks."""

__version__ = "0.1.0"
