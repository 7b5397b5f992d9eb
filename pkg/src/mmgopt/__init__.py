"""Sensor-driven maintenance and operations planning for multi-microgrid systems."""

__version__ = "0.1.0"
