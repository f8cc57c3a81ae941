"""Smart-house wireless sensor mesh monitoring pipeline."""

__version__ = "0.1.0"
