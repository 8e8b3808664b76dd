"""Online cognitive-load assessment engine for assembly workstations."""

__version__ = "0.1.0"
