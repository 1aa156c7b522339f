"""deskdrive: a deterministic closed-loop driving-scenario benchmark engine."""

__version__ = "0.1.0"

PROTOCOL_VERSION = 1
SCHEMA_VERSION = 1
