"""qsl-lab: coherence-based quantum-speed-limit bounds for mixed states."""

__version__ = "0.1.0"
