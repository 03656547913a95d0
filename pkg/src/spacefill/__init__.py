"""Simulator and exact analytics for the dynamic space-filling process.

N random walkers pile up on an N-vertex regular graph; every walker
above the bottom of its pile keeps hopping, and the dynamics halts when
each vertex holds exactly one walker. Equivalently, mobile A particles
and immobile B tokens (one per empty vertex) annihilate pairwise until
none remain. This package simulates the process exactly on rings, tori,
complete, and random regular graphs, and evaluates the complete-graph
closed forms for the halting-time statistics.
"""

from .experiments import TOOL_VERSION as __version__  # noqa: F401
