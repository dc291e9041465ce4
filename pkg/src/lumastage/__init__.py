"""Desk-scale 3D portrait planning engine.

Joint search over subject staging, camera composition, controllable
lighting and exposure inside a simulated scene, with a photographic scene
graph, comparative-judgment planning loop, and an evaluation harness.
"""

__version__ = "0.1.0"
