"""Coined quantum walks on networks: routing, distributed control, entanglement distribution."""
