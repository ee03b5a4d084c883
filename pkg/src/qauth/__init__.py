"""Entanglement-assisted CX/CZX authentication and authenticated BB84 simulator."""
