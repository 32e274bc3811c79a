"""
Phase-space classical-simulation witnesses for quantum-optical measurements.
"""
