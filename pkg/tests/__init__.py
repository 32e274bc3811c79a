"""
Test package for qps-witness.
"""
