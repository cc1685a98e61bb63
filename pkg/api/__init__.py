"""
Command implementations.
"""
