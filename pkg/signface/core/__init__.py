"""
Core package.
"""
