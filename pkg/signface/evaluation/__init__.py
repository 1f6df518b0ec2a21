"""
FED and landmark-distance metrics.
"""
