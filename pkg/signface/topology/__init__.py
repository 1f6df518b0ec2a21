"""
Face graph topology package.
"""
