"""
Landmark preprocessing package.
"""
