"""
Reports, plots and animations.
"""
