"""
Inference from text to expression sequences.
"""
