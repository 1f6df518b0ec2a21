"""
Training loops and checkpoint containers.
"""
