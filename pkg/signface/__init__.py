"""
Sentiment-aware facial expression synthesis for sign language production.
"""
__version__ = "1.0.0"
