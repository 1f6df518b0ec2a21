"""
Sentence feature backends, cache and extractor.
"""
