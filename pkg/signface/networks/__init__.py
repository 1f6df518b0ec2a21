"""
Torch modules: decoder layers, decoders, sampling network and FED autoencoder.
"""
