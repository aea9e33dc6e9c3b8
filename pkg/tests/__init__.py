"""
Test suite for the NNPhD force decomposition library.
"""
