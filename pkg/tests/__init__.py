"""
Test package for the fpi verifier
"""
