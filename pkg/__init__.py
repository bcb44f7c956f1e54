"""
mpres - multi-particle eigenvalue concentration experiments
"""
__version__ = '1.0.0'
