# gKdV collision lab applications
__version__ = "0.1.0"
