"""Log-concave density estimation and minimax lower-bound constructions."""

__version__ = "0.1.0"
