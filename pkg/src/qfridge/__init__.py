"""Two-qubit quantum Otto refrigerator driven by correlated thermal noise."""

__version__ = "0.1.0"
