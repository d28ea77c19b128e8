"""SAXS shape classification: curve simulation, classifiers and evaluation."""

__version__ = "0.1.0"
