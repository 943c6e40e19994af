"""Small-N laboratory for mean-field limits of bosons."""

__version__ = "0.1.0"
