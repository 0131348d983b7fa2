"""BOA and FBOA on NK-landscapes."""

__version__ = "0.1.0"
