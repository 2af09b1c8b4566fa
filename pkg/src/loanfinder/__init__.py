"""Detection of lexical borrowings from a dominant donor language."""

__version__ = "0.1.0"
