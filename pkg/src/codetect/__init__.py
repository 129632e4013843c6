"""codetect: stylometric detection and attribution of machine-generated code."""

__version__ = "0.1.0"
