"""Co-word mapping of patent titles and their cited literature."""

__version__ = "0.1.0"
