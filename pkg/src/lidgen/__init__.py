"""Web-catalog crawling and dataset assembly for industrial language-image data."""

__version__ = "0.1.0"
