"""proxyaudit: audit engine for proxy capacity and proxy use in tabular models."""

__version__ = "0.1.0"
