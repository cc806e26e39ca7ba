"""Wireless interference identification on a 10 MHz sensing band."""

__version__ = "0.1.0"
