"""Top-level package for the Planar Control Suite."""

from ._version import __version__ as __version__  # type: ignore
