# type: ignore
"""Installed version of planar-control-suite, CalVer (YY.MM.DD)."""

from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

DISTRIBUTION = "planar-control-suite"
FALLBACK_VERSION = "26.10.18-dev"


def _source_version() -> str:
    """Version of a source checkout from its git tags, or the fallback."""
    try:
        from setuptools_scm import get_version

        return get_version(root=str(Path(__file__).resolve().parents[2]))
    except (ImportError, OSError, LookupError):
        return FALLBACK_VERSION


try:
    __version__ = version(DISTRIBUTION)
except PackageNotFoundError:
    __version__ = _source_version()

__all__ = ["__version__"]
