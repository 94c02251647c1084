"""Positivity-preserving entropy-stable DGSEM for 2D Euler on adaptive meshes."""

from ._version import __version__, __version_info__

__all__ = ["__version__", "__version_info__"]
