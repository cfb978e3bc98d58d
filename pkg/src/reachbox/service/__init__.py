"""HTTP service exposing the reachability solver."""

from .app import create_app

__all__ = ["create_app"]
