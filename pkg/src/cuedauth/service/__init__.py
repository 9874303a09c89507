from .app import build_app, create_app
from .core import AuthServer

__all__ = ["AuthServer", "build_app", "create_app"]
