"""FastAPI service layer: request/response schemas and the app factory."""

from .app import app, create_app

__all__ = ["app", "create_app"]
