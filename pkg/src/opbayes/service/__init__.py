"""HTTP service wrapping the toolkit: request/response schemas and the
FastAPI application factory."""

from .app import app, create_app
from .schemas import RunConfig

__all__ = ["app", "create_app", "RunConfig"]
