"""Reference victim server for the line-JSON / HTTP classifier protocol."""

from .models import BagOfWordsModel, CallableModel, ModelError, load_model
from .server import ServerConfig, handle_request, make_http_server, serve, serve_stdio

__all__ = [
    "BagOfWordsModel",
    "CallableModel",
    "ModelError",
    "ServerConfig",
    "handle_request",
    "load_model",
    "make_http_server",
    "serve",
    "serve_stdio",
]
