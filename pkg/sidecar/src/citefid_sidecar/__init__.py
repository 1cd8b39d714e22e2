"""Model-serving sidecar: three learned heads behind one fixed wire protocol."""

__version__ = "0.1.0"
