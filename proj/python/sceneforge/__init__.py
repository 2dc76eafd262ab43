"""Deterministic synthesis of labeled object-in-scene images."""

try:
    from ._sceneforge import *  # noqa: F401,F403  packaged extension
except ImportError:  # plain CMake build: extension sits on sys.path
    from _sceneforge import *  # noqa: F401,F403
