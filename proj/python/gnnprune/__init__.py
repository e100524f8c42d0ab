"""Python bindings for the GNN inference + channel-pruning engine."""

try:
    from ._gnnprune import *  # noqa: F401,F403  (installed layout)
    from ._gnnprune import __doc__ as _doc
except ImportError:  # in-tree layout: extension on PYTHONPATH next to the build dir
    from _gnnprune import *  # noqa: F401,F403
    from _gnnprune import __doc__ as _doc

__doc__ = _doc
