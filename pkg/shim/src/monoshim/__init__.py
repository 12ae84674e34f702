"""Reference stdio model server for the line protocol."""

from .server import ShimError, TreeFile, load_module, load_tree_file, serve

__all__ = ["ShimError", "TreeFile", "load_module", "load_tree_file", "serve"]
__version__ = "0.1.0"
