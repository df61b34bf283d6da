"""Random projection, SPCA and Lazy SPCA for large sparse matrices.

Submodules are imported explicitly (``from lazyspca.reducers import ...``) so
that the CLI can configure the numba thread pool before any kernel loads.
"""

__version__ = "0.1.0"
