"""Sparse test matrices with a controlled approximate spectrum.

X = A diag(s) B^T where A (m x r) and B (n x r) have i.i.d. Gaussian entries
kept with probability q, and unit-norm columns. Sparse random columns are
nearly orthogonal, so the singular values of X sit close to s. q is chosen so
that an entry of X is nonzero with probability `density`:
1 - (1 - q^2)^r = density.
"""

import math

import numpy as np
import scipy.sparse as sp

from .matrix import SparseMatrix


def parse_spectrum(text):
    """'flat' -> ('flat', None); 'decay(0.5)' or 'decay:0.5' -> ('decay', 0.5)."""
    text = text.strip()
    if text == "flat":
        return ("flat", None)
    for prefix, suffix in (("decay(", ")"), ("decay:", "")):
        if text.startswith(prefix) and text.endswith(suffix):
            body = text[len(prefix):len(text) - len(suffix)]
            rate = float(body)
            if not 0.0 < rate <= 1.0:
                raise ValueError(f"decay rate must lie in (0, 1], got {rate}")
            return ("decay", rate)
    raise ValueError(f"unknown spectrum {text!r}; use 'flat' or 'decay(rate)'")


def spectrum_values(kind, rate, r):
    if kind == "flat":
        return np.ones(r)
    return rate ** np.arange(r, dtype=np.float64)


def _sparse_factor(rng, rows, r, q):
    counts = rng.binomial(rows, q, size=r)
    idx = [rng.choice(rows, size=c, replace=False) for c in counts]
    vals = rng.standard_normal(int(counts.sum()))
    col = np.repeat(np.arange(r), counts)
    row = np.concatenate(idx) if idx else np.zeros(0, dtype=np.int64)
    norms = np.sqrt(np.bincount(col, weights=vals * vals, minlength=r))
    vals = vals / np.where(norms > 0, norms, 1.0)[col]
    return sp.csc_array((vals, (row, col)), shape=(rows, r))


def gen_synthetic(m, n, density, spectrum="flat", seed=0, rank=None):
    if m < 1 or n < 1:
        raise ValueError(f"sizes must be positive, got {m}x{n}")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    kind, rate = parse_spectrum(spectrum) if isinstance(spectrum, str) else spectrum
    r = min(m, n) if rank is None else rank
    if not 1 <= r <= min(m, n):
        raise ValueError(f"rank must lie in [1, {min(m, n)}], got {r}")
    q = 1.0 if density == 1.0 else math.sqrt(-math.expm1(math.log1p(-density) / r))
    rng = np.random.default_rng(seed)
    A = _sparse_factor(rng, m, r, q)
    B = _sparse_factor(rng, n, r, q)
    s = spectrum_values(kind, rate, r)
    X = (A @ sp.diags_array(s) @ B.T).tocsc()
    return SparseMatrix.from_scipy(X)
