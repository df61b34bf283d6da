"""Seeded random projection matrices (Gaussian and very sparse).

Column j of Omega is drawn from its own Philox stream keyed by (seed, j), so
any column can be regenerated alone and the result does not depend on the
order or concurrency of generation. Gaussian entries come from numpy's
ziggurat sampler (``Generator.standard_normal``).
"""

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .matrix import SparseMatrix
from .mmio import read_matrix_market, write_array, write_matrix_market

KINDS = ("gaussian", "very_sparse")


@dataclass(frozen=True)
class ProjectionSpec:
    kind: str
    n: int
    l: int
    density: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.l < 2:
            raise ValueError(f"sketch size l must be at least 2, got {self.l}")
        if not 0.0 < self.density <= 1.0:
            raise ValueError(f"density must lie in (0, 1], got {self.density}")
        if self.l > self.n:
            warnings.warn(f"sketch size l={self.l} exceeds n={self.n}; only plain RP accepts this", stacklevel=3)


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    spec: ProjectionSpec
    matrix: Union[np.ndarray, SparseMatrix]
    scale_c: float

    def dense(self):
        if isinstance(self.matrix, SparseMatrix):
            return self.matrix.to_dense()
        return self.matrix


def _column_rng(seed, j):
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, j]))


def gen_gaussian(spec):
    if spec.kind != "gaussian":
        raise ValueError("gen_gaussian needs a gaussian spec")
    omega = np.empty((spec.n, spec.l))
    for j in range(spec.l):
        omega[:, j] = _column_rng(spec.seed, j).standard_normal(spec.n)
    omega.flags.writeable = False
    return ProjectionMatrix(spec, omega, math.sqrt(spec.l))


def gen_very_sparse(spec):
    """Entries -1, +1 with probability density/2 each, 0 otherwise."""
    if spec.kind != "very_sparse":
        raise ValueError("gen_very_sparse needs a very_sparse spec")
    d = spec.density
    rows, cols, vals = [], [], []
    for j in range(spec.l):
        u = _column_rng(spec.seed, j).random(spec.n)
        hit = np.flatnonzero(u < d)
        rows.append(hit)
        cols.append(np.full(len(hit), j))
        vals.append(np.where(u[hit] < d / 2, -1.0, 1.0))
    omega = SparseMatrix.from_coo(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (spec.n, spec.l))
    return ProjectionMatrix(spec, omega, math.sqrt(spec.l * d))


def generate(spec):
    return gen_gaussian(spec) if spec.kind == "gaussian" else gen_very_sparse(spec)


def density_policy(k, policy):
    """Very-sparse density for target dimension k, clamped to (0, 1].

    'aggressive' is ln(k)/k; 'conservative' is 1/sqrt(k).
    """
    if policy == "aggressive":
        if k < 2:
            # ln(1) = 0 would leave every column of the projection empty
            raise ValueError(f"aggressive density needs k >= 2, got {k}")
        d = math.log(k) / k
    elif policy == "conservative":
        if k < 1:
            raise ValueError(f"conservative density needs k >= 1, got {k}")
        d = 1.0 / math.sqrt(k)
    else:
        raise ValueError(f"unknown density policy {policy!r}")
    return min(1.0, d)


def export_omega(path, pm):
    if isinstance(pm.matrix, SparseMatrix):
        write_matrix_market(path, pm.matrix, comments=[f"kind={pm.spec.kind} seed={pm.spec.seed}"])
    else:
        write_array(path, pm.matrix, comments=[f"kind={pm.spec.kind} seed={pm.spec.seed}"])


def import_omega(path, spec):
    """Wrap an externally produced Omega under `spec` (shape is checked)."""
    M = read_matrix_market(path)
    shape = M.shape
    if shape != (spec.n, spec.l):
        raise ValueError(f"Omega file has shape {shape}, spec wants {(spec.n, spec.l)}")
    c = math.sqrt(spec.l) if spec.kind == "gaussian" else math.sqrt(spec.l * spec.density)
    return ProjectionMatrix(spec, M, c)
