"""Per-subdomain dense blocks and the harmonic boundary extension.

For a subdomain with local ordering (interior, layer 1, ..., layer d) the
"inner" part is everything except the outermost layer, and the "boundary
ring" is that outermost layer.  The harmonic extension maps boundary-ring
values to the full subdomain by solving the inner block against the
inner-to-ring coupling; it is the projection used both to split the local
matrix into a positive-semidefinite piece and to build coarse basis vectors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, cho_factor, cho_solve, lu_factor, lu_solve

from .sparsemat import DENSE_GUARD


class SubdomainSetupError(RuntimeError):
    """A subdomain block could not be factored; carries the subdomain index."""

    def __init__(self, subdomain, message):
        super().__init__(f"subdomain {subdomain}: {message}")
        self.subdomain = subdomain


@dataclass(frozen=True)
class LocalBlocks:
    """Dense local matrix of one subdomain plus its index bookkeeping."""

    subdomain: int
    a: np.ndarray
    n_interior: int
    layer_sizes: tuple
    symmetric: bool

    @property
    def n_local(self):
        return self.a.shape[0]

    @property
    def n_boundary(self):
        return self.layer_sizes[-1] if self.layer_sizes else 0

    @property
    def n_inner(self):
        return self.n_local - self.n_boundary


def extract_local_blocks(matrix, smap):
    """Dense principal submatrix of the subdomain in its local ordering."""
    if smap.n_local > DENSE_GUARD:
        raise ValueError(
            f"subdomain {smap.index} has {smap.n_local} nodes; dense guard is {DENSE_GUARD}"
        )
    idx = smap.indices
    local = matrix.scipy()[idx][:, idx].toarray()
    if not np.all(np.isfinite(local)):
        raise ValueError(f"subdomain {smap.index}: non-finite entries in local block")
    return LocalBlocks(
        subdomain=smap.index,
        a=local,
        n_interior=smap.interior.size,
        layer_sizes=tuple(l.size for l in smap.layers),
        symmetric=matrix.symmetric,
    )


def factor_dense(a, symmetric, subdomain):
    """Factor a dense block; Cholesky when symmetric, pivoted LU otherwise.

    Returns a solve callable accepting a vector or a matrix of columns.
    """
    if a.shape[0] == 0:
        return lambda rhs: np.zeros_like(rhs, dtype=np.float64)
    try:
        if symmetric:
            fac = cho_factor(a)
            return lambda rhs: cho_solve(fac, rhs)
        with warnings.catch_warnings():
            # scipy warns on exactly-singular pivots; we raise our own error below
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(a)
        if np.abs(np.diag(lu)).min() <= a.shape[0] * np.finfo(float).eps * np.abs(lu).max():
            raise SubdomainSetupError(subdomain, "local block is numerically singular")
        return lambda rhs: lu_solve((lu, piv), rhs)
    except SubdomainSetupError:
        raise
    except np.linalg.LinAlgError as exc:
        raise SubdomainSetupError(subdomain, f"factorization failed: {exc}") from exc
    except ValueError as exc:
        raise SubdomainSetupError(subdomain, f"factorization failed: {exc}") from exc


class HarmonicFactor:
    """Extension of boundary-ring values into the subdomain interior.

    Applying the factor to a local vector keeps its boundary-ring values and
    replaces everything else by minus the inner-block solve of the coupling
    times those values.  The operator is a projection: applying it twice
    gives the same result, and its complement is orthogonal to its range in
    the local-matrix inner product when the block is symmetric.
    """

    def __init__(self, blocks):
        ni, nb = blocks.n_inner, blocks.n_boundary
        self.subdomain = blocks.subdomain
        self.n_inner = ni
        self.n_boundary = nb
        self.n_local = blocks.n_local
        coupling = blocks.a[:ni, ni:]
        self._ext = np.zeros((blocks.n_local, nb))
        if nb:
            inner_solve = factor_dense(blocks.a[:ni, :ni], blocks.symmetric, blocks.subdomain)
            if ni:
                self._ext[:ni] = -inner_solve(coupling)
            self._ext[ni:] = np.eye(nb)

    @property
    def extension(self):
        """Dense (n_local, n_boundary) block of extension columns."""
        return self._ext

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_local,):
            raise ValueError("dimension mismatch in harmonic extension")
        return self._ext @ v[self.n_inner:]


def build_harmonic(blocks):
    """Build the harmonic extension factor; fails on singular inner blocks."""
    return HarmonicFactor(blocks)


def spsd_splitting(blocks, factor):
    """Positive-semidefinite local splitting of a symmetric block.

    Computed as (I - P)^T A (I - P) with P the harmonic extension, which
    stays well defined even with a single overlap layer.  The result agrees
    with the explicit Schur-complement construction whenever there are at
    least two layers, and reduces to the block itself when the boundary ring
    is empty.
    """
    if not blocks.symmetric:
        raise ValueError("positive-semidefinite splitting requires a symmetric block")
    m = blocks.n_local
    if blocks.n_boundary == 0:
        return blocks.a.copy()
    e = np.eye(m)
    e[:, blocks.n_inner:] -= factor.extension
    tilde = e.T @ blocks.a @ e
    tilde = 0.5 * (tilde + tilde.T)
    if not np.all(np.isfinite(tilde)):
        raise ValueError(f"subdomain {blocks.subdomain}: splitting produced non-finite values")
    return tilde
