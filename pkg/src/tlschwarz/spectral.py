"""Spectral mode selection on subdomains.

Three selections feed the coarse space:

* ``select_pou_modes`` — eigenvectors of the pencil (D A D, A) with
  eigenvalue above a user threshold, D being the Boolean partition-of-unity
  mask.  Only meaningful for symmetric positive definite blocks.
* ``select_harmonic_modes`` — eigenvectors of the pencil ((DP)^T A (DP), A)
  with P the harmonic extension; eigenvalues are squares of the A-weighted
  singular values of DP, and vectors with singular value above the threshold
  are kept.
* ``svd_harmonic_modes`` — plain Euclidean left singular vectors of DP above
  the threshold; the fallback that needs no symmetry.

All selections use strict inequality with a small relative tie guard so a
value sitting exactly on the threshold is never admitted, regardless of
rounding noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

KIND_POU = "pou-gevp"
KIND_HARMONIC = "harmonic-gevp"
KIND_SVD = "harmonic-svd"

TIE_GUARD = 1e-12


@dataclass(frozen=True)
class SpectralBasis:
    """Selected vectors for one subdomain, values sorted descending.

    ``all_values`` keeps the complete spectrum (same scale as ``values``) so
    the sharpest admissible threshold — the largest value left out — stays
    available for bound checks.
    """

    kind: str
    threshold: float
    vectors: np.ndarray
    values: np.ndarray
    all_values: np.ndarray

    @property
    def n_selected(self):
        return self.vectors.shape[1]

    @property
    def largest_unselected(self):
        k = self.n_selected
        return float(self.all_values[k]) if k < self.all_values.size else 0.0


def _fix_signs(vecs):
    """Flip each column so its largest-magnitude component is positive."""
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k] < 0:
            vecs[:, j] = -col
    return vecs


def sym_gevp(lhs, rhs):
    """Dense symmetric-definite generalized eigenproblem lhs u = t rhs u.

    ``rhs`` must be symmetric positive definite.  Returns eigenvalues in
    descending order and eigenvectors orthonormal in the rhs inner product,
    with a deterministic sign convention.
    """
    lhs = np.asarray(lhs, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if lhs.shape != rhs.shape or lhs.shape[0] != lhs.shape[1]:
        raise ValueError("pencil blocks must be square and of equal shape")
    vals, vecs = eigh(lhs, rhs)
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    if not np.all(np.isfinite(vals)):
        raise ValueError("eigensolve produced non-finite values")
    return vals, _fix_signs(vecs)


def _select_above(vals, vecs, threshold):
    keep = vals > threshold * (1.0 + TIE_GUARD)
    return vecs[:, keep], vals[keep]


def select_pou_modes(blocks, pou_mask, threshold):
    """Modes of the partition-of-unity pencil with eigenvalue above threshold.

    The pencil's spectrum splits into an exact zero group (one per overlap
    node), an exact one group, and the rest above one; the selection only
    ever draws from the last group since the threshold must exceed one.
    """
    if not blocks.symmetric:
        raise ValueError("partition-of-unity modes require a symmetric block")
    if threshold <= 1.0:
        raise ValueError("threshold must exceed 1")
    d = pou_mask.astype(np.float64)
    lhs = blocks.a * np.outer(d, d)
    vals, vecs = sym_gevp(lhs, blocks.a)
    sel_vecs, sel_vals = _select_above(vals, vecs, threshold)
    return SpectralBasis(KIND_POU, float(threshold), sel_vecs, sel_vals, vals)


def select_harmonic_modes(blocks, pou_mask, factor, threshold):
    """Modes of the masked harmonic-extension pencil above threshold.

    The left side is nonzero only on the boundary-ring block, so at most
    n_boundary eigenvalues are nonzero and at most that many vectors are
    selectable.  Stored values are the A-weighted singular values (square
    roots of the pencil eigenvalues).
    """
    if not blocks.symmetric:
        raise ValueError("harmonic-pencil modes require a symmetric block")
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    m = blocks.n_local
    ni = blocks.n_inner
    masked = factor.extension * pou_mask[:, None].astype(np.float64)
    gram = masked.T @ blocks.a @ masked
    lhs = np.zeros((m, m))
    lhs[ni:, ni:] = 0.5 * (gram + gram.T)
    vals, vecs = sym_gevp(lhs, blocks.a)
    sigmas = np.sqrt(np.clip(vals, 0.0, None))
    sel_vecs, sel_vals = _select_above(sigmas, vecs, threshold)
    return SpectralBasis(KIND_HARMONIC, float(threshold), sel_vecs, sel_vals, sigmas)


def svd_harmonic_modes(blocks, pou_mask, factor, threshold):
    """Euclidean left singular vectors of the masked harmonic extension.

    Works for any nonsingular block.  The masked extension is supported on
    interior rows only, so the returned vectors are full local vectors that
    vanish off the interior and are Euclidean-orthonormal.
    """
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    m = blocks.n_local
    ni = blocks.n_interior
    block = factor.extension[:ni, :]
    if block.size == 0:
        empty = np.zeros((m, 0))
        return SpectralBasis(KIND_SVD, float(threshold), empty, np.zeros(0), np.zeros(0))
    u, s, _ = np.linalg.svd(block, full_matrices=False)
    keep = s > threshold * (1.0 + TIE_GUARD)
    vectors = np.zeros((m, int(keep.sum())))
    vectors[:ni, :] = u[:, keep]
    return SpectralBasis(KIND_SVD, float(threshold), _fix_signs(vectors), s[keep], s.copy())
