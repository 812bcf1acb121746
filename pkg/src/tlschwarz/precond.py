"""Schwarz preconditioner setup and application.

One-level variants:

* ``asm`` — sum of subdomain solves scattered back as they are (symmetric
  when the matrix is).
* ``ras`` — the same solves weighted by the Boolean partition of unity
  before scattering (cheaper to apply well, but nonsymmetric).

Two-level combinations with the coarse solve Q r = basis A00^{-1} basis^T r:

* ``additive`` — one_level(r) + Q r (keeps symmetry with asm).
* ``deflated`` — Q r + (I - Q A) one_level(r - A Q r); the coarse residual
  of the output vanishes identically.

Each subdomain's build and solve touches only its own data, so the per-
subdomain work can run concurrently; the reduction always adds results in
subdomain order, which keeps sequential runs bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import coarse as coarse_mod
from . import spectral
from .partition import color_subdomains, extend_overlap, partition_graph, Partition
from .sparsemat import symmetrized_graph
from .subdomain import build_harmonic, extract_local_blocks, factor_dense

ONE_LEVEL_KINDS = ("asm", "ras")
COMBINE_KINDS = ("none", "additive", "deflated")
COARSE_KINDS = ("none", "full", "gevp", "svd", "auto")


@dataclass(frozen=True)
class SetupReport:
    """Sizes and accounting captured while building a preconditioner."""

    n: int
    n_subdomains: int
    overlap: int
    one_level: str
    combine: str
    coarse_kind: str
    symmetric: bool
    n_coarse: int
    k_c: int
    mode_counts: tuple
    nnz_matrix: int
    nnz_coarse: int

    @property
    def grid_complexity(self):
        """1 + (coarse size / fine size), exact."""
        return 1 + Fraction(self.n_coarse, self.n)

    @property
    def operator_complexity(self):
        """1 + (coarse nonzeros / fine nonzeros), exact."""
        return 1 + Fraction(self.nnz_coarse, self.nnz_matrix)

    def to_text(self):
        lines = [
            f"n = {self.n}",
            f"subdomains = {self.n_subdomains}",
            f"overlap = {self.overlap}",
            f"one_level = {self.one_level}",
            f"combine = {self.combine}",
            f"coarse_kind = {self.coarse_kind}",
            f"symmetric = {self.symmetric}",
            f"coarse_size = {self.n_coarse}",
            f"coloring_constant = {self.k_c}",
            f"mode_counts = {','.join(str(c) for c in self.mode_counts)}",
            f"nnz_matrix = {self.nnz_matrix}",
            f"nnz_coarse = {self.nnz_coarse}",
            f"grid_complexity = {float(self.grid_complexity):.6f}",
            f"operator_complexity = {float(self.operator_complexity):.6f}",
        ]
        return "\n".join(lines) + "\n"


class Preconditioner:
    """Built two-level Schwarz preconditioner; apply with ``.apply(r)``."""

    def __init__(self, matrix, maps, blocks, local_solves, harmonic, bases,
                 pou_bases, coarse, one_level, combine, k_c, colors, report):
        self.matrix = matrix
        self.maps = maps
        self.blocks = blocks
        self.local_solves = local_solves
        self.harmonic = harmonic
        self.bases = bases
        self.pou_bases = pou_bases
        self.coarse = coarse
        self.one_level = one_level
        self.combine = combine
        self.k_c = k_c
        self.colors = colors
        self.report = report

    @property
    def n(self):
        return self.matrix.nrows

    @property
    def is_symmetric(self):
        """Whether the preconditioner itself is a symmetric operator."""
        return self.matrix.symmetric and self.one_level == "asm" and self.combine != "deflated"

    def apply_one_level(self, r):
        r = np.asarray(r, dtype=np.float64)
        out = np.zeros(self.n)
        for smap, solve in zip(self.maps, self.local_solves):
            y = solve(r[smap.indices])
            if self.one_level == "ras":
                y = y * smap.pou_mask
            np.add.at(out, smap.indices, y)
        return out

    def coarse_apply(self, r):
        cs = self.coarse
        return cs.prolong(cs.solve_coarse(cs.restrict(r)))

    def apply(self, r):
        if self.coarse is None or self.combine == "none":
            return self.apply_one_level(r)
        if self.combine == "additive":
            return self.apply_one_level(r) + self.coarse_apply(r)
        # deflated
        qr_ = self.coarse_apply(r)
        w = self.apply_one_level(r - self.matrix.matvec(qr_))
        return qr_ + w - self.coarse_apply(self.matrix.matvec(w))

    def __call__(self, r):
        return self.apply(r)


def setup(matrix, n_subdomains, overlap=2, tau=0.1, nu=None, coarse="auto",
          one_level=None, combine=None, drop_tol=coarse_mod.DROP_TOL, owner=None):
    """Build a two-level Schwarz preconditioner, fully algebraically.

    Parameters
    ----------
    matrix : SparseMat
        System matrix; the symmetry flag decides the SPD vs. general paths.
    n_subdomains : int
        Number of subdomains; the partition is computed from the sparsity
        graph unless ``owner`` provides one (one id per row).
    overlap : int
        Number of BFS layers added around each interior set (>= 1).
    tau : float
        Threshold on harmonic-pencil singular values; smaller keeps more
        coarse vectors.
    nu : float or None
        Threshold for partition-of-unity modes.  Disabled by default: on the
        problems this package targets those modes have not been observed to
        help, but they are part of the theory and can be switched on.
    coarse : {"none", "full", "gevp", "svd", "auto"}
        Coarse-space recipe.  "auto" picks "gevp" for symmetric matrices and
        "svd" otherwise.
    one_level : {"asm", "ras"} or None
        None picks "asm" for symmetric matrices, "ras" otherwise.
    combine : {"none", "additive", "deflated"} or None
        None picks "additive" for symmetric matrices, "deflated" otherwise.
    """
    if coarse not in COARSE_KINDS:
        raise ValueError(f"unknown coarse kind {coarse!r}")
    symmetric = matrix.symmetric
    if coarse == "auto":
        coarse = "gevp" if symmetric else "svd"
    if not symmetric and coarse in ("gevp", "full"):
        raise ValueError(f"coarse kind {coarse!r} requires a symmetric matrix")
    if one_level is None:
        one_level = "asm" if symmetric else "ras"
    if one_level not in ONE_LEVEL_KINDS:
        raise ValueError(f"unknown one-level kind {one_level!r}")
    if combine is None:
        combine = "additive" if symmetric else "deflated"
    if coarse == "none":
        combine = "none"
    if combine not in COMBINE_KINDS:
        raise ValueError(f"unknown combination {combine!r}")
    if nu is not None and not symmetric:
        raise ValueError("partition-of-unity modes require a symmetric matrix")

    graph = symmetrized_graph(matrix)
    if owner is None:
        part = partition_graph(graph, n_subdomains)
    else:
        part = owner if isinstance(owner, Partition) else Partition(n_subdomains, owner)
    maps = extend_overlap(graph, part, overlap)
    k_c, colors = color_subdomains(maps)

    blocks = [extract_local_blocks(matrix, s) for s in maps]
    local_solves = [factor_dense(b.a, symmetric, b.subdomain) for b in blocks]

    harmonic = None
    bases = None
    pou_bases = None
    cs = None
    mode_counts = tuple(0 for _ in maps)

    if coarse != "none":
        harmonic = [build_harmonic(b) for b in blocks]
        if nu is not None:
            pou_bases = [
                spectral.select_pou_modes(b, s.pou_mask, nu)
                for b, s in zip(blocks, maps)
            ]
        if coarse == "gevp":
            bases = [
                spectral.select_harmonic_modes(b, s.pou_mask, h, tau)
                for b, s, h in zip(blocks, maps, harmonic)
            ]
        elif coarse == "svd":
            bases = [
                spectral.svd_harmonic_modes(b, s.pou_mask, h, tau)
                for b, s, h in zip(blocks, maps, harmonic)
            ]
        variant = {"full": "full", "gevp": "shrunk", "svd": "svd"}[coarse]
        column_blocks = [
            coarse_mod.subdomain_coarse_columns(
                s, b, h, variant,
                harmonic_basis=bases[i] if bases is not None else None,
                pou_basis=pou_bases[i] if pou_bases is not None else None,
            )
            for i, (s, b, h) in enumerate(zip(maps, blocks, harmonic))
        ]
        cs = coarse_mod.assemble_coarse_basis(maps, column_blocks, matrix.nrows)
        cs = coarse_mod.rank_filter(cs, maps, drop_tol=drop_tol)
        mode_counts = cs.column_counts()
        if cs.n_coarse == 0:
            cs = None
            combine = "none"
        else:
            cs = coarse_mod.galerkin_coarse(matrix, cs)

    report = SetupReport(
        n=matrix.nrows,
        n_subdomains=n_subdomains,
        overlap=overlap,
        one_level=one_level,
        combine=combine,
        coarse_kind=coarse,
        symmetric=symmetric,
        n_coarse=cs.n_coarse if cs is not None else 0,
        k_c=k_c,
        mode_counts=mode_counts,
        nnz_matrix=matrix.nnz,
        nnz_coarse=cs.nnz_a00 if cs is not None else 0,
    )
    return Preconditioner(matrix, maps, blocks, local_solves, harmonic, bases,
                          pou_bases, cs, one_level, combine, k_c, colors, report)
