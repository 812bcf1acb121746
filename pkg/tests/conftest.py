"""Shared fixtures: small worked examples and random SPD generators."""

import numpy as np
import pytest
import scipy.sparse as sp

from tlschwarz import Partition, SparseMat

# Small banded nonsymmetric example used throughout: consecutive values
# 1..20 with 6 skipped, tridiagonal-ish pattern on 7 nodes (19 entries).
BANDED7_TEXT = """%%MatrixMarket matrix coordinate real general
% small worked example
7 7 19
1 1 1
1 2 2
2 1 3
2 2 4
2 3 5
3 2 7
3 3 8
3 4 9
4 3 10
4 4 11
4 5 12
5 4 13
5 5 14
5 6 15
6 5 16
6 6 17
6 7 18
7 6 19
7 7 20
"""


@pytest.fixture
def banded7():
    from tlschwarz import read_matrix_market

    return read_matrix_market(BANDED7_TEXT)


@pytest.fixture
def banded7_text():
    return BANDED7_TEXT


def laplace1d(n):
    """Tridiagonal (-1, 2, -1), symmetric positive definite."""
    main = 2.0 * np.ones(n)
    off = -1.0 * np.ones(n - 1)
    mat = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    return SparseMat(mat, symmetric=True)


def random_spd(n, seed, avg_degree=4):
    """Random sparse SPD matrix: symmetric pattern, diagonally dominant.

    Off-diagonal entries are -U(0.1, 1), the diagonal beats the absolute row
    sum by a positive margin, so the matrix is SPD and its sparsity graph is
    the generated pattern.
    """
    rng = np.random.default_rng(seed)
    rows, cols = [], []
    # a random spanning-ish backbone plus random extra edges
    perm = rng.permutation(n)
    for a, b in zip(perm[:-1], perm[1:]):
        rows.append(a), cols.append(b)
    n_extra = max(n * (avg_degree - 2) // 2, 0)
    ii = rng.integers(0, n, size=2 * n_extra)
    jj = rng.integers(0, n, size=2 * n_extra)
    for a, b in zip(ii, jj):
        if a != b:
            rows.append(a), cols.append(b)
    vals = -rng.uniform(0.1, 1.0, size=len(rows))
    upper = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    upper.sum_duplicates()
    symm = upper + upper.T
    symm = symm - sp.diags(symm.diagonal())
    dom = np.asarray(np.abs(symm).sum(axis=1)).ravel() + rng.uniform(0.1, 1.0, size=n)
    full = symm + sp.diags(dom)
    return SparseMat(full.tocsr(), symmetric=True)


def random_partition(n, n_subdomains, seed):
    """Random owner assignment with every subdomain nonempty."""
    rng = np.random.default_rng(seed)
    owner = rng.integers(0, n_subdomains, size=n)
    owner[rng.permutation(n)[:n_subdomains]] = np.arange(n_subdomains)
    return Partition(n_subdomains, owner)


def scatter_dense(smap, local, n):
    """Lift a dense local matrix to the global index set (test oracle)."""
    out = np.zeros((n, n))
    out[np.ix_(smap.indices, smap.indices)] = local
    return out
