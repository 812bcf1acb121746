"""Test problems, theoretical condition bounds, and the experiment driver.

The generators build the usual finite-difference model problems on the unit
square/cube with homogeneous Dirichlet boundaries eliminated, scaled by
1/h^2, and a manufactured right-hand side b = A * ones so every solve has
the all-ones exact solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import splu

from . import krylov
from .precond import setup, Preconditioner
from .sparsemat import SparseMat, load_matrix_market, load_vector
from .spectral import select_pou_modes, select_harmonic_modes

PROBLEM_KINDS = ("poisson2d", "poisson3d", "hetero-diffusion2d", "advection2d")


@dataclass(frozen=True)
class ProblemSpec:
    """Parameters of a generated test problem."""

    kind: str
    m: int
    contrast: float = 1.0e4
    channel_seed: int = 0
    velocity: tuple = (1.0, 0.0)
    eps: float = 1.0e-2

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.m < 3:
            raise ValueError("grid size m must be at least 3")


def generate(spec):
    """Build (matrix, rhs) for a problem spec; rhs is always A * ones."""
    builders = {
        "poisson2d": _poisson2d,
        "poisson3d": _poisson3d,
        "hetero-diffusion2d": _hetero2d,
        "advection2d": _advection2d,
    }
    matrix = builders[spec.kind](spec)
    return matrix, matrix.matvec(np.ones(matrix.nrows))


def _poisson2d(spec):
    m = spec.m
    h2 = (m + 1) ** 2
    rows, cols, vals = [], [], []
    idx = lambda i, j: i + j * m
    for j in range(m):
        for i in range(m):
            k = idx(i, j)
            rows.append(k); cols.append(k); vals.append(4.0 * h2)
            for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < m and 0 <= jj < m:
                    rows.append(k); cols.append(idx(ii, jj)); vals.append(-1.0 * h2)
    return SparseMat.from_coo(m * m, m * m, rows, cols, vals, symmetric=True)


def _poisson3d(spec):
    m = spec.m
    h2 = (m + 1) ** 2
    rows, cols, vals = [], [], []
    idx = lambda i, j, k: i + m * (j + m * k)
    for k in range(m):
        for j in range(m):
            for i in range(m):
                p = idx(i, j, k)
                rows.append(p); cols.append(p); vals.append(6.0 * h2)
                for d in ((-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)):
                    ii, jj, kk = i + d[0], j + d[1], k + d[2]
                    if 0 <= ii < m and 0 <= jj < m and 0 <= kk < m:
                        rows.append(p); cols.append(idx(ii, jj, kk)); vals.append(-1.0 * h2)
    n = m ** 3
    return SparseMat.from_coo(n, n, rows, cols, vals, symmetric=True)


def _hetero2d(spec):
    """Diffusion with channelized coefficient jumps, harmonic-mean edges.

    A few grid rows (seeded choice) carry coefficient ``contrast`` while the
    background is one; edge coefficients are the harmonic mean of the two
    endpoint coefficients, giving the standard five-point flux stencil.
    """
    m = spec.m
    h2 = (m + 1) ** 2
    rng = np.random.default_rng(spec.channel_seed)
    n_channels = max(1, m // 5)
    channels = rng.choice(m, size=n_channels, replace=False)
    kappa = np.ones((m, m))
    kappa[:, channels] = spec.contrast  # horizontal channels: constant along i

    def harm(a, b):
        return 2.0 * a * b / (a + b)

    rows, cols, vals = [], [], []
    idx = lambda i, j: i + j * m
    for j in range(m):
        for i in range(m):
            k = idx(i, j)
            diag = 0.0
            for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < m and 0 <= jj < m:
                    c = harm(kappa[i, j], kappa[ii, jj])
                    diag += c
                    rows.append(k); cols.append(idx(ii, jj)); vals.append(-c * h2)
                else:
                    diag += kappa[i, j]  # edge to the Dirichlet boundary
            rows.append(k); cols.append(k); vals.append(diag * h2)
    return SparseMat.from_coo(m * m, m * m, rows, cols, vals, symmetric=True)


def _advection2d(spec):
    """First-order upwind advection plus eps-scaled diffusion (nonsymmetric)."""
    m = spec.m
    h = 1.0 / (m + 1)
    h2 = (m + 1) ** 2
    vx, vy = spec.velocity
    eps = spec.eps
    rows, cols, vals = [], [], []
    idx = lambda i, j: i + j * m

    def add(k, kk, v):
        rows.append(k); cols.append(kk); vals.append(v)

    for j in range(m):
        for i in range(m):
            k = idx(i, j)
            diag = 4.0 * eps * h2 + (abs(vx) + abs(vy)) / h
            for di, dj, coeff in (
                (-1, 0, -eps * h2 - (vx / h if vx > 0 else 0.0)),
                (1, 0, -eps * h2 + (vx / h if vx < 0 else 0.0)),
                (0, -1, -eps * h2 - (vy / h if vy > 0 else 0.0)),
                (0, 1, -eps * h2 + (vy / h if vy < 0 else 0.0)),
            ):
                ii, jj = i + di, j + dj
                if 0 <= ii < m and 0 <= jj < m:
                    add(k, idx(ii, jj), coeff)
            add(k, k, diag)
    return SparseMat.from_coo(m * m, m * m, rows, cols, vals, symmetric=False)


# -- theory-side quantities --------------------------------------------------


def lambda_star(matrix, maps, dense_cutoff=400, tol=1e-6, maxit=2000):
    """Largest eigenvalue of sum_i R_i^T A_ii R_i u = lambda A u.

    Dense generalized eigensolve below the cutoff; inverse-weighted power
    iteration above it.  Always at least one (up to round-off) because the
    subdomains cover every unknown.
    """
    n = matrix.nrows
    if not matrix.symmetric:
        raise ValueError("lambda_star is defined for symmetric matrices")
    if n <= dense_cutoff:
        dense = matrix.to_dense()
        total = np.zeros((n, n))
        for smap in maps:
            ix = np.ix_(smap.indices, smap.indices)
            total[ix] += dense[ix]
        vals = eigh(total, dense, eigvals_only=True)
        return max(float(vals[-1]), 1.0)
    lu = splu(matrix.scipy().tocsc())
    a = matrix.scipy()
    local = [a[s.indices][:, s.indices].tocsr() for s in maps]

    def stacked(v):
        out = np.zeros(n)
        for smap, block in zip(maps, local):
            out[smap.indices] += block @ v[smap.indices]
        return out

    rng = np.random.default_rng(12345)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(maxit):
        sv = stacked(v)
        lam_next = float(v @ sv) / float(v @ (a @ v))
        w = lu.solve(sv)
        w /= np.linalg.norm(w)
        if abs(lam_next - lam) <= tol * max(abs(lam_next), 1.0):
            lam = lam_next
            break
        lam, v = lam_next, w
    return max(lam, 1.0)


@dataclass(frozen=True)
class BoundInputs:
    """Constants entering the two-level condition bounds.

    ``nu`` and ``tau`` are the sharp data-derived thresholds (largest value
    left out of the coarse space in each pencil), not the user's knobs, so a
    bound check certifies exactly what was built.
    """

    k_c: int
    nu: float
    tau: float = 0.0
    lam_star: float = 1.0

    def __post_init__(self):
        if self.k_c < 1:
            raise ValueError("coloring constant must be at least 1")
        if self.nu < 1.0:
            raise ValueError("nu must be at least 1")
        if self.tau < 0.0:
            raise ValueError("tau must be nonnegative")
        if self.lam_star < 1.0 - 1e-12:
            raise ValueError("lambda_star must be at least 1")


def theoretical_bound(inputs, variant):
    """Certified condition bound for the symmetric additive two-level method.

    variant "full"   — (k_c + 1) * (2 + (2 k_c + 1) * k_c * nu)
    variant "shrunk" — (k_c + 1) * (2 + (2 k_c + 1) * nu *
                       (k_c + lam_star * (2 tau + tau^2)))
    """
    kc, nu = inputs.k_c, inputs.nu
    if variant == "full":
        return (kc + 1) * (2.0 + (2 * kc + 1) * kc * nu)
    if variant == "shrunk":
        tau, lam = inputs.tau, inputs.lam_star
        return (kc + 1) * (2.0 + (2 * kc + 1) * nu * (kc + lam * (2 * tau + tau * tau)))
    raise ValueError(f"unknown bound variant {variant!r}")


def derive_bound_inputs(precond, variant, dense_cutoff=400):
    """Sharp bound constants from a built (symmetric) preconditioner.

    ``nu`` is the largest partition-of-unity eigenvalue not represented in
    the coarse space (all of them when those modes are disabled), clamped to
    one; ``tau`` is the largest harmonic singular value left unselected.
    """
    if not precond.matrix.symmetric:
        raise ValueError("bound constants are defined for the symmetric theory")
    nu = 1.0
    for blocks, smap, basis in zip(
        precond.blocks, precond.maps,
        precond.pou_bases or [None] * len(precond.blocks),
    ):
        if basis is None:
            spectrum = select_pou_modes(blocks, smap.pou_mask, np.inf).all_values
            largest_out = float(spectrum[0]) if spectrum.size else 0.0
        else:
            largest_out = basis.largest_unselected
        nu = max(nu, largest_out)
    tau = 0.0
    if variant == "shrunk":
        if precond.bases is None:
            raise ValueError("shrunk bound needs the harmonic-pencil selection")
        tau = max(b.largest_unselected for b in precond.bases)
    lam = lambda_star(precond.matrix, precond.maps, dense_cutoff=dense_cutoff)
    return BoundInputs(k_c=precond.k_c, nu=nu, tau=tau, lam_star=lam)


# -- experiment driver -------------------------------------------------------


@dataclass
class ExperimentConfig:
    matrix_path: str | None = None
    rhs_path: str | None = None
    kind: str | None = None
    m: int = 20
    n_subdomains: int = 4
    overlap: int = 2
    tau: float = 0.1
    nu: float | None = None
    coarse: str = "auto"
    one_level: str | None = None
    combine: str | None = None
    solver: str = "cg"
    tol: float = 1e-8
    maxit: int = 500
    report_path: str | None = None
    seed: int = 0


@dataclass
class ExperimentResult:
    matrix: SparseMat
    rhs: np.ndarray
    x: np.ndarray
    precond: Preconditioner
    solve_report: krylov.SolveReport
    bound_check: dict | None
    report_text: str


def _load_problem(config):
    if config.matrix_path:
        matrix = load_matrix_market(config.matrix_path)
        if matrix.is_numerically_symmetric():
            matrix = matrix.as_symmetric()
        if config.rhs_path:
            rhs = load_vector(config.rhs_path)
            if rhs.size != matrix.nrows:
                raise ValueError("right-hand side length does not match the matrix")
        else:
            rhs = matrix.matvec(np.ones(matrix.nrows))
        return matrix, rhs
    if not config.kind:
        raise ValueError("either a matrix file or a problem kind is required")
    kind = {"hetero2d": "hetero-diffusion2d"}.get(config.kind, config.kind)
    spec = ProblemSpec(kind=kind, m=config.m, channel_seed=config.seed)
    return generate(spec)


def run_experiment(config):
    """Set up, solve, optionally check the condition bound, write reports."""
    matrix, rhs = _load_problem(config)
    precond = setup(
        matrix,
        config.n_subdomains,
        overlap=config.overlap,
        tau=config.tau,
        nu=config.nu,
        coarse=config.coarse,
        one_level=config.one_level,
        combine=config.combine,
    )
    if config.solver == "cg":
        x, solve_report = krylov.pcg(matrix, precond, rhs, tol=config.tol,
                                     maxit=config.maxit, track_tridiagonal=True)
    elif config.solver == "gmres":
        x, solve_report = krylov.gmres(matrix, precond, rhs, tol=config.tol,
                                       maxit=config.maxit)
    else:
        raise ValueError(f"unknown solver {config.solver!r}")

    bound_check = None
    if (matrix.symmetric and matrix.nrows <= 400
            and precond.coarse is not None
            and precond.report.coarse_kind in ("full", "gevp")):
        variant = "full" if precond.report.coarse_kind == "full" else "shrunk"
        theory = _bound_verdict(matrix, precond, variant)
        bound_check = theory

    lines = [precond.report.to_text(), solve_report.to_text()]
    if bound_check is not None:
        lines.append(
            f"measured_condition = {bound_check['measured']:.6e}\n"
            f"theoretical_bound = {bound_check['bound']:.6e}\n"
            f"bound_holds = {bound_check['holds']}\n"
        )
    report_text = "".join(lines)
    if config.report_path:
        with open(config.report_path, "w") as fh:
            fh.write(report_text)
        hist_path = config.report_path + ".history"
        with open(hist_path, "w") as fh:
            for k, res in enumerate(solve_report.residuals):
                fh.write(f"{k} {res:.17g}\n")
    return ExperimentResult(matrix, rhs, x, precond, solve_report, bound_check, report_text)


def _bound_verdict(matrix, precond, variant):
    if precond.is_symmetric:
        theory_pc = precond
    else:
        theory_pc = setup(
            matrix, precond.report.n_subdomains, overlap=precond.report.overlap,
            tau=precond.bases[0].threshold if precond.bases else 0.1,
            nu=None, coarse=precond.report.coarse_kind,
            one_level="asm", combine="additive",
        )
    measured = krylov.estimate_condition(matrix, theory_pc)
    inputs = derive_bound_inputs(theory_pc, variant)
    bound = theoretical_bound(inputs, variant)
    return {
        "measured": measured,
        "bound": bound,
        "holds": bool(measured <= bound),
        "inputs": inputs,
    }
