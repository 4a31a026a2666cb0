"""Synthetic ground-truth models for Gaussian graphical experiments.

Provides three generators for (covariance, precision, edge set) triples --
a first-order autoregressive band, a random geometric nearest-neighbor
graph, and a block-diagonal design -- plus seeded multivariate-normal
sampling from any of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .linalg import _as_square_symmetric, cholesky, invert_pd


@dataclass(frozen=True)
class EdgeSet:
    """Unordered node pairs over ``p`` nodes, stored as (i, l) with i < l."""

    p: int
    pairs: frozenset[tuple[int, int]]

    def __post_init__(self):
        for i, l in self.pairs:
            if i == l:
                raise ContractViolation(f"self-loop ({i}, {l})")
            if not (0 <= i < l < self.p):
                raise ContractViolation(f"pair ({i}, {l}) out of range for p={self.p}")

    @classmethod
    def from_pairs(cls, p: int, pairs) -> "EdgeSet":
        canon = frozenset((min(i, l), max(i, l)) for i, l in pairs)
        return cls(p=p, pairs=canon)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        i, l = pair
        return (min(i, l), max(i, l)) in self.pairs

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)

    def degree(self, node: int) -> int:
        return sum(1 for i, l in self.pairs if i == node or l == node)


@dataclass(frozen=True)
class PrecisionModel:
    """Ground truth for one synthetic model: covariance, precision, edges."""

    p: int
    sigma: np.ndarray
    omega: np.ndarray
    edges: EdgeSet
    label: str
    seed: int | None = None

    def validate(self, tol_identity: float = 1e-6) -> None:
        """Check symmetry, positive-definiteness and the support/edge match."""
        _as_square_symmetric(self.sigma, "sigma")
        _as_square_symmetric(self.omega, "omega")
        cholesky(self.sigma)
        cholesky(self.omega)
        resid = float(np.abs(self.sigma @ self.omega - np.eye(self.p)).max())
        if resid > tol_identity * self.p:
            raise ContractViolation(
                f"sigma @ omega deviates from identity by {resid:.3g}")
        if support_of(self.omega).pairs != self.edges.pairs:
            raise ContractViolation("edge set does not match support of omega")


@dataclass(frozen=True)
class SampleSet:
    """An n-by-p data matrix drawn from (or supplied for) one model."""

    n: int
    p: int
    data: np.ndarray
    seed: int | None = None
    model_label: str = ""

    def __post_init__(self):
        if self.data.shape != (self.n, self.p):
            raise ContractViolation(
                f"data shape {self.data.shape} does not match (n, p)=({self.n}, {self.p})")
        if not np.all(np.isfinite(self.data)):
            raise ContractViolation("data contains non-finite entries")

    @classmethod
    def from_matrix(cls, data, seed=None, model_label="") -> "SampleSet":
        m = np.asarray(data, dtype=float)
        if m.ndim != 2:
            raise ContractViolation(f"data must be 2-dimensional, got {m.shape}")
        return cls(n=m.shape[0], p=m.shape[1], data=m, seed=seed,
                   model_label=model_label)


def support_of(omega, tol: float = 1e-10) -> EdgeSet:
    """Off-diagonal support of a symmetric matrix as an edge set."""
    m = _as_square_symmetric(omega, "omega")
    p = m.shape[0]
    iu, ju = np.triu_indices(p, k=1)
    hit = np.abs(m[iu, ju]) > tol
    pairs = frozenset(zip(iu[hit].tolist(), ju[hit].tolist()))
    return EdgeSet(p=p, pairs=pairs)


def gen_ar1(p: int, rho: float = 0.4) -> PrecisionModel:
    """First-order autoregressive covariance: sigma_ij = rho^|i-j|.

    The precision matrix is tridiagonal, so the true graph is the chain
    0-1-2-...-(p-1).
    """
    if p < 2:
        raise ContractViolation(f"p must be >= 2, got {p}")
    if not (-1.0 < rho < 1.0):
        raise ContractViolation(f"rho must lie in (-1, 1), got {rho}")
    idx = np.arange(p)
    sigma = rho ** np.abs(np.subtract.outer(idx, idx))
    omega = invert_pd(sigma)
    edges = EdgeSet.from_pairs(p, ((i, i + 1) for i in range(p - 1)))
    return PrecisionModel(p=p, sigma=sigma, omega=omega, edges=edges,
                          label="ar1", seed=None)


def gen_nn2(p: int, seed: int) -> PrecisionModel:
    """Random geometric graph: each node links to its 2 nearest neighbors.

    Construction: draw p points uniformly in the unit square, connect each
    point to its two nearest neighbors (Euclidean), symmetrize.  Edge
    weights in the precision matrix are drawn uniformly from
    [-1, -0.5] U [0.5, 1], the diagonal starts at 1, the matrix is inflated
    along the diagonal until its smallest eigenvalue reaches 0.1, and
    finally rescaled to unit diagonal.
    """
    if p < 4:
        raise ContractViolation(f"p must be >= 4, got {p}")
    rng = np.random.default_rng(seed)
    points = rng.uniform(size=(p, 2))
    diff = points[:, None, :] - points[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(dist2, np.inf)

    pairs = set()
    for i in range(p):
        order = np.argsort(dist2[i], kind="stable")
        for nbr in order[:2]:
            pairs.add((min(i, int(nbr)), max(i, int(nbr))))
    edge_list = sorted(pairs)

    omega = np.zeros((p, p))
    magnitudes = rng.uniform(0.5, 1.0, size=len(edge_list))
    signs = rng.integers(0, 2, size=len(edge_list)) * 2 - 1
    for (i, l), mag, sign in zip(edge_list, magnitudes, signs):
        omega[i, l] = omega[l, i] = sign * mag
    np.fill_diagonal(omega, 1.0)

    lam_min = float(np.linalg.eigvalsh(omega)[0])
    if lam_min < 0.1:
        omega += (0.1 - lam_min) * np.eye(p)
    d = np.sqrt(np.diag(omega))
    omega = omega / np.outer(d, d)
    omega = (omega + omega.T) / 2.0

    sigma = invert_pd(omega)
    return PrecisionModel(p=p, sigma=sigma, omega=omega,
                          edges=support_of(omega), label="nn2", seed=seed)


def gen_bg(p: int, block_size: int = 5) -> PrecisionModel:
    """Block-diagonal precision: blocks with unit diagonal and 0.5 off it."""
    if block_size < 2:
        raise ContractViolation(f"block_size must be >= 2, got {block_size}")
    if p % block_size != 0:
        raise ContractViolation(
            f"p={p} is not divisible by block_size={block_size}")
    block = np.full((block_size, block_size), 0.5)
    np.fill_diagonal(block, 1.0)
    q = p // block_size
    omega = np.zeros((p, p))
    pairs = []
    for b in range(q):
        lo = b * block_size
        omega[lo:lo + block_size, lo:lo + block_size] = block
        for i in range(lo, lo + block_size):
            for l in range(i + 1, lo + block_size):
                pairs.append((i, l))
    sigma = invert_pd(omega)
    return PrecisionModel(p=p, sigma=sigma, omega=omega,
                          edges=EdgeSet.from_pairs(p, pairs),
                          label="bg", seed=None)


def sample_mvn(model: PrecisionModel, n: int, seed: int) -> SampleSet:
    """Draw n i.i.d. rows from N(0, model.sigma), deterministically in seed."""
    if n < 1:
        raise ContractViolation(f"n must be >= 1, got {n}")
    ell = cholesky(model.sigma)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, model.p))
    return SampleSet(n=n, p=model.p, data=z @ ell.T, seed=seed,
                     model_label=model.label)
