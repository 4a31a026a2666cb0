"""Stepwise covariance selection over neighborhood systems.

The estimator starts from the empty graph and walks edge space: each
iteration adds the candidate pair whose residual Pearson correlation is
largest (forward step, fires at or above ``alpha_f``) and then drops at
most one existing edge whose leave-partner-out residual correlation is
smallest (backward step, fires at or below ``alpha_b``).  When the forward
step fails to fire the walk stops and a sparse precision estimate is
assembled from the final residuals.

Scan results depend only on the current neighborhood state, so repeated
fits of the same dataset under different thresholds retrace shared
prefixes.  ScanCache memoizes per-state scan outcomes and per-(node,
predictor-set) residuals to make such sweeps cheap; cross-validation
leans on this heavily.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractViolation,
    CycleDetected,
    DegenerateResidual,
    IterationLimit,
)
from .linalg import _as_square_symmetric, least_squares_residuals
from .models import EdgeSet, SampleSet

_MISS = object()

# Residual sum of squares at or below this is treated as an exact fit.
DEGENERATE_SS = 1e-12


@dataclass(frozen=True)
class Thresholds:
    """Forward/backward decision levels; alpha_b < alpha_f is enforced."""

    alpha_f: float
    alpha_b: float

    def __post_init__(self):
        if not (0.0 <= self.alpha_b < self.alpha_f <= 1.0):
            raise ContractViolation(
                f"need 0 <= alpha_b < alpha_f <= 1, got "
                f"alpha_f={self.alpha_f}, alpha_b={self.alpha_b}")


@dataclass(frozen=True)
class CandidateScore:
    """One scored pair: a forward f-value or a backward b-value."""

    j: int
    l: int
    value: float

    def __post_init__(self):
        if self.j == self.l:
            raise ContractViolation(f"self-pair ({self.j}, {self.l})")
        if self.j > self.l:
            a, b = self.l, self.j
            object.__setattr__(self, "j", a)
            object.__setattr__(self, "l", b)
        if abs(self.value) > 1.0 + 1e-12:
            raise ContractViolation(f"score {self.value} outside [-1, 1]")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.j, self.l)


class NeighborhoodSystem:
    """Symmetric family of per-node neighbor sets, mutated edge by edge."""

    __slots__ = ("p", "_nbrs", "_edges")

    def __init__(self, p: int):
        if p < 1:
            raise ContractViolation(f"p must be >= 1, got {p}")
        self.p = p
        self._nbrs: list[tuple[int, ...]] = [() for _ in range(p)]
        self._edges: set[tuple[int, int]] = set()

    @classmethod
    def empty(cls, p: int) -> "NeighborhoodSystem":
        return cls(p)

    @classmethod
    def from_edge_set(cls, edges: EdgeSet) -> "NeighborhoodSystem":
        nb = cls(edges.p)
        for i, l in edges.sorted_pairs():
            nb.add_edge(i, l)
        return nb

    def _canon(self, i: int, l: int) -> tuple[int, int]:
        a, b = (i, l) if i < l else (l, i)
        if a == b:
            raise ContractViolation(f"self-loop ({i}, {l})")
        if not (0 <= a and b < self.p):
            raise ContractViolation(f"pair ({i}, {l}) out of range for p={self.p}")
        return a, b

    def add_edge(self, i: int, l: int) -> None:
        a, b = self._canon(i, l)
        if (a, b) in self._edges:
            raise ContractViolation(f"edge ({a}, {b}) already present")
        self._edges.add((a, b))
        self._nbrs[a] = tuple(sorted((*self._nbrs[a], b)))
        self._nbrs[b] = tuple(sorted((*self._nbrs[b], a)))

    def remove_edge(self, i: int, l: int) -> None:
        a, b = self._canon(i, l)
        if (a, b) not in self._edges:
            raise ContractViolation(f"edge ({a}, {b}) not present")
        self._edges.discard((a, b))
        self._nbrs[a] = tuple(v for v in self._nbrs[a] if v != b)
        self._nbrs[b] = tuple(v for v in self._nbrs[b] if v != a)

    def neighbors_of(self, j: int) -> tuple[int, ...]:
        return self._nbrs[j]

    def degree(self, j: int) -> int:
        return len(self._nbrs[j])

    def has_edge(self, i: int, l: int) -> bool:
        return self._canon(i, l) in self._edges

    def edge_pairs(self) -> list[tuple[int, int]]:
        return sorted(self._edges)

    def edge_count(self) -> int:
        return len(self._edges)

    def state_key(self) -> frozenset:
        return frozenset(self._edges)

    def to_edge_set(self) -> EdgeSet:
        return EdgeSet(p=self.p, pairs=frozenset(self._edges))

    def copy(self) -> "NeighborhoodSystem":
        nb = NeighborhoodSystem(self.p)
        nb._nbrs = list(self._nbrs)
        nb._edges = set(self._edges)
        return nb

    def __eq__(self, other) -> bool:
        if not isinstance(other, NeighborhoodSystem):
            return NotImplemented
        return self.p == other.p and self._edges == other._edges

    def __repr__(self) -> str:
        return f"NeighborhoodSystem(p={self.p}, edges={sorted(self._edges)})"


@dataclass(frozen=True)
class GsaFit:
    """Final state of one stepwise run plus the assembled estimate."""

    neighborhoods: NeighborhoodSystem
    edges: EdgeSet
    omega_hat: np.ndarray | None
    iterations: int
    trace: tuple
    stop_reason: str


class ScanCache:
    """Shared memo for repeated fits of one dataset.

    A cache binds to the first SampleSet it sees (and keeps a centered
    copy plus its Gram matrix); reuse against a different dataset is a
    contract violation.  All stored values are pure functions of the
    bound data, the neighborhood state and the cap, so sharing a cache
    never changes results, only speed.
    """

    __slots__ = ("_source", "x", "gram", "resid", "beta", "forward",
                 "backward", "_lowmask")

    def __init__(self):
        self._source = None
        self.x = None
        self.gram = None
        self.resid: dict = {}
        self.beta: dict = {}
        self.forward: dict = {}
        self.backward: dict = {}
        self._lowmask = None

    def _set_matrix(self, x: np.ndarray) -> None:
        self.x = np.ascontiguousarray(x, dtype=float)
        self.gram = self.x.T @ self.x
        self._lowmask = np.tril(np.ones((x.shape[1], x.shape[1]), dtype=bool))

    def attach(self, data: SampleSet) -> np.ndarray:
        """Bind to ``data`` (first call centers it); return the centered matrix."""
        if self._source is None:
            self._source = data
            self._set_matrix(data.data - data.data.mean(axis=0))
        elif self._source is not data:
            raise ContractViolation("ScanCache is bound to a different dataset")
        return self.x

    @classmethod
    def over_matrix(cls, x: np.ndarray) -> "ScanCache":
        """Cache over a raw (already prepared) matrix, no centering."""
        cache = cls()
        cache._source = x
        cache._set_matrix(x)
        return cache


def _cached_residual(cache: ScanCache, j: int, preds: tuple[int, ...]) -> np.ndarray:
    """Residual of column j on the predictor tuple, memoized.

    Solves the normal equations on the cached Gram matrix; an exactly
    singular system falls back to minimum-norm least squares, matching
    least_squares_residuals.
    """
    key = (j, preds)
    r = cache.resid.get(key)
    if r is not None:
        return r
    x = cache.x
    if preds:
        cols = list(preds)
        g = cache.gram[np.ix_(cols, cols)]
        rhs = cache.gram[cols, j]
        try:
            beta = np.linalg.solve(g, rhs)
        except np.linalg.LinAlgError:
            beta, *_ = np.linalg.lstsq(x[:, cols], x[:, j], rcond=None)
        r = x[:, j] - x[:, cols] @ beta
    else:
        beta = np.zeros(0)
        r = x[:, j] - x[:, j].mean()
    cache.resid[key] = r
    cache.beta[key] = beta
    return r


def _forward_impl(cache: ScanCache, nb: NeighborhoodSystem, cap: int):
    key = (nb.state_key(), cap)
    got = cache.forward.get(key, _MISS)
    if got is not _MISS:
        return got
    x = cache.x
    n, p = x.shape
    u = np.empty((n, p))
    for j in range(p):
        r = _cached_residual(cache, j, nb.neighbors_of(j))
        r = r - r.mean()
        s = np.linalg.norm(r)
        u[:, j] = r / s if s > 0.0 else 0.0
    corr = u.T @ u
    score = np.abs(corr)
    score[cache._lowmask] = -1.0
    for j in range(p):
        nbrs = nb.neighbors_of(j)
        if nbrs:
            score[j, list(nbrs)] = -1.0
        if len(nbrs) >= cap:
            score[j, :] = -1.0
            score[:, j] = -1.0
    flat = int(np.argmax(score))
    j0, l0 = divmod(flat, p)
    if score[j0, l0] < 0.0:
        out = None
    else:
        out = CandidateScore(j0, l0, float(np.clip(corr[j0, l0], -1.0, 1.0)))
    cache.forward[key] = out
    return out


def _backward_impl(cache: ScanCache, nb: NeighborhoodSystem):
    key = nb.state_key()
    got = cache.backward.get(key, _MISS)
    if got is not _MISS:
        return got
    pairs = nb.edge_pairs()
    if not pairs:
        cache.backward[key] = None
        return None
    n = cache.x.shape[0]
    r1 = np.empty((n, len(pairs)))
    r2 = np.empty((n, len(pairs)))
    for k, (j, l) in enumerate(pairs):
        pj = tuple(v for v in nb.neighbors_of(j) if v != l)
        pl = tuple(v for v in nb.neighbors_of(l) if v != j)
        r1[:, k] = _cached_residual(cache, j, pj)
        r2[:, k] = _cached_residual(cache, l, pl)
    r1 = r1 - r1.mean(axis=0)
    r2 = r2 - r2.mean(axis=0)
    denom = np.linalg.norm(r1, axis=0) * np.linalg.norm(r2, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.einsum("ij,ij->j", r1, r2) / denom
    b[denom == 0.0] = 0.0
    np.clip(b, -1.0, 1.0, out=b)
    k0 = int(np.argmin(np.abs(b)))
    out = CandidateScore(pairs[k0][0], pairs[k0][1], float(b[k0]))
    cache.backward[key] = out
    return out


def _assemble_from_residuals(res: np.ndarray, nb: NeighborhoodSystem) -> np.ndarray:
    n, p = res.shape
    ss = np.einsum("ij,ij->j", res, res)
    worst = int(np.argmin(ss))
    if ss[worst] <= DEGENERATE_SS:
        raise DegenerateResidual(worst)
    omega = np.zeros((p, p))
    omega[np.diag_indices(p)] = n / ss
    for j, l in nb.edge_pairs():
        w = n * float(res[:, j] @ res[:, l]) / (ss[j] * ss[l])
        omega[j, l] = omega[l, j] = w
    return omega


def _assemble_impl(cache: ScanCache, nb: NeighborhoodSystem) -> np.ndarray:
    res = np.column_stack(
        [_cached_residual(cache, j, nb.neighbors_of(j)) for j in range(nb.p)])
    return _assemble_from_residuals(res, nb)


def default_cap(n: int, p: int) -> int:
    """Largest allowed neighborhood: regressions must keep residual df."""
    return min(n - 2, p - 1)


def default_max_iter(p: int) -> int:
    """Iteration budget; generous for sparse graphs, bounded for churn."""
    return max(256, 8 * p)


def residual_for_node(data: SampleSet, j: int, neighborhoods: NeighborhoodSystem,
                      exclude: int | None = None) -> np.ndarray:
    """Residual of column j regressed on its neighborhood (minus ``exclude``).

    Operates on the data as supplied; an empty predictor set falls back to
    the centered column.
    """
    if not (0 <= j < data.p):
        raise ContractViolation(f"node {j} out of range for p={data.p}")
    if neighborhoods.p != data.p:
        raise ContractViolation("neighborhood system does not match data dimension")
    preds = neighborhoods.neighbors_of(j)
    if exclude is not None:
        preds = tuple(v for v in preds if v != exclude)
    z = data.data[:, list(preds)] if preds else None
    return least_squares_residuals(data.data[:, j], z)


def forward_scan(data: SampleSet, neighborhoods: NeighborhoodSystem,
                 cap: int | None = None):
    """Best non-adjacent pair by |residual correlation|, or None.

    Pairs with either endpoint at the neighborhood cap are skipped; ties
    break toward the lexicographically smallest pair.
    """
    if neighborhoods.p != data.p:
        raise ContractViolation("neighborhood system does not match data dimension")
    if cap is None:
        cap = default_cap(data.n, data.p)
    cache = ScanCache.over_matrix(data.data)
    return _forward_impl(cache, neighborhoods, int(cap))


def backward_scan(data: SampleSet, neighborhoods: NeighborhoodSystem):
    """Current edge with the smallest |leave-partner-out correlation|."""
    if neighborhoods.p != data.p:
        raise ContractViolation("neighborhood system does not match data dimension")
    cache = ScanCache.over_matrix(data.data)
    return _backward_impl(cache, neighborhoods)


def assemble_omega(data: SampleSet, neighborhoods: NeighborhoodSystem) -> np.ndarray:
    """Sparse precision estimate from per-node neighborhood residuals.

    omega_ii = n / (e_i'e_i); omega_il = n (e_i'e_l) / [(e_i'e_i)(e_l'e_l)]
    for neighbors, zero elsewhere.  Expects centered (or at least
    mean-stationary) columns, same as the stepwise run itself.
    """
    if neighborhoods.p != data.p:
        raise ContractViolation("neighborhood system does not match data dimension")
    res = np.column_stack([
        residual_for_node(data, j, neighborhoods) for j in range(data.p)])
    return _assemble_from_residuals(res, neighborhoods)


def run_gsa(data: SampleSet, thresholds: Thresholds, cap: int | None = None,
            max_iter: int | None = None, cache: ScanCache | None = None,
            assemble: bool = True) -> GsaFit:
    """Run the full stepwise walk from the empty graph.

    The input is centered once at entry.  Each iteration performs one
    forward test (stop when the best score is below alpha_f) and, after a
    firing forward step, at most one backward removal.  A repeated
    neighborhood state raises CycleDetected; exhausting ``max_iter``
    raises IterationLimit.  Pass a ScanCache bound to ``data`` to share
    scan work across runs with different thresholds.
    """
    if data.n < 3:
        raise ContractViolation(f"need n >= 3 observations, got {data.n}")
    if cache is None:
        cache = ScanCache()
    x = cache.attach(data)
    n, p = x.shape
    cap = default_cap(n, p) if cap is None else int(cap)
    if cap < 0:
        raise ContractViolation(f"cap must be >= 0, got {cap}")
    max_iter = default_max_iter(p) if max_iter is None else int(max_iter)
    if max_iter < 1:
        raise ContractViolation(f"max_iter must be >= 1, got {max_iter}")

    nb = NeighborhoodSystem.empty(p)
    seen = {nb.state_key()}
    trace: list = []
    iterations = 0
    stop_reason = ""
    while True:
        if iterations >= max_iter:
            raise IterationLimit(iterations, tuple(trace))
        iterations += 1
        fwd = _forward_impl(cache, nb, cap)
        if fwd is None:
            trace.append(("stop", None, 0.0))
            stop_reason = "no_candidates"
            break
        if abs(fwd.value) < thresholds.alpha_f:
            trace.append(("stop", fwd.pair, fwd.value))
            stop_reason = "threshold"
            break
        nb.add_edge(fwd.j, fwd.l)
        trace.append(("add", fwd.pair, fwd.value))
        bwd = _backward_impl(cache, nb)
        if bwd is not None and abs(bwd.value) <= thresholds.alpha_b:
            nb.remove_edge(bwd.j, bwd.l)
            trace.append(("remove", bwd.pair, bwd.value))
        key = nb.state_key()
        if key in seen:
            raise CycleDetected(iterations, tuple(trace))
        seen.add(key)

    omega = _assemble_impl(cache, nb) if assemble else None
    return GsaFit(neighborhoods=nb.copy(), edges=nb.to_edge_set(),
                  omega_hat=omega, iterations=iterations, trace=tuple(trace),
                  stop_reason=stop_reason)


def partial_corr_oracle(omega, i: int, l: int) -> float:
    """Population partial correlation -w_il / sqrt(w_ii w_ll)."""
    m = _as_square_symmetric(omega, "omega")
    p = m.shape[0]
    if not (0 <= i < p and 0 <= l < p):
        raise ContractViolation(f"pair ({i}, {l}) out of range for p={p}")
    if m[i, i] <= 0.0 or m[l, l] <= 0.0:
        raise ContractViolation("omega has a nonpositive diagonal entry")
    return float(-m[i, l] / np.sqrt(m[i, i] * m[l, l]))
