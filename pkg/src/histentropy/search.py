"""Searching for the information-entropy ``I_d = min_W i_norm(d, W)``.

Only :func:`minimize_spectral` (for recipes where the spectral window is known
to be optimal over homogeneous windows) and :func:`minimize_exhaustive` (over
the supplied family) give exact answers.  The other strategies return upper
bounds, flagged by ``SearchResult.is_bound``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .decoherence import DecoherenceFunction, ExplicitDecoherence
from .entropy import i_hat_from_probabilities, i_norm, is_consistent
from .histories import (
    HistoryProposition,
    Window,
    coarse_grainings,
    homogeneous_window,
    merge_blocks,
    range_basis,
    rank1_projector,
    set_partitions,
    trivial_window,
    window_from_unitary,
)
from .linalg import (
    DEFAULT_TOL,
    dagger,
    herm_eig,
    hermitian_part,
    is_unitary,
    random_unitary,
    unitary_exp,
    vn_entropy,
)

COARSE_GRAINING_DIM_LIMIT = 4
REFINE_TOL = 1e-12


class StrategyError(ValueError):
    """The requested strategy cannot run on this decoherence function."""


@dataclass
class SearchResult:
    best_value: float
    best_window: Window
    strategy: str
    evaluations: int
    seed: int | None
    is_bound: bool
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "best_value": self.best_value,
            "is_upper_bound": self.is_bound,
            "evaluations": self.evaluations,
            "seed": self.seed,
            "window_block_dims": self.best_window.dims,
            "diagnostics": self.diagnostics,
        }


def _offdiag(g: np.ndarray) -> float:
    return float(np.max(np.abs(g - np.diag(np.diag(g))))) if len(g) > 1 else 0.0


def _finish(d, window, strategy, evaluations, seed, is_bound, tol, **diag) -> SearchResult:
    return SearchResult(
        best_value=i_norm(d, window, tol),
        best_window=window,
        strategy=strategy,
        evaluations=evaluations,
        seed=seed,
        is_bound=is_bound,
        diagnostics=diag,
    )


# -- spectral ----------------------------------------------------------------


def spectral_window(d: DecoherenceFunction, tol: float = DEFAULT_TOL) -> Window:
    """Heisenberg-picture spectral window of the recipe behind ``d``.

    At time ``k`` the projectors are ``W_k^dagger Q_i W_k`` with
    ``W_k = U(t0,t1) ... U(t_{k-1},t_k)`` and ``Q_i`` rank-1 eigenprojectors of
    rho (degenerate eigenspaces split along the eigh basis).
    """
    if d.recipe is None:
        raise StrategyError("spectral strategy needs a single-time or n-time recipe")
    rec = d.recipe
    for u in rec.evolutions:
        if not is_unitary(u, 1e-8):
            raise StrategyError("spectral window needs unitary evolutions")
    eig = herm_eig(rec.rho, tol, mode="rank1")
    resolutions = []
    w = np.eye(rec.h_dim, dtype=complex)
    for k in range(rec.n_times):
        w = w @ rec.evolutions[k]
        resolutions.append([dagger(w) @ q @ w for q in eig.projectors])
    return homogeneous_window(resolutions, tol=1e-8)


def minimize_spectral(d: DecoherenceFunction, tol: float = DEFAULT_TOL) -> SearchResult:
    window = spectral_window(d, tol)
    return _finish(d, window, "spectral", 1, None, False, tol)


# -- exhaustive --------------------------------------------------------------


def minimize_exhaustive(
    d: DecoherenceFunction, family, tol: float = DEFAULT_TOL
) -> SearchResult:
    """Exact minimum of ``i_norm`` over the consistent members of ``family``.

    ``family`` is a sequence of windows, or a unitary whose columns define a
    rank-1 window whose coarse-grainings form the family.
    """
    if isinstance(family, np.ndarray):
        candidates = coarse_grainings(window_from_unitary(family))
    else:
        candidates = iter(family)
    best: tuple[float, Window | None] = (math.inf, None)
    count = 0
    for w in candidates:
        count += 1
        if not is_consistent(d, w, tol):
            continue
        v = i_norm(d, w, tol)
        if v < best[0]:
            best = (v, w)
    if count == 0:
        raise ValueError("empty candidate family")
    if best[1] is None:
        raise ValueError("no candidate window is consistent")
    return _finish(d, best[1], "exhaustive", count, None, False, tol)


# -- parametrized rank-1 windows ---------------------------------------------


def bloch_unitary(theta: float, phi: float) -> np.ndarray:
    """Columns span ``P = [[a, b], [b*, 1-a]]`` and ``1 - P`` with ``a = cos^2(theta/2)``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    e = complex(math.cos(phi), math.sin(phi))
    return np.array([[c, -s * np.conj(e)], [s * e, c]], dtype=complex)


def hermitian_generators(n: int) -> list[np.ndarray]:
    gens = []
    for j in range(n):
        g = np.zeros((n, n), dtype=complex)
        g[j, j] = 1.0
        gens.append(g)
        for k in range(j + 1, n):
            g = np.zeros((n, n), dtype=complex)
            g[j, k] = g[k, j] = 1.0
            gens.append(g)
            g = np.zeros((n, n), dtype=complex)
            g[j, k], g[k, j] = -1j, 1j
            gens.append(g)
    return gens


class _Rank1Scorer:
    """Scores rank-1 windows from unitaries, optionally over their coarse-grainings."""

    def __init__(self, d: DecoherenceFunction, tol: float):
        self.d, self.tol = d, tol
        self.n = d.dim_v
        self.log_v = 2.0 * math.log(self.n)
        self.evaluations = 0
        self.min_residual = math.inf
        self.partitions = (
            [self._indicator(p) for p in set_partitions(self.n)]
            if self.n <= COARSE_GRAINING_DIM_LIMIT
            else [(None, np.eye(self.n))]
        )

    def _indicator(self, part):
        ind = np.zeros((len(part), self.n))
        for c, cell in enumerate(part):
            ind[c, cell] = 1.0
        return part, ind

    def __call__(self, u: np.ndarray, tol: float | None = None) -> tuple[float, list | None]:
        tol = self.tol if tol is None else tol
        self.evaluations += 1
        blocks = [np.outer(u[:, k], np.conj(u[:, k])) for k in range(self.n)]
        g = self.d.gram(blocks)
        self.min_residual = min(self.min_residual, _offdiag(g))
        best = (math.inf, None)
        for part, ind in self.partitions:
            if part is not None and len(part) == 1:
                continue
            gm = ind @ g @ ind.T
            if _offdiag(gm) > tol:
                continue
            probs = np.diag(gm).real
            if probs.min() < -tol:
                continue
            val = i_hat_from_probabilities(probs, ind.sum(axis=1), self.tol) - self.log_v
            if val < best[0]:
                best = (val, part)
        return best


def minimize_parametrized_1d(
    d: DecoherenceFunction,
    grid: tuple[int, int] = (33, 24),
    samples: int = 64,
    refine_steps: int = 40,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> SearchResult:
    """Search windows of rank-1 projectors given by columns of unitaries.

    On C^2 the unitaries come from a Bloch-angle grid ``grid = (n_theta, n_phi)``;
    above that, the standard basis plus ``samples`` Haar-random unitaries.  For
    ``dim V <= 4`` each candidate also contributes its consistent
    coarse-grainings.  The best candidate is then refined by coordinate descent
    on ``U exp(i sum_k t_k G_k)``, accepting only improvements that stay
    consistent to ``REFINE_TOL`` so the descent cannot creep through the
    consistency slack.
    """
    n = d.dim_v
    if n > 16:
        raise StrategyError("parametrized search supports dim V <= 16")
    rng = np.random.default_rng(seed)
    score = _Rank1Scorer(d, tol)

    if n == 2:
        n_theta, n_phi = grid
        unitaries = [
            bloch_unitary(t, p)
            for t in np.linspace(0.0, math.pi, n_theta)
            for p in np.linspace(0.0, 2 * math.pi, n_phi, endpoint=False)
        ]
    else:
        unitaries = [np.eye(n, dtype=complex)] + [random_unitary(n, rng) for _ in range(samples)]

    best_val, best_u, best_part = 0.0, None, None
    trivial = trivial_window(n)
    if not is_consistent(d, trivial, tol):
        raise StrategyError("trivial window is not consistent for this d")
    best_val = i_norm(d, trivial, tol)
    for u in unitaries:
        val, part = score(u)
        if val < best_val:
            best_val, best_u, best_part = val, u, part

    if best_u is not None and refine_steps > 0:
        gens = hermitian_generators(n)
        step = 0.1
        for _ in range(refine_steps):
            improved = False
            for g in gens:
                for sgn in (1.0, -1.0):
                    cand = best_u @ unitary_exp(sgn * step * g)
                    val, part = score(cand, min(tol, REFINE_TOL))
                    if val < best_val - 1e-15:
                        best_val, best_u, best_part = val, cand, part
                        improved = True
            if not improved:
                step /= 2
                if step < 1e-10:
                    break

    if best_u is None:
        window = trivial
    else:
        window = window_from_unitary(best_u, tol=1e-8)
        if best_part is not None:
            window = merge_blocks(window, best_part)
    return _finish(
        d, window, "param1d", score.evaluations, seed, True, tol,
        min_rank1_residual=score.min_residual, candidates=len(unitaries),
    )


# -- greedy refinement -------------------------------------------------------


def block_operator(d: ExplicitDecoherence, block: HistoryProposition) -> np.ndarray:
    """Hermitian ``H`` with ``Re d(b, block) = tr(b H)``, compressed onto ``block``."""
    k = np.einsum("bd,cdab->ca", block.matrix, d.operator.tensor4())
    h = hermitian_part(k)
    return block.matrix @ h @ block.matrix


def _split_candidates(d, block, extra: int, rng) -> list[tuple[np.ndarray, np.ndarray]]:
    basis = range_basis(block)
    r = basis.shape[1]
    if r < 2:
        return []
    hs = dagger(basis) @ block_operator(d, block) @ basis
    w, v = np.linalg.eigh(hermitian_part(hs))
    rotated = basis @ v[:, np.argsort(w)[::-1]]
    bases = [rotated]
    bases += [rotated[:, [i] + [j for j in range(r) if j != i]] for i in range(1, r)]
    out = []
    for b in bases:
        for k in range(1, r):
            out.append((b, k))
    for _ in range(extra):
        out.append((basis @ random_unitary(r, rng), int(rng.integers(1, r))))
    splits = []
    for b, k in out:
        beta = b[:, :k] @ dagger(b[:, :k])
        splits.append((beta, block.matrix - beta))
    return splits


def minimize_greedy_refinement(
    d: DecoherenceFunction,
    max_rounds: int = 64,
    candidates_per_block: int = 4,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> SearchResult:
    """Grow a window from ``{1}`` by repeatedly splitting one block in two.

    Split candidates are eigenspaces of each block's compressed operator
    (:func:`block_operator`) plus seeded random splits.  Each round accepts the
    consistent split that lowers ``i_norm`` the most; the search stops when no
    split helps.
    """
    if not isinstance(d, ExplicitDecoherence):
        raise StrategyError("greedy refinement needs an explicit decoherence operator")
    rng = np.random.default_rng(seed)
    blocks = [np.eye(d.dim_v, dtype=complex)]
    log_v = 2.0 * math.log(d.dim_v)
    g = d.gram(blocks)
    current = i_hat_from_probabilities(np.diag(g).real, [d.dim_v], tol) - log_v
    evaluations = 1
    for _ in range(max_rounds):
        best = None
        for idx, blk in enumerate(blocks):
            prop = HistoryProposition(blk, tol=1e-8)
            for beta, gamma in _split_candidates(d, prop, candidates_per_block, rng):
                cand = blocks[:idx] + [beta, gamma] + blocks[idx + 1:]
                g = d.gram(cand)
                evaluations += 1
                if _offdiag(g) > tol:
                    continue
                probs = np.diag(g).real
                if probs.min() < -tol:
                    continue
                dims = [round(np.trace(b).real) for b in cand]
                val = i_hat_from_probabilities(probs, dims, tol) - log_v
                if val < current - 1e-12 and (best is None or val < best[0]):
                    best = (val, cand)
        if best is None:
            break
        current, blocks = best
    window = Window(tuple(HistoryProposition(b, tol=1e-8) for b in blocks))
    return _finish(d, window, "greedy", evaluations, seed, True, tol)


# -- rank-1 probabilities -----------------------------------------------------


def rank1_probability(d: DecoherenceFunction, v) -> float:
    """``d(1, P_v)``: the probability ``P_v`` gets in any consistent window containing it."""
    return float(d.eval(np.eye(d.dim_v), rank1_projector(v)).real)


def max_rank1_probability(
    d: DecoherenceFunction, samples: int = 500, refine_steps: int = 200, seed: int = 0
) -> tuple[float, np.ndarray]:
    """Largest ``d(1, P_v)`` over sampled unit vectors, polished by coordinate ascent."""
    rng = np.random.default_rng(seed)
    n = d.dim_v
    best_v, best_p = None, -math.inf
    for _ in range(samples):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        p = rank1_probability(d, v)
        if p > best_p:
            best_v, best_p = v / np.linalg.norm(v), p
    step = 0.1
    directions = [np.eye(n)[k] for k in range(n)] + [1j * np.eye(n)[k] for k in range(n)]
    for _ in range(refine_steps):
        improved = False
        for e in directions:
            for sgn in (1.0, -1.0):
                v = best_v + sgn * step * e
                v = v / np.linalg.norm(v)
                p = rank1_probability(d, v)
                if p > best_p + 1e-15:
                    best_v, best_p, improved = v, p, True
        if not improved:
            step /= 2
            if step < 1e-9:
                break
    return best_p, best_v


def homogeneous_lower_bound(d: DecoherenceFunction) -> float:
    """``-tr(rho log rho) - 2 log dim V`` for the recipe behind ``d``."""
    if d.recipe is None:
        raise StrategyError("no recipe behind this decoherence function")
    return vn_entropy(d.recipe.rho) - 2.0 * math.log(d.dim_v)


STRATEGIES: Sequence[str] = ("spectral", "param1d", "greedy", "exhaustive")
