"""Information-entropy of a decoherence function on a consistent window.

For a window ``{a_i}`` with probabilities ``p_i = d(a_i, a_i)``::

    i_hat  = -sum p_i log(p_i / dim(a_i)^2)
    i_norm = i_hat - 2 log dim V   = -sum p_i log(p_i / (dim(a_i)/dim V)^2)
    i_x    = -sum p_i log(p_i / (dim(a_i)/dim V)^x)

``i_norm`` never increases when a window is refined, lies in
``[-2 log dim V, 0]``, and is 0 on the trivial window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decoherence import DecoherenceFunction, InconsistentWindowError
from .histories import (
    MAX_COARSE_GRAINING_BLOCKS,
    Window,
    merge_blocks,
    set_partitions,
)
from .linalg import DEFAULT_TOL, as_square


def _offdiag_max(g: np.ndarray) -> float:
    if len(g) < 2:
        return 0.0
    return float(np.max(np.abs(g - np.diag(np.diag(g)))))


def consistency_residual(d: DecoherenceFunction, w: Window) -> float:
    """``max_{i != j} |d(a_i, a_j)|``."""
    return _offdiag_max(d.gram(w.blocks))


def is_consistent(d: DecoherenceFunction, w: Window, tol: float = DEFAULT_TOL) -> bool:
    return consistency_residual(d, w) <= tol


def _clamped(probs: np.ndarray, tol: float) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if probs.size and probs.min() < -tol:
        raise ValueError(f"negative probability {probs.min():.3e} on a consistent window")
    return np.clip(probs, 0.0, None)


def _plogq(p: np.ndarray, q: np.ndarray) -> float:
    """``sum p log(p / q)`` with ``0 log 0 = 0``."""
    pos = p > 0
    return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))


def entropy_from_probabilities(probs, dims, dim_v: int, x: float = 2.0, tol: float = DEFAULT_TOL) -> float:
    """``-sum p log(p / (dim/dim_v)^x)`` for given probabilities and block dimensions."""
    p = _clamped(probs, tol)
    rel = np.asarray(dims, dtype=float) / dim_v
    return 0.0 - _plogq(p, rel**x)


def i_hat_from_probabilities(probs, dims, tol: float = DEFAULT_TOL) -> float:
    p = _clamped(probs, tol)
    return 0.0 - _plogq(p, np.asarray(dims, dtype=float) ** 2)


def _diagonal(d: DecoherenceFunction, w: Window, tol: float) -> np.ndarray:
    g = d.gram(w.blocks)
    res = _offdiag_max(g)
    if res > tol:
        raise InconsistentWindowError(res, tol)
    return np.diag(g).real


def probabilities(d: DecoherenceFunction, w: Window, tol: float = DEFAULT_TOL) -> np.ndarray:
    return _diagonal(d, w, tol)


def i_hat(d: DecoherenceFunction, w: Window, tol: float = DEFAULT_TOL) -> float:
    return i_hat_from_probabilities(_diagonal(d, w, tol), w.dims, tol)


def i_norm(d: DecoherenceFunction, w: Window, tol: float = DEFAULT_TOL) -> float:
    return i_hat(d, w, tol) - 2.0 * math.log(w.dim_v)


def i_x(d: DecoherenceFunction, w: Window, x: float, tol: float = DEFAULT_TOL) -> float:
    """Entropy with relative-dimension exponent ``x``.

    ``x = 0`` is the plain Shannon entropy of the window, ``x = 1`` is minus the
    Kullback information relative to ``dim(a)/dim V``, ``x = 2`` matches
    :func:`i_norm`.  Refinement monotonicity holds for ``x >= 1``.
    """
    if x < 0:
        raise ValueError("x must be non-negative")
    return entropy_from_probabilities(_diagonal(d, w, tol), w.dims, w.dim_v, x, tol)


@dataclass
class EntropyReport:
    window_block_dims: list[int]
    probabilities: list[float]
    i_hat: float
    i_norm: float
    consistency_residual: float
    dim_v: int
    consistent: bool
    i_x: dict[float, float] = field(default_factory=dict)

    def as_dict(self, bits: bool = False) -> dict:
        out = {
            "window_block_dims": self.window_block_dims,
            "probabilities": self.probabilities,
            "consistency_residual": self.consistency_residual,
            "consistent": self.consistent,
            "dim_v": self.dim_v,
            "i_hat": self.i_hat,
            "i_norm": self.i_norm,
            "i_x": [{"x": x, "value": v} for x, v in sorted(self.i_x.items())],
        }
        if bits:
            out["bits"] = {
                "i_hat": nats_to_bits(self.i_hat),
                "i_norm": nats_to_bits(self.i_norm),
                "i_x": [{"x": x, "value": nats_to_bits(v)} for x, v in sorted(self.i_x.items())],
            }
        return out


def nats_to_bits(v: float) -> float:
    return v / math.log(2)


def entropy_report(
    d: DecoherenceFunction, w: Window, xs=(), tol: float = DEFAULT_TOL
) -> EntropyReport:
    """Probabilities and entropies of ``w``; raises if ``w`` is inconsistent."""
    g = d.gram(w.blocks)
    res = _offdiag_max(g)
    if res > tol:
        raise InconsistentWindowError(res, tol)
    probs = np.diag(g).real
    ih = i_hat_from_probabilities(probs, w.dims, tol)
    return EntropyReport(
        window_block_dims=w.dims,
        probabilities=[float(p) for p in probs],
        i_hat=ih,
        i_norm=ih - 2.0 * math.log(w.dim_v),
        consistency_residual=res,
        dim_v=w.dim_v,
        consistent=True,
        i_x={float(x): entropy_from_probabilities(probs, w.dims, w.dim_v, x, tol) for x in xs},
    )


def monotonicity_gap(a: float, b: float) -> float:
    """``a log(a/b^2) - (1+a) log((1+a)/(1+b)^2)``, nonnegative for a >= 0, b >= 1."""
    if a < 0 or b < 1:
        raise ValueError("monotonicity_gap needs a >= 0 and b >= 1")
    first = a * (math.log(a) - 2.0 * math.log(b)) if a > 0 else 0.0
    return first - (1 + a) * math.log((1 + a) / (1 + b) ** 2)


def localized_i(d: DecoherenceFunction, w0: Window, tol: float = DEFAULT_TOL) -> tuple[float, Window]:
    """Minimum ``i_norm`` over the d-consistent coarse-grainings of ``w0``.

    Merged-block values come from additivity, ``d(a+b, c) = d(a, c) + d(b, c)``,
    so ``d`` is evaluated only on the blocks of ``w0``.  Ties go to the first
    partition in enumeration order (the trivial window comes first).
    """
    k = len(w0)
    if k > MAX_COARSE_GRAINING_BLOCKS:
        raise ValueError(f"{k} blocks exceeds the cap of {MAX_COARSE_GRAINING_BLOCKS}")
    g = d.gram(w0.blocks)
    dims = np.array(w0.dims)
    log_v = 2.0 * math.log(w0.dim_v)
    best = (math.inf, None)
    for part in set_partitions(k):
        ind = np.zeros((len(part), k))
        for c, cell in enumerate(part):
            ind[c, cell] = 1.0
        gm = ind @ g @ ind.T
        if _offdiag_max(gm) > tol:
            continue
        probs = np.diag(gm).real
        if probs.min() < -tol:
            continue
        val = i_hat_from_probabilities(probs, ind @ dims, tol) - log_v
        if val < best[0]:
            best = (val, part)
    if best[1] is None:
        raise InconsistentWindowError(_offdiag_max(g), tol)
    win = merge_blocks(w0, best[1])
    return i_norm(d, win, tol), win


# -- resolved entropies of a positive operator ------------------------------


def resolved_trace_entropy(k, resolution, tol: float = DEFAULT_TOL) -> float:
    """``-sum_j tr(Q_j K) log(tr(Q_j K) / dim(Q_j)^2)``; bounded below by ``-tr(K log K)``."""
    km = as_square(k, "K")
    traces = np.array([np.trace(q @ km).real for q in resolution])
    dims = np.array([round(np.trace(q).real) for q in resolution], dtype=float)
    return 0.0 - _plogq(_clamped(traces, tol), dims**2)


def resolved_block_entropy(k, resolution, tol: float = DEFAULT_TOL) -> float:
    """``-sum_j tr(Q_j K Q_j log(Q_j K Q_j / dim(Q_j)^2))``; bounded below by ``-tr(K log K)``."""
    km = as_square(k, "K")
    total = 0.0
    for q in resolution:
        dim = round(np.trace(q).real)
        block = q @ km @ q
        w = np.clip(np.linalg.eigvalsh(0.5 * (block + block.conj().T)), 0.0, None)
        total -= _plogq(w, np.full_like(w, float(dim) ** 2))
    return total

