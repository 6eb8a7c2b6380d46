"""History propositions as projectors, and windows built from them.

A proposition is a projector on the history space V.  Homogeneous n-time
histories ``(P1, ..., Pn)`` map to ``P1 (x) ... (x) Pn`` on V = H^(x)n.  A
proposition may remember the homogeneous histories it was summed from, which
is what the chain-operator decoherence backend needs to evaluate it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    as_square,
    dagger,
    is_projector,
    kron_all,
    proj_dim,
)

MAX_COARSE_GRAINING_BLOCKS = 12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HomogeneousHistory:
    """Time-ordered list of projectors on the single-time space H."""

    projectors: tuple[np.ndarray, ...]

    def __init__(self, projectors: Sequence, tol: float = DEFAULT_TOL):
        if len(projectors) == 0:
            raise ValueError("a homogeneous history needs at least one time")
        mats = tuple(_frozen(as_square(p, "projector")) for p in projectors)
        h = mats[0].shape[0]
        for p in mats:
            if p.shape != (h, h):
                raise ValueError("all per-time projectors must act on the same H")
            if not is_projector(p, tol):
                raise ValueError("per-time entry is not a projector")
        object.__setattr__(self, "projectors", mats)

    @property
    def h_dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def n_times(self) -> int:
        return len(self.projectors)

    def matrix(self) -> np.ndarray:
        return kron_all(self.projectors)

    def dim(self) -> int:
        return int(np.prod([round(np.trace(p).real) for p in self.projectors]))


@dataclass(frozen=True, eq=False)
class HistoryProposition:
    """A projector on V, optionally with a homogeneous decomposition."""

    matrix: np.ndarray
    dim: int = field(init=False)
    components: tuple[HomogeneousHistory, ...] | None = None

    def __init__(self, matrix, components=None, tol: float = DEFAULT_TOL):
        m = _frozen(as_square(matrix, "proposition"))
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", proj_dim(m, tol))
        object.__setattr__(self, "components", None if components is None else tuple(components))

    @property
    def dim_v(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim_v: int) -> "HistoryProposition":
        return cls(np.eye(dim_v))

    def __repr__(self) -> str:
        return f"HistoryProposition(dim={self.dim}, dim_v={self.dim_v})"


def as_proposition(p, tol: float = DEFAULT_TOL) -> HistoryProposition:
    if isinstance(p, HistoryProposition):
        return p
    if isinstance(p, HomogeneousHistory):
        return homogeneous_to_proposition(p)
    return HistoryProposition(p, tol=tol)


def homogeneous_to_proposition(h: HomogeneousHistory) -> HistoryProposition:
    return HistoryProposition(h.matrix(), components=(h,))


def identity_history(h_dim: int, n_times: int) -> HistoryProposition:
    """The unit proposition on H^(x)n, carrying its homogeneous form."""
    return homogeneous_to_proposition(HomogeneousHistory([np.eye(h_dim)] * n_times))


def insert_trivial_time(h: HomogeneousHistory, position: int) -> HomogeneousHistory:
    if not 0 <= position <= h.n_times:
        raise IndexError(f"position {position} outside [0, {h.n_times}]")
    ps = list(h.projectors)
    ps.insert(position, np.eye(h.h_dim))
    return HomogeneousHistory(ps)


def negation(p: HistoryProposition) -> HistoryProposition:
    return HistoryProposition(np.eye(p.dim_v) - p.matrix)


def _check_same_space(p: HistoryProposition, q: HistoryProposition) -> None:
    if p.dim_v != q.dim_v:
        raise ValueError(f"propositions live on different spaces ({p.dim_v} vs {q.dim_v})")


def disjoint(p: HistoryProposition, q: HistoryProposition, tol: float = DEFAULT_TOL) -> bool:
    _check_same_space(p, q)
    return bool(np.linalg.norm(p.matrix @ q.matrix) <= tol)


def oplus(p: HistoryProposition, q: HistoryProposition, tol: float = DEFAULT_TOL) -> HistoryProposition:
    """Disjoint sum; defined only when ``pq = 0``."""
    if not disjoint(p, q, tol):
        raise ValueError("oplus: propositions are not disjoint")
    comps = None
    if p.components is not None and q.components is not None:
        comps = p.components + q.components
    return HistoryProposition(p.matrix + q.matrix, components=comps, tol=max(tol, 1e-9))


def coarser_eq(p: HistoryProposition, q: HistoryProposition, tol: float = DEFAULT_TOL) -> bool:
    """``p <= q`` in the orthoalgebra, i.e. ``qp = p``."""
    _check_same_space(p, q)
    return bool(np.linalg.norm(q.matrix @ p.matrix - p.matrix) <= tol)


@dataclass(frozen=True, eq=False)
class Window:
    """Nonzero, mutually orthogonal propositions summing to the identity."""

    blocks: tuple[HistoryProposition, ...]

    @property
    def dim_v(self) -> int:
        return self.blocks[0].dim_v

    @property
    def dims(self) -> list[int]:
        return [b.dim for b in self.blocks]

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __getitem__(self, i: int) -> HistoryProposition:
        return self.blocks[i]

    def __repr__(self) -> str:
        return f"Window(dims={self.dims}, dim_v={self.dim_v})"


def make_window(blocks: Sequence, tol: float = DEFAULT_TOL) -> Window:
    props = [as_proposition(b, tol) for b in blocks]
    if not props:
        raise ValueError("a window needs at least one block")
    n = props[0].dim_v
    for p in props:
        if p.dim_v != n:
            raise ValueError("window blocks act on different spaces")
        if p.dim == 0:
            raise ValueError("window blocks must be nonzero")
    for i, j in itertools.combinations(range(len(props)), 2):
        if np.linalg.norm(props[i].matrix @ props[j].matrix) > tol:
            raise ValueError(f"window blocks {i} and {j} are not orthogonal")
    total = sum(p.matrix for p in props)
    if np.linalg.norm(total - np.eye(n)) > tol * max(1, len(props)):
        raise ValueError("window blocks do not sum to the identity")
    return Window(tuple(props))


def trivial_window(dim_v: int) -> Window:
    return Window((HistoryProposition.identity(dim_v),))


def window_from_unitary(u, tol: float = DEFAULT_TOL) -> Window:
    """Rank-1 window given by the columns of a unitary."""
    m = as_square(u, "unitary")
    return make_window([np.outer(m[:, k], np.conj(m[:, k])) for k in range(m.shape[1])], tol)


def standard_basis_window(n: int) -> Window:
    return window_from_unitary(np.eye(n))


def homogeneous_window(resolutions: Sequence[Sequence], tol: float = DEFAULT_TOL) -> Window:
    """All homogeneous histories drawn from one resolution of the identity per time.

    ``resolutions[t]`` is the list of projectors used at time ``t``.  Blocks are
    ordered lexicographically in the per-time indices.
    """
    blocks = [
        homogeneous_to_proposition(HomogeneousHistory(choice, tol))
        for choice in itertools.product(*resolutions)
    ]
    return make_window(blocks, tol)


def product_window(w1: Window, w2: Window) -> Window:
    """Blocks ``a (x) b`` for a in w1, b in w2, on V1 (x) V2."""
    return make_window([np.kron(a.matrix, b.matrix) for a in w1 for b in w2])


def is_refinement(fine: Window, coarse: Window, tol: float = DEFAULT_TOL) -> bool:
    """True iff each coarse block is exactly the disjoint sum of the fine blocks below it."""
    if fine.dim_v != coarse.dim_v:
        raise ValueError("windows act on different spaces")
    assigned: list[list[int]] = [[] for _ in coarse.blocks]
    for i, f in enumerate(fine.blocks):
        owners = [j for j, c in enumerate(coarse.blocks) if coarser_eq(f, c, tol)]
        if not owners:
            return False
        assigned[owners[0]].append(i)
    for j, c in enumerate(coarse.blocks):
        if not assigned[j]:
            return False
        total = sum(fine.blocks[i].matrix for i in assigned[j])
        if np.linalg.norm(total - c.matrix) > tol * max(1, len(assigned[j])):
            return False
    return True


def set_partitions(n: int) -> Iterator[list[list[int]]]:
    """All set partitions of ``range(n)`` as restricted-growth strings.

    Order starts with the single-cell partition and ends with all singletons.
    """
    if n == 0:
        yield []
        return
    labels = [0] * n

    def cells() -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(max(labels) + 1)]
        for i, c in enumerate(labels):
            out[c].append(i)
        return out

    def rec(i: int, top: int) -> Iterator[list[list[int]]]:
        if i == n:
            yield cells()
            return
        for c in range(top + 2):
            labels[i] = c
            yield from rec(i + 1, max(top, c))
        labels[i] = 0

    yield from rec(1, 0)


def merge_blocks(w: Window, partition: Sequence[Sequence[int]]) -> Window:
    """Coarse-grain ``w`` by summing the blocks in each partition cell."""
    blocks = []
    for cell in partition:
        acc = w.blocks[cell[0]]
        for i in cell[1:]:
            acc = oplus(acc, w.blocks[i], tol=1e-8)
        blocks.append(acc)
    return Window(tuple(blocks))


def coarse_grainings(w: Window) -> Iterator[Window]:
    """Every coarse-graining of ``w`` (one per set partition of its blocks)."""
    if len(w) > MAX_COARSE_GRAINING_BLOCKS:
        raise ValueError(
            f"{len(w)} blocks exceeds the coarse-graining cap of {MAX_COARSE_GRAINING_BLOCKS}"
        )
    for part in set_partitions(len(w)):
        yield merge_blocks(w, part)


def rank1_projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, np.conj(v))


def range_basis(p: HistoryProposition) -> np.ndarray:
    """Orthonormal basis (as columns) of the range of a proposition."""
    w, v = np.linalg.eigh(p.matrix)
    return v[:, w > 0.5]


def split_block(p: HistoryProposition, basis: np.ndarray, k: int) -> tuple[HistoryProposition, HistoryProposition]:
    """Split ``p`` into the span of ``basis[:, :k]`` and its complement in ``p``."""
    b = basis[:, :k]
    beta = b @ dagger(b)
    return HistoryProposition(beta), HistoryProposition(p.matrix - beta, tol=1e-8)
