"""Dense complex matrix helpers.

Kronecker products, Hermitian eigendecomposition with explicit degeneracy
grouping, entropies of positive operators, projector predicates, and the
tensor-factor permutation operators (swap and 4-cycle).

All logarithms are natural; ``0 log 0`` is taken to be 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

DEFAULT_TOL = 1e-9
DEGENERACY_RTOL = 1e-8


def as_square(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a complex square 2-D array, rejecting NaN/Inf."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def kron(a, b) -> np.ndarray:
    """Kronecker product of two square matrices."""
    return np.kron(as_square(a, "a"), as_square(b, "b"))


def kron_all(mats: Sequence) -> np.ndarray:
    if not mats:
        raise ValueError("kron_all needs at least one matrix")
    return reduce(kron, mats)


def is_hermitian(h, tol: float = DEFAULT_TOL) -> bool:
    m = as_square(h)
    return bool(np.max(np.abs(m - dagger(m))) <= tol)


@dataclass(frozen=True)
class HermitianEigensystem:
    """Spectral decomposition ``h = sum_i eigenvalues[i] * projectors[i]``.

    Eigenvalues are sorted in descending order.  In ``grouped`` mode each
    projector spans a whole (numerically) degenerate eigenspace; in
    ``rank1`` mode every eigenvector gets its own projector.
    """

    eigenvalues: np.ndarray
    projectors: tuple[np.ndarray, ...]
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return sum(lam * p for lam, p in zip(self.eigenvalues, self.projectors))


def herm_eig(
    h,
    tol: float = DEFAULT_TOL,
    mode: str = "grouped",
    degeneracy_rtol: float = DEGENERACY_RTOL,
) -> HermitianEigensystem:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues closer than ``degeneracy_rtol * max|lambda|`` are grouped into
    one eigenprojector when ``mode == "grouped"``.
    """
    m = as_square(h, "h")
    if not is_hermitian(m, tol):
        raise ValueError("herm_eig: input is not Hermitian within tolerance")
    if mode not in ("grouped", "rank1"):
        raise ValueError(f"unknown mode {mode!r}")
    w, v = np.linalg.eigh(hermitian_part(m))
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    if mode == "rank1":
        projs = tuple(np.outer(v[:, i], np.conj(v[:, i])) for i in range(len(w)))
        return HermitianEigensystem(w, projs, v)

    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    groups: list[list[int]] = [[0]]
    for i in range(1, len(w)):
        if abs(w[i] - w[groups[-1][0]]) <= degeneracy_rtol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    vals = np.array([np.mean(w[g]) for g in groups])
    projs = tuple(v[:, g] @ dagger(v[:, g]) for g in groups)
    return HermitianEigensystem(vals, projs, v)


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def operator_entropy(k, tol: float = DEFAULT_TOL) -> float:
    """``-tr(K log K)`` for a positive semidefinite ``K`` of any trace."""
    m = as_square(k, "K")
    if not is_hermitian(m, tol):
        raise ValueError("operator_entropy: K is not Hermitian")
    w = np.linalg.eigvalsh(hermitian_part(m))
    if w.min() < -tol:
        raise ValueError(f"operator_entropy: K has negative eigenvalue {w.min():.3e}")
    return float(-np.sum(_xlogx(np.clip(w, 0.0, None))))


def vn_entropy(rho, tol: float = DEFAULT_TOL) -> float:
    """Von Neumann entropy ``-tr(rho log rho)`` in nats."""
    m = as_square(rho, "rho")
    tr = np.trace(m)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"vn_entropy: trace {tr.real:.12g} is not 1")
    return operator_entropy(m, tol)


def is_density_matrix(rho, tol: float = DEFAULT_TOL) -> bool:
    m = as_square(rho)
    if not is_hermitian(m, tol) or abs(np.trace(m) - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(hermitian_part(m)).min() >= -tol)


def check_density_matrix(rho, tol: float = DEFAULT_TOL) -> np.ndarray:
    m = as_square(rho, "rho")
    if not is_density_matrix(m, tol):
        raise ValueError("rho is not a density matrix (Hermitian, PSD, unit trace)")
    return m


def is_projector(p, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``p`` is Hermitian and idempotent within ``tol`` (Frobenius)."""
    m = as_square(p)
    return bool(
        np.linalg.norm(m @ m - m) <= tol and np.linalg.norm(m - dagger(m)) <= tol
    )


def proj_dim(p, tol: float = DEFAULT_TOL) -> int:
    """Rank of a projector, read off its trace."""
    m = as_square(p)
    if not is_projector(m, tol):
        raise ValueError("proj_dim: matrix is not a projector")
    t = np.trace(m).real
    r = int(round(t))
    if abs(t - r) > tol:
        raise ValueError(f"proj_dim: trace {t} is not an integer")
    return r


def permutation_operator(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Operator sending ``u_0 (x) ... (x) u_{m-1}`` to ``u_perm[0] (x) ... (x) u_perm[m-1]``.

    ``dims[k]`` is the dimension of the k-th input factor.  The result is an
    exact 0/1 matrix.
    """
    dims = [int(d) for d in dims]
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(len(dims))):
        raise ValueError(f"not a permutation: {perm}")
    if any(d < 1 for d in dims):
        raise ValueError("factor dimensions must be positive")
    total = int(np.prod(dims))
    source = np.arange(total).reshape(dims).transpose(perm).ravel()
    out = np.zeros((total, total))
    out[np.arange(total), source] = 1.0
    return out


def swap_operator(n: int) -> np.ndarray:
    """The interchange ``M(u (x) v) = v (x) u`` on C^n (x) C^n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return permutation_operator([n, n], [1, 0])


def cyclic_shift_4(n: int) -> np.ndarray:
    """``S4(u1 (x) u2 (x) u3 (x) u4) = u2 (x) u3 (x) u4 (x) u1`` on the 4-fold product of C^n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return permutation_operator([n] * 4, [1, 2, 3, 0])


def unitary_exp(h: np.ndarray) -> np.ndarray:
    """``exp(i h)`` for Hermitian ``h``."""
    w, v = np.linalg.eigh(hermitian_part(h))
    return (v * np.exp(1j * w)) @ dagger(v)


def is_unitary(u, tol: float = DEFAULT_TOL) -> bool:
    m = as_square(u)
    return bool(np.max(np.abs(dagger(m) @ m - np.eye(len(m)))) <= tol)


# -- seeded random matrices ---------------------------------------------------


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return hermitian_part(z)


def random_density_matrix(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    z = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = z @ dagger(z)
    return hermitian_part(rho / np.trace(rho).real)


def random_projector(n: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(n, rng)[:, :rank]
    return u @ dagger(u)


def random_resolution(n: int, rng: np.random.Generator, parts: int | None = None) -> list[np.ndarray]:
    """Random resolution of the identity on C^n into ``parts`` nonzero projectors."""
    parts = int(rng.integers(1, n + 1)) if parts is None else parts
    if not 1 <= parts <= n:
        raise ValueError("parts must lie in [1, n]")
    cuts = np.sort(rng.choice(np.arange(1, n), size=parts - 1, replace=False)) if parts > 1 else []
    edges = [0, *[int(c) for c in cuts], n]
    u = random_unitary(n, rng)
    return [u[:, a:b] @ dagger(u[:, a:b]) for a, b in zip(edges[:-1], edges[1:])]
