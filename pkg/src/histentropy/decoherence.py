"""Decoherence functions and decoherence operators.

A decoherence function ``d(a, b)`` on history propositions over V is either
backed by an explicit operator X on V (x) V, with ``d(a, b) = tr((a (x) b) X)``,
or by the chain-operator recipe of n-time quantum mechanics,
``d(a, b) = tr(C_a^dagger rho C_b)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .histories import (
    HistoryProposition,
    HomogeneousHistory,
    Window,
    homogeneous_to_proposition,
    identity_history,
    oplus,
)
from .linalg import (
    DEFAULT_TOL,
    as_square,
    check_density_matrix,
    cyclic_shift_4,
    dagger,
    hermitian_part,
    is_hermitian,
    kron,
    permutation_operator,
    random_projector,
    random_resolution,
    random_unitary,
    swap_operator,
)


class InconsistentWindowError(ValueError):
    """Raised when an operation needs a window that is consistent for ``d``."""

    def __init__(self, residual: float, tol: float):
        super().__init__(f"window is not consistent: residual {residual:.6g} > tol {tol:.3g}")
        self.residual = residual
        self.tol = tol


def _dim_of_square(n: int) -> int:
    r = int(round(np.sqrt(n)))
    if r * r != n:
        raise ValueError(f"operator dimension {n} is not a perfect square")
    return r


@dataclass(frozen=True, eq=False)
class DecoherenceOperator:
    """Operator X on V (x) V; ``dim_v`` is the dimension of V."""

    x: np.ndarray
    dim_v: int = field(init=False)

    def __init__(self, x):
        m = np.array(as_square(x, "X"))
        m.setflags(write=False)
        object.__setattr__(self, "x", m)
        object.__setattr__(self, "dim_v", _dim_of_square(m.shape[0]))

    def tensor4(self) -> np.ndarray:
        """``X`` reshaped so that ``X[(c,d),(a,b)] == t[c, d, a, b]``."""
        n = self.dim_v
        return self.x.reshape(n, n, n, n)


def diagonal_values(x: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """``tr((a (x) a) X)`` for each matrix ``a`` in a stack."""
    n = stack.shape[-1]
    t = np.asarray(x).reshape(n, n, n, n)
    partial = np.einsum("mac,cdab->mdb", stack, t, optimize=True)
    return np.einsum("mbd,mdb->m", stack, partial, optimize=True)


def _prop_matrix(p) -> np.ndarray:
    if isinstance(p, HistoryProposition):
        return p.matrix
    if isinstance(p, HomogeneousHistory):
        return p.matrix()
    return np.asarray(p, dtype=complex)


@dataclass(frozen=True)
class Recipe:
    """Canonical-theory data behind a decoherence function."""

    rho: np.ndarray
    evolutions: tuple[np.ndarray, ...]
    n_times: int

    @property
    def h_dim(self) -> int:
        return self.rho.shape[0]


class DecoherenceFunction:
    """Base class; subclasses implement :meth:`eval`."""

    dim_v: int
    recipe: Recipe | None = None
    operator: DecoherenceOperator | None = None

    def eval(self, a, b) -> complex:
        raise NotImplementedError

    def __call__(self, a, b) -> complex:
        return self.eval(a, b)

    def gram(self, blocks: Sequence) -> np.ndarray:
        """Matrix ``G[i, j] = d(blocks[i], blocks[j])``."""
        k = len(blocks)
        g = np.zeros((k, k), dtype=complex)
        for i in range(k):
            for j in range(k):
                g[i, j] = self.eval(blocks[i], blocks[j])
        return g

    def identity(self) -> HistoryProposition:
        """Unit proposition in a form this backend can evaluate."""
        return HistoryProposition.identity(self.dim_v)


class ExplicitDecoherence(DecoherenceFunction):
    """``d(a, b) = tr((a (x) b) X)``."""

    def __init__(self, operator: DecoherenceOperator, recipe: Recipe | None = None):
        self.operator = operator
        self.dim_v = operator.dim_v
        self.recipe = recipe
        self._t = operator.tensor4()

    def _check(self, m: np.ndarray) -> np.ndarray:
        if m.shape != (self.dim_v, self.dim_v):
            raise ValueError(f"proposition shape {m.shape} does not match dim V = {self.dim_v}")
        return m

    def eval(self, a, b) -> complex:
        am = self._check(_prop_matrix(a))
        bm = self._check(_prop_matrix(b))
        return complex(np.einsum("ac,bd,cdab->", am, bm, self._t, optimize=True))

    def gram(self, blocks: Sequence) -> np.ndarray:
        stack = np.array([self._check(_prop_matrix(p)) for p in blocks])
        partial = np.einsum("iac,cdab->idb", stack, self._t, optimize=True)
        return np.einsum("jbd,idb->ij", stack, partial, optimize=True)

    def diagonal_values(self, stack: np.ndarray) -> np.ndarray:
        return diagonal_values(self.operator.x, stack)

    def identity(self) -> HistoryProposition:
        if self.recipe is not None:
            return identity_history(self.recipe.h_dim, self.recipe.n_times)
        return HistoryProposition.identity(self.dim_v)


class ChainDecoherence(DecoherenceFunction):
    """n-time decoherence function from rho and the evolution operators.

    ``evolutions`` is ``[U(t0,t1), U(t1,t2), ..., U(t_{n-1},t_n), U(t_n,t0)]``;
    they need not be unitary.
    """

    def __init__(self, rho: np.ndarray, evolutions: Sequence[np.ndarray], n_times: int):
        self.recipe = Recipe(rho, tuple(evolutions), n_times)
        self.dim_v = rho.shape[0] ** n_times

    def chain_operator(self, h: HomogeneousHistory) -> np.ndarray:
        us = self.recipe.evolutions
        if h.n_times != self.recipe.n_times or h.h_dim != self.recipe.h_dim:
            raise ValueError("history does not match the recipe's times or H")
        c = us[0]
        for p, u in zip(h.projectors, us[1:]):
            c = c @ p @ u
        return c

    def _components(self, p) -> tuple[HomogeneousHistory, ...]:
        if isinstance(p, HomogeneousHistory):
            return (p,)
        if isinstance(p, HistoryProposition) and p.components is not None:
            return p.components
        raise ValueError(
            "chain backend needs propositions given as sums of homogeneous histories"
        )

    def _summed_chain(self, p) -> np.ndarray:
        return sum(self.chain_operator(h) for h in self._components(p))

    def eval(self, a, b) -> complex:
        ca = self._summed_chain(a)
        cb = self._summed_chain(b)
        return complex(np.trace(dagger(ca) @ self.recipe.rho @ cb))

    def gram(self, blocks: Sequence) -> np.ndarray:
        cs = np.array([self._summed_chain(p) for p in blocks])
        left = np.einsum("iba,bc->iac", np.conj(cs), self.recipe.rho)
        return np.einsum("iac,jca->ij", left, cs)

    def identity(self) -> HistoryProposition:
        return identity_history(self.recipe.h_dim, self.recipe.n_times)


class MixtureDecoherence(DecoherenceFunction):
    """Pointwise ``lam * d1 + (1 - lam) * d2``."""

    def __init__(self, d1: DecoherenceFunction, d2: DecoherenceFunction, lam: float):
        self.d1, self.d2, self.lam = d1, d2, lam
        self.dim_v = d1.dim_v

    def eval(self, a, b) -> complex:
        return self.lam * self.d1.eval(a, b) + (1 - self.lam) * self.d2.eval(a, b)

    def gram(self, blocks: Sequence) -> np.ndarray:
        return self.lam * self.d1.gram(blocks) + (1 - self.lam) * self.d2.gram(blocks)

    def identity(self) -> HistoryProposition:
        return self.d1.identity()


def explicit(x) -> ExplicitDecoherence:
    return ExplicitDecoherence(x if isinstance(x, DecoherenceOperator) else DecoherenceOperator(x))


def from_single_time(rho, tol: float = DEFAULT_TOL) -> ExplicitDecoherence:
    """``d(P, Q) = tr(P rho Q)`` realised as ``X = M (1 (x) rho)``."""
    r = check_density_matrix(rho, tol)
    n = r.shape[0]
    x = swap_operator(n) @ kron(np.eye(n), r)
    return ExplicitDecoherence(DecoherenceOperator(x), Recipe(r, (np.eye(n), np.eye(n)), 1))


def from_two_time(rho, tol: float = DEFAULT_TOL) -> ExplicitDecoherence:
    """Two-time decoherence operator for trivial evolution.

    ``X = [R (x) 1][S4][1 (x) (rho (x) 1)][R (x) 1]`` on (H (x) H) (x) (H (x) H), with
    R the swap on H (x) H.
    """
    r = check_density_matrix(rho, tol)
    n = r.shape[0]
    i1, i2 = np.eye(n), np.eye(n * n)
    r2 = kron(swap_operator(n), i2)
    middle = kron(i2, kron(r, i1))
    x = r2 @ cyclic_shift_4(n) @ middle @ r2
    return ExplicitDecoherence(DecoherenceOperator(x), Recipe(r, (i1, i1, i1), 2))


def from_chain(rho, evolutions: Sequence, n_times: int, tol: float = DEFAULT_TOL) -> ChainDecoherence:
    r = check_density_matrix(rho, tol)
    us = [as_square(u, "evolution") for u in evolutions]
    if n_times < 1:
        raise ValueError("n_times must be >= 1")
    if len(us) != n_times + 1:
        raise ValueError(f"need {n_times + 1} evolution operators, got {len(us)}")
    for u in us:
        if u.shape != r.shape:
            raise ValueError("evolution operators must act on H")
    return ChainDecoherence(r, us, n_times)


def convex_combine(d1: DecoherenceFunction, d2: DecoherenceFunction, lam: float) -> DecoherenceFunction:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if d1.dim_v != d2.dim_v:
        raise ValueError("decoherence functions act on different spaces")
    if isinstance(d1, ExplicitDecoherence) and isinstance(d2, ExplicitDecoherence):
        x = lam * d1.operator.x + (1 - lam) * d2.operator.x
        return ExplicitDecoherence(DecoherenceOperator(x))
    return MixtureDecoherence(d1, d2, lam)


def tensor_product(d1: ExplicitDecoherence, d2: ExplicitDecoherence) -> ExplicitDecoherence:
    """Decoherence function on V1 (x) V2 with ``d(a1 (x) a2, b1 (x) b2) = d1(a1, b1) d2(a2, b2)``."""
    n1, n2 = d1.dim_v, d2.dim_v
    q = permutation_operator([n1, n1, n2, n2], [0, 2, 1, 3])
    x = q @ np.kron(d1.operator.x, d2.operator.x) @ q.T
    return ExplicitDecoherence(DecoherenceOperator(x))


# -- validation -------------------------------------------------------------


@dataclass
class ValidationReport:
    swap_residual: float
    trace_residual: float
    min_diagonal: float
    worst_projector_rank: int
    samples_checked: int
    min_eigenvalue: float
    tol: float

    @property
    def swap_ok(self) -> bool:
        return self.swap_residual <= self.tol

    @property
    def positivity_ok(self) -> bool:
        return self.min_diagonal >= -self.tol

    @property
    def trace_ok(self) -> bool:
        return self.trace_residual <= self.tol

    @property
    def passed(self) -> bool:
        return self.swap_ok and self.positivity_ok and self.trace_ok

    @property
    def failures(self) -> list[str]:
        out = []
        if not self.swap_ok:
            out.append("swap_symmetry")
        if not self.positivity_ok:
            out.append("diagonal_positivity")
        if not self.trace_ok:
            out.append("normalization")
        return out

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failures": self.failures,
            "swap_residual": self.swap_residual,
            "trace_residual": self.trace_residual,
            "min_diagonal": self.min_diagonal,
            "worst_projector_rank": self.worst_projector_rank,
            "samples_checked": self.samples_checked,
            "min_eigenvalue_hermitian_part": self.min_eigenvalue,
            "tol": self.tol,
        }


def validate(
    x: DecoherenceOperator,
    sample_count: int = 200,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    windows: Sequence[Window] = (),
) -> ValidationReport:
    """Check swap symmetry, unit trace, and sampled diagonal positivity.

    Positivity is probed on every standard-basis rank-1 projector, every block
    of ``windows``, and ``sample_count`` random projectors of each rank.
    """
    n = x.dim_v
    m = swap_operator(n)
    swap_res = float(np.max(np.abs(m @ x.x @ m - dagger(x.x))))
    trace_res = float(abs(np.trace(x.x) - 1.0))

    rng = np.random.default_rng(seed)
    probes = [np.diag(np.eye(n)[k]).astype(complex) for k in range(n)]
    probes += [b.matrix for w in windows for b in w]
    for rank in range(1, n + 1):
        probes += [random_projector(n, rank, rng) for _ in range(sample_count)]
    stack = np.array(probes)
    diag = ExplicitDecoherence(x).diagonal_values(stack).real
    worst = int(np.argmin(diag))
    min_eig = float(np.linalg.eigvalsh(hermitian_part(x.x)).min())
    return ValidationReport(
        swap_residual=swap_res,
        trace_residual=trace_res,
        min_diagonal=float(diag[worst]),
        worst_projector_rank=int(round(np.trace(stack[worst]).real)),
        samples_checked=len(probes),
        min_eigenvalue=min_eig,
        tol=tol,
    )


# -- impurity splitting -----------------------------------------------------


def impurity_operator(s1, s2, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``Y = i (s1 (x) s2 - s2 (x) s1)``; its diagonal ``tr((a (x) a) Y)`` vanishes."""
    a = as_square(s1, "s1")
    b = as_square(s2, "s2")
    if a.shape != b.shape:
        raise ValueError("s1 and s2 must act on the same space")
    if not (is_hermitian(a, tol) and is_hermitian(b, tol)):
        raise ValueError("s1 and s2 must be Hermitian")
    return 1j * (np.kron(a, b) - np.kron(b, a))


def impurity_split(x: DecoherenceOperator, s1, s2, tol: float = DEFAULT_TOL):
    """Return ``(X + Y, X - Y)``, two decoherence operators averaging to X."""
    y = impurity_operator(s1, s2, tol)
    if y.shape != x.x.shape:
        raise ValueError("s1/s2 do not act on V")
    return DecoherenceOperator(x.x + y), DecoherenceOperator(x.x - y)


# -- windows, canonical forms, W-equivalence -------------------------------


def canonical_operator(d: DecoherenceFunction, w: Window, tol: float = DEFAULT_TOL) -> DecoherenceOperator:
    """Block-diagonal representative ``sum_i d(a_i, a_i) / dim(a_i)^2  a_i (x) a_i``."""
    g = d.gram(w.blocks)
    res = float(np.max(np.abs(g - np.diag(np.diag(g))))) if len(w) > 1 else 0.0
    if res > tol:
        raise InconsistentWindowError(res, tol)
    probs = np.diag(g).real
    x = sum(p / b.dim**2 * np.kron(b.matrix, b.matrix) for p, b in zip(probs, w.blocks))
    return DecoherenceOperator(x)


@dataclass(frozen=True, eq=False)
class WEquivalenceClass:
    window: Window
    diagonal: tuple[float, ...]


def equivalence_class(d: DecoherenceFunction, w: Window, tol: float = DEFAULT_TOL) -> WEquivalenceClass:
    g = d.gram(w.blocks)
    res = float(np.max(np.abs(g - np.diag(np.diag(g))))) if len(w) > 1 else 0.0
    if res > tol:
        raise InconsistentWindowError(res, tol)
    return WEquivalenceClass(w, tuple(float(v) for v in np.diag(g).real))


def w_equivalent(d1: DecoherenceFunction, d2: DecoherenceFunction, w: Window, tol: float = DEFAULT_TOL) -> bool:
    try:
        c1 = equivalence_class(d1, w, tol)
        c2 = equivalence_class(d2, w, tol)
    except InconsistentWindowError:
        return False
    return bool(np.max(np.abs(np.subtract(c1.diagonal, c2.diagonal))) <= tol)


def is_w_pure(cls: WEquivalenceClass, tol: float = DEFAULT_TOL) -> bool:
    return sum(abs(p) > tol for p in cls.diagonal) == 1


# -- sampled axiom checks ---------------------------------------------------


def _history_shape(d: DecoherenceFunction) -> tuple[int, int] | None:
    if isinstance(d, ExplicitDecoherence):
        return None
    if d.recipe is not None:
        return d.recipe.h_dim, d.recipe.n_times
    if isinstance(d, MixtureDecoherence):
        return _history_shape(d.d1) or _history_shape(d.d2)
    return None


def random_disjoint_triple(d: DecoherenceFunction, rng: np.random.Generator):
    """Random ``(beta, gamma, delta)`` with ``beta gamma = 0``, evaluable by ``d``.

    Chain-backed functions get homogeneous histories; the disjoint pair differs
    only at the first time.
    """
    shape = _history_shape(d)
    if shape is None:
        n = d.dim_v
        u = random_unitary(n, rng)
        cut1 = int(rng.integers(1, n)) if n > 1 else 1
        cut2 = int(rng.integers(cut1, n + 1))
        beta = u[:, :cut1] @ dagger(u[:, :cut1])
        gamma = u[:, cut1:cut2] @ dagger(u[:, cut1:cut2])
        delta = random_projector(n, int(rng.integers(0, n + 1)), rng)
        return HistoryProposition(beta, tol=1e-8), HistoryProposition(gamma, tol=1e-8), HistoryProposition(delta, tol=1e-8)
    h, n_times = shape
    q, rest = random_resolution(h, rng, parts=2) if h > 1 else (np.eye(1), np.zeros((1, 1)))
    later = [random_projector(h, int(rng.integers(1, h + 1)), rng) for _ in range(n_times - 1)]
    beta = HomogeneousHistory([q, *later], tol=1e-8)
    gamma = HomogeneousHistory([rest, *later], tol=1e-8)
    delta = HomogeneousHistory(
        [random_projector(h, int(rng.integers(1, h + 1)), rng) for _ in range(n_times)], tol=1e-8
    )
    return tuple(homogeneous_to_proposition(x) for x in (beta, gamma, delta))


def axiom_residuals(d: DecoherenceFunction, samples: int = 200, seed: int = 0) -> dict[str, float]:
    """Worst sampled violations of normalization, Hermiticity, additivity, positivity."""
    rng = np.random.default_rng(seed)
    one = d.identity()
    herm = add = 0.0
    min_diag = np.inf
    for _ in range(samples):
        beta, gamma, delta = random_disjoint_triple(d, rng)
        alpha = oplus(beta, gamma, tol=1e-8)
        herm = max(herm, abs(d(beta, delta) - np.conj(d(delta, beta))))
        add = max(add, abs(d(alpha, delta) - d(beta, delta) - d(gamma, delta)))
        min_diag = min(min_diag, d(beta, beta).real, d(delta, delta).real)
    return {
        "normalization": float(abs(d(one, one) - 1.0)),
        "hermiticity": float(herm),
        "additivity": float(add),
        "min_diagonal": float(min_diag),
    }
