"""Problem files: a JSON document describing a decoherence function and windows.

Complex numbers are ``[re, im]`` pairs and matrices are row-major nested
lists of them.  A window is a list of blocks; a block is either a matrix on V,
``{"history": [P1, ..., Pn]}`` for a homogeneous history, or
``{"sum": [{"history": ...}, ...]}`` for a disjoint sum of homogeneous ones.
Chain (``n_time``) problems need the history forms.

Example::

    {
      "kind": "single_time",
      "dim_h": 2,
      "rho": [[[0.75, 0], [0, 0]], [[0, 0], [0.25, 0]]],
      "windows": {"z": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
                        [[[0, 0], [0, 0]], [[0, 0], [1, 0]]]]}
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .decoherence import (
    DecoherenceFunction,
    explicit,
    from_chain,
    from_single_time,
    from_two_time,
)
from .histories import (
    HistoryProposition,
    HomogeneousHistory,
    Window,
    homogeneous_to_proposition,
    make_window,
    oplus,
)

FORMAT_TAG = "histentropy-problem/1"
KINDS = ("explicit_x", "single_time", "n_time", "two_time")


class ParseError(ValueError):
    pass


def encode_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(obj, name: str = "matrix") -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{name}: not a nested numeric array ({exc})") from None
    if arr.ndim == 2:
        arr = np.stack([arr, np.zeros_like(arr)], axis=-1)
    if arr.ndim != 3 or arr.shape[-1] != 2 or arr.shape[0] != arr.shape[1]:
        raise ParseError(f"{name}: expected a square matrix of [re, im] pairs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{name}: non-finite entries")
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass
class ProblemSpec:
    kind: str
    dim_h: int
    n_times: int = 1
    rho: np.ndarray | None = None
    evolutions: list[np.ndarray] = field(default_factory=list)
    x: np.ndarray | None = None
    windows: dict[str, list] = field(default_factory=dict)
    tolerance: float = 1e-9
    seed: int = 0

    @property
    def dim_v(self) -> int:
        return self.dim_h**self.n_times

    def to_json(self) -> dict:
        out: dict = {
            "format": FORMAT_TAG,
            "kind": self.kind,
            "dim_h": self.dim_h,
            "n_times": self.n_times,
        }
        if self.rho is not None:
            out["rho"] = encode_matrix(self.rho)
        if self.evolutions:
            out["evolutions"] = [encode_matrix(u) for u in self.evolutions]
        if self.x is not None:
            out["x"] = encode_matrix(self.x)
        if self.windows:
            out["windows"] = {name: [_encode_block(b) for b in blocks] for name, blocks in self.windows.items()}
        out["tolerance"] = self.tolerance
        out["seed"] = self.seed
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    def digest(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _encode_block(block) -> object:
    if isinstance(block, HomogeneousHistory):
        return {"history": [encode_matrix(p) for p in block.projectors]}
    if isinstance(block, list):
        return {"sum": [_encode_block(h) for h in block]}
    return encode_matrix(block)


def _decode_block(obj, name: str):
    if isinstance(obj, dict):
        if "history" in obj:
            mats = [decode_matrix(p, f"{name}.history[{i}]") for i, p in enumerate(obj["history"])]
            try:
                return HomogeneousHistory(mats)
            except ValueError as exc:
                raise ParseError(f"{name}: {exc}") from None
        if "sum" in obj:
            parts = [_decode_block(h, f"{name}.sum[{i}]") for i, h in enumerate(obj["sum"])]
            if not all(isinstance(p, HomogeneousHistory) for p in parts):
                raise ParseError(f"{name}: 'sum' entries must be histories")
            return parts
        raise ParseError(f"{name}: block object needs 'history' or 'sum'")
    return decode_matrix(obj, name)


def _require(doc: dict, key: str):
    if key not in doc:
        raise ParseError(f"missing field {key!r}")
    return doc[key]


def parse_problem(text: str) -> ProblemSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("problem file must be a JSON object")
    kind = _require(doc, "kind")
    if kind not in KINDS:
        raise ParseError(f"unknown kind {kind!r}; expected one of {KINDS}")
    dim_h = _require(doc, "dim_h")
    if not isinstance(dim_h, int) or dim_h < 1:
        raise ParseError("dim_h must be a positive integer")
    default_n = {"single_time": 1, "two_time": 2}.get(kind, 1)
    n_times = doc.get("n_times", default_n)
    if not isinstance(n_times, int) or n_times < 1:
        raise ParseError("n_times must be a positive integer")
    if kind in ("single_time", "two_time") and n_times != default_n:
        raise ParseError(f"{kind} problems have n_times = {default_n}")
    spec = ProblemSpec(kind=kind, dim_h=dim_h, n_times=n_times)
    spec.tolerance = float(doc.get("tolerance", 1e-9))
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ParseError("seed must be an integer")
    spec.seed = seed

    if kind == "explicit_x":
        spec.x = decode_matrix(_require(doc, "x"), "x")
        if spec.x.shape[0] != spec.dim_v**2:
            raise ParseError(f"x must be {spec.dim_v ** 2}x{spec.dim_v ** 2} for dim V = {spec.dim_v}")
    else:
        spec.rho = decode_matrix(_require(doc, "rho"), "rho")
        if spec.rho.shape[0] != dim_h:
            raise ParseError(f"rho must be {dim_h}x{dim_h}")
    if kind == "n_time":
        evs = _require(doc, "evolutions")
        spec.evolutions = [decode_matrix(u, f"evolutions[{i}]") for i, u in enumerate(evs)]
        if len(spec.evolutions) != n_times + 1:
            raise ParseError(f"n_time needs {n_times + 1} evolutions, got {len(spec.evolutions)}")
        for u in spec.evolutions:
            if u.shape[0] != dim_h:
                raise ParseError("evolutions must act on H")

    windows = doc.get("windows", {})
    if not isinstance(windows, dict):
        raise ParseError("windows must be an object mapping names to block lists")
    for name, blocks in windows.items():
        if not isinstance(blocks, list) or not blocks:
            raise ParseError(f"window {name!r} must be a non-empty list")
        spec.windows[name] = [_decode_block(b, f"windows.{name}[{i}]") for i, b in enumerate(blocks)]
    return spec


def load_problem(path) -> ProblemSpec:
    try:
        with open(path) as fh:
            return parse_problem(fh.read())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None


def build_decoherence(spec: ProblemSpec) -> DecoherenceFunction:
    tol = max(spec.tolerance, 1e-12)
    if spec.kind == "explicit_x":
        return explicit(spec.x)
    if spec.kind == "single_time":
        return from_single_time(spec.rho, tol)
    if spec.kind == "two_time":
        return from_two_time(spec.rho, tol)
    return from_chain(spec.rho, spec.evolutions, spec.n_times, tol)


def _block_proposition(block) -> HistoryProposition:
    if isinstance(block, HomogeneousHistory):
        return homogeneous_to_proposition(block)
    if isinstance(block, list):
        acc = homogeneous_to_proposition(block[0])
        for h in block[1:]:
            acc = oplus(acc, homogeneous_to_proposition(h))
        return acc
    return HistoryProposition(block)


def build_window(spec: ProblemSpec, name: str) -> Window:
    if name not in spec.windows:
        raise KeyError(name)
    tol = max(spec.tolerance, 1e-12)
    props = [_block_proposition(b) for b in spec.windows[name]]
    for p in props:
        if p.dim_v != spec.dim_v:
            raise ValueError(f"window {name!r} blocks are {p.dim_v}-dimensional, dim V is {spec.dim_v}")
    return make_window(props, tol)
