"""

    netctl.data.py
    ~~~~~~~~~~~~~~
    Data structures.

    @author: z33k

"""
import math
from dataclasses import asdict, dataclass, fields
from functools import cached_property
from typing import Any, Type

import numpy as np

from netctl.constants import Json, T


def _serialize(data: Any) -> Any:  # recursive
    if isinstance(data, np.ndarray):
        data = data.tolist()
    if isinstance(data, tuple):
        data = list(data)
    if isinstance(data, list):
        for idx, item in enumerate(data):
            data[idx] = _serialize(item)
    elif isinstance(data, dict):
        data = {k: v for k, v in data.items() if v is not None}
        for k, v in data.items():
            data[k] = _serialize(v)
    elif isinstance(data, np.integer):
        data = int(data)
    elif isinstance(data, (float, np.floating)):
        data = float(data)
        if not math.isfinite(data):  # JSON has no infinities
            data = str(data)
    return data


_FIELD_NAMES_TO_CLASS_NAMES = {
    "meta": "NetworkMeta",
    "degrees": "DegreeSequence",
    "result": "ScalingResult",
    "results": "ScalingResult",
}


def _reconstruct_from_json(types: dict[str, Type[T]], field: str, data: Json) -> T | Json:
    if not isinstance(data, dict):  # not a structure to reconstruct
        return data
    if cls_name := _FIELD_NAMES_TO_CLASS_NAMES.get(field):
        if type_ := types.get(cls_name):
            if hasattr(type_, "from_json"):
                return type_.from_json(data)
    return data


def _deserialize_substructs(data: Json) -> dict:
    types = {cls.__name__: cls for cls in _JsonSerializable.__subclasses__()}
    for k, v in data.items():
        if isinstance(v, list):
            data[k] = [_reconstruct_from_json(types, k, item) for item in v]
        else:
            data[k] = _reconstruct_from_json(types, k, v)
    return data


def _freeze(obj: Any) -> Any:
    """Turn nested lists into nested tuples.
    """
    return tuple(_freeze(item) for item in obj) if isinstance(obj, list) else obj


def _deserialize_floats(obj: Any) -> Any:
    if isinstance(obj, list):
        return [_deserialize_floats(item) for item in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


@dataclass(frozen=True)
class _JsonSerializable:
    @property
    def json(self) -> Json:
        data = {k: v for k, v in asdict(self).items() if v is not None}
        return _serialize(data)

    @classmethod
    def from_json(cls, data: Json) -> "_JsonSerializable":
        field_names = {f.name for f in fields(cls)}
        data = {k: v for k, v in data.items() if k in field_names}  # properties are dumped too
        for f in fields(cls):
            if data.get(f.name) is None:
                data[f.name] = None
        data = {k: _deserialize_floats(v) for k, v in data.items()}
        data = _deserialize_substructs(data)
        for f in fields(cls):
            if isinstance(data.get(f.name), list):
                data[f.name] = _freeze(data[f.name])
        return cls(**data)


@dataclass(frozen=True)
class NetworkMeta(_JsonSerializable):
    gamma_in: float | None = None
    gamma_out: float | None = None
    k_av: float | None = None
    seed: int | None = None
    source: str | None = None


@dataclass(frozen=True)
class DegreeSequence(_JsonSerializable):
    in_degrees: tuple[int, ...]
    out_degrees: tuple[int, ...]

    def __post_init__(self) -> None:
        if sum(self.in_degrees) != sum(self.out_degrees):
            raise ValueError("In- and out-degrees must sum to the same edge count")

    @property
    def edge_count(self) -> int:
        return sum(self.in_degrees)

    @property
    def average(self) -> float:
        return self.edge_count / len(self.in_degrees) if self.in_degrees else 0.0


@dataclass(frozen=True)
class Network(_JsonSerializable):
    """Directed weighted network with self-dynamics on the diagonal.

    An edge ``(src, dst)`` means node ``dst`` receives from node ``src``, i.e. the adjacency
    entry ``A[dst, src]`` holds its weight. Until weights, diagonal noise and the stabilizing
    shift are assigned they default to 1, 0 and 0 respectively.
    """
    n: int
    edges: tuple[tuple[int, int], ...]
    weights: tuple[float, ...] | None = None
    diagonal_noise: tuple[float, ...] | None = None
    shift: float | None = None
    meta: NetworkMeta | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"Network needs at least one node, got: {self.n}")
        seen = set()
        for src, dst in self.edges:
            if src == dst:
                raise ValueError(f"Self-edges are not stored in the edge set: {(src, dst)}")
            if not (0 <= src < self.n and 0 <= dst < self.n):
                raise ValueError(f"Edge {(src, dst)} out of range for {self.n} node(s)")
            if (src, dst) in seen:
                raise ValueError(f"Duplicate edge: {(src, dst)}")
            seen.add((src, dst))
        if self.weights is not None and len(self.weights) != len(self.edges):
            raise ValueError("Weights must match edges one-to-one")
        if self.diagonal_noise is not None and len(self.diagonal_noise) != self.n:
            raise ValueError("Diagonal noise must match node count")
        if self.labels is not None and len(self.labels) != self.n:
            raise ValueError("Labels must match node count")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def is_weighted(self) -> bool:
        return self.weights is not None

    @property
    def is_stabilized(self) -> bool:
        return self.shift is not None

    @property
    def diagonal(self) -> np.ndarray:
        noise = np.zeros(self.n) if self.diagonal_noise is None else np.array(self.diagonal_noise)
        return noise + (self.shift or 0.0)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        weights = self.weights if self.weights is not None else [1.0] * len(self.edges)
        for (src, dst), w in zip(self.edges, weights):
            a[dst, src] = w
        a[np.diag_indices(self.n)] = self.diagonal
        a.flags.writeable = False
        return a

    @property
    def degrees(self) -> DegreeSequence:
        in_degrees, out_degrees = [0] * self.n, [0] * self.n
        for src, dst in self.edges:
            out_degrees[src] += 1
            in_degrees[dst] += 1
        return DegreeSequence(tuple(in_degrees), tuple(out_degrees))

    @property
    def json(self) -> Json:
        weights = self.weights if self.weights is not None else [1.0] * len(self.edges)
        data = {
            "n": self.n,
            "edges": [[src, dst, w] for (src, dst), w in zip(self.edges, weights)],
            "diag": self.diagonal,
            "noise": self.diagonal_noise,
            "shift": self.shift,
            "weighted": self.is_weighted,
            "meta": self.meta.json if self.meta else None,
            "labels": self.labels,
        }
        return _serialize(data)

    @classmethod
    def from_json(cls, data: Json) -> "Network":
        edges = tuple((int(src), int(dst)) for src, dst, _ in data["edges"])
        weights = tuple(float(w) for *_, w in data["edges"])
        noise = data.get("noise")
        labels = data.get("labels")
        return cls(
            n=int(data["n"]),
            edges=edges,
            weights=weights if data.get("weighted", True) else None,
            diagonal_noise=tuple(noise) if noise is not None else None,
            shift=data.get("shift"),
            meta=NetworkMeta.from_json(data["meta"]) if data.get("meta") else None,
            labels=tuple(labels) if labels is not None else None,
        )


@dataclass(frozen=True)
class _NodeSet(_JsonSerializable):
    nodes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"Node indices must be distinct: {self.nodes}")
        if any(node < 0 for node in self.nodes):
            raise ValueError(f"Node indices must be non-negative: {self.nodes}")

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node: int) -> bool:
        return node in self.nodes

    def issubset(self, other: "_NodeSet") -> bool:
        return set(self.nodes) <= set(other.nodes)

    def validate(self, n: int) -> None:
        if any(node >= n for node in self.nodes):
            raise IndexError(f"Node index out of range for {n} node(s): {self.nodes}")


@dataclass(frozen=True)
class InputSet(_NodeSet):
    """Driver nodes, one independent control signal each.
    """
    @property
    def m(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class TargetSet(_NodeSet):
    """Nodes with a prescribed final state.
    """
    @property
    def p(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class EnergySamples(_JsonSerializable):
    """Per-fraction samples of log10 of the worst-case energy (``None`` marks a target set
    that failed the controllability threshold).
    """
    n: int
    fractions: tuple[float, ...]
    samples: tuple[tuple[float | None, ...], ...]

    @property
    def failures(self) -> int:
        return sum(1 for row in self.samples for value in row if value is None)

    def valid(self, idx: int) -> np.ndarray:
        return np.array([v for v in self.samples[idx] if v is not None], dtype=float)


@dataclass(frozen=True)
class ScalingResult(_JsonSerializable):
    """Fitted energy scaling law.

    ``mean_logE`` and ``std_logE`` are in log10, ``eta`` is the natural-log slope so that
    E_max ~ exp(eta * p/n + c).
    """
    fractions: tuple[float, ...]
    mean_logE: tuple[float, ...]
    std_logE: tuple[float, ...]
    eta: float
    intercept: float
    r_squared: float
    samples_per_point: int
    seed: int | None = None
    failures: int = 0
    log_convention: str = "mean_logE/std_logE: log10; eta: natural-log slope vs p/n"

    def __post_init__(self) -> None:
        ascending = all(a < b for a, b in zip(self.fractions, self.fractions[1:]))
        if not self.fractions or not ascending or not all(0 < f <= 1 for f in self.fractions):
            raise ValueError(f"Fractions must be ascending in (0, 1]: {self.fractions}")
        if not math.isfinite(self.eta):
            raise ValueError("Fitted eta must be finite")

    @property
    def slope_log10(self) -> float:
        return self.eta / math.log(10)


@dataclass(frozen=True)
class EnsembleResult(_JsonSerializable):
    """Scaling law over many network realizations.
    """
    results: tuple[ScalingResult, ...]
    eta_mean: float
    eta_std: float
    fractions: tuple[float, ...]
    mean_logE: tuple[float, ...]
    std_logE: tuple[float, ...]
    error_mode: str


@dataclass(frozen=True)
class DprReport(_JsonSerializable):
    eta_real: float
    eta_ensemble: tuple[float, ...]
    p_value: float
    replicas: int
    iterations: int
    degree_audit_passed: bool

    def __post_init__(self) -> None:
        if not 0 <= self.p_value <= 1:
            raise ValueError(f"p-value out of [0, 1]: {self.p_value}")
