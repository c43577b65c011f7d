"""

    netctl.netgen.py
    ~~~~~~~~~~~~~~~~
    Construct model networks (static scale-free model and its Erdős–Rényi limit), assign edge
    weights and stabilizing diagonals, ingest real edge lists and rewire them preserving degrees.

    @author: z33k

"""
import json
import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import BinaryIO

import numpy as np
import scipy.linalg

from netctl.constants import DIAGONAL_NOISE_RANGE, DIAGONAL_RETRIES, DPR_ATTEMPTS_FACTOR, \
    DPR_ITERATIONS_FACTOR, EDGE_WEIGHT_RANGE, MAX_NODES, PathLike, SAMPLING_ATTEMPTS_FACTOR, \
    Seed, SPECTRAL_TOLERANCE, TARGET_MAX_REAL_EIGENVALUE
from netctl.data import Network, NetworkMeta
from netctl.utils import ParsingError, derive_rng, getfile, timed, to_rng
from netctl.utils.check_type import type_checker

_log = logging.getLogger(__name__)


class GenerationError(RuntimeError):
    """Raised whenever a network cannot be generated as requested.
    """


def _node_weights(n: int, gamma: float) -> np.ndarray:
    """Return static model's sampling probabilities ``i^(-alpha)``, ``alpha = 1/(gamma - 1)``.

    Infinite ``gamma`` yields uniform weights (the Erdős–Rényi limit).
    """
    if math.isinf(gamma):
        alpha = 0.0
    elif gamma > 2:
        alpha = 1 / (gamma - 1)
    else:
        raise ValueError(f"Power-law exponent must be greater than 2 or infinite, got: {gamma}")
    weights = np.arange(1, n + 1, dtype=float) ** -alpha
    return weights / weights.sum()


def generate_static(n: int, gamma_in: float, gamma_out: float, k_av: float,
                    seed: Seed = None) -> Network:
    """Generate a directed simple graph with the static model.

    Each of the ``round(n * k_av)`` edges has its source drawn with probability proportional to
    ``i^(-alpha_out)`` and its destination with probability proportional to ``j^(-alpha_in)``.
    Self-loops and duplicates are rejected. Weights and diagonals are left unassigned.

    Args:
        n: node count
        gamma_in: in-degree power-law exponent (``math.inf`` for the Erdős–Rényi limit)
        gamma_out: out-degree power-law exponent (``math.inf`` for the Erdős–Rényi limit)
        k_av: average in- (and out-) degree
        seed: master seed or an already built random generator

    Returns:
        an unweighted network
    """
    if n < 2:
        raise ValueError(f"Static model needs at least 2 nodes, got: {n}")
    if k_av <= 0:
        raise ValueError(f"Average degree must be positive, got: {k_av}")
    edge_count = round(n * k_av)
    if edge_count > n * (n - 1):
        raise GenerationError(
            f"Infeasible edge count: {edge_count} exceeds simple graph capacity {n * (n - 1)}")
    p_out, p_in = _node_weights(n, gamma_out), _node_weights(n, gamma_in)

    rng = to_rng(seed)
    edges: dict[tuple[int, int], None] = {}  # insertion-ordered set
    budget = SAMPLING_ATTEMPTS_FACTOR * edge_count + 1000
    attempts = 0
    while len(edges) < edge_count:
        if attempts >= budget:
            raise GenerationError(
                f"Rejection sampling did not converge: {len(edges)}/{edge_count} edge(s) "
                f"after {attempts} draw(s)")
        batch = max(2 * (edge_count - len(edges)), 16)
        sources = rng.choice(n, size=batch, p=p_out)
        targets = rng.choice(n, size=batch, p=p_in)
        for src, dst in zip(sources.tolist(), targets.tolist()):
            attempts += 1
            if src != dst:
                edges.setdefault((src, dst))
                if len(edges) == edge_count:
                    break

    meta = NetworkMeta(gamma_in=gamma_in, gamma_out=gamma_out, k_av=k_av,
                       seed=seed if isinstance(seed, int) else None, source="static")
    _log.info(f"Generated static model network with {n} node(s) and {edge_count} edge(s)")
    return Network(n=n, edges=tuple(sorted(edges)), meta=meta)


def _draw_diagonal_noise(n: int, rng: np.random.Generator) -> tuple[float, ...]:
    low, high = DIAGONAL_NOISE_RANGE
    noise = rng.uniform(low, high, size=n)
    for i in range(n):
        retries = 0
        while noise[i] in noise[:i]:
            if retries >= DIAGONAL_RETRIES:
                raise GenerationError(f"Unable to draw a distinct diagonal value for node {i}")
            noise[i] = rng.uniform(low, high)
            retries += 1
    return tuple(noise.tolist())


def assign_diagonal_noise(net: Network, seed: Seed = None) -> Network:
    """Redraw the pairwise distinct diagonal noise and drop any previous stabilizing shift.
    """
    return replace(net, diagonal_noise=_draw_diagonal_noise(net.n, to_rng(seed)), shift=None)


def assign_weights(net: Network, seed: Seed = None) -> Network:
    """Draw edge weights from U(0.5, 1.5) and pairwise distinct diagonal noise from U(-1, 1).
    """
    rng = to_rng(seed)
    low, high = EDGE_WEIGHT_RANGE
    weights = tuple(rng.uniform(low, high, size=net.edge_count).tolist())
    noise = _draw_diagonal_noise(net.n, rng)
    return replace(net, weights=weights, diagonal_noise=noise, shift=None)


def stabilize(net: Network) -> Network:
    """Shift the diagonal so that the largest real part of the spectrum equals -1.

    The shift is computed from the unshifted matrix, so stabilizing twice is a no-op.
    """
    base = replace(net, shift=None)
    try:
        eigenvalues = scipy.linalg.eigvals(base.adjacency)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise GenerationError(f"Eigensolver failed while stabilizing: {e}") from e
    shift = TARGET_MAX_REAL_EIGENVALUE - float(np.max(eigenvalues.real))
    stabilized = replace(net, shift=shift)

    check = float(np.max(scipy.linalg.eigvals(stabilized.adjacency).real))
    if abs(check - TARGET_MAX_REAL_EIGENVALUE) > SPECTRAL_TOLERANCE * max(1.0, abs(shift)):
        raise GenerationError(
            f"Stabilization missed its target: max Re(lambda) = {check!r} (input may be nearly "
            f"defective, consider re-noising the diagonal)")
    return stabilized


@timed("network construction")
def build_network(n: int, gamma_in: float, gamma_out: float, k_av: float,
                  seed: int | None = None) -> Network:
    """Run the full static model pipeline: topology, weights, stabilization.
    """
    net = generate_static(n, gamma_in, gamma_out, k_av, derive_rng(seed, 0))
    net = assign_weights(net, derive_rng(seed, 1))
    net = stabilize(net)
    return replace(net, meta=replace(net.meta, seed=seed))


@timed("degree preserving randomization", precision=2)
def degree_preserving_randomize(net: Network, iterations: int | None = None,
                                seed: Seed = None) -> Network:
    """Rewire ``net`` by swapping the receiving nodes of random edge pairs.

    Edges ``a->b`` and ``c->d`` become ``a->d`` and ``c->b``. Swaps creating self-loops or
    duplicates are skipped and don't count toward ``iterations`` (default: 10 * |E|). Each
    weight stays with its edge's source. Diagonals are redrawn and restabilized afterwards.

    Raises:
        GenerationError: on less than 2 edges
    """
    if net.edge_count < 2:
        raise GenerationError(
            f"Degree preserving randomization needs at least 2 edges, got: {net.edge_count}")
    rng = to_rng(seed)
    iterations = DPR_ITERATIONS_FACTOR * net.edge_count if iterations is None else iterations
    edges = list(net.edges)
    weights = list(net.weights) if net.weights is not None else [1.0] * len(edges)
    present = set(edges)

    max_attempts = DPR_ATTEMPTS_FACTOR * iterations + 1000
    swaps, attempts = 0, 0
    while swaps < iterations:
        if attempts >= max_attempts:
            _log.warning(f"Swap attempts cap reached after {swaps}/{iterations} accepted swap(s)")
            break
        attempts += 1
        i, j = rng.choice(len(edges), size=2, replace=False).tolist()
        (a, b), (c, d) = edges[i], edges[j]
        if a == d or c == b or (a, d) in present or (c, b) in present:
            continue
        present -= {(a, b), (c, d)}
        present |= {(a, d), (c, b)}
        edges[i], edges[j] = (a, d), (c, b)
        swaps += 1

    order = sorted(range(len(edges)), key=lambda k: edges[k])
    rewired = replace(
        net, edges=tuple(edges[k] for k in order),
        weights=tuple(weights[k] for k in order) if net.weights is not None else None)
    rewired = assign_diagonal_noise(rewired, rng)
    return stabilize(rewired)


def _parse_edge_lines(lines: list[str]) -> tuple[list[tuple[str, str]], list[float | None]]:
    pairs, weights = [], []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise ParsingError(f"Line {lineno}: expected 'src dst [weight]', got: {line!r}")
        weight = None
        if len(tokens) == 3:
            try:
                weight = float(tokens[2])
            except ValueError:
                raise ParsingError(f"Line {lineno}: invalid weight: {tokens[2]!r}")
        pairs.append((tokens[0], tokens[1]))
        weights.append(weight)
    if not pairs:
        raise ParsingError("Empty edge list")
    return pairs, weights


def _index_nodes(pairs: list[tuple[str, str]]) -> tuple[dict[str, int], int, tuple[str, ...]]:
    """Map node ids to a dense 0-based index.

    Integer ids are auto-detected as 0-based (if any id is 0) or 1-based and keep their
    positions (isolated nodes in between included). Other ids are indexed by first appearance.
    """
    ids = [token for pair in pairs for token in pair]
    if all(token.isdigit() for token in ids):
        numbers = {token: int(token) for token in ids}
        base = 0 if min(numbers.values()) == 0 else 1
        n = max(numbers.values()) - base + 1
        if n > MAX_NODES:
            raise ParsingError(f"Node id overflow: {max(numbers.values())} exceeds {MAX_NODES}")
        labels = tuple(str(i + base) for i in range(n))
        return {token: number - base for token, number in numbers.items()}, n, labels
    index: dict[str, int] = {}
    for token in ids:
        index.setdefault(token, len(index))
    if len(index) > MAX_NODES:
        raise ParsingError(f"Node count overflow: {len(index)} exceeds {MAX_NODES}")
    return index, len(index), tuple(index)


def load_edge_list(source: BinaryIO | PathLike, directed=True, seed: Seed = None) -> Network:
    """Read a whitespace-separated ``src dst [weight]`` edge list and build a stabilized network.

    Missing weights are drawn from U(0.5, 1.5), diagonal noise and shift are applied as for
    generated networks. Undirected input is expanded to symmetric directed pairs. Duplicates
    and self-loops are dropped with a warning.
    """
    if isinstance(source, (str, Path)):
        name = str(source)
        text = getfile(source).read_bytes()
    else:
        name = getattr(source, "name", "<stream>")
        text = source.read()
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParsingError(f"Edge list {name!r} is not UTF-8 text: {e}") from e
    lines = text.splitlines()
    pairs, raw_weights = _parse_edge_lines(lines)
    index, n, labels = _index_nodes(pairs)

    rng = to_rng(seed)
    low, high = EDGE_WEIGHT_RANGE
    edges: dict[tuple[int, int], float | None] = {}
    for (src, dst), weight in zip(pairs, raw_weights):
        i, j = index[src], index[dst]
        if i == j:
            _log.warning(f"Dropping self-loop on node {src!r} (self-dynamics live on the diagonal)")
            continue
        directions = [(i, j)] if directed else [(i, j), (j, i)]
        if all(edge in edges for edge in directions):
            _log.warning(f"Dropping duplicate edge: {src!r} -> {dst!r}")
            continue
        for edge in directions:
            edges.setdefault(edge, weight)

    ordered = sorted(edges)
    weights = tuple(
        edges[e] if edges[e] is not None else float(rng.uniform(low, high)) for e in ordered)
    net = Network(n=n, edges=tuple(ordered), weights=weights,
                  meta=NetworkMeta(source=name), labels=labels)
    net = stabilize(assign_diagonal_noise(net, rng))
    _log.info(f"Loaded {net.edge_count} edge(s) on {n} node(s) from {name!r}")
    return net


@type_checker(Network, PathLike)
def save_network(net: Network, path: PathLike) -> Path:
    dest = Path(path)
    with dest.open("w", encoding="utf8") as f:
        json.dump(net.json, f, indent=4, ensure_ascii=False)
    _log.info(f"Successfully dumped '{dest}'")
    return dest


@type_checker(PathLike)
def load_network(path: PathLike) -> Network:
    """Load a network from a JSON file written by `save_network()`.
    """
    with getfile(path, ext=".json").open(encoding="utf8") as f:
        return Network.from_json(json.load(f))
