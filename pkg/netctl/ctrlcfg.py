"""

    netctl.ctrlcfg.py
    ~~~~~~~~~~~~~~~~~
    Control configuration: driver (input) node selection, versor input/output matrices, target
    set sampling and output controllability test.

    @author: z33k

"""
import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np

from netctl.constants import DEFAULT_T0, DEFAULT_TF, Seed
from netctl.data import InputSet, Network, TargetSet
from netctl.gramian import NotOutputControllableError, PrecisionConfig, compute_gramian, \
    eig_decompose, spectrum
from netctl.utils import to_rng
from netctl.utils.check_type import type_checker

_log = logging.getLogger(__name__)


class DriverSelectionError(ValueError):
    """Raised when too few drivers are requested to reach every node.
    """
    def __init__(self, message: str, minimum: int) -> None:
        super().__init__(message)
        self.minimum = minimum


def to_digraph(net: Network) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(net.n))
    graph.add_edges_from(net.edges)
    return graph


def root_components(net: Network) -> list[list[int]]:
    """Return members of strongly connected components with no incoming condensation edge.

    Source nodes are singleton root components.
    """
    condensed = nx.condensation(to_digraph(net))
    roots = [c for c in condensed.nodes if condensed.in_degree(c) == 0]
    return sorted(sorted(condensed.nodes[c]["members"]) for c in roots)


def minimum_driver_count(net: Network) -> int:
    return len(root_components(net))


def reaches_all(net: Network, inputs: InputSet) -> bool:
    """Check that every node is reachable along directed paths from the driver set.
    """
    graph = to_digraph(net)
    reached = set(inputs.nodes)
    for node in inputs.nodes:
        reached |= nx.descendants(graph, node)
    return len(reached) == net.n


def select_drivers(net: Network, m: int, seed: Seed = None) -> InputSet:
    """Select ``m`` driver nodes: one random member of every root strongly connected component
    (an over-estimate of the power dominating set), then uniformly random other nodes.
    """
    if m > net.n:
        raise ValueError(f"Cannot select {m} driver(s) out of {net.n} node(s)")
    rng = to_rng(seed)
    roots = root_components(net)
    if m < len(roots):
        raise DriverSelectionError(
            f"{m} driver(s) cannot reach every node, at least {len(roots)} needed", len(roots))
    drivers = [int(members[rng.integers(len(members))]) for members in roots]
    rest = np.setdiff1d(np.arange(net.n), drivers)
    if m > len(drivers):
        drivers += rng.choice(rest, size=m - len(drivers), replace=False).tolist()
    inputs = InputSet(tuple(drivers))
    _log.info(f"Selected {m} driver(s), {len(roots)} of them covering root components")
    return inputs


def build_input_matrix(inputs: InputSet, n: int) -> np.ndarray:
    """Return the n x m matrix B whose j-th column is the versor of ``inputs.nodes[j]``.
    """
    inputs.validate(n)
    b = np.zeros((n, inputs.m))
    b[list(inputs.nodes), np.arange(inputs.m)] = 1.0
    return b


def build_output_matrix(targets: TargetSet, n: int) -> np.ndarray:
    """Return the p x n matrix C whose i-th row is the versor of ``targets.nodes[i]``.
    """
    targets.validate(n)
    c = np.zeros((targets.p, n))
    c[np.arange(targets.p), list(targets.nodes)] = 1.0
    return c


@type_checker(int, int)
def sample_target_set(n: int, p: int, seed: Seed = None) -> TargetSet:
    """Draw ``p`` distinct target nodes uniformly at random.
    """
    if not 1 <= p <= n:
        raise ValueError(f"Target count must be in [1, {n}], got: {p}")
    nodes = to_rng(seed).choice(n, size=p, replace=False)
    return TargetSet(tuple(sorted(nodes.tolist())))


def sample_nested_chain(n: int, seed: Seed = None) -> list[TargetSet]:
    """Return nested target sets P_1 ⊂ P_2 ⊂ ... ⊂ P_n defined by a random removal order.
    """
    order = to_rng(seed).permutation(n).tolist()
    return [TargetSet(tuple(sorted(order[:p]))) for p in range(1, n + 1)]


@dataclass(frozen=True)
class ControllabilityReport:
    controllable: bool
    mu_min: object  # extended precision number
    threshold: object
    digits: int

    @property
    def log10_mu_min(self) -> float:
        ctx = PrecisionConfig(self.digits).ctx
        return float(ctx.log10(self.mu_min)) if self.mu_min > 0 else float("-inf")


def output_controllability_check(
        net: Network, inputs: InputSet, targets: TargetSet,
        horizon: tuple[float, float] = (DEFAULT_T0, DEFAULT_TF),
        digits: int | PrecisionConfig = 100) -> ControllabilityReport:
    """Test output controllability of (A, B, C) through the smallest eigenvalue of the reduced
    Gramian computed in extended precision.
    """
    prec = digits if isinstance(digits, PrecisionConfig) else PrecisionConfig(digits)
    t0, tf = horizon
    gram = compute_gramian(
        eig_decompose(net), build_input_matrix(inputs, net.n),
        build_output_matrix(targets, net.n), t0, tf, prec)
    mu_min = spectrum(gram).values[0]
    controllable = bool(mu_min > prec.threshold)
    if not controllable:
        _log.warning(f"Triplet not output controllable: mu_1 = {prec.ctx.nstr(mu_min, 5)}")
    return ControllabilityReport(controllable, mu_min, prec.threshold, prec.digits)
