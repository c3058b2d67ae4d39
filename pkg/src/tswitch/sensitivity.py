"""PTDF and LODF sensitivities for a fixed topology.

Lines are addressed by their position in ``Network.lines``. A single Cholesky
factorization of the reduced admittance matrix is shared by every solve for a
given topology.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import BridgeLine, LineOpen, SingularTopology
from .network import Network, Topology, incidence_matrix, reduced_admittance

BRIDGE_EPS = 1e-6


class _Factorized:
    """Cholesky factor of Y for one topology, with cached ``Y^-1 Psi_l`` columns."""

    def __init__(self, network: Network, topology: Topology):
        self.network = network
        self.topology = topology
        Y = reduced_admittance(network, topology)
        self.psi = incidence_matrix(network)
        if Y.shape[0] == 0:
            self.factor = None
        else:
            try:
                self.factor = cho_factor(Y, lower=True)
            except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by connectivity
                raise SingularTopology(f"reduced admittance not positive definite: {exc}")
        self._cols: dict[int, np.ndarray] = {}

    def solve_col(self, l: int) -> np.ndarray:
        col = self._cols.get(l)
        if col is None:
            rhs = self.psi[:, l]
            col = cho_solve(self.factor, rhs) if self.factor is not None else rhs[:0]
            self._cols[l] = col
        return col

    def ptdf(self, m: int, l: int) -> float:
        b_m = self.network.susceptance[m]
        return float(b_m * (self.psi[:, m] @ self.solve_col(l)))


def _require_closed(topology: Topology, *lines: int) -> None:
    for l in lines:
        if not topology.closed(l):
            raise LineOpen(f"line index {l} is open in this topology")


def ptdf_self(network: Network, topology: Topology, l: int) -> float:
    """Flow induced on line ``l`` by a unit injection at its from-bus withdrawn at its to-bus."""
    _require_closed(topology, l)
    return _Factorized(network, topology).ptdf(l, l)


def ptdf_cross(network: Network, topology: Topology, m: int, l: int) -> float:
    """Flow on line ``m`` per unit transfer across the terminals of line ``l``."""
    _require_closed(topology, m, l)
    return _Factorized(network, topology).ptdf(m, l)


def _lodf_from(ptdf_ml: float, ptdf_ll: float, l: int) -> float:
    if abs(1.0 - ptdf_ll) <= BRIDGE_EPS:
        raise BridgeLine(f"line index {l} is a bridge; its outage islands the network")
    return ptdf_ml / (1.0 - ptdf_ll)


def lodf(network: Network, topology: Topology, m: int, l: int) -> float:
    """Share of line ``l``'s pre-outage flow that moves onto line ``m`` when ``l`` opens."""
    _require_closed(topology, m, l)
    fac = _Factorized(network, topology)
    return _lodf_from(fac.ptdf(m, l), fac.ptdf(l, l), l)


def post_outage_flow(f_m: float, f_l: float, lodf_ml: float) -> float:
    """Predicted flow on ``m`` after line ``l`` is opened."""
    return f_m + lodf_ml * f_l


@dataclass(frozen=True)
class SensitivitySet:
    """Batch of sensitivities for one topology.

    ``ptdf_cross`` and ``lodf`` are keyed by ``(m, l)`` with ``m`` monitored and
    ``l`` a candidate, ``m != l``. Bridge candidates appear in ``bridges`` and
    have no LODF entries.
    """

    topology: Topology
    monitored: tuple[int, ...]
    candidates: tuple[int, ...]
    ptdf_self: Mapping[int, float]
    ptdf_cross: Mapping[tuple[int, int], float]
    lodf: Mapping[tuple[int, int], float]
    bridges: frozenset[int]

    def is_bridge(self, l: int) -> bool:
        return l in self.bridges


def sensitivity_set(
    network: Network,
    topology: Topology,
    monitored: Iterable[int],
    candidates: Iterable[int],
) -> SensitivitySet:
    """Compute self-PTDFs for candidates and cross PTDF/LODF for monitored x candidate pairs."""
    monitored = tuple(sorted(set(monitored)))
    candidates = tuple(sorted(set(candidates)))
    _require_closed(topology, *monitored, *candidates)
    fac = _Factorized(network, topology)

    selfs = {l: fac.ptdf(l, l) for l in candidates}
    bridges = frozenset(l for l, v in selfs.items() if abs(1.0 - v) <= BRIDGE_EPS)
    cross: dict[tuple[int, int], float] = {}
    lodfs: dict[tuple[int, int], float] = {}
    for l in candidates:
        for m in monitored:
            if m == l:
                continue
            v = fac.ptdf(m, l)
            cross[(m, l)] = v
            if l not in bridges:
                lodfs[(m, l)] = v / (1.0 - selfs[l])
    return SensitivitySet(topology, monitored, candidates, selfs, cross, lodfs, bridges)


def ptdf_matrix(network: Network, topology: Topology) -> np.ndarray:
    """Full line-to-line PTDF matrix over closed lines (rows/cols of open lines are zero)."""
    fac = _Factorized(network, topology)
    closed = [k for k in range(network.n_lines) if topology.closed(k)]
    out = np.zeros((network.n_lines, network.n_lines))
    for l in closed:
        col = fac.solve_col(l)
        for m in closed:
            out[m, l] = network.susceptance[m] * (fac.psi[:, m] @ col)
    return out
