"""Grid data model and the matrices derived from it.

All types are frozen dataclasses. Lines, buses and generators keep the order
in which they were declared; that order defines every matrix index used in
the rest of the package. Flows and demands are in MW, susceptances in p.u. on
``Network.mva_base``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import SingularTopology, ValidationError


@dataclass(frozen=True)
class Bus:
    id: int
    is_reference: bool = False


@dataclass(frozen=True)
class Generator:
    """A dispatchable unit with per-block cost and output bounds.

    ``cost``, ``p_min`` and ``p_max`` each hold one value per load block.
    """

    id: int
    bus: int
    cost: tuple[float, ...]
    p_min: tuple[float, ...]
    p_max: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "cost", tuple(float(v) for v in self.cost))
        object.__setattr__(self, "p_min", tuple(float(v) for v in self.p_min))
        object.__setattr__(self, "p_max", tuple(float(v) for v in self.p_max))
        if not len(self.cost) == len(self.p_min) == len(self.p_max):
            raise ValidationError(f"generator {self.id}: per-block arrays differ in length")
        for t, (lo, hi) in enumerate(zip(self.p_min, self.p_max)):
            if not 0.0 <= lo <= hi:
                raise ValidationError(
                    f"generator {self.id}: need 0 <= p_min <= p_max in block {t}, got {lo}, {hi}"
                )


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    susceptance: float
    f_max: float
    f_min: float | None = None
    switchable: bool = True
    switch_cost: float = 0.0
    initial_status: int = 1
    duty_curve: str | None = None

    def __post_init__(self) -> None:
        if self.f_min is None:
            object.__setattr__(self, "f_min", -float(self.f_max))
        if self.from_bus == self.to_bus:
            raise ValidationError(f"line {self.id}: from_bus equals to_bus")
        if not self.susceptance > 0:
            raise ValidationError(f"line {self.id}: susceptance must be positive")
        if not self.f_min <= 0.0 <= self.f_max:
            raise ValidationError(f"line {self.id}: need f_min <= 0 <= f_max")
        if self.initial_status not in (0, 1):
            raise ValidationError(f"line {self.id}: initial_status must be 0 or 1")
        if self.switch_cost < 0:
            raise ValidationError(f"line {self.id}: negative switch_cost")


@dataclass(frozen=True)
class DemandProfile:
    """Demand ``d[t, i]`` in MW and curtailment price ``q[i]`` in $/MWh.

    Columns follow the network's bus order.
    """

    d: np.ndarray
    q: np.ndarray

    def __post_init__(self) -> None:
        d = np.array(self.d, dtype=float, ndmin=2)
        q = np.array(self.q, dtype=float).reshape(-1)
        if d.shape[1] != q.shape[0]:
            raise ValidationError("demand and penalty arrays disagree on bus count")
        if np.any(d < 0):
            raise ValidationError("negative demand")
        d.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "q", q)

    @property
    def T(self) -> int:
        return int(self.d.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DemandProfile):
            return NotImplemented
        return np.array_equal(self.d, other.d) and np.array_equal(self.q, other.q)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Topology:
    """Closed (1) / open (0) status for every line, in network line order."""

    status: tuple[int, ...]

    def __post_init__(self) -> None:
        status = tuple(int(s) for s in self.status)
        if any(s not in (0, 1) for s in status):
            raise ValidationError("topology entries must be 0 or 1")
        object.__setattr__(self, "status", status)

    def __len__(self) -> int:
        return len(self.status)

    def closed(self, l: int) -> bool:
        return self.status[l] == 1

    def with_status(self, l: int, value: int) -> "Topology":
        s = list(self.status)
        s[l] = value
        return Topology(tuple(s))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.status, dtype=float)


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...] = ()
    mva_base: float = 100.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "generators", tuple(self.generators))
        self.validate()

    def validate(self) -> None:
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate bus id")
        refs = [b.id for b in self.buses if b.is_reference]
        if len(refs) != 1:
            raise ValidationError(f"expected exactly one reference bus, found {len(refs)}")
        known = set(ids)
        line_ids = [l.id for l in self.lines]
        if len(set(line_ids)) != len(line_ids):
            raise ValidationError("duplicate line id")
        for l in self.lines:
            if l.from_bus not in known or l.to_bus not in known:
                raise ValidationError(f"line {l.id} references an unknown bus")
        gen_ids = [g.id for g in self.generators]
        if len(set(gen_ids)) != len(gen_ids):
            raise ValidationError("duplicate generator id")
        for g in self.generators:
            if g.bus not in known:
                raise ValidationError(f"generator {g.id} references an unknown bus")
        if not self.mva_base > 0:
            raise ValidationError("mva_base must be positive")

    # -- index helpers -------------------------------------------------------

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @cached_property
    def bus_index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def line_index(self) -> dict[int, int]:
        return {l.id: k for k, l in enumerate(self.lines)}

    @cached_property
    def ref_index(self) -> int:
        return next(i for i, b in enumerate(self.buses) if b.is_reference)

    @cached_property
    def non_ref(self) -> np.ndarray:
        return np.array([i for i in range(self.n_buses) if i != self.ref_index], dtype=int)

    @cached_property
    def from_idx(self) -> np.ndarray:
        return np.array([self.bus_index[l.from_bus] for l in self.lines], dtype=int)

    @cached_property
    def to_idx(self) -> np.ndarray:
        return np.array([self.bus_index[l.to_bus] for l in self.lines], dtype=int)

    @cached_property
    def susceptance(self) -> np.ndarray:
        return np.array([l.susceptance for l in self.lines], dtype=float)

    @cached_property
    def b_mw(self) -> np.ndarray:
        """Line susceptance in MW/rad, i.e. the coefficient linking flow to angle difference."""
        return self.mva_base * self.susceptance

    @cached_property
    def f_max(self) -> np.ndarray:
        return np.array([l.f_max for l in self.lines], dtype=float)

    @cached_property
    def f_min(self) -> np.ndarray:
        return np.array([l.f_min for l in self.lines], dtype=float)

    @cached_property
    def full_incidence(self) -> np.ndarray:
        """Bus-by-line incidence including the reference row (+1 from, -1 to)."""
        A = np.zeros((self.n_buses, self.n_lines))
        cols = np.arange(self.n_lines)
        A[self.from_idx, cols] = 1.0
        A[self.to_idx, cols] = -1.0
        return A

    @cached_property
    def gen_bus_idx(self) -> np.ndarray:
        return np.array([self.bus_index[g.bus] for g in self.generators], dtype=int)

    def initial_topology(self) -> Topology:
        return Topology(tuple(l.initial_status for l in self.lines))

    def all_closed(self) -> Topology:
        return Topology((1,) * self.n_lines)

    @property
    def switchable_lines(self) -> list[int]:
        """Indices of switchable lines in declaration order."""
        return [k for k, l in enumerate(self.lines) if l.switchable]

    def __hash__(self) -> int:
        return hash((self.buses, self.lines, self.generators, self.mva_base))


def incidence_matrix(network: Network) -> np.ndarray:
    """Reduced bus-branch incidence matrix, shape ``(n_buses - 1, n_lines)``."""
    return network.full_incidence[network.non_ref, :]


def _check_topology(network: Network, topology: Topology) -> None:
    if len(topology) != network.n_lines:
        raise ValidationError(
            f"topology has {len(topology)} entries for {network.n_lines} lines"
        )


def connectivity(network: Network, topology: Topology) -> list[list[int]]:
    """Connected components (lists of bus ids) of the closed-line graph.

    Components and their members are sorted by bus id, so the result is
    deterministic.
    """
    _check_topology(network, topology)
    parent = list(range(network.n_buses))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for k in range(network.n_lines):
        if topology.status[k]:
            a, b = find(int(network.from_idx[k])), find(int(network.to_idx[k]))
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for i, bus in enumerate(network.buses):
        groups.setdefault(find(i), []).append(bus.id)
    comps = [sorted(g) for g in groups.values()]
    return sorted(comps, key=lambda c: c[0])


def reduced_admittance(network: Network, topology: Topology) -> np.ndarray:
    """Reduced admittance ``Psi diag(b * delta) Psi^T`` over closed lines (p.u.).

    Raises
    ------
    SingularTopology
        If the closed lines do not connect every bus.
    """
    _check_topology(network, topology)
    comps = connectivity(network, topology)
    if len(comps) > 1:
        raise SingularTopology(
            f"closed lines form {len(comps)} islands; reduced admittance is singular",
            comps,
        )
    return _assemble_y(network, topology)


def _assemble_y(network: Network, topology: Topology) -> np.ndarray:
    psi = incidence_matrix(network)
    w = network.susceptance * topology.array
    Y = (psi * w) @ psi.T
    # exact symmetry, independent of summation order
    return 0.5 * (Y + Y.T)


def angle_differences(network: Network, theta: Sequence[float] | np.ndarray) -> np.ndarray:
    """Per-line ``theta_from - theta_to`` for a full bus-angle vector."""
    theta = np.asarray(theta, dtype=float)
    return theta[network.from_idx] - theta[network.to_idx]


def make_network(
    buses: Iterable[Bus],
    lines: Iterable[Line],
    generators: Iterable[Generator] = (),
    mva_base: float = 100.0,
) -> Network:
    return Network(tuple(buses), tuple(lines), tuple(generators), mva_base)
