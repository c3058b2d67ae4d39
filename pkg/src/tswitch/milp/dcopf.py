"""Single-hour DC optimal power flow on a fixed topology.

Flows are eliminated in favour of angles (``f = b * dtheta`` on closed lines),
which keeps this LP structurally different from the MILP with frozen
statuses; the two are compared against each other in the tests.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linprog

from ..errors import NumericalFailure
from ..network import DemandProfile, Network, Topology
from .model import HourDispatch


def dc_opf(network: Network, topology: Topology, demand: DemandProfile, t: int) -> HourDispatch:
    """Least-cost dispatch for block ``t`` (0-based) with curtailment as slack.

    Variables are ordered ``[p, r, theta]``; the reference angle is pinned to 0.
    """
    nb, ng = network.n_buses, len(network.generators)
    delta = topology.array
    A = network.full_incidence
    w = network.b_mw * delta
    # flow map: f = W theta
    W = (A * w).T
    Bbus = A @ W

    n = ng + 2 * nb
    c = np.zeros(n)
    c[:ng] = [g.cost[t] for g in network.generators]
    c[ng : ng + nb] = demand.q

    G = np.zeros((nb, ng))
    G[network.gen_bus_idx, np.arange(ng)] = 1.0
    A_eq = np.hstack([G, np.eye(nb), -Bbus])
    b_eq = demand.d[t]

    closed = np.flatnonzero(delta > 0)
    Wc = W[closed]
    zeros = np.zeros((closed.size, ng + nb))
    A_ub = np.vstack([np.hstack([zeros, Wc]), np.hstack([zeros, -Wc])])
    b_ub = np.concatenate([network.f_max[closed], -network.f_min[closed]])

    bounds = [(g.p_min[t], g.p_max[t]) for g in network.generators]
    bounds += [(0.0, float(v)) for v in demand.d[t]]
    bounds += [
        (0.0, 0.0) if i == network.ref_index else (-math.pi / 2, math.pi / 2) for i in range(nb)
    ]
    res = linprog(
        c,
        A_ub=A_ub if closed.size else None,
        b_ub=b_ub if closed.size else None,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
    )
    if res.status != 0:
        raise NumericalFailure(f"DC-OPF for block {t + 1} failed: {res.message}")
    p = res.x[:ng]
    r = res.x[ng : ng + nb]
    theta = res.x[ng + nb :]
    f = W @ theta
    return HourDispatch(
        p=p,
        f=f,
        theta=theta,
        r=r,
        generation_cost=float(c[:ng] @ p),
        curtailment_cost=float(demand.q @ r),
    )


def dc_opf_horizon(
    network: Network, topology: Topology, demand: DemandProfile, T: int
) -> list[HourDispatch]:
    return [dc_opf(network, topology, demand, t) for t in range(T)]
