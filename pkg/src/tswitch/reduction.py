"""Candidate-line reduction heuristic and the reduced switching pipeline.

The pipeline runs a no-switching DC-OPF for every hour, monitors lines loaded
above ``alpha`` of their limit, screens out switching candidates whose
single-line outage is predicted (via LODF) to overload a monitored line, and
solves the switching MILP over the surviving candidates only.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

from .milp.dcopf import dc_opf
from .milp.model import HourDispatch, PlanningConfig, SolveResult, build_model, solve
from .network import Bus, DemandProfile, Network, Topology, connectivity
from .sensitivity import SensitivitySet, post_outage_flow, sensitivity_set

logger = logging.getLogger(__name__)

LOAD_EPS = 1e-9


def violation_score(f: float, f_max: float, alpha: float) -> float:
    """Loading in excess of ``alpha * f_max``; direction of flow is ignored."""
    return abs(f) - alpha * f_max


@dataclass(frozen=True)
class MonitoredLines:
    per_hour: tuple[frozenset[int], ...]

    def sizes(self) -> list[int]:
        return [len(s) for s in self.per_hour]

    def union(self) -> frozenset[int]:
        out: set[int] = set()
        for s in self.per_hour:
            out |= s
        return frozenset(out)


@dataclass(frozen=True)
class CandidateLists:
    original: tuple[int, ...]
    excluded: tuple[frozenset[int], ...]
    updated: tuple[frozenset[int], ...]

    def sizes(self) -> list[int]:
        return [len(s) for s in self.updated]


def monitored_lines(
    step1: Sequence[HourDispatch], network: Network, alpha: float
) -> MonitoredLines:
    """Per-hour sets of line indices with strictly positive violation score."""
    init = network.initial_topology()
    hours = []
    for hd in step1:
        hours.append(
            frozenset(
                k
                for k in range(network.n_lines)
                if init.closed(k) and violation_score(hd.f[k], network.f_max[k], alpha) > 0
            )
        )
    return MonitoredLines(tuple(hours))


def excluded_candidates(
    step1: Sequence[HourDispatch],
    monitored: MonitoredLines,
    sens: SensitivitySet,
    network: Network,
    threshold: float = 1.0,
) -> tuple[frozenset[int], ...]:
    """Candidates whose opening is predicted to overload some monitored line.

    Bridge candidates are always excluded. Candidates that are open in the
    screening topology have no outage sensitivity and are never excluded. An
    outage that leaves a monitored line's loading unchanged or lower does not
    count as causing an overload, even when that line already sits at its limit.
    """
    original = network.switchable_lines
    out = []
    for t, hd in enumerate(step1):
        bad = set()
        for l in original:
            if not sens.topology.closed(l):
                continue
            if sens.is_bridge(l):
                bad.add(l)
                continue
            for m in sorted(monitored.per_hour[t]):
                if m == l:
                    continue
                post = post_outage_flow(hd.f[m], hd.f[l], sens.lodf[(m, l)])
                # a line already at its limit is only harmed if the outage adds load
                worse = abs(post) > abs(hd.f[m]) + LOAD_EPS * network.f_max[m]
                if worse and abs(post) >= threshold * network.f_max[m]:
                    bad.add(l)
                    break
        out.append(frozenset(bad))
    return tuple(out)


def _screening_sensitivity(
    network: Network, topology: Topology, monitored, candidates
) -> SensitivitySet:
    """Sensitivities on the screening topology, one island at a time.

    An initially islanded topology has no global reduced admittance, so each
    island is treated as its own network (its own reference bus). Outages in
    one island do not move flows in another, so cross-island LODFs are 0.
    """
    comps = connectivity(network, topology)
    if len(comps) == 1:
        return sensitivity_set(network, topology, monitored, candidates)
    monitored, candidates = sorted(set(monitored)), sorted(set(candidates))
    island_of = {}
    for c, comp in enumerate(comps):
        for bid in comp:
            island_of[bid] = c
    line_island = [island_of[l.from_bus] for l in network.lines]
    selfs, cross, lodfs, bridges = {}, {}, {}, set()
    for c, comp in enumerate(comps):
        members = set(comp)
        ref = network.buses[network.ref_index].id
        ref = ref if ref in members else min(members)
        local = [k for k in range(network.n_lines) if topology.closed(k) and line_island[k] == c]
        if not local:
            continue
        sub = Network(
            tuple(Bus(b.id, b.id == ref) for b in network.buses if b.id in members),
            tuple(network.lines[k] for k in local),
            (),
            network.mva_base,
        )
        pos = {k: i for i, k in enumerate(local)}
        s = sensitivity_set(
            sub,
            sub.all_closed(),
            [pos[m] for m in monitored if m in pos],
            [pos[l] for l in candidates if l in pos],
        )
        selfs.update({local[i]: v for i, v in s.ptdf_self.items()})
        cross.update({(local[m], local[l]): v for (m, l), v in s.ptdf_cross.items()})
        lodfs.update({(local[m], local[l]): v for (m, l), v in s.lodf.items()})
        bridges |= {local[i] for i in s.bridges}
    for l in candidates:
        for m in monitored:
            if m != l and line_island[m] != line_island[l]:
                cross[(m, l)] = 0.0
                if l not in bridges:
                    lodfs[(m, l)] = 0.0
    return SensitivitySet(
        topology, tuple(monitored), tuple(candidates), selfs, cross, lodfs, frozenset(bridges)
    )


@dataclass
class PlanningOutcome:
    result: SolveResult
    candidates: CandidateLists
    monitored: MonitoredLines
    step1: list[HourDispatch]
    sensitivity: SensitivitySet
    timings: dict[str, float] = field(default_factory=dict)

    def table(self) -> list[dict]:
        """Per-hour rows of |MLL|, |SLL_E| and |SLL_u|."""
        return [
            {
                "t": t + 1,
                "MLL": len(self.monitored.per_hour[t]),
                "SLL_E": len(self.candidates.excluded[t]),
                "SLL_u": len(self.candidates.updated[t]),
            }
            for t in range(len(self.step1))
        ]


def screen_candidates(
    network: Network, demand: DemandProfile, config: PlanningConfig
) -> tuple[list[HourDispatch], MonitoredLines, SensitivitySet, CandidateLists]:
    """Steps 1-4: no-switching OPF, monitoring, LODF screening."""
    init = network.initial_topology()
    step1 = [dc_opf(network, init, demand, t) for t in range(config.T)]
    mll = monitored_lines(step1, network, config.alpha)
    closed_candidates = [l for l in network.switchable_lines if init.closed(l)]
    sens = _screening_sensitivity(network, init, mll.union(), closed_candidates)
    excluded = excluded_candidates(step1, mll, sens, network, config.overload_threshold)
    original = tuple(network.switchable_lines)
    updated = tuple(frozenset(original) - e for e in excluded)
    return step1, mll, sens, CandidateLists(original, excluded, updated)


def plan_switching(
    network: Network, demand: DemandProfile, config: PlanningConfig
) -> PlanningOutcome:
    """Run the full reduced switching pipeline and return its artefacts."""
    t0 = time.perf_counter()
    step1, mll, sens, lists = screen_candidates(network, demand, config)
    t1 = time.perf_counter()
    model = build_model(network, demand, config, list(lists.updated))
    result = solve(model, config)
    t2 = time.perf_counter()
    logger.info(
        "reduced TS: |MLL|=%s |SLL_u|=%s status=%s", mll.sizes(), lists.sizes(), result.status.value
    )
    timings = {"screening": t1 - t0, "solve": result.wall_time, "total": t2 - t0}
    return PlanningOutcome(result, lists, mll, step1, sens, timings)
