"""Machine-readable run reports and their plain-text rendering."""

from __future__ import annotations

import json
from typing import Iterable, Sequence

from .case_io import CaseFile
from .harness import RegimeResult
from .wear import remaining_operations

REPORT_FORMAT = "tswitch-report"
REPORT_VERSION = 1


def _r(x: float, nd: int | None = None) -> float:
    # only wall times are rounded; costs stay exact so totals reconcile
    return float(x) if nd is None else round(float(x), nd)


def saving_pct(z_base: float, z_regime: float) -> float:
    """Cost saving of ``z_regime`` relative to ``z_base`` in percent."""
    return (z_base - z_regime) / z_base * 100.0


def switch_reduction_pct(n_base: int, n_regime: int) -> float | None:
    """Switching reduction relative to the smaller count (44 -> 18 gives 144 %)."""
    if n_regime == 0:
        return None
    return (n_base - n_regime) / n_regime * 100.0


def _wear_rows(case: CaseFile | None, rr: RegimeResult) -> list[dict]:
    if case is None or rr.result.plan is None:
        return []
    per_line = rr.result.plan.per_line()
    rows = []
    for k, line in enumerate(rr.network.lines):
        if line.duty_curve is None:
            continue
        curve = case.duty_curves[line.duty_curve]
        hist = list(case.switch_history.get(line.id, ()))
        before = remaining_operations(curve, hist, curve.normal_current)
        hist.append((curve.normal_current, int(per_line[k])))
        after = remaining_operations(curve, hist, curve.normal_current)
        rows.append(
            {
                "line": line.id,
                "duty_curve": line.duty_curve,
                "switch_events": int(per_line[k]),
                "remaining_before": before,
                "remaining_after": after,
            }
        )
    return rows


def regime_entry(rr: RegimeResult, case: CaseFile | None = None, include_timing: bool = False) -> dict:
    res = rr.result
    entry: dict = {
        "regime": rr.regime,
        "status": res.status.value,
        "objective": _r(res.objective),
        "gap": _r(res.gap) if res.gap == res.gap else None,
    }
    if res.plan is None:
        entry["per_hour"] = []
        return entry
    events = res.plan.events
    hours = []
    for t, hd in enumerate(res.dispatch):
        row = {
            "t": t + 1,
            "generation_cost": _r(hd.generation_cost),
            "curtailment_cost": _r(hd.curtailment_cost),
            "switching_cost": _r(hd.switching_cost),
            "switches": int(events[t].sum()),
        }
        if rr.mll_sizes is not None:
            row["MLL"] = rr.mll_sizes[t]
            row["SLL_u"] = rr.sll_sizes[t]
        hours.append(row)
    entry["per_hour"] = hours
    entry["operating_cost"] = _r(sum(h.generation_cost + h.curtailment_cost for h in res.dispatch))
    entry["total_switches"] = res.plan.total_switches
    per_line = res.plan.per_line()
    entry["switch_events"] = {
        str(line.id): int(per_line[k]) for k, line in enumerate(rr.network.lines) if per_line[k]
    }
    if rr.sll_original is not None:
        entry["SLL_o"] = rr.sll_original
    wear = _wear_rows(case, rr)
    if wear:
        entry["wear"] = wear
    if include_timing:
        entry["wall_time"] = {k: _r(v, 4) for k, v in sorted(rr.timings.items())}
    return entry


def comparisons(results: Sequence[RegimeResult]) -> list[dict]:
    """Pairwise savings of every later regime against every earlier one."""
    rows = []
    for i, a in enumerate(results):
        for b in results[i + 1 :]:
            za, zb = a.result.objective, b.result.objective
            na = a.result.plan.total_switches if a.result.plan is not None else 0
            nb = b.result.plan.total_switches if b.result.plan is not None else 0
            red = switch_reduction_pct(na, nb)
            rows.append(
                {
                    "base": a.regime,
                    "regime": b.regime,
                    "saving_pct": _r(saving_pct(za, zb)),
                    "switch_reduction_pct": None if red is None else _r(red),
                }
            )
    return rows


def write_report(
    results: Iterable[RegimeResult],
    case: CaseFile | None = None,
    *,
    seed: int | None = None,
    include_timing: bool = False,
) -> dict:
    """Assemble the report document for one or more regime results."""
    results = list(results)
    if not results:
        raise ValueError("write_report needs at least one regime result")
    doc: dict = {"format": REPORT_FORMAT, "version": REPORT_VERSION}
    if case is not None:
        doc["case"] = case.label
        if "seed" in case.meta:
            doc["case_seed"] = case.meta["seed"]
    doc["seed"] = seed
    cfg = results[0].config
    doc["planning"] = {
        "T": cfg.T,
        "alpha": cfg.alpha,
        "mip_gap": cfg.mip_gap,
        "backend": cfg.backend,
    }
    doc["regimes"] = [regime_entry(r, case, include_timing) for r in results]
    doc["comparisons"] = comparisons(results)
    return doc


def report_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _fmt_list(v: Sequence | None) -> str:
    return "-" if v is None else " ".join(str(x) for x in v)


def render_table(doc: dict) -> str:
    """Aligned plain-text summary of a report document."""
    header = ["regime", "status", "objective", "switches", "|MLL| per t", "|SLL_u| per t"]
    rows = []
    for e in doc["regimes"]:
        hours = e.get("per_hour", [])
        mll = [h["MLL"] for h in hours] if hours and "MLL" in hours[0] else None
        sll = [h["SLL_u"] for h in hours] if hours and "SLL_u" in hours[0] else None
        rows.append(
            [
                e["regime"],
                e["status"],
                f"{e['objective']:.2f}",
                str(e.get("total_switches", "-")),
                _fmt_list(mll),
                _fmt_list(sll),
            ]
        )
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]

    def line(cells: list[str]) -> str:
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    out = [line(header), line(["-" * w for w in widths])]
    out += [line(r) for r in rows]
    if doc["comparisons"]:
        out.append("")
        out.append("comparison                 saving %   switch reduction %")
        for c in doc["comparisons"]:
            red = "-" if c["switch_reduction_pct"] is None else f"{c['switch_reduction_pct']:.1f}"
            name = f"{c['regime']} vs {c['base']}"
            out.append(f"{name:<26} {c['saving_pct']:>8.4f}   {red:>8}")
    return "\n".join(out) + "\n"
