"""Per-episode and aggregate navigation metrics computed from trace records.

SPL uses max(path, shortest_path) in the denominator so SPL <= success
always holds; the collision count CC counts collision onsets (rising
edges), not collision steps.
"""

from dataclasses import dataclass

from .errors import ContractViolation


@dataclass
class EpisodeMetrics:
    success: bool
    spl: float
    dtg: float
    cr: float
    psi: float
    tr: float
    cc: int
    path_length: float
    shortest_path: float


def episode_metrics(records):
    """Compute metrics from a full trace (header + steps + end records)."""
    steps = [r for r in records if r.get("type") == "step"]
    if not steps:
        raise ContractViolation("trace contains no step records")
    header = next((r for r in records if r.get("type") == "header"), {})
    end = next((r for r in records if r.get("type") == "end"), None)
    if end is None:
        raise ContractViolation("trace has no end record; episode incomplete")

    success = bool(end["success"])
    shortest = float(header.get("shortest_path", 0.0))
    path = float(sum(r["step_length"] for r in steps))
    if shortest > 0.0:
        spl = (shortest / max(path, shortest)) if success else 0.0
    else:
        spl = 1.0 if success else 0.0

    n = len(steps)
    collisions = [bool(r["collision"]) for r in steps]
    cr = sum(collisions) / n
    psi = sum(float(r["intrusion"]) for r in steps) / n
    tracked = [bool(r["track"]) for r in steps if r.get("track") is not None]
    tr = sum(tracked) / n if tracked else 0.0

    cc = 0
    prev = False
    for flag in collisions:
        if flag and not prev:
            cc += 1
        prev = flag

    return EpisodeMetrics(
        success=success,
        spl=spl,
        dtg=float(end["dtg"]),
        cr=cr,
        psi=psi,
        tr=tr,
        cc=cc,
        path_length=path,
        shortest_path=shortest,
    )


def aggregate(records):
    """Arithmetic means across episodes; SR is the mean success rate."""
    if not records:
        raise ContractViolation("aggregate needs at least one episode")
    n = len(records)
    return {
        "episodes": n,
        "sr": sum(m.success for m in records) / n,
        "spl": sum(m.spl for m in records) / n,
        "dtg": sum(m.dtg for m in records) / n,
        "cr": sum(m.cr for m in records) / n,
        "psi": sum(m.psi for m in records) / n,
        "tr": sum(m.tr for m in records) / n,
        "cc": sum(m.cc for m in records) / n,
        "path_length": sum(m.path_length for m in records) / n,
    }


def format_summary_table(summary):
    """Plain-text table with percentages to two decimals, as in result tables."""
    lines = [
        f"episodes      {summary['episodes']}",
        f"SR (%)        {100.0 * summary['sr']:.2f}",
        f"SPL (%)       {100.0 * summary['spl']:.2f}",
        f"DTG (m)       {summary['dtg']:.3f}",
        f"CR (%)        {100.0 * summary['cr']:.2f}",
        f"PSI           {summary['psi']:.4f}",
        f"TR (%)        {100.0 * summary['tr']:.2f}",
        f"CC            {summary['cc']:.2f}",
        f"path (m)      {summary['path_length']:.3f}",
    ]
    return "\n".join(lines)


def summary_csv(summary):
    header = "episodes,sr,spl,dtg,cr,psi,tr,cc,path_length"
    row = (
        f"{summary['episodes']},{100.0 * summary['sr']:.2f},{100.0 * summary['spl']:.2f},"
        f"{summary['dtg']:.4f},{100.0 * summary['cr']:.2f},{summary['psi']:.4f},"
        f"{100.0 * summary['tr']:.2f},{summary['cc']:.2f},{summary['path_length']:.4f}"
    )
    return header + "\n" + row + "\n"
