"""Self-contained SVG rendering: machine timeline plus resource tracks."""

from __future__ import annotations

import numpy as np

from .core import Instance, Schedule
from .decoder import _true_working_ranges

ROW_H = 34
ROW_GAP = 10
TRACK_H = 64
LEFT = 72
TOP = 40


def _scale(horizon: int) -> int:
    if horizon <= 0:
        return 20
    return max(4, min(48, 960 // horizon))


def render_gantt(instance: Instance, schedule: Schedule, title: str = "") -> str:
    """Machine rows with setup shading and hatched downtimes, then one
    capacity/consumption track per resource."""
    horizon = max(instance.horizon, schedule.makespan, 1)
    px = _scale(horizon)
    width = LEFT + horizon * px + 24
    rows_h = instance.k * (ROW_H + ROW_GAP)
    tracks_h = len(instance.resources) * (TRACK_H + ROW_GAP)
    height = TOP + rows_h + tracks_h + 40

    def x(t: float) -> float:
        return LEFT + t * px

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">'
    )
    parts.append(
        '<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" '
        'patternTransform="rotate(45)"><rect width="6" height="6" fill="#f4f4f4"/>'
        '<line x1="0" y1="0" x2="0" y2="6" stroke="#777" stroke-width="2"/></pattern></defs>'
    )
    if title:
        parts.append(f'<text x="{LEFT}" y="18" font-size="13">{title}</text>')

    # time axis
    step = max(1, horizon // 24)
    axis_y = TOP + rows_h + tracks_h + 8
    for t in range(0, horizon + 1, step):
        parts.append(
            f'<line x1="{x(t)}" y1="{TOP - 6}" x2="{x(t)}" y2="{axis_y - 14}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(f'<text x="{x(t)}" y="{axis_y}" text-anchor="middle">{t}</text>')

    for row, m in enumerate(instance.machines):
        y = TOP + row * (ROW_H + ROW_GAP)
        parts.append(f'<text x="8" y="{y + ROW_H / 2 + 4}">M{m.id}</text>')
        parts.append(
            f'<rect x="{x(0)}" y="{y}" width="{horizon * px}" height="{ROW_H}" '
            f'fill="none" stroke="#bbb"/>'
        )
        for us, ue in m.downtimes:
            parts.append(
                f'<rect class="downtime" data-machine="{m.id}" data-start="{us}" '
                f'data-end="{ue}" x="{x(us)}" y="{y}" width="{(ue - us) * px}" '
                f'height="{ROW_H}" fill="url(#hatch)" stroke="#777"/>'
            )

    by_machine: dict[int, list] = {m.id: [] for m in instance.machines}
    for p in schedule.placements.values():
        by_machine.setdefault(p.machine, []).append(p)
    row_of = {m.id: i for i, m in enumerate(instance.machines)}
    for mid, group in by_machine.items():
        y = TOP + row_of[mid] * (ROW_H + ROW_GAP)
        for p in sorted(group, key=lambda q: q.start):
            stroke = "#c22" if p.violated else "#333"
            setup_left = p.setup_len
            for a, b in _true_working_ranges(instance, p):
                cur = a
                if setup_left > 0:
                    seg = min(setup_left, b - a)
                    parts.append(
                        f'<rect class="setup" data-job="{p.job}" x="{x(cur)}" y="{y + 4}" '
                        f'width="{seg * px}" height="{ROW_H - 8}" fill="#d8d8d8" '
                        f'stroke="{stroke}"/>'
                    )
                    setup_left -= seg
                    cur += seg
                if cur < b:
                    parts.append(
                        f'<rect class="proc" data-job="{p.job}" x="{x(cur)}" y="{y + 4}" '
                        f'width="{(b - cur) * px}" height="{ROW_H - 8}" fill="#fff" '
                        f'stroke="{stroke}"/>'
                    )
            parts.append(
                f'<text x="{x((p.start + p.end) / 2)}" y="{y + ROW_H / 2 + 4}" '
                f'text-anchor="middle">J{p.job}</text>'
            )

    # resource tracks: dashed capacity steps over a filled consumption profile
    for ri, r in enumerate(instance.resources):
        y0 = TOP + rows_h + ri * (TRACK_H + ROW_GAP)
        parts.append(f'<text x="8" y="{y0 + TRACK_H / 2}">R{r.id}</text>')
        parts.append(
            f'<rect x="{x(0)}" y="{y0}" width="{horizon * px}" height="{TRACK_H}" '
            f'fill="none" stroke="#bbb"/>'
        )
        cap = np.zeros(horizon, dtype=np.int64)
        for s, e, c in r.capacity:
            cap[max(0, s):min(horizon, e)] = c
        usage = np.zeros(horizon, dtype=np.int64)
        for p in schedule.placements.values():
            job = instance.job(p.job)
            if p.machine not in job.eligible:
                continue
            for rid, amt in instance.combined_demands(job, p.machine):
                if rid != r.id:
                    continue
                for a, b in _true_working_ranges(instance, p):
                    usage[max(0, a):min(horizon, b)] += amt
        peak = max(int(cap.max(initial=0)), int(usage.max(initial=0)), 1)
        scale_y = (TRACK_H - 8) / peak

        def level_y(v: int) -> float:
            return y0 + TRACK_H - 4 - v * scale_y

        poly = [f"{x(0)},{y0 + TRACK_H - 4}"]
        for t in range(horizon):
            poly.append(f"{x(t)},{level_y(int(usage[t]))}")
            poly.append(f"{x(t + 1)},{level_y(int(usage[t]))}")
        poly.append(f"{x(horizon)},{y0 + TRACK_H - 4}")
        parts.append(
            f'<polygon class="usage" data-resource="{r.id}" points="{" ".join(poly)}" '
            f'fill="#cfe3f7" stroke="none"/>'
        )
        line = []
        for t in range(horizon):
            line.append(f"{x(t)},{level_y(int(cap[t]))}")
            line.append(f"{x(t + 1)},{level_y(int(cap[t]))}")
        parts.append(
            f'<polyline class="capacity" data-resource="{r.id}" points="{" ".join(line)}" '
            f'fill="none" stroke="#222" stroke-width="2" stroke-dasharray="7,4"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
