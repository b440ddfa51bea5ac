"""CSV and SVG emission. Both are byte-deterministic for fixed input: floats
print with 9 significant digits, SVGs embed no timestamps or metadata."""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import ConfigError

CSV_VERSION = "steersim-csv v1"


def fmt_float(v: float) -> str:
    return format(v, ".9g")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def emit_csv(path: str | Path, schema: str, header: list[str], rows: list[tuple]) -> None:
    """RFC-4180-style CSV prefixed with a versioned schema comment line."""
    try:
        with open(path, "w", newline="") as fh:
            fh.write(f"# {CSV_VERSION} {schema}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise ConfigError(f"cannot write CSV {path}: {exc}") from exc


def read_csv(path: str | Path) -> tuple[str, list[str], list[list[str]]]:
    """Parse a file written by emit_csv: (schema, header, string rows)."""
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        prefix = f"# {CSV_VERSION} "
        if not first.startswith(prefix):
            raise ConfigError(f"{path}: missing '{CSV_VERSION}' schema comment")
        schema = first[len(prefix):]
        reader = csv.reader(fh)
        header = next(reader, [])
        return schema, header, [row for row in reader]


# --- SVG plotting -----------------------------------------------------------

_SVG_OPEN = (
    '<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
    'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">'
)

_RAT_FILL = {"LTE": "#4878a8", "NR": "#e07a3f"}
_AGENT_FILL = {"hdqn": "#2d6a4f", "dqn": "#74a892", "heuristic": "#c8a24b"}


def _num(v: float) -> str:
    return format(v, ".6g")


def emit_plot(data, kind: str, path: str | Path) -> None:
    """kind="bars": grouped throughput/delay bars per agent from a comparison
    table (rows of (agent, thr_mean, thr_std, delay_mean, delay_std, drop)).
    kind="timeline": per-UE RAT assignment over TTIs from decision rows of
    (tti, ue_id, traffic_type, rat, changed), plus required episode_ttis."""
    if kind == "bars":
        svg = _bars_svg(data)
    elif kind == "timeline":
        svg = _timeline_svg(*data)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    try:
        Path(path).write_text(svg)
    except OSError as exc:
        raise ConfigError(f"cannot write plot {path}: {exc}") from exc


def _bars_svg(table_rows: list[tuple]) -> str:
    if not table_rows:
        raise ValueError("bars plot needs a non-empty comparison table")
    width, height = 640, 360
    panel_w, panel_h, top, left0 = 270, 250, 50, 50
    parts = [_SVG_OPEN.format(w=width, h=height)]
    parts.append(f'<text x="{left0}" y="20">throughput (Mbps)</text>')
    parts.append(f'<text x="{left0 + panel_w + 50}" y="20">delay (ms)</text>')
    thr_max = max(r[1] for r in table_rows) / 1e6 or 1.0
    delay_max = max(r[3] for r in table_rows) or 1.0
    n = len(table_rows)
    slot = panel_w / n
    bar_w = slot * 0.6
    for i, row in enumerate(table_rows):
        agent = str(row[0])
        fill = _AGENT_FILL.get(agent, "#888888")
        thr_mbps = row[1] / 1e6
        delay_ms = row[3]
        h1 = panel_h * thr_mbps / thr_max
        h2 = panel_h * delay_ms / delay_max
        x1 = left0 + i * slot + (slot - bar_w) / 2
        x2 = left0 + panel_w + 50 + i * slot + (slot - bar_w) / 2
        parts.append(f'<g class="bar-group" data-agent="{agent}">')
        parts.append(
            f'<rect class="bar metric-throughput" x="{_num(x1)}" y="{_num(top + panel_h - h1)}" '
            f'width="{_num(bar_w)}" height="{_num(h1)}" fill="{fill}"/>'
        )
        parts.append(
            f'<rect class="bar metric-delay" x="{_num(x2)}" y="{_num(top + panel_h - h2)}" '
            f'width="{_num(bar_w)}" height="{_num(h2)}" fill="{fill}"/>'
        )
        parts.append(f'<text x="{_num(x1)}" y="{_num(top + panel_h + 15)}">{agent}</text>')
        parts.append(f'<text x="{_num(x2)}" y="{_num(top + panel_h + 15)}">{agent}</text>')
        parts.append(f'<text x="{_num(x1)}" y="{_num(top + panel_h - h1 - 4)}">{_num(thr_mbps)}</text>')
        parts.append(f'<text x="{_num(x2)}" y="{_num(top + panel_h - h2 - 4)}">{_num(delay_ms)}</text>')
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts)


def _timeline_svg(decision_rows: list[tuple], episode_ttis: int) -> str:
    if not decision_rows:
        raise ValueError("timeline plot needs at least one decision row")
    ue_ids = sorted({r[1] for r in decision_rows})
    width, height = 720, 60 + 16 * len(ue_ids)
    left, track_h = 70, 10
    span_w = width - left - 20
    parts = [_SVG_OPEN.format(w=width, h=height)]
    parts.append('<text x="10" y="20">per-UE RAT assignment over TTIs</text>')

    def x_of(tti: int) -> float:
        return left + span_w * tti / max(1, episode_ttis)

    by_ue: dict[int, list[tuple]] = {u: [] for u in ue_ids}
    for row in sorted(decision_rows, key=lambda r: (r[0], r[1])):
        by_ue[row[1]].append(row)
    for lane, ue in enumerate(ue_ids):
        y = 40 + lane * 16
        rows = by_ue[ue]
        traffic = rows[0][2]
        parts.append(f'<text x="10" y="{y + track_h - 1}" class="traffic-{traffic}">ue {ue}</text>')
        for i, row in enumerate(rows):
            start = row[0]
            end = rows[i + 1][0] if i + 1 < len(rows) else episode_ttis
            rat = str(row[3])
            parts.append(
                f'<rect class="segment rat-{rat.lower()}" x="{_num(x_of(start))}" y="{y}" '
                f'width="{_num(max(0.5, x_of(end) - x_of(start)))}" height="{track_h}" '
                f'fill="{_RAT_FILL.get(rat, "#999")}"/>'
            )
            if row[4] and i > 0:
                parts.append(
                    f'<circle class="steer-marker" cx="{_num(x_of(start))}" cy="{y + track_h / 2}" '
                    f'r="4" fill="#d62728"/>'
                )
    parts.append("</svg>")
    return "\n".join(parts)
