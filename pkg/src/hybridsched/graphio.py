"""Graph and schedule file formats.

Graph files are JSON::

    {"q": 2,
     "tasks": [{"id": 0, "label": "src", "p": [2.0, 1.0]}, ...],
     "edges": [[0, 1], ...]}

A ``p`` entry of -1 marks a forbidden type.  The writer emits a canonical
byte layout (fixed key order, ids ascending, shortest-round-trip floats) so
write -> read -> write is bit-exact.

Schedules round-trip through either a CSV (``task_id,type,machine,start,
finish``) or a self-describing JSON document.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .core import Placement, Platform, Schedule, Task, TaskGraph
from .errors import GraphParseError


def graph_to_json(g: TaskGraph) -> str:
    """Canonical JSON text for a task graph (newline-terminated)."""
    tasks = []
    for t in sorted(g.tasks, key=lambda t: t.id):
        entry: dict = {"id": t.id}
        if t.label is not None:
            entry["label"] = t.label
        entry["p"] = [-1 if q in t.forbidden else p for q, p in enumerate(t.proc_times)]
        tasks.append(entry)
    q = g.tasks[0].arity if g.tasks else 2
    doc = {"q": q, "tasks": tasks, "edges": [list(e) for e in g.edges]}
    return json.dumps(doc, indent=1) + "\n"


def graph_from_json(text: str) -> TaskGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(str(exc), where=f"line {exc.lineno}") from exc
    if not isinstance(doc, dict):
        raise GraphParseError("top-level value must be an object")
    for key in ("q", "tasks", "edges"):
        if key not in doc:
            raise GraphParseError(f"missing key {key!r}")
    q = doc["q"]
    if not isinstance(q, int) or q < 2:
        raise GraphParseError("'q' must be an integer >= 2")

    tasks = []
    for pos, entry in enumerate(doc["tasks"]):
        where = f"tasks[{pos}]"
        if not isinstance(entry, dict) or "id" not in entry or "p" not in entry:
            raise GraphParseError("task entries need 'id' and 'p'", where=where)
        tid = entry["id"]
        if not isinstance(tid, int):
            raise GraphParseError("task id must be an integer", where=where)
        p = entry["p"]
        if not isinstance(p, list) or len(p) != q:
            raise GraphParseError(f"'p' must be a list of {q} numbers", where=where)
        times, forbidden = [], set()
        for idx, value in enumerate(p):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise GraphParseError("'p' entries must be numbers", where=where)
            if value == -1:
                times.append(math.inf)
                forbidden.add(idx)
            elif value < 0:
                raise GraphParseError(f"negative time {value}", where=where)
            else:
                times.append(float(value))
        label = entry.get("label")
        if label is not None and not isinstance(label, str):
            raise GraphParseError("label must be a string", where=where)
        tasks.append(Task(tid, tuple(times), label=label, forbidden=frozenset(forbidden)))

    edges = []
    for pos, pair in enumerate(doc["edges"]):
        where = f"edges[{pos}]"
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, int) for x in pair)
        ):
            raise GraphParseError("edges must be [pred, succ] id pairs", where=where)
        edges.append((pair[0], pair[1]))

    return TaskGraph(tasks, edges)


def write_graph(g: TaskGraph, path: str | Path) -> None:
    Path(path).write_text(graph_to_json(g))


def read_graph(path: str | Path) -> TaskGraph:
    return graph_from_json(Path(path).read_text())


# ---------------------------------------------------------------------------
# Schedule export
# ---------------------------------------------------------------------------

SCHEDULE_CSV_HEADER = ["task_id", "type", "machine", "start", "finish"]


def schedule_to_csv(s: Schedule) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCHEDULE_CSV_HEADER)
    for j in sorted(s.placements):
        pl = s.placements[j]
        writer.writerow([j, pl.type_index, pl.machine, repr(pl.start), repr(pl.finish)])
    return buf.getvalue()


def schedule_from_csv(text: str) -> Schedule:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise GraphParseError("empty schedule CSV") from None
    if header != SCHEDULE_CSV_HEADER:
        raise GraphParseError(f"unexpected header {header!r}")
    placements = {}
    for pos, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            j, q, machine = int(row[0]), int(row[1]), int(row[2])
            start, finish = float(row[3]), float(row[4])
        except (ValueError, IndexError) as exc:
            raise GraphParseError(str(exc), where=f"line {pos}") from exc
        placements[j] = Placement(q, machine, start, finish)
    return Schedule(placements)


def schedule_to_json(s: Schedule, platform: Platform | None = None) -> str:
    doc: dict = {"format": "hybridsched-schedule", "version": 1}
    if platform is not None:
        doc["platform"] = platform.format()
    doc["placements"] = [
        {
            "task": j,
            "type": s.placements[j].type_index,
            "machine": s.placements[j].machine,
            "start": s.placements[j].start,
            "finish": s.placements[j].finish,
        }
        for j in sorted(s.placements)
    ]
    return json.dumps(doc, indent=1) + "\n"


def schedule_from_json(text: str) -> Schedule:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(str(exc), where=f"line {exc.lineno}") from exc
    if not isinstance(doc, dict) or doc.get("format") != "hybridsched-schedule":
        raise GraphParseError("not a hybridsched schedule document")
    placements = {}
    for pos, entry in enumerate(doc.get("placements", [])):
        where = f"placements[{pos}]"
        try:
            placements[int(entry["task"])] = Placement(
                int(entry["type"]),
                int(entry["machine"]),
                float(entry["start"]),
                float(entry["finish"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphParseError(str(exc), where=where) from exc
    return Schedule(placements)
