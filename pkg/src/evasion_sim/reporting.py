"""Text formats for evaluation reports and trajectory dumps."""

from __future__ import annotations

import csv
import io
from typing import TextIO

from evasion_sim.errors import ConfigError
from evasion_sim.evaluation import EvaluationReport, Goal, SpeedResult, TrialResult, mph_to_mps

REPORT_COLUMNS = ("speed_mph", "violations", "trials", "rate", "p_value")


def _fmt(x: float) -> str:
    return format(x, ".6g")


def dump_report(report: EvaluationReport) -> str:
    out = io.StringIO()
    out.write(f"# label: {report.label}\n# goal: {report.goal.value}\n# base_seed: {report.base_seed}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in report.rows:
        p = "" if r.p_value is None else _fmt(r.p_value)
        w.writerow([_fmt(round(r.speed_mph, 6)), r.violations, r.trials, _fmt(r.rate), p])
    return out.getvalue()


def load_report(source: TextIO | str) -> EvaluationReport:
    stream = io.StringIO(source) if isinstance(source, str) else source
    meta = {}
    body = []
    for line in stream:
        if line.startswith("#"):
            key, _, value = line.lstrip("#").partition(":")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    reader = csv.DictReader(body)
    if reader.fieldnames is None or list(reader.fieldnames) != list(REPORT_COLUMNS):
        raise ConfigError(f"report header must be {','.join(REPORT_COLUMNS)}")
    rows = []
    for i, rec in enumerate(reader, start=1):
        try:
            violations, trials = int(rec["violations"]), int(rec["trials"])
            p = float(rec["p_value"]) if rec["p_value"] else None
            rows.append(SpeedResult(mph_to_mps(float(rec["speed_mph"])), violations, trials, p))
        except (TypeError, ValueError):
            raise ConfigError(f"report row {i} is malformed") from None
        if not 0 <= violations <= trials or trials < 1:
            raise ConfigError(f"report row {i}: inconsistent counts")
    if not rows:
        raise ConfigError("report has no rows")
    try:
        goal = Goal(meta.get("goal", Goal.STOP_LINE_VIOLATION.value))
        seed = int(meta.get("base_seed", 0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return EvaluationReport(meta.get("label", ""), goal, tuple(rows), seed)


def dump_trajectory(result: TrialResult) -> str:
    if result.trajectory is None:
        raise ValueError("trial was run without trajectory recording")
    lines = ["t,x,v,tracked"]
    lines += [f"{t:.2f},{x:.4f},{v:.4f},{int(tr)}" for t, x, v, tr in result.trajectory]
    return "\n".join(lines) + "\n"
