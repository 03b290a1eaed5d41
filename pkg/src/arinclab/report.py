"""Run reports: one dictionary of numbers, rendered as JSON and as text.

The text form is generated from the same dictionary, so both always
agree. Every number can be recomputed from the files ``simulate`` writes
(message log, ground-truth log, MFD timeline, IDS verdicts).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from . import codec
from .bus import MfdTransition, RunResult
from .devices import Display
from .ids import BaselineModel, Verdict, detect
from .waveform import VoltageTrace


@dataclass(frozen=True)
class DetectionRecord:
    log_index: int
    timestamp: float
    word: int
    source: str
    verdict: Verdict


def attack_window(result: RunResult) -> tuple[float, float] | None:
    """From the relay trigger to the first MFD restart after it (or the end)."""
    if result.trigger_time is None:
        return None
    start = result.trigger_time
    later = [r.time for r in result.scenario.mfd_restarts if r.time >= start]
    end = min([result.scenario.duration, *later])
    return start, end


def display_fraction(
    timeline: list[MfdTransition], display: Display, start: float, end: float
) -> float:
    """Fraction of ``[start, end)`` the MFD spent on ``display``."""
    if end <= start:
        return 0.0
    total = 0.0
    for i, tr in enumerate(timeline):
        seg_end = timeline[i + 1].time if i + 1 < len(timeline) else float("inf")
        lo, hi = max(tr.time, start), min(seg_end, end)
        if hi > lo and tr.display is display:
            total += hi - lo
    return total / (end - start)


def _warning_bit(result: RunResult) -> int:
    for r in result.scenario.receivers:
        if r.mfd is not None:
            return r.mfd.warning_bit
    return result.scenario.egpws.warning_bit


def warning_times(result: RunResult, after: float = float("-inf")) -> list[float]:
    bit = _warning_bit(result)
    out = []
    for e in result.log:
        if e.timestamp < after or not e.parity_valid:
            continue
        raw_label, _, data, _, _ = codec.split_fields(e.word)
        if codec.reverse_label_bits(raw_label) == codec.GPWS_LABEL.octal_value and (
            data >> (bit - 11)
        ) & 1:
            out.append(e.timestamp)
    return out


def detection_records(
    result: RunResult, captured: list[tuple[int, VoltageTrace]], model: BaselineModel
) -> list[DetectionRecord]:
    records = []
    for idx, trace in captured:
        entry = result.log[idx]
        # the verdict sees only the trace; source is attached afterwards for scoring
        verdict = detect(model, trace)
        records.append(DetectionRecord(idx, entry.timestamp, entry.word, entry.source, verdict))
    return records


def build_report(result: RunResult, detections: list[DetectionRecord] | None = None) -> dict:
    s = result.scenario
    rep: dict = {
        "scenario": s.name,
        "seed": s.seed,
        "duration_s": s.duration,
        "log_sha256": result.digest(),
        "words_logged": len(result.log),
        "words_by_source": dict(sorted(Counter(e.source for e in result.log).items())),
        "parity_invalid_words": sum(not e.parity_valid for e in result.log),
        "truncated_words": result.truncated_words,
    }
    if result.trigger_sample is not None:
        smp = result.trigger_sample
        rep["relay"] = {
            "triggered": True,
            "time_s": result.trigger_time,
            "lon": smp.lon,
            "lat": smp.lat,
            "flight_sample_index": s.flight_path.index(smp),
        }
    else:
        rep["relay"] = {"triggered": False}

    mfd_name = next((r.name for r in s.receivers if r.kind == "mfd"), None)
    timeline = result.mfd_timeline.get(mfd_name, []) if mfd_name else []
    rep["mfd_transitions"] = [
        {
            "time_s": t.time,
            "display": t.display.value,
            "terrain_warning_active": t.terrain_warning_active,
            "taws_enabled": t.taws_enabled,
            "restart_count": t.restart_count,
        }
        for t in timeline
    ]

    window = attack_window(result)
    if window is not None:
        start, end = window
        warn = warning_times(result, after=start)
        warn = [t for t in warn if t < end]
        gaps = [b - a for a, b in zip(warn, warn[1:])]
        rep["attack_window"] = {
            "start_s": start,
            "end_s": end,
            "terrain_display_fraction": display_fraction(timeline, Display.TERRAIN_DISPLAY, start, end)
            if timeline
            else None,
            "warning_words": len(warn),
            "warning_interval_mean_s": sum(gaps) / len(gaps) if gaps else None,
            "warning_interval_min_s": min(gaps) if gaps else None,
            "warning_interval_max_s": max(gaps) if gaps else None,
        }

    if mfd_name is not None:
        final = result.mfd_final[mfd_name]
        recovered_at = next(
            (
                t.time
                for t in timeline
                if t.display is Display.NAV_MAP and not t.taws_enabled and t.restart_count >= 2
            ),
            None,
        )
        rec = {
            "final_display": final.display.value,
            "taws_enabled": final.taws_enabled,
            "restart_count": final.restart_count,
            "parity_errors_seen": final.error_count,
            "recovered_at_s": recovered_at,
        }
        if recovered_at is not None:
            rec["warnings_after_recovery"] = len(warning_times(result, after=recovered_at))
            rec["display_changes_after_recovery"] = sum(
                1 for t in timeline if t.time > recovered_at and t.display is not Display.NAV_MAP
            )
        rep["recovery"] = rec

    if detections is not None:
        rep["ids"] = ids_summary(result, detections)
    return rep


def ids_summary(result: RunResult, detections: list[DetectionRecord]) -> dict:
    legit = result.scenario.legitimate
    rogue = [d for d in detections if d.source != legit]
    clean = [d for d in detections if d.source == legit]
    flagged = [d for d in detections if d.verdict.anomalous]
    first_rogue = rogue[0] if rogue else None
    first_flag = flagged[0] if flagged else None
    return {
        "traces_scored": len(detections),
        "anomalies": len(flagged),
        "legitimate_traces": len(clean),
        "rogue_traces": len(rogue),
        "true_positive_rate": (sum(d.verdict.anomalous for d in rogue) / len(rogue)) if rogue else None,
        "false_positive_rate": (sum(d.verdict.anomalous for d in clean) / len(clean)) if clean else None,
        "first_rogue_word_s": first_rogue.timestamp if first_rogue else None,
        "first_rogue_word_flagged": first_rogue.verdict.anomalous if first_rogue else None,
        "first_anomaly_s": first_flag.timestamp if first_flag else None,
    }


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "n/a"
    return str(v)


def to_text(report: dict) -> str:
    """Human-readable rendering of the same numbers as :func:`to_json`."""
    lines = [f"Run report: {report['scenario']} (seed {report['seed']})", ""]

    def section(title: str, data: dict) -> None:
        lines.append(f"[{title}]")
        for k, v in data.items():
            if isinstance(v, dict):
                v = ", ".join(f"{kk}={_fmt_value(vv)}" for kk, vv in v.items())
            lines.append(f"  {k}: {_fmt_value(v)}")
        lines.append("")

    run_keys = ("duration_s", "log_sha256", "words_logged", "words_by_source",
                "parity_invalid_words", "truncated_words")
    section("run", {k: report[k] for k in run_keys})
    section("relay", report["relay"])
    if report.get("attack_window"):
        section("attack window", report["attack_window"])
    if report.get("recovery"):
        section("recovery", report["recovery"])
    if report.get("mfd_transitions"):
        lines.append("[mfd transitions]")
        for t in report["mfd_transitions"]:
            lines.append(
                f"  t={_fmt_value(t['time_s'])} {t['display']} warning={t['terrain_warning_active']}"
                f" taws={t['taws_enabled']} restarts={t['restart_count']}"
            )
        lines.append("")
    if report.get("ids"):
        section("ids", report["ids"])
    return "\n".join(lines)
