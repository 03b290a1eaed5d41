"""Command-line front end.

Exit status: 0 success, 2 input error, 3 bus contention, 4 not enough IDS
data. The default seed for commands that draw random numbers comes from
``ARINCLAB_SEED`` (falling back to 0).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import codec, dataio, ids, report
from .attacks import CaptureFilter, fuzz_stream, warning_bit_set
from .bus import capture_traces, run_scenario
from .codec import Bcd, Bnr, Discrete, Label
from .errors import ArincLabError
from .scenario import BusScenario, TraceCapture, load_scenario
from .waveform import (
    ALTADT_PROFILE,
    DEFAULT_SAMPLE_RATE,
    EGPWS_PROFILE,
    TransmitterProfile,
    decode_trace,
    measure_edge,
    synthesize_batch,
)

log = logging.getLogger("arinclab")

SEED_ENV = "ARINCLAB_SEED"
PRESET_PROFILES = {"egpws": EGPWS_PROFILE, "altadt": ALTADT_PROFILE}


def default_seed() -> int:
    try:
        return int(os.environ.get(SEED_ENV, "0"))
    except ValueError:
        return 0


def _int_auto(text: str) -> int:
    return int(text, 0)


def _load_registry(path: str | None) -> codec.LabelRegistry:
    reg = codec.default_registry()
    if path:
        for key, fmt in codec.LabelRegistry.from_mapping(json.loads(Path(path).read_text())).formats.items():
            reg.formats[key] = fmt
    return reg


def _print_breakdown(word: int, registry) -> None:
    for step, text in codec.breakdown(word, registry):
        print(f"{step:<22}{text}")


# --- commands -------------------------------------------------------------


def cmd_decode(args) -> int:
    word = codec.parse_hex(args.hexword)
    _print_breakdown(word, _load_registry(args.registry))
    return 0


def cmd_encode(args) -> int:
    label = Label.parse(args.label)
    if args.bnr is not None:
        data = Bnr(args.bnr, padding_bits=args.padding_bits)
    elif args.discrete is not None:
        data = Discrete(args.discrete)
    elif args.bcd is not None:
        data = Bcd(tuple(int(c) for c in args.bcd))
    else:
        data = args.data
    word = codec.encode_word(label, args.sdi, data, args.ssm)
    _print_breakdown(word, _load_registry(args.registry))
    return 0


def _profile(name: str) -> TransmitterProfile:
    if name.lower() in PRESET_PROFILES:
        return PRESET_PROFILES[name.lower()]
    doc = json.loads(Path(name).read_text())
    return TransmitterProfile.from_dict(doc.pop("name", Path(name).stem), doc)


def cmd_synth(args) -> int:
    prof = _profile(args.profile)
    overrides = {}
    if args.noise is not None:
        overrides["noise_sigma"] = args.noise
    if args.slew is not None:
        overrides["slew_rate"] = args.slew
    if args.bit_rate is not None:
        overrides["bit_rate"] = args.bit_rate
    if overrides:
        prof = prof.replace(**overrides)
    seed = default_seed() if args.seed is None else args.seed
    if args.word:
        words = [codec.parse_hex(w) for w in args.word]
        words = (words * (args.count // len(words) + 1))[: max(args.count, len(words))]
    else:
        rng = np.random.default_rng([seed, 1])
        words = [codec.with_parity(int(w)) for w in rng.integers(0, 2**32, args.count)]
    traces = synthesize_batch(words, prof, args.sample_rate, seed=seed)
    dataio.write_trace_csv(traces, args.output)
    print(f"wrote {len(traces)} traces ({prof.name}, slew {prof.slew_rate} V/us, seed {seed}) to {args.output}")
    return 0


def cmd_trace_decode(args) -> int:
    for tr in dataio.read_trace_csv(args.traces):
        res = decode_trace(tr, args.bit_rate)
        flag = "" if res.parity_valid else "  PARITY INVALID"
        print(f"word {tr.word_index}: {codec.word_hex(res.word)}  min margin {res.confidence.min():.3f} V{flag}")
    return 0


def cmd_edges(args) -> int:
    rows = []
    for tr in dataio.read_trace_csv(args.traces):
        e = measure_edge(tr)
        rows.append((tr.word_index, e.rising_slope, e.hi_peak, e.lo_peak, e.rise_time_10_90))
    header = ("Word", "rising_slope_V_per_us", "hi_peak_V", "lo_peak_V", "rise_time_10_90_s")
    dataio.write_rows(header, rows, args.output or sys.stdout)
    return 0


def cmd_fuzz(args) -> int:
    seed = default_seed() if args.seed is None else args.seed
    words = fuzz_stream(seed, args.count, args.valid_fraction)
    entries = [(i / args.rate, w) for i, w in enumerate(words)]
    dataio.write_message_log(entries, args.output or sys.stdout)
    return 0


def cmd_capture(args) -> int:
    entries = dataio.read_message_log(args.log)
    pred = warning_bit_set(args.warning_bit) if args.warning_bit is not None else None
    filt = CaptureFilter.of(*args.label, predicate=pred)
    kept = [(t, w) for t, w in entries if filt.matches(w)]
    dataio.write_message_log(kept, args.output or sys.stdout)
    return 0


def _with_seed(s: BusScenario, seed: int | None) -> BusScenario:
    return s if seed is None else replace(s, seed=seed)


def cmd_simulate(args) -> int:
    scenario = _with_seed(load_scenario(args.scenario), args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run_scenario(scenario)

    dataio.write_message_log(((e.timestamp, e.word) for e in result.log), out / "messages.csv")
    dataio.write_rows(
        ("Time (s)", "Word", "Source", "ParityValid"),
        ((e.timestamp, codec.word_hex(e.word), e.source, int(e.parity_valid)) for e in result.log),
        out / "ground_truth.csv",
    )
    dataio.write_rows(
        ("Time (s)", "Receiver", "Display", "TerrainWarning", "TawsEnabled", "Restarts"),
        (
            (t.time, t.receiver, t.display.value, int(t.terrain_warning_active), int(t.taws_enabled), t.restart_count)
            for tl in result.mfd_timeline.values()
            for t in tl
        ),
        out / "mfd_timeline.csv",
    )
    dataio.write_rows(
        ("Time (s)", "Kind", "Detail"),
        ((e.time, e.kind, e.detail) for e in result.events),
        out / "events.csv",
    )

    detections = None
    if args.emit_traces or args.ids:
        capture = scenario.trace_capture or TraceCapture(labels=frozenset({0o270}))
        if args.trace_limit is not None:
            capture = replace(capture, max_words=args.trace_limit)
        if args.trace_stride is not None:
            capture = replace(capture, stride=args.trace_stride)
        captured = capture_traces(result, capture)
        if args.emit_traces and captured:
            dataio.write_trace_csv([tr for _, tr in captured], out / "traces.csv")
        if args.ids:
            model = ids.BaselineModel.load(args.ids)
            detections = report.detection_records(result, captured, model)
            dataio.write_rows(
                ("Time (s)", "Word", "Source", "Anomalous", "Score"),
                (
                    (d.timestamp, codec.word_hex(d.word), d.source, int(d.verdict.anomalous), d.verdict.score)
                    for d in detections
                ),
                out / "verdicts.csv",
            )

    rep = report.build_report(result, detections)
    (out / "report.json").write_text(report.to_json(rep))
    text = report.to_text(rep)
    (out / "report.txt").write_text(text)
    print(text)
    return 0


def cmd_ids_train(args) -> int:
    traces = dataio.read_trace_csv(args.traces)
    model = ids.train(traces, threshold_k=args.k, min_count=args.min_count)
    model.save(args.output)
    print(f"trained on {model.training_count} traces; k={model.threshold_k}")
    for name, m, s in zip(model.feature_names, model.means, model.sigmas):
        print(f"  {name:<16} mean {m:.6g}  sigma {s:.6g}")
    return 0


def _model(args) -> ids.BaselineModel:
    model = ids.BaselineModel.load(args.model)
    return model.with_threshold(args.k) if args.k is not None else model


def cmd_ids_detect(args) -> int:
    model = _model(args)
    for tr in dataio.read_trace_csv(args.traces):
        v = ids.detect(model, tr)
        tag = "ANOMALOUS" if v.anomalous else "NORMAL"
        print(f"word {tr.word_index}: {tag}  score {v.score:.2f}")
    return 0


def cmd_ids_eval(args) -> int:
    model = _model(args)
    labeled = [(t, "legitimate") for t in dataio.read_trace_csv(args.legit)]
    labeled += [(t, "rogue") for t in dataio.read_trace_csv(args.rogue)]
    res = ids.evaluate(model, labeled, legitimate="legitimate")
    print(f"{'class':<12}{'traces':>8}{'flagged':>9}{'rate':>9}")
    print(f"{'rogue':<12}{res.n_rogue:>8}{res.flagged_rogue:>9}{res.tpr:>9.4f}  (TPR)")
    print(f"{'legitimate':<12}{res.n_legit:>8}{res.flagged_legit:>9}{res.fpr:>9.4f}  (FPR)")
    print(f"k = {model.threshold_k}")
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arinclab", description="ARINC 429 bus security lab")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decode", help="break a hex word into its fields")
    d.add_argument("hexword")
    d.add_argument("--registry", help="JSON label-format table merged over the defaults")
    d.set_defaults(func=cmd_decode)

    e = sub.add_parser("encode", help="assemble a word from fields")
    e.add_argument("--label", required=True, help="octal label, e.g. 203")
    e.add_argument("--sdi", type=_int_auto, default=0)
    e.add_argument("--ssm", type=_int_auto, default=0)
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--bnr", type=_int_auto, help="BNR magnitude")
    g.add_argument("--discrete", type=_int_auto, help="19-bit discrete field")
    g.add_argument("--bcd", help="decimal digits, e.g. 12345")
    g.add_argument("--data", type=_int_auto, help="raw 19-bit data field")
    e.add_argument("--padding-bits", type=int, default=1)
    e.add_argument("--registry")
    e.set_defaults(func=cmd_encode)

    s = sub.add_parser("synth", help="synthesize voltage traces to a stacked trace CSV")
    s.add_argument("--profile", default="egpws", help="egpws, altadt or a JSON profile file")
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--word", action="append", help="hex word(s) to send; random if omitted")
    s.add_argument("--noise", type=float)
    s.add_argument("--slew", type=float)
    s.add_argument("--bit-rate", type=float)
    s.add_argument("--sample-rate", type=float, default=DEFAULT_SAMPLE_RATE)
    s.add_argument("--seed", type=int)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_synth)

    td = sub.add_parser("trace-decode", help="recover words from a trace CSV")
    td.add_argument("traces")
    td.add_argument("--bit-rate", type=float, default=12_500.0)
    td.set_defaults(func=cmd_trace_decode)

    ed = sub.add_parser("edges", help="tidy CSV of rising-edge features per trace")
    ed.add_argument("traces")
    ed.add_argument("-o", "--output")
    ed.set_defaults(func=cmd_edges)

    fz = sub.add_parser("fuzz", help="write a fuzz word stream as a message log")
    fz.add_argument("--count", type=int, default=100)
    fz.add_argument("--valid-fraction", type=float, default=0.5)
    fz.add_argument("--rate", type=float, default=100.0, help="words per second")
    fz.add_argument("--seed", type=int)
    fz.add_argument("-o", "--output")
    fz.set_defaults(func=cmd_fuzz)

    cp = sub.add_parser("capture", help="filter a message log (rogue receiver capture)")
    cp.add_argument("log")
    cp.add_argument("--label", action="append", default=[], help="octal label; repeatable")
    cp.add_argument("--warning-bit", type=int, help="keep only words with this data bit set")
    cp.add_argument("-o", "--output")
    cp.set_defaults(func=cmd_capture)

    sm = sub.add_parser("simulate", help="run a bus scenario and write logs + report")
    sm.add_argument("scenario")
    sm.add_argument("-o", "--out-dir", default="sim_out")
    sm.add_argument("--emit-traces", action="store_true")
    sm.add_argument("--trace-limit", type=int, help="cap on captured traces")
    sm.add_argument("--trace-stride", type=int, help="score every n-th captured word")
    sm.add_argument("--ids", metavar="MODEL", help="score captured traces with a baseline model")
    sm.add_argument("--seed", type=int, help="override the scenario seed")
    sm.set_defaults(func=cmd_simulate)

    i = sub.add_parser("ids", help="train / detect / evaluate the fingerprint IDS")
    isub = i.add_subparsers(dest="ids_command", required=True)
    it = isub.add_parser("train")
    it.add_argument("traces")
    it.add_argument("-o", "--output", required=True)
    it.add_argument("--k", type=float, default=ids.DEFAULT_K)
    it.add_argument("--min-count", type=int, default=ids.DEFAULT_MIN_TRAINING)
    it.set_defaults(func=cmd_ids_train)
    idt = isub.add_parser("detect")
    idt.add_argument("model")
    idt.add_argument("traces")
    idt.add_argument("--k", type=float)
    idt.set_defaults(func=cmd_ids_detect)
    ie = isub.add_parser("eval")
    ie.add_argument("model")
    ie.add_argument("--legit", required=True)
    ie.add_argument("--rogue", required=True)
    ie.add_argument("--k", type=float)
    ie.set_defaults(func=cmd_ids_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ArincLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
