"""Discrete-event simulation of one ARINC 429 bus.

Events are word-granular. A transmitter owns a FIFO of words; a word is on
the wire for 32 bit times and the next one may start one 36-bit slot later
(32 bits plus the minimum gap). A word is logged and delivered to every
receiver when its last bit is sent, stamped with the time its first bit
went out. If the relay disconnects a transmitter mid-word, that word is
lost.

A connected transmitter always drives the bus (at least to NULL), so two
connected drivers at any instant is contention and the run aborts.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import codec
from .attacks import GeoFenceMonitor, word_slot
from .devices import (
    Display,
    FlightSample,
    MfdConfig,
    MfdState,
    emission_word,
    mfd_begin_restart,
    mfd_finish_boot,
    mfd_receive,
)
from .errors import BusContentionError
from .scenario import BusScenario, TraceCapture
from .waveform import VoltageTrace, synthesize_trace

log = logging.getLogger(__name__)

WORD_BITS = 32

# ordering of simultaneous events
_P_FLIGHT, _P_WIRING, _P_MFD, _P_DONE, _P_START, _P_EMIT = range(6)


@dataclass(frozen=True)
class BusLogEntry:
    timestamp: float
    word: int
    source: str  # ground truth; evaluation only
    parity_valid: bool


@dataclass(frozen=True)
class BusEvent:
    time: float
    kind: str
    detail: str = ""


@dataclass(frozen=True)
class MfdTransition:
    time: float
    receiver: str
    display: Display
    terrain_warning_active: bool
    taws_enabled: bool
    restart_count: int


@dataclass
class RunResult:
    scenario: BusScenario
    log: list[BusLogEntry]
    events: list[BusEvent]
    mfd_timeline: dict[str, list[MfdTransition]]
    mfd_final: dict[str, MfdState]
    trigger_time: float | None = None
    trigger_sample: FlightSample | None = None
    truncated_words: int = 0

    def log_lines(self) -> list[str]:
        return [f"{e.timestamp!r},{codec.word_hex(e.word)},{e.source}" for e in self.log]

    def digest(self) -> str:
        h = hashlib.sha256()
        for line in self.log_lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()


@dataclass
class _Driver:
    name: str
    bit_rate: float
    queue: list[int] = field(default_factory=list)
    next_free: float = 0.0
    in_flight: tuple[int, float, int] | None = None  # (word, start, token)
    start_pending: bool = False
    connected: bool = False


@dataclass
class _Mfd:
    name: str
    config: MfdConfig
    state: MfdState = field(default_factory=MfdState)
    listening_since: float = 0.0


class BusSimulator:
    def __init__(self, scenario: BusScenario):
        scenario.validate()
        self.s = scenario
        self._heap: list = []
        self._seq = itertools.count()
        self._token = itertools.count()
        self.log: list[BusLogEntry] = []
        self.events: list[BusEvent] = []
        self.now = 0.0
        self.sample = scenario.flight_path[0]
        self.drivers: dict[str, _Driver] = {}
        self.mfds = [
            _Mfd(r.name, r.mfd or MfdConfig()) for r in scenario.receivers if r.kind == "mfd"
        ]
        self.timeline: dict[str, list[MfdTransition]] = {m.name: [] for m in self.mfds}
        self.fence = GeoFenceMonitor(scenario.relay.trigger) if scenario.relay else None
        self.trigger_time: float | None = None
        self.trigger_sample: FlightSample | None = None
        self.truncated = 0

    # -- plumbing -------------------------------------------------------

    def _push(self, t: float, prio: int, kind: str, *args) -> None:
        heapq.heappush(self._heap, (t, prio, next(self._seq), kind, args))

    def _note(self, kind: str, detail: str = "") -> None:
        self.events.append(BusEvent(self.now, kind, detail))

    def _driver(self, name: str, key: str | None = None) -> _Driver:
        key = key or name
        if key not in self.drivers:
            self.drivers[key] = _Driver(key, self.s.profiles[name].bit_rate)
        return self.drivers[key]

    def _connect(self, drv: _Driver) -> None:
        active = [d.name for d in self.drivers.values() if d.connected and d is not drv]
        if active:
            self._note("contention", ", ".join([*active, drv.name]))
            raise BusContentionError(self.now, [*active, drv.name])
        drv.connected = True
        drv.next_free = max(drv.next_free, self.now)
        self._note("connect", drv.name)

    def _disconnect(self, drv: _Driver) -> None:
        drv.connected = False
        if drv.in_flight is not None:
            word, start, _ = drv.in_flight
            self.truncated += 1
            self._note("truncated", f"{drv.name} {codec.word_hex(word)} started {start!r}")
            drv.in_flight = None
        drv.queue.clear()
        self._note("disconnect", drv.name)

    def _record_mfd(self, m: _Mfd, t: float) -> None:
        st = m.state
        self.timeline[m.name].append(
            MfdTransition(t, m.name, st.display, st.terrain_warning_active, st.taws_enabled, st.restart_count)
        )

    def _set_mfd(self, m: _Mfd, new: MfdState, t: float) -> None:
        old = m.state
        m.state = new
        if (old.display, old.terrain_warning_active, old.taws_enabled, old.restart_count) != (
            new.display,
            new.terrain_warning_active,
            new.taws_enabled,
            new.restart_count,
        ):
            self._record_mfd(m, t)

    # -- transmission -----------------------------------------------------

    def _enqueue(self, drv: _Driver, word: int) -> None:
        if not drv.connected:
            return
        drv.queue.append(word)
        if drv.in_flight is None and not drv.start_pending:
            drv.start_pending = True
            self._push(max(self.now, drv.next_free), _P_START, "start", drv.name)

    def _start(self, drv: _Driver) -> None:
        drv.start_pending = False
        if not drv.connected or not drv.queue or drv.in_flight is not None:
            return
        word = drv.queue.pop(0)
        token = next(self._token)
        drv.in_flight = (word, self.now, token)
        drv.next_free = self.now + word_slot(drv.bit_rate)
        self._push(self.now + WORD_BITS / drv.bit_rate, _P_DONE, "done", drv.name, token)

    def _done(self, drv: _Driver, token: int) -> None:
        if drv.in_flight is None or drv.in_flight[2] != token:
            return  # truncated by a relay switch
        word, start, _ = drv.in_flight
        drv.in_flight = None
        entry = BusLogEntry(start, word, drv.name, codec.is_valid(word))
        self.log.append(entry)
        for m in self.mfds:
            if start >= m.listening_since:
                self._set_mfd(m, mfd_receive(m.state, word, start, m.config), start)
        if drv.queue:
            drv.start_pending = True
            self._push(max(self.now, drv.next_free), _P_START, "start", drv.name)

    # -- scenario events --------------------------------------------------

    def _flight(self, sample: FlightSample) -> None:
        self.sample = sample
        if self.fence is None or self.fence.fired:
            return
        if self.fence.update(sample.lon, sample.lat):
            self._fire_relay(sample)

    def _fire_relay(self, sample: FlightSample) -> None:
        relay = self.s.relay
        self.trigger_time = self.now
        self.trigger_sample = sample
        self._note("relay", f"fence tripped at lon={sample.lon} lat={sample.lat}")
        # break before make
        self._disconnect(self.drivers[relay.legitimate])
        rogue = self._driver(relay.rogue)
        self._connect(rogue)
        if self.s.attack is not None:
            plan = self.s.attack.transmissions(self.now, self.s.duration, rogue.bit_rate)
            self._next_plan_word(plan)

    def _next_plan_word(self, plan) -> None:
        nxt = next(plan, None)
        if nxt is not None:
            t, word = nxt
            self._push(t, _P_EMIT, "plan", plan, word)

    def _emit(self, index: int, k: int) -> None:
        emissions = (*self.s.emission_schedule, *self.s.egpws.extra)
        em = emissions[index]
        drv = self.drivers[self.s.legitimate]
        if not drv.connected:
            return  # the relay never reconnects the legitimate unit
        self._enqueue(drv, emission_word(em, self.sample, self.s.egpws))
        self._push(em.offset + (k + 1) * em.period, _P_EMIT, "emit", index, k + 1)

    def _restart(self, disable_taws: bool) -> None:
        for m in self.mfds:
            self._set_mfd(m, mfd_begin_restart(m.state, disable_taws), self.now)
            self._push(self.now + m.config.boot_time, _P_MFD, "booted", m.name)
        self._note("mfd_restart", f"disable_taws={disable_taws}")

    def _booted(self, name: str) -> None:
        for m in self.mfds:
            if m.name == name and m.state.display is Display.BOOTING:
                m.listening_since = self.now
                self._set_mfd(m, mfd_finish_boot(m.state), self.now)
                self._note("mfd_booted", f"{name} -> {m.state.display.value}")

    # -- main loop ------------------------------------------------------

    def run(self) -> RunResult:
        s = self.s
        legit = self._driver(s.legitimate)
        self._connect(legit)
        for m in self.mfds:
            self._record_mfd(m, 0.0)
        for sample in s.flight_path:
            self._push(sample.time, _P_FLIGHT, "flight", sample)
        for tap in s.taps:
            key = f"tap:{tap.transmitter}"
            self._push(tap.connect_at, _P_WIRING, "tap_on", tap.transmitter, key)
            if tap.disconnect_at is not None:
                self._push(tap.disconnect_at, _P_WIRING, "tap_off", key)
        for r in s.mfd_restarts:
            self._push(r.time, _P_MFD, "restart", r.disable_taws)
        for i, em in enumerate((*s.emission_schedule, *s.egpws.extra)):
            self._push(em.offset, _P_EMIT, "emit", i, 0)

        while self._heap:
            t, _, _, kind, args = heapq.heappop(self._heap)
            if t >= s.duration:
                break
            self.now = t
            if kind == "flight":
                self._flight(*args)
            elif kind == "emit":
                self._emit(*args)
            elif kind == "plan":
                plan, word = args
                self._enqueue(self.drivers[s.relay.rogue], word)
                self._next_plan_word(plan)
            elif kind == "start":
                self._start(self.drivers[args[0]])
            elif kind == "done":
                self._done(self.drivers[args[0]], args[1])
            elif kind == "tap_on":
                self._connect(self._driver(args[0], args[1]))
            elif kind == "tap_off":
                self._disconnect(self.drivers[args[0]])
            elif kind == "restart":
                self._restart(*args)
            elif kind == "booted":
                self._booted(*args)

        log.debug("scenario %s: %d words, %d events", s.name, len(self.log), len(self.events))
        return RunResult(
            scenario=s,
            log=self.log,
            events=self.events,
            mfd_timeline=self.timeline,
            mfd_final={m.name: m.state for m in self.mfds},
            trigger_time=self.trigger_time,
            trigger_sample=self.trigger_sample,
            truncated_words=self.truncated,
        )


def run_scenario(scenario: BusScenario) -> RunResult:
    return BusSimulator(scenario).run()


def capture_traces(
    result: RunResult, capture: TraceCapture | None = None
) -> list[tuple[int, VoltageTrace]]:
    """Render voltage traces for the logged words selected by ``capture``.

    Each trace is drawn from the electrical profile of the transmitter that
    actually sent the word, with noise seeded by ``(scenario seed, log
    index)``. Returns ``(log_index, trace)`` pairs.
    """
    s = result.scenario
    capture = capture or s.trace_capture or TraceCapture()
    out: list[tuple[int, VoltageTrace]] = []
    matched = 0
    for i, entry in enumerate(result.log):
        if capture.labels:
            label = codec.reverse_label_bits(entry.word & 0xFF)
            if label not in capture.labels:
                continue
        matched += 1
        if (matched - 1) % capture.stride:
            continue
        trace = synthesize_trace(
            entry.word,
            s.profiles[entry.source],
            capture.sample_rate,
            rng=np.random.default_rng([s.seed, i]),
            word_index=len(out) + 1,
        )
        out.append((i, trace))
        if capture.max_words is not None and len(out) >= capture.max_words:
            break
    return out
