"""Bus scenario description and its JSON document form.

JSON layout (all keys optional unless noted)::

    {
      "name": "...",
      "seed": 429,
      "duration": 540.0,                       # required, seconds
      "profiles": {"EGPWS": {...}, ...},       # required, TransmitterProfile fields
      "legitimate": "EGPWS",
      "receivers": [{"name": "MFD", "kind": "mfd", "hold_time": 1.0, "boot_time": 2.0}],
      "emission_schedule": [{"label": "270", "period": 0.1, "source": "gpws_discrete"}],
      "egpws": {"warning_threshold_ft": 1000, "warning_bit": 11,
                "extra": [{"label": "350", "period": 0.5, "value": 0}]},
      "terrain": {"elevation_ft": 0, "patches": [[lon0, lon1, lat0, lat1, elev], ...]},
      "relay": {"legitimate": "EGPWS", "rogue": "AltaDT",
                "trigger": {"west_of": 77.3, "south_of": 39.2}},
      "attack": {"kind": "playback", "recording": ["0000041D"], "cadence": 0.1},
      "taps": [{"transmitter": "AltaDT", "connect_at": 5.0}],
      "mfd_restarts": [{"time": 494.0, "disable_taws": true}],
      "flight_path": [[t, lon, lat, alt_ft], ...]
                     | {"step": 1.0, "waypoints": [[t, lon, lat, alt_ft], ...]},
      "trace_capture": {"labels": ["270"], "max_words": null, "sample_rate": 12.5e6,
                        "stride": 1}
    }

Labels are octal strings, words 8-digit hex strings, longitudes east
positive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import codec
from .attacks import AttackPlan, Fuzz, GeoFence, Playback, Spoof, word_slot
from .codec import Bcd, Bnr, Discrete, Label
from .devices import (
    DEFAULT_SCHEDULE,
    EgpwsConfig,
    Emission,
    FlightSample,
    MfdConfig,
    Terrain,
    TerrainPatch,
)
from .errors import ArincLabError, ScenarioError
from .waveform import DEFAULT_SAMPLE_RATE, TransmitterProfile

MAX_RECEIVERS = 20


@dataclass(frozen=True)
class Receiver:
    name: str
    kind: str = "monitor"  # "mfd" | "monitor"
    mfd: MfdConfig | None = None


@dataclass(frozen=True)
class RelayConfig:
    trigger: GeoFence
    legitimate: str
    rogue: str


@dataclass(frozen=True)
class Tap:
    """A transmitter wired straight onto the bus, bypassing the relay."""

    transmitter: str
    connect_at: float
    disconnect_at: float | None = None


@dataclass(frozen=True)
class Restart:
    time: float
    disable_taws: bool = True


@dataclass(frozen=True)
class TraceCapture:
    labels: frozenset[int] = frozenset()
    max_words: int | None = None
    sample_rate: float = DEFAULT_SAMPLE_RATE
    stride: int = 1  # keep every n-th matching word


@dataclass(frozen=True)
class BusScenario:
    profiles: dict[str, TransmitterProfile]
    flight_path: tuple[FlightSample, ...]
    duration: float
    seed: int = 0
    name: str = "scenario"
    legitimate: str = "EGPWS"
    receivers: tuple[Receiver, ...] = (Receiver("MFD", "mfd", MfdConfig()),)
    emission_schedule: tuple[Emission, ...] = DEFAULT_SCHEDULE
    egpws: EgpwsConfig = field(default_factory=EgpwsConfig)
    relay: RelayConfig | None = None
    attack: AttackPlan | None = None
    taps: tuple[Tap, ...] = ()
    mfd_restarts: tuple[Restart, ...] = ()
    trace_capture: TraceCapture | None = None

    def validate(self) -> None:
        """Check everything except contention, which only shows up when run."""
        if not self.duration > 0:
            raise ScenarioError("duration must be positive")
        if self.legitimate not in self.profiles:
            raise ScenarioError(f"no profile for legitimate transmitter {self.legitimate!r}")
        if len(self.receivers) > MAX_RECEIVERS:
            raise ScenarioError(f"{len(self.receivers)} receivers; the bus allows {MAX_RECEIVERS}")
        names = [r.name for r in self.receivers]
        if len(set(names)) != len(names):
            raise ScenarioError("receiver names must be unique")
        if not self.flight_path:
            raise ScenarioError("flight path is empty")
        times = [s.time for s in self.flight_path]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScenarioError("flight path times must be strictly increasing")
        legit = self.profiles[self.legitimate]
        load = sum(1.0 / e.period for e in (*self.emission_schedule, *self.egpws.extra))
        if load * word_slot(legit.bit_rate) > 1.0:
            raise ScenarioError("emission schedule exceeds bus capacity")
        if self.relay is not None:
            if self.relay.legitimate != self.legitimate:
                raise ScenarioError("relay.legitimate must name the legitimate transmitter")
            if self.relay.rogue not in self.profiles:
                raise ScenarioError(f"no profile for rogue transmitter {self.relay.rogue!r}")
            if self.relay.rogue == self.relay.legitimate:
                raise ScenarioError("relay must switch between two different transmitters")
        if self.attack is not None:
            if self.relay is None:
                raise ScenarioError("an attack plan needs a relay to reach the bus")
            self.attack.check_capacity(self.profiles[self.relay.rogue].bit_rate)
        for tap in self.taps:
            if tap.transmitter not in self.profiles:
                raise ScenarioError(f"no profile for tapped transmitter {tap.transmitter!r}")
            if tap.disconnect_at is not None and tap.disconnect_at <= tap.connect_at:
                raise ScenarioError("tap must disconnect after it connects")
        if self.trace_capture is not None and self.trace_capture.stride < 1:
            raise ScenarioError("trace_capture.stride must be at least 1")
        for r in self.mfd_restarts:
            if r.time < 0:
                raise ScenarioError("restart times must be non-negative")


# --- JSON ---------------------------------------------------------------


def _payload_from_json(data) -> object:
    if isinstance(data, int):
        return data
    if not isinstance(data, dict) or len(data) != 1:
        raise ScenarioError(f"payload must be an int or a one-key object, got {data!r}")
    ((kind, value),) = data.items()
    if kind == "bnr":
        return Bnr(int(value), padding_bits=1)
    if kind == "discrete":
        return Discrete(int(value))
    if kind == "bcd":
        return Bcd(tuple(int(d) for d in value))
    if kind == "raw":
        return int(value)
    raise ScenarioError(f"unknown payload kind {kind!r}")


def _payload_to_json(payload) -> object:
    if isinstance(payload, int):
        return {"raw": payload}
    if isinstance(payload, Bnr):
        return {"bnr": payload.magnitude}
    if isinstance(payload, Discrete):
        return {"discrete": payload.bits}
    if isinstance(payload, Bcd):
        return {"bcd": list(payload.digits)}
    return {"raw": payload.to_field()}


def attack_from_json(data: dict) -> AttackPlan:
    kind = data.get("kind")
    if kind == "playback":
        return Playback(tuple(codec.parse_hex(w) for w in data["recording"]), float(data["cadence"]))
    if kind == "spoof":
        return Spoof(
            label=Label.parse(str(data["label"])),
            payload=_payload_from_json(data["payload"]),
            cadence=float(data["cadence"]),
            sdi=int(data.get("sdi", 0)),
            ssm=int(data.get("ssm", 0)),
        )
    if kind == "fuzz":
        return Fuzz(
            seed=int(data["seed"]),
            rate=float(data["rate"]),
            parity_valid_fraction=float(data.get("parity_valid_fraction", 0.5)),
        )
    raise ScenarioError(f"unknown attack kind {kind!r}")


def attack_to_json(plan: AttackPlan) -> dict:
    if isinstance(plan, Playback):
        return {
            "kind": "playback",
            "recording": [codec.word_hex(w) for w in plan.recording],
            "cadence": plan.cadence,
        }
    if isinstance(plan, Spoof):
        return {
            "kind": "spoof",
            "label": str(plan.label),
            "payload": _payload_to_json(plan.payload),
            "cadence": plan.cadence,
            "sdi": plan.sdi,
            "ssm": plan.ssm,
        }
    return {
        "kind": "fuzz",
        "seed": plan.seed,
        "rate": plan.rate,
        "parity_valid_fraction": plan.parity_valid_fraction,
    }


def _emission_from_json(data: dict) -> Emission:
    return Emission(
        label=Label.parse(str(data["label"])),
        period=float(data["period"]),
        source=data.get("source", "static"),
        value=int(data.get("value", 0)),
        offset=float(data.get("offset", 0.0)),
    )


def _emission_to_json(e: Emission) -> dict:
    return {
        "label": str(e.label),
        "period": e.period,
        "source": e.source,
        "value": e.value,
        "offset": e.offset,
    }


def _sample(row) -> FlightSample:
    if isinstance(row, dict):
        return FlightSample(
            float(row["time"]), float(row["lon"]), float(row["lat"]), float(row["alt_ft"])
        )
    t, lon, lat, alt = row
    return FlightSample(float(t), float(lon), float(lat), float(alt))


def expand_waypoints(waypoints: list[FlightSample], step: float) -> tuple[FlightSample, ...]:
    """Linearly interpolate waypoints onto a regular ``step`` time grid."""
    if not step > 0:
        raise ScenarioError("flight path step must be positive")
    t0, t1 = waypoints[0].time, waypoints[-1].time
    n = int(math.floor((t1 - t0) / step + 1e-9))
    times = t0 + step * np.arange(n + 1)
    wt = [w.time for w in waypoints]
    cols = [
        np.interp(times, wt, [getattr(w, attr) for w in waypoints])
        for attr in ("lon", "lat", "alt_ft")
    ]
    # rounded so the expanded path is stable across platforms
    return tuple(
        FlightSample(round(float(t), 9), round(float(lo), 9), round(float(la), 9), round(float(al), 6))
        for t, lo, la, al in zip(times, *cols)
    )


def _flight_path_from_json(data) -> tuple[FlightSample, ...]:
    if isinstance(data, dict):
        waypoints = [_sample(r) for r in data["waypoints"]]
        if len(waypoints) < 2:
            raise ScenarioError("need at least two waypoints")
        return expand_waypoints(waypoints, float(data["step"]))
    return tuple(_sample(r) for r in data)


def _receiver_from_json(data: dict) -> Receiver:
    kind = data.get("kind", "monitor")
    if kind not in ("mfd", "monitor"):
        raise ScenarioError(f"unknown receiver kind {kind!r}")
    mfd = None
    if kind == "mfd":
        mfd = MfdConfig(
            hold_time=float(data.get("hold_time", 1.0)),
            boot_time=float(data.get("boot_time", 2.0)),
            warning_bit=int(data.get("warning_bit", 11)),
        )
    return Receiver(data["name"], kind, mfd)


def _receiver_to_json(r: Receiver) -> dict:
    out = {"name": r.name, "kind": r.kind}
    if r.mfd is not None:
        out.update(hold_time=r.mfd.hold_time, boot_time=r.mfd.boot_time, warning_bit=r.mfd.warning_bit)
    return out


def scenario_from_json(doc: dict) -> BusScenario:
    """Build and validate a scenario from a parsed JSON document."""
    try:
        profiles = {
            name: TransmitterProfile.from_dict(name, p) for name, p in doc["profiles"].items()
        }
        eg = doc.get("egpws", {})
        terrain_doc = doc.get("terrain", {})
        terrain = Terrain(
            float(terrain_doc.get("elevation_ft", 0.0)),
            tuple(TerrainPatch(*map(float, p)) for p in terrain_doc.get("patches", [])),
        )
        egpws = EgpwsConfig(
            warning_threshold_ft=float(eg.get("warning_threshold_ft", 1000.0)),
            warning_bit=int(eg.get("warning_bit", 11)),
            sdi=int(eg.get("sdi", 0)),
            discrete_ssm=int(eg.get("discrete_ssm", 0)),
            altitude_ssm=int(eg.get("altitude_ssm", 3)),
            terrain=terrain,
            extra=tuple(_emission_from_json(e) for e in eg.get("extra", [])),
        )
        relay = None
        if doc.get("relay"):
            r = doc["relay"]
            trig = r["trigger"]
            relay = RelayConfig(
                trigger=GeoFence(trig.get("west_of"), trig.get("south_of")),
                legitimate=r.get("legitimate", doc.get("legitimate", "EGPWS")),
                rogue=r["rogue"],
            )
        capture = None
        if doc.get("trace_capture") is not None:
            c = doc["trace_capture"]
            capture = TraceCapture(
                labels=frozenset(Label.parse(str(x)).octal_value for x in c.get("labels", [])),
                max_words=c.get("max_words"),
                sample_rate=float(c.get("sample_rate", DEFAULT_SAMPLE_RATE)),
                stride=int(c.get("stride", 1)),
            )
        scenario = BusScenario(
            name=doc.get("name", "scenario"),
            seed=int(doc.get("seed", 0)),
            duration=float(doc["duration"]),
            profiles=profiles,
            legitimate=doc.get("legitimate", "EGPWS"),
            receivers=tuple(
                _receiver_from_json(r)
                for r in doc.get("receivers", [{"name": "MFD", "kind": "mfd"}])
            ),
            emission_schedule=tuple(
                _emission_from_json(e) for e in doc["emission_schedule"]
            )
            if "emission_schedule" in doc
            else DEFAULT_SCHEDULE,
            egpws=egpws,
            relay=relay,
            attack=attack_from_json(doc["attack"]) if doc.get("attack") else None,
            taps=tuple(
                Tap(
                    t["transmitter"],
                    float(t["connect_at"]),
                    None if t.get("disconnect_at") is None else float(t["disconnect_at"]),
                )
                for t in doc.get("taps", [])
            ),
            mfd_restarts=tuple(
                Restart(float(r["time"]), bool(r.get("disable_taws", True)))
                for r in doc.get("mfd_restarts", [])
            ),
            flight_path=_flight_path_from_json(doc["flight_path"]),
            trace_capture=capture,
        )
    except ArincLabError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario document: {exc!r}") from exc
    scenario.validate()
    return scenario


def scenario_to_json(s: BusScenario) -> dict:
    doc: dict = {
        "name": s.name,
        "seed": s.seed,
        "duration": s.duration,
        "profiles": {name: p.to_dict() for name, p in s.profiles.items()},
        "legitimate": s.legitimate,
        "receivers": [_receiver_to_json(r) for r in s.receivers],
        "emission_schedule": [_emission_to_json(e) for e in s.emission_schedule],
        "egpws": {
            "warning_threshold_ft": s.egpws.warning_threshold_ft,
            "warning_bit": s.egpws.warning_bit,
            "sdi": s.egpws.sdi,
            "discrete_ssm": s.egpws.discrete_ssm,
            "altitude_ssm": s.egpws.altitude_ssm,
            "extra": [_emission_to_json(e) for e in s.egpws.extra],
        },
        "terrain": {
            "elevation_ft": s.egpws.terrain.elevation_ft,
            "patches": [
                [p.lon_min, p.lon_max, p.lat_min, p.lat_max, p.elevation_ft]
                for p in s.egpws.terrain.patches
            ],
        },
        "taps": [
            {"transmitter": t.transmitter, "connect_at": t.connect_at, "disconnect_at": t.disconnect_at}
            for t in s.taps
        ],
        "mfd_restarts": [{"time": r.time, "disable_taws": r.disable_taws} for r in s.mfd_restarts],
        "flight_path": [[f.time, f.lon, f.lat, f.alt_ft] for f in s.flight_path],
    }
    if s.relay is not None:
        doc["relay"] = {
            "legitimate": s.relay.legitimate,
            "rogue": s.relay.rogue,
            "trigger": s.relay.trigger.to_dict(),
        }
    if s.attack is not None:
        doc["attack"] = attack_to_json(s.attack)
    if s.trace_capture is not None:
        doc["trace_capture"] = {
            "labels": [f"{x:03o}" for x in sorted(s.trace_capture.labels)],
            "max_words": s.trace_capture.max_words,
            "sample_rate": s.trace_capture.sample_rate,
            "stride": s.trace_capture.stride,
        }
    return doc


def load_scenario(path) -> BusScenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    return scenario_from_json(doc)


def save_scenario(scenario: BusScenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_json(scenario), indent=2) + "\n")


def bundled_scenario_path() -> Path:
    """The bundled geo-fenced playback scenario."""
    return Path(__file__).with_name("scenarios") / "kiad_geofence_playback.json"
