from __future__ import annotations

import json

import pytest

from arinclab import codec
from arinclab.attacks import Fuzz, GeoFence, Playback
from arinclab.bus import capture_traces, run_scenario
from arinclab.codec import Label
from arinclab.devices import (
    Display,
    EgpwsConfig,
    Emission,
    FlightSample,
    MfdConfig,
    MfdState,
    Terrain,
    altitude_word,
    egpws_emit,
    gpws_discrete_word,
    mfd_begin_restart,
    mfd_receive,
    mfd_restart_recovery,
)
from arinclab.errors import BusContentionError, ScenarioError
from arinclab.scenario import (
    BusScenario,
    Receiver,
    RelayConfig,
    Restart,
    Tap,
    TraceCapture,
    load_scenario,
    bundled_scenario_path,
    scenario_from_json,
    scenario_to_json,
)
from arinclab.waveform import ALTADT_PROFILE, EGPWS_PROFILE, decode_trace

WARN = 0x0000041D
CLEAR = gpws_discrete_word(False)
PROFILES = {"EGPWS": EGPWS_PROFILE, "AltaDT": ALTADT_PROFILE}


def straight_path(n=60, lon0=-76.65, dlon=-0.01, lat=39.243, alt=20_000.0):
    return tuple(FlightSample(float(i), lon0 + dlon * i, lat, alt) for i in range(n))


def simple(**kw) -> BusScenario:
    base = dict(profiles=PROFILES, flight_path=straight_path(), duration=20.0, seed=1)
    base.update(kw)
    return BusScenario(**base)


# --- EGPWS model ------------------------------------------------------------------


def test_egpws_high_altitude_no_warning():
    words = egpws_emit(FlightSample(0, -76.65, 39.243, 20_000))
    msg = codec.decode_word(words[0])
    assert msg.label.octal_value == 0o270
    assert not msg.data.bit(11)
    assert codec.decode_word(words[1]).data.magnitude == 20_000


def test_egpws_altitude_word_matches_worked_example():
    assert altitude_word(12_597) == 0xE189A8C1


def test_egpws_warning_below_threshold():
    cfg = EgpwsConfig(terrain=Terrain(elevation_ft=500.0))
    assert codec.decode_word(egpws_emit(FlightSample(0, 0, 0, 1_499), cfg)[0]).data.bit(11)
    assert not codec.decode_word(egpws_emit(FlightSample(0, 0, 0, 1_500), cfg)[0]).data.bit(11)
    assert gpws_discrete_word(True) == WARN


def test_egpws_extra_labels():
    cfg = EgpwsConfig(extra=(Emission(Label(0o350), 1.0, value=7),))
    words = egpws_emit(FlightSample(0, 0, 0, 5_000), cfg)
    assert len(words) == 3
    assert codec.decode_word(words[2]).label.octal_value == 0o350


# --- MFD model ----------------------------------------------------------------------


def test_mfd_switches_to_terrain():
    st = mfd_receive(MfdState(), WARN, 0.0)
    assert st.display is Display.TERRAIN_DISPLAY and st.terrain_warning_active


def test_mfd_parity_error_counts_only():
    st = mfd_receive(MfdState(), WARN, 0.0)
    bad = mfd_receive(st, WARN ^ 0x80000000, 0.05)
    assert bad.error_count == st.error_count + 1
    assert (bad.display, bad.terrain_warning_active) == (st.display, st.terrain_warning_active)


def test_mfd_stays_on_terrain_through_attack():
    cfg = MfdConfig(hold_time=1.0)
    st = MfdState()
    for k in range(600):
        st = mfd_receive(st, WARN, k * 0.1, cfg)
        assert st.display is Display.TERRAIN_DISPLAY


def test_mfd_hold_time_clears_flag_not_display():
    cfg = MfdConfig(hold_time=1.0)
    st = mfd_receive(MfdState(), WARN, 0.0, cfg)
    st = mfd_receive(st, CLEAR, 0.5, cfg)
    assert st.terrain_warning_active
    st = mfd_receive(st, CLEAR, 1.0, cfg)
    assert not st.terrain_warning_active
    assert st.display is Display.TERRAIN_DISPLAY


def test_double_restart_recovery():
    st = mfd_receive(MfdState(), WARN, 0.0)
    st = mfd_restart_recovery(st, disable_taws=True)
    assert st.display is Display.CONFIG_MODE and not st.taws_enabled
    assert st.restart_count == 1
    st = mfd_restart_recovery(st)
    assert st.display is Display.NAV_MAP and not st.taws_enabled
    assert st.restart_count == 2
    st = mfd_receive(st, WARN, 10.0)
    assert st.display is Display.NAV_MAP


def test_restart_keeping_taws_retriggers():
    st = mfd_receive(MfdState(), WARN, 0.0)
    st = mfd_restart_recovery(mfd_restart_recovery(st, disable_taws=False))
    assert st.display is Display.NAV_MAP and st.taws_enabled
    assert mfd_receive(st, WARN, 5.0).display is Display.TERRAIN_DISPLAY


def test_booting_ignores_words():
    st = mfd_begin_restart(MfdState())
    assert st.display is Display.BOOTING
    assert mfd_receive(st, WARN, 0.0) == st
    assert mfd_receive(st, WARN ^ 0x80000000, 0.0) == st


# --- simulator ------------------------------------------------------------------------


def test_no_relay_all_legit_nav_map():
    res = run_scenario(simple())
    assert res.log and all(e.source == "EGPWS" for e in res.log)
    assert res.mfd_final["MFD"].display is Display.NAV_MAP
    assert res.trigger_time is None


def test_timestamps_and_spacing():
    res = run_scenario(simple())
    ts = [e.timestamp for e in res.log]
    assert all(b >= a for a, b in zip(ts, ts[1:]))
    assert all(b - a >= 32 / 12_500 - 1e-12 for a, b in zip(ts, ts[1:]))


def test_fast_bus_spacing():
    fast = {"EGPWS": EGPWS_PROFILE.replace(bit_rate=100_000.0), "AltaDT": ALTADT_PROFILE}
    sched = (Emission(Label(0o270), 0.001, "gpws_discrete"), Emission(Label(0o203), 0.001, "altitude_bnr"))
    res = run_scenario(simple(profiles=fast, emission_schedule=sched, duration=0.5))
    ts = [e.timestamp for e in res.log]
    assert min(b - a for a, b in zip(ts, ts[1:])) >= 320e-6 - 1e-12


def test_emission_rates():
    res = run_scenario(simple(duration=10.0))
    labels = [codec.reverse_label_bits(e.word & 0xFF) for e in res.log]
    assert labels.count(0o270) == 100
    assert labels.count(0o203) == 200


def test_relay_fires_at_first_west_sample():
    relay = RelayConfig(GeoFence(77.3, 39.2), "EGPWS", "AltaDT")
    s = simple(relay=relay, attack=Playback((WARN,), 0.1), duration=120.0, flight_path=straight_path(120))
    res = run_scenario(s)
    first = next(p for p in s.flight_path if p.lon < -77.3)
    assert res.trigger_time == first.time
    before = [e for e in res.log if e.timestamp < first.time]
    after = [e for e in res.log if e.timestamp >= first.time]
    assert all(e.source == "EGPWS" for e in before)
    assert after and all(e.source == "AltaDT" for e in after)
    assert res.mfd_final["MFD"].display is Display.TERRAIN_DISPLAY


def test_relay_truncates_in_flight_word():
    # trigger sample lands 1 ms into the legit word that started at 66.0
    path = straight_path(120)
    sched = (Emission(Label(0o270), 0.1, "gpws_discrete", offset=0.0),)
    relay = RelayConfig(GeoFence(77.3, 39.2), "EGPWS", "AltaDT")
    shifted = tuple(FlightSample(p.time + 0.001, p.lon, p.lat, p.alt_ft) for p in path)
    res = run_scenario(
        simple(relay=relay, emission_schedule=sched, flight_path=shifted, duration=80.0)
    )
    assert res.truncated_words == 1
    assert any(ev.kind == "truncated" for ev in res.events)


def test_deterministic_digest():
    relay = RelayConfig(GeoFence(77.3, 39.2), "EGPWS", "AltaDT")
    s = simple(relay=relay, attack=Fuzz(3, 50.0, 0.5), duration=80.0, flight_path=straight_path(120))
    assert run_scenario(s).digest() == run_scenario(s).digest()


def test_tap_contention():
    with pytest.raises(BusContentionError) as err:
        run_scenario(simple(taps=(Tap("AltaDT", 3.0),)))
    assert err.value.exit_code == 3
    assert err.value.time == 3.0


def test_receiver_limit():
    rx = tuple(Receiver(f"R{i}") for i in range(21))
    with pytest.raises(ScenarioError):
        run_scenario(simple(receivers=rx))
    run_scenario(simple(receivers=rx[:20], duration=1.0))


def test_validation_errors():
    with pytest.raises(ScenarioError):
        simple(duration=0.0).validate()
    with pytest.raises(ScenarioError):
        simple(attack=Playback((WARN,), 0.1)).validate()
    with pytest.raises(ScenarioError):
        simple(relay=RelayConfig(GeoFence(77.3), "EGPWS", "Ghost")).validate()
    with pytest.raises(ScenarioError):
        simple(taps=(Tap("AltaDT", 5.0, 4.0),)).validate()
    path = straight_path()
    with pytest.raises(ScenarioError):
        simple(flight_path=path[:3] + path[2:]).validate()


def test_capture_traces_use_sender_profile():
    relay = RelayConfig(GeoFence(77.3, 39.2), "EGPWS", "AltaDT")
    s = simple(relay=relay, attack=Playback((WARN,), 0.1), duration=80.0, flight_path=straight_path(120))
    res = run_scenario(s)
    cap = capture_traces(res, TraceCapture(labels=frozenset({0o270}), stride=50))
    assert cap
    for idx, tr in cap:
        entry = res.log[idx]
        assert decode_trace(tr, 12_500).word == entry.word
    assert {res.log[i].source for i, _ in cap} == {"EGPWS", "AltaDT"}
    again = capture_traces(res, TraceCapture(labels=frozenset({0o270}), stride=50))
    assert all((a[1].voltages == b[1].voltages).all() for a, b in zip(cap, again))


# --- scenario files ------------------------------------------------------------------


def test_bundled_scenario_json_roundtrip(tmp_path):
    s = load_scenario(bundled_scenario_path())
    doc = scenario_to_json(s)
    again = scenario_from_json(json.loads(json.dumps(doc)))
    assert again == s
    assert run_scenario(again).digest() == run_scenario(s).digest()


def test_scenario_json_errors():
    doc = scenario_to_json(load_scenario(bundled_scenario_path()))
    del doc["duration"]
    with pytest.raises(ScenarioError):
        scenario_from_json(doc)
    doc = scenario_to_json(load_scenario(bundled_scenario_path()))
    doc["attack"] = {"kind": "laser"}
    with pytest.raises(ScenarioError):
        scenario_from_json(doc)


def test_restart_schedule_runs_recovery():
    relay = RelayConfig(GeoFence(77.3, 39.2), "EGPWS", "AltaDT")
    s = simple(
        relay=relay,
        attack=Playback((WARN,), 0.1),
        duration=100.0,
        flight_path=straight_path(120),
        mfd_restarts=(Restart(80.0), Restart(90.0)),
    )
    res = run_scenario(s)
    disp = [t.display for t in res.mfd_timeline["MFD"]]
    assert disp == [
        Display.NAV_MAP,
        Display.TERRAIN_DISPLAY,
        Display.BOOTING,
        Display.CONFIG_MODE,
        Display.BOOTING,
        Display.NAV_MAP,
    ]
    assert res.mfd_final["MFD"].display is Display.NAV_MAP
