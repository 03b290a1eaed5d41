from __future__ import annotations

import numpy as np
import pytest

from arinclab import codec, ids
from arinclab.errors import EmptyClassError, InsufficientTrainingDataError, NoRisingEdgeError
from arinclab.ids import BaselineModel, FeatureVector
from arinclab.waveform import ALTADT_PROFILE, EGPWS_PROFILE, synthesize_batch, synthesize_trace

FS = 12.5e6


def random_words(n, seed):
    rng = np.random.default_rng(seed)
    return [codec.with_parity(int(w)) for w in rng.integers(0, 2**32, n)]


@pytest.fixture(scope="module")
def baseline():
    traces = synthesize_batch(random_words(100, 1), EGPWS_PROFILE.replace(noise_sigma=0.05), FS, seed=1)
    return ids.train(traces)


def test_train_slope_mean(baseline):
    assert baseline.means[0] == pytest.approx(5.05, abs=0.05)
    assert baseline.training_count == 100
    assert baseline.threshold_k == 4.0


def test_identical_traces_floor_sigma():
    traces = [synthesize_trace(0xE189A8C1, EGPWS_PROFILE, FS)] * 30
    model = ids.train(traces)
    assert all(s == ids.SIGMA_FLOOR for s in model.sigmas)
    v = ids.detect(model, traces[0])
    # the mean of identical floats can be one ulp off, which the floor magnifies
    assert v.score < 1e-2 and not v.anomalous


def test_insufficient_training():
    traces = synthesize_batch(random_words(5, 2), EGPWS_PROFILE, FS)
    with pytest.raises(InsufficientTrainingDataError) as err:
        ids.train(traces)
    assert err.value.exit_code == 4


def test_z_score_arithmetic():
    model = BaselineModel((5.05, 10.0, 1.58e-6), (0.1, 0.01, 1e-8), 100)
    v = ids.detect_features(model, FeatureVector(0.937, 10.0, 1.58e-6))
    assert v.z_scores["rising_slope"] == pytest.approx((0.937 - 5.05) / 0.1)
    assert v.score == pytest.approx(41.13)
    assert v.anomalous


def test_mean_vector_scores_zero():
    model = BaselineModel((5.05, 10.0, 1.58e-6), (0.1, 0.01, 1e-8), 100)
    v = ids.detect_features(model, FeatureVector(5.05, 10.0, 1.58e-6))
    assert v.score == 0.0 and not v.anomalous


def test_rogue_trace_flagged(baseline):
    tr = synthesize_trace(0x0000041D, ALTADT_PROFILE.replace(noise_sigma=0.05), FS, seed=3)
    v = ids.detect(baseline, tr)
    assert v.anomalous and v.score > 100


def test_baseline_profile_mostly_passes(baseline):
    traces = synthesize_batch(random_words(300, 4), EGPWS_PROFILE.replace(noise_sigma=0.05), FS, seed=4)
    flagged = sum(ids.detect(baseline, t).anomalous for t in traces)
    assert flagged / len(traces) <= 0.01


def test_verdict_is_content_blind(baseline):
    p = ALTADT_PROFILE.replace(noise_sigma=0.05)
    # same noise draw, different content: replayed words are caught all the same
    a = ids.detect(baseline, synthesize_trace(0x0000041D, p, FS, seed=9))
    b = ids.detect(baseline, synthesize_trace(0xE189A8C1, p, FS, seed=9))
    assert a.anomalous and b.anomalous


def test_threshold_monotone(baseline):
    traces = synthesize_batch(random_words(60, 5), EGPWS_PROFILE.replace(noise_sigma=0.2), FS, seed=5)
    fvs = [ids.extract_features(t) for t in traces]
    prev = None
    for k in (0.5, 1.0, 2.0, 4.0, 8.0):
        m = baseline.with_threshold(k)
        flagged = {i for i, f in enumerate(fvs) if ids.detect_features(m, f).anomalous}
        if prev is not None:
            assert flagged <= prev
        prev = flagged


def test_evaluate_rates(baseline):
    legit = synthesize_batch(random_words(50, 6), EGPWS_PROFILE.replace(noise_sigma=0.05), FS, seed=6)
    rogue = synthesize_batch(random_words(50, 7), ALTADT_PROFILE.replace(noise_sigma=0.05), FS, seed=7)
    res = ids.evaluate(baseline, [(t, "EGPWS") for t in legit] + [(t, "AltaDT") for t in rogue], "EGPWS")
    assert res.tpr == 1.0
    assert res.fpr <= 0.02
    assert (res.n_legit, res.n_rogue) == (50, 50)
    assert res.flagged_rogue == 50


def test_evaluate_indistinguishable_rogue(baseline):
    p = EGPWS_PROFILE.replace(noise_sigma=0.05)
    legit = synthesize_batch(random_words(60, 8), p, FS, seed=8)
    rogue = synthesize_batch(random_words(60, 9), p, FS, seed=9)
    res = ids.evaluate(baseline, [(t, "a") for t in legit] + [(t, "b") for t in rogue], "a")
    assert abs(res.tpr - res.fpr) <= 0.05


def test_evaluate_empty_class(baseline):
    legit = synthesize_batch(random_words(3, 10), EGPWS_PROFILE, FS)
    with pytest.raises(EmptyClassError):
        ids.evaluate(baseline, [(t, "EGPWS") for t in legit], "EGPWS")
    with pytest.raises(EmptyClassError):
        ids.evaluate(baseline, [(t, "X") for t in legit], "EGPWS")


def test_feature_failure_propagates(baseline):
    with pytest.raises(NoRisingEdgeError):
        ids.detect(baseline, synthesize_trace(0, EGPWS_PROFILE, FS))


def test_model_save_load(tmp_path, baseline):
    path = tmp_path / "m.json"
    baseline.save(path)
    assert BaselineModel.load(path) == baseline
    doc = baseline.to_dict()
    doc["feature_names"] = ["a", "b", "c"]
    with pytest.raises(ValueError):
        BaselineModel.from_dict(doc)


def test_train_deterministic():
    traces = synthesize_batch(random_words(30, 11), EGPWS_PROFILE.replace(noise_sigma=0.1), FS, seed=11)
    assert ids.train(traces) == ids.train(traces)
