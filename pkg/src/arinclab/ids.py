"""Content-blind transmitter fingerprinting by rising-edge features.

A baseline is the per-feature mean and standard deviation over traces from
the legitimate transmitter. A word is flagged when any feature's |z-score|
exceeds ``threshold_k``. Verdicts only ever look at the voltage trace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyClassError, InsufficientTrainingDataError
from .waveform import EdgeFeatures, VoltageTrace, measure_edge

FEATURES = ("rising_slope", "hi_peak", "rise_time_10_90")
DEFAULT_K = 4.0
DEFAULT_MIN_TRAINING = 30
SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class FeatureVector:
    rising_slope: float
    hi_peak: float
    rise_time_10_90: float

    @classmethod
    def from_edge(cls, edge: EdgeFeatures) -> FeatureVector:
        return cls(edge.rising_slope, edge.hi_peak, edge.rise_time_10_90)

    def as_array(self) -> np.ndarray:
        return np.array([self.rising_slope, self.hi_peak, self.rise_time_10_90])


def extract_features(trace: VoltageTrace) -> FeatureVector:
    fv = FeatureVector.from_edge(measure_edge(trace))
    if not np.all(np.isfinite(fv.as_array())):
        raise ValueError("non-finite edge features")
    return fv


@dataclass(frozen=True)
class BaselineModel:
    means: tuple[float, ...]
    sigmas: tuple[float, ...]
    training_count: int
    threshold_k: float = DEFAULT_K
    feature_names: tuple[str, ...] = FEATURES

    def with_threshold(self, k: float) -> BaselineModel:
        return BaselineModel(self.means, self.sigmas, self.training_count, k, self.feature_names)

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "means": list(self.means),
            "sigmas": list(self.sigmas),
            "threshold_k": self.threshold_k,
            "training_count": self.training_count,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> BaselineModel:
        names = tuple(doc["feature_names"])
        if names != FEATURES:
            raise ValueError(f"model features {names} do not match {FEATURES}")
        return cls(
            means=tuple(float(x) for x in doc["means"]),
            sigmas=tuple(float(x) for x in doc["sigmas"]),
            training_count=int(doc["training_count"]),
            threshold_k=float(doc["threshold_k"]),
            feature_names=names,
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> BaselineModel:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Verdict:
    anomalous: bool
    score: float
    z_scores: dict[str, float] = field(default_factory=dict)


def train_features(
    features: Sequence[FeatureVector],
    threshold_k: float = DEFAULT_K,
    min_count: int = DEFAULT_MIN_TRAINING,
) -> BaselineModel:
    if len(features) < min_count:
        raise InsufficientTrainingDataError(
            f"{len(features)} training traces; at least {min_count} required"
        )
    x = np.stack([f.as_array() for f in features])
    means = x.mean(axis=0)
    sigmas = np.maximum(x.std(axis=0, ddof=1), SIGMA_FLOOR)
    return BaselineModel(
        tuple(means.tolist()), tuple(sigmas.tolist()), len(features), threshold_k
    )


def train(
    traces: Iterable[VoltageTrace],
    threshold_k: float = DEFAULT_K,
    min_count: int = DEFAULT_MIN_TRAINING,
) -> BaselineModel:
    """Fit a baseline from legitimate traces."""
    traces = list(traces)
    if len(traces) < min_count:
        raise InsufficientTrainingDataError(
            f"{len(traces)} training traces; at least {min_count} required"
        )
    return train_features([extract_features(t) for t in traces], threshold_k, min_count)


def detect_features(model: BaselineModel, fv: FeatureVector) -> Verdict:
    z = (fv.as_array() - np.asarray(model.means)) / np.asarray(model.sigmas)
    score = float(np.max(np.abs(z)))
    return Verdict(
        anomalous=score > model.threshold_k,
        score=score,
        z_scores=dict(zip(model.feature_names, z.tolist())),
    )


def detect(model: BaselineModel, trace: VoltageTrace) -> Verdict:
    return detect_features(model, extract_features(trace))


@dataclass(frozen=True)
class EvaluationResult:
    tpr: float
    fpr: float
    n_rogue: int
    n_legit: int
    flagged_rogue: int
    flagged_legit: int
    verdicts: list[tuple[str, Verdict]]


def evaluate(
    model: BaselineModel,
    labeled: Iterable[tuple[VoltageTrace, str]],
    legitimate: str,
) -> EvaluationResult:
    """Score ``(trace, true_source)`` pairs; anything not ``legitimate`` is rogue."""
    verdicts = [(src, detect(model, tr)) for tr, src in labeled]
    rogue = [v for s, v in verdicts if s != legitimate]
    legit = [v for s, v in verdicts if s == legitimate]
    if not rogue:
        raise EmptyClassError("no rogue traces; true-positive rate undefined")
    if not legit:
        raise EmptyClassError("no legitimate traces; false-positive rate undefined")
    hit = sum(v.anomalous for v in rogue)
    false_alarm = sum(v.anomalous for v in legit)
    return EvaluationResult(
        tpr=hit / len(rogue),
        fpr=false_alarm / len(legit),
        n_rogue=len(rogue),
        n_legit=len(legit),
        flagged_rogue=hit,
        flagged_legit=false_alarm,
        verdicts=verdicts,
    )
