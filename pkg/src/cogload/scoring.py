"""Factor normalization, weighted scores, color bands and the two
calibration paths (pairwise-choice weights, max-over-runs thresholds)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .core import (
    CalibrationError,
    CogloadError,
    ConfigError,
    FactorThresholds,
    INTRINSIC_FACTORS,
    MENTAL_EFFORT_FACTORS,
    STATIC_FACTORS,
    SessionConfig,
    Timestamp,
)
from .factors import FactorVector


class ScoringError(CogloadError):
    pass


BANDS = ("green", "yellow", "orange", "red")


@dataclass(frozen=True)
class ScoreFrame:
    timestamp: Timestamp
    mental_effort_instantaneous: float
    mental_effort_overall: float
    stress_level: float
    color_band: str
    stress_band: str
    normalized_instantaneous: dict[str, float]
    normalized_overall: dict[str, float]
    contributions: dict[str, float]   # weight * normalized, instantaneous variant
    flags: frozenset[str] = frozenset()


def normalize_factor(name: str, raw: float, variant: str, config: SessionConfig) -> float:
    """Map a raw factor value into [0, 1].

    Intrinsically bounded factors pass through; the rest divide by their
    per-variant threshold and clamp.
    """
    if name in INTRINSIC_FACTORS:
        return raw
    th = config.factor_thresholds.get(name)
    if th is None:
        raise ConfigError(f"factor {name!r} has no normalization threshold")
    return min(max(raw / th.for_variant(variant), 0.0), 1.0)


def normalize_vector(fv: FactorVector, config: SessionConfig, variant: str) -> dict[str, float]:
    """Normalized mental-effort factors plus workstation statics."""
    source = fv.instantaneous if variant == "instantaneous" else fv.overall
    out = {name: normalize_factor(name, raw, variant, config) for name, raw in source.items()}
    out.update({name: fv.static.get(name, 0.0) for name in STATIC_FACTORS})
    return out


def mental_effort(normalized: dict[str, float], weights: dict[str, float], variant: str = "instantaneous") -> float:
    """Weighted sum of the normalized factor vector.

    fsum keeps the result independent of the summation order, so an
    all-ones vector under the default weights scores exactly 17.0.
    """
    missing = [f for f in MENTAL_EFFORT_FACTORS if f not in normalized]
    if missing:
        raise ScoringError(f"mental effort factors missing from vector: {missing}")
    return math.fsum(weights.get(name, 0.0) * value for name, value in sorted(normalized.items()))


def stress_level(hyperactivity: float, self_touching_value: float, config: SessionConfig) -> float:
    return hyperactivity + config.self_touch_impact * self_touching_value


def _bucket(value: float, cutpoints: tuple[float, float, float]) -> str:
    for cut, band in zip(cutpoints, BANDS):
        if value < cut:
            return band
    return BANDS[-1]


def color_band(mental_effort_instantaneous: float, config: SessionConfig) -> str:
    """Band of the instantaneous score rescaled to [0, 1] by the weight sum."""
    total = config.mental_effort_weight_sum()
    rescaled = mental_effort_instantaneous / total if total > 0.0 else 0.0
    return _bucket(rescaled, config.color_band_cutpoints)


def stress_color_band(stress: float, config: SessionConfig) -> str:
    return _bucket(stress, config.stress_band_cutpoints)


def band_index(band: str) -> int:
    return BANDS.index(band)


def build_score_frame(fv: FactorVector, config: SessionConfig, timestamp: Timestamp) -> ScoreFrame:
    norm_inst = normalize_vector(fv, config, "instantaneous")
    norm_overall = normalize_vector(fv, config, "overall")
    me_inst = mental_effort(norm_inst, config.factor_weights, "instantaneous")
    me_overall = mental_effort(norm_overall, config.factor_weights, "overall")
    stress = stress_level(fv.hyperactivity or 0.0, fv.self_touching, config)
    contributions = {
        name: config.factor_weights.get(name, 0.0) * value for name, value in norm_inst.items()
    }
    return ScoreFrame(
        timestamp=timestamp,
        mental_effort_instantaneous=me_inst,
        mental_effort_overall=me_overall,
        stress_level=stress,
        color_band=color_band(me_inst, config),
        stress_band=stress_color_band(stress, config),
        normalized_instantaneous=norm_inst,
        normalized_overall=norm_overall,
        contributions=contributions,
        flags=fv.flags,
    )


# ---------------------------------------------------------------------------
# Calibration: weights from pairwise questionnaire choices, thresholds
# from the max registered factor value across calibration runs.
# ---------------------------------------------------------------------------

PAIR_COUNT = len(MENTAL_EFFORT_FACTORS) * (len(MENTAL_EFFORT_FACTORS) - 1) // 2


def canonical_pairs() -> list[tuple[str, str]]:
    return [tuple(sorted(p)) for p in itertools.combinations(MENTAL_EFFORT_FACTORS, 2)]


def weights_from_pairwise(subjects: list[dict[tuple[str, str], str]]) -> dict[str, float]:
    """Per-subject weight of a factor = number of pairs where it was
    chosen; the returned weights are means across subjects."""
    if not subjects:
        raise CalibrationError("no pairwise-choice records supplied")
    expected = set(canonical_pairs())
    totals = {name: 0.0 for name in MENTAL_EFFORT_FACTORS}
    for i, record in enumerate(subjects):
        keys = {tuple(sorted(k)) for k in record}
        if keys != expected:
            missing = expected - keys
            extra = keys - expected
            raise CalibrationError(
                f"subject {i}: pairwise record must cover all {PAIR_COUNT} pairs exactly once"
                + (f"; missing {sorted(missing)}" if missing else "")
                + (f"; unexpected {sorted(extra)}" if extra else "")
            )
        for pair, chosen in record.items():
            if chosen not in pair:
                raise CalibrationError(f"subject {i}: choice {chosen!r} not in pair {pair}")
            totals[chosen] += 1.0
    n = len(subjects)
    return {name: totals[name] / n for name in MENTAL_EFFORT_FACTORS}


def subject_tally(record: dict[tuple[str, str], str]) -> dict[str, int]:
    tally = {name: 0 for name in MENTAL_EFFORT_FACTORS}
    for chosen in record.values():
        tally[chosen] += 1
    return tally


def thresholds_from_calibration(session_traces: list[list[FactorVector]]) -> dict[str, FactorThresholds]:
    """Per-factor thresholds: the maximum raw value registered over all
    calibration sessions and instants, per variant."""
    if not session_traces or all(not trace for trace in session_traces):
        raise CalibrationError("calibration needs at least one non-empty factor trace")
    names = [f for f in MENTAL_EFFORT_FACTORS if f not in INTRINSIC_FACTORS]
    max_inst = {name: 0.0 for name in names}
    max_overall = {name: 0.0 for name in names}
    for trace in session_traces:
        for fv in trace:
            for name in names:
                max_inst[name] = max(max_inst[name], fv.instantaneous.get(name, 0.0))
                max_overall[name] = max(max_overall[name], fv.overall.get(name, 0.0))
    return {name: FactorThresholds(max_inst[name], max_overall[name]) for name in names}
