"""Cognitive-load factors computed from accumulated session evidence.

Two clocks run through this module. Mental-effort factors are defined on
the *factor clock*: in-gate elapsed time, which pauses while the operator
is away from the assembly/instructions area so the factors hold constant
(they equal session time when the operator never leaves). Stress factors
(self-touching, hyperactivity) and storage visits run on plain session
time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .attention import DISTRACTED
from .core import CogloadError, SessionConfig, Timestamp
from .instructions import InstructionState


class CatalogueError(CogloadError):
    pass


SELF_TOUCH_WINDOW = 60.0  # seconds an occurrence keeps impacting the score


@dataclass(frozen=True)
class Stamp:
    """One event instant in both timebases: the factor clock drives the
    formulas; session time is strictly increasing and keys replays."""
    clock: float
    session: float


@dataclass(frozen=True)
class LossEvent:
    instant: float        # factor clock
    session: float
    was_switch: bool      # focus moved directly to another workstation
    instruction: int      # instruction index active when attention ended


@dataclass(frozen=True)
class AttentionInterval:
    workstation: int
    start: float          # factor clock
    end: float


@dataclass
class AttentionLedger:
    """Event-sourced accumulator behind every factor computation.

    Single writer (the session engine); evaluation functions only read.
    All event-instant lists are kept in full so factor values can be
    recomputed from scratch at any past instant.
    """

    session_t: float = 0.0
    clock: float = 0.0                     # in-gate elapsed time
    gated: bool = False
    current_focus: int = DISTRACTED
    attention_seconds: dict[int, float] = field(default_factory=dict)
    intervals: list[AttentionInterval] = field(default_factory=list)
    _open_interval: tuple[int, float] | None = None
    loss_events: list[LossEvent] = field(default_factory=list)
    non_required_switches: list[Stamp] = field(default_factory=list)
    check_backs: list[Stamp] = field(default_factory=list)
    mistakes: list[Stamp] = field(default_factory=list)
    self_touch_instants: list[Timestamp] = field(default_factory=list)        # session time
    storage_intervals: list[tuple[float, float | None]] = field(default_factory=list)
    in_storage: bool = False
    data_gaps: int = 0

    def tick(self, session_t: float, dt: float, gated: bool, focus: int, instruction: int) -> None:
        """Advance one pipeline frame; dt is attributed to ``focus``."""
        self.session_t = session_t
        if not gated:
            focus = DISTRACTED
        prev_focus = self.current_focus
        prev_gated = self.gated
        clock_before = self.clock
        if gated:
            self.clock += dt
            if focus != DISTRACTED:
                self.attention_seconds[focus] = self.attention_seconds.get(focus, 0.0) + dt
        if prev_gated and gated and prev_focus != DISTRACTED and focus != prev_focus:
            self.loss_events.append(LossEvent(self.clock, session_t, focus != DISTRACTED, instruction))
        if focus != prev_focus or gated != prev_gated:
            if self._open_interval is not None:
                w, start = self._open_interval
                self.intervals.append(AttentionInterval(w, start, clock_before))
                self._open_interval = None
            if gated and focus != DISTRACTED:
                self._open_interval = (focus, clock_before)
        self.current_focus = focus
        self.gated = gated

    def all_intervals(self) -> list[AttentionInterval]:
        out = list(self.intervals)
        if self._open_interval is not None:
            w, start = self._open_interval
            out.append(AttentionInterval(w, start, self.clock))
        return out

    def set_proximity_label(self, session_t: float, label: str | None) -> None:
        if label == "storage" and not self.in_storage:
            self.storage_intervals.append((session_t, None))
            self.in_storage = True
        elif label != "storage" and self.in_storage:
            enter, _ = self.storage_intervals[-1]
            self.storage_intervals[-1] = (enter, session_t)
            self.in_storage = False

    def record_instruction(self, session_t: float, kind: str, steps: int = 1) -> None:
        stamp = Stamp(self.clock, session_t)
        if kind == "check_back":
            self.check_backs.append(stamp)
            self.non_required_switches.append(stamp)
        elif kind == "back":
            self.non_required_switches.append(stamp)
            if steps > 1:
                self.mistakes.append(stamp)

    def record_self_touch(self, instant: Timestamp) -> None:
        self.self_touch_instants.append(instant)

    def storage_visit_seconds(self, session_t: float | None = None) -> float:
        """Duration of the current or most recent storage visit."""
        if not self.storage_intervals:
            return 0.0
        t = self.session_t if session_t is None else session_t
        enter, leave = self.storage_intervals[-1]
        return (t - enter) if leave is None else (leave - enter)


# ---------------------------------------------------------------------------
# Factor evaluations (pure reads of a ledger snapshot)
# ---------------------------------------------------------------------------

def concentration_loss(ledger: AttentionLedger, t: float | None = None) -> float:
    """Fraction of in-gate time not focused on any workstation."""
    t = ledger.clock if t is None else t
    if t <= 0.0:
        return 0.0
    covered = sum(ledger.attention_seconds.values())
    return min(1.0, max(0.0, 1.0 - covered / t))


def learning_delay(ledger: AttentionLedger, assembly_id: int, t: float | None = None) -> float:
    """Fraction of in-gate time spent watching the assembly workstation."""
    t = ledger.clock if t is None else t
    if t <= 0.0:
        return 0.0
    return min(1.0, ledger.attention_seconds.get(assembly_id, 0.0) / t)


def concentration_demand(
    ledger: AttentionLedger, variant: str, instruction: int | None = None, t: float | None = None
) -> float:
    if variant == "instantaneous":
        return float(
            sum(1 for e in ledger.loss_events if not e.was_switch and e.instruction == instruction)
        )
    t = ledger.clock if t is None else t
    if t <= 0.0:
        return 0.0
    return sum(e.instant for e in ledger.loss_events if not e.was_switch) / t


def instructions_cost(
    ledger: AttentionLedger,
    state: InstructionState,
    variant: str,
    instruction: int | None = None,
    t: float | None = None,
) -> float:
    if variant == "instantaneous":
        idx = state.current_index if instruction is None else instruction
        return float(max(0, state.tally(idx).checks - 1))
    t = ledger.clock if t is None else t
    if t <= 0.0:
        return 0.0
    return sum(s.clock for s in ledger.non_required_switches) / t


def task_difficulty(
    ledger: AttentionLedger,
    state: InstructionState,
    variant: str,
    instruction: int | None = None,
    t: float | None = None,
) -> float:
    if variant == "instantaneous":
        idx = state.current_index if instruction is None else instruction
        return float(state.tally(idx).check_backs)
    t = ledger.clock if t is None else t
    if t <= 0.0:
        return 0.0
    return sum(s.clock for s in ledger.check_backs) / t


def frustration_by_failure(
    ledger: AttentionLedger,
    state: InstructionState,
    variant: str,
    instruction: int | None = None,
    t: float | None = None,
) -> float:
    if variant == "instantaneous":
        idx = state.current_index if instruction is None else instruction
        return float(state.tally(idx).mistakes)
    t = ledger.clock if t is None else t
    if t <= 0.0:
        return 0.0
    return sum(s.clock for s in ledger.mistakes) / t


def tool_identification(ledger: AttentionLedger, t: float | None = None) -> float:
    """Time seeking in storage, in tenths of a second, saturating at 1.0
    after ten seconds."""
    tenths = 10.0 * ledger.storage_visit_seconds(t)
    return min(tenths / 100.0, 1.0)


def self_touching(ledger: AttentionLedger, t: float | None = None) -> float:
    """Sum of linearly decaying contributions of occurrences in the last
    minute: 1.0 at the occurrence, 0 after 60 s."""
    t = ledger.session_t if t is None else t
    total = 0.0
    for s in ledger.self_touch_instants:
        if t - SELF_TOUCH_WINDOW <= s <= t:
            total += (s + SELF_TOUCH_WINDOW - t) / SELF_TOUCH_WINDOW
    return total


def noise_level(mean_dBA: float) -> float:
    """0 below 20 dBA, 1 above 70 dBA, parabolic in between (vertex at
    the lower knot, continuous at both)."""
    if mean_dBA <= 20.0:
        return 0.0
    if mean_dBA > 70.0:
        return 1.0
    x = (mean_dBA - 20.0) / 50.0
    return x * x


# ---------------------------------------------------------------------------
# Workstation statics and the task catalogue
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogueEntry:
    object_id: str
    n_components: int
    n_tools: int
    physical_effort: float
    variant_flora: float


def load_catalogue(path) -> dict[str, CatalogueEntry]:
    """CSV columns: object_id, n_components, n_tools, physical_effort,
    variant_flora. A header row is optional."""
    entries: dict[str, CatalogueEntry] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip() == "object_id":
                continue
            if len(row) != 5:
                raise CatalogueError(f"catalogue line {lineno}: expected 5 columns, got {len(row)}")
            try:
                entry = CatalogueEntry(
                    object_id=row[0].strip(),
                    n_components=int(row[1]),
                    n_tools=int(row[2]),
                    physical_effort=float(row[3]),
                    variant_flora=float(row[4]),
                )
            except ValueError as exc:
                raise CatalogueError(f"catalogue line {lineno}: {exc}") from exc
            entries[entry.object_id] = entry
    return entries


def workstation_statics(
    task: list[str],
    catalogue: dict[str, CatalogueEntry],
    config: SessionConfig,
) -> dict[str, float]:
    """Static factors for a task (a sequence of catalogue object ids).

    Component/tool counts rise linearly to their caps; effort and flora
    take the hardest object's value, or the configured defaults for an
    empty task.
    """
    wf = config.workstation_factors
    if not task:
        parts, tools = wf.n_components, wf.n_tools
        effort, flora = wf.physical_effort, wf.variant_flora
    else:
        parts = tools = 0
        effort = flora = 0.0
        for object_id in task:
            if object_id not in catalogue:
                raise CatalogueError(f"unknown object id {object_id!r}")
            e = catalogue[object_id]
            parts += e.n_components
            tools += e.n_tools
            effort = max(effort, e.physical_effort)
            flora = max(flora, e.variant_flora)
    return {
        "components": min(parts / config.components_cap, 1.0),
        "tools": min(tools / config.tools_cap, 1.0),
        "physical_effort": effort,
        "variant_flora": flora,
    }


# ---------------------------------------------------------------------------
# Factor vector assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactorVector:
    """Raw factor values per variant, before threshold normalization."""

    instantaneous: dict[str, float]
    overall: dict[str, float]
    static: dict[str, float]
    hyperactivity: float | None        # None until a baseline exists
    self_touching: float
    flags: frozenset[str] = frozenset()


def compute_factors(
    ledger: AttentionLedger,
    state: InstructionState,
    config: SessionConfig,
    assembly_id: int,
    statics: dict[str, float],
    mean_noise_dBA: float | None,
    hyperactivity: float | None,
) -> FactorVector:
    flags = set()
    if ledger.clock <= 0.0:
        flags.add("time_zero")
    if hyperactivity is None:
        flags.add("hyperactivity_unavailable")
    if state.clamped:
        flags.add("instruction_index_clamped")
    cl = concentration_loss(ledger)
    ld = learning_delay(ledger, assembly_id)
    ti = tool_identification(ledger)
    idx = state.current_index
    inst = {
        "concentration_loss": cl,
        "learning_delay": ld,
        "concentration_demand": concentration_demand(ledger, "instantaneous", idx),
        "instructions_cost": instructions_cost(ledger, state, "instantaneous", idx),
        "task_difficulty": task_difficulty(ledger, state, "instantaneous", idx),
        "frustration_by_failure": frustration_by_failure(ledger, state, "instantaneous", idx),
        "tool_identification": ti,
    }
    overall = {
        "concentration_loss": cl,
        "learning_delay": ld,
        "concentration_demand": concentration_demand(ledger, "overall"),
        "instructions_cost": instructions_cost(ledger, state, "overall"),
        "task_difficulty": task_difficulty(ledger, state, "overall"),
        "frustration_by_failure": frustration_by_failure(ledger, state, "overall"),
        "tool_identification": ti,
    }
    noise_dBA = config.workstation_factors.noise_dBA if mean_noise_dBA is None else mean_noise_dBA
    static = dict(statics)
    static["noise_level"] = noise_level(noise_dBA)
    return FactorVector(
        instantaneous=inst,
        overall=overall,
        static=static,
        hyperactivity=hyperactivity,
        self_touching=self_touching(ledger),
        flags=frozenset(flags),
    )
